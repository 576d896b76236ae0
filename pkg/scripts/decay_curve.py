"""Coherence of |+> versus tau under the dephasing ensemble, against 0.5*exp(-lambda^2 tau)."""
import argparse

import numpy as np

from smilab.engine import EnsembleSpec
from smilab.lab import decay_curve
from smilab.linalg import SIGMA_Z, spectral_decompose


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--taus", default="0.25,0.5,1,1.5,2,3")
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--slices", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    spec = EnsembleSpec("dephasing", args.lam, np.zeros((2, 2)), measurement_basis=spectral_decompose(SIGMA_Z))
    taus = [float(t) for t in args.taus.split(",")]
    curve = decay_curve(np.full((2, 2), 0.5), spec, taus, args.n, args.seed, slices=args.slices)
    print(f"{'tau':>6} {'measured':>10} {'analytic':>10} {'mc_err':>9} {'z':>6}")
    for t, m, a, e in zip(curve.taus, curve.measured, curve.analytic, curve.mc_errors):
        print(f"{t:6.3f} {m:10.5f} {a:10.5f} {e:9.2e} {(m - a) / e:6.2f}")


if __name__ == "__main__":
    main()
