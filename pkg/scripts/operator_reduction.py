"""Mean dressed operator under GUE trajectories: off-diagonal weight vs N, Born deviation vs lambda."""
import argparse

import numpy as np

from smilab.engine import EnsembleSpec, TimeGrid, ensemble_average_operator, ensemble_average_state
from smilab.lab import decoherence_metrics, eigenprojector_weights, reduced_operator_check
from smilab.linalg import spectral_decompose


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--slices", type=int, default=10)
    p.add_argument("--seed", type=int, default=5)
    args = p.parse_args()

    a = np.diag([-3.0, -1.0, 1.0, 3.0])
    decomp = spectral_decompose(a)
    grid = TimeGrid(args.tau, args.slices)
    zero = np.zeros((4, 4))

    print("N        offdiag     eigen-drift  weights")
    for n in (100, 1000, 10_000):
        s = ensemble_average_operator(a, EnsembleSpec("gue-perturbed", 1.0, zero), grid, n, args.seed)
        off, drift = reduced_operator_check(s, decomp)
        w = np.array2string(eigenprojector_weights(s, decomp), precision=3)
        print(f"{n:<8d} {off:.4e}  {drift:.4e}   {w}")

    rho0 = np.diag([0.4, 0.3, 0.2, 0.1]).astype(complex)
    lams = np.array([0.01, 0.0316, 0.1, 0.316, 1.0])
    devs = []
    for lam in lams:
        m = ensemble_average_state(rho0, EnsembleSpec("gue-perturbed", lam, zero), grid, 2000, args.seed).mean
        devs.append(decoherence_metrics(0.5 * (m + m.conj().T), rho0, decomp).born_deviation)
    print("\nlambda   born_deviation")
    for lam, d in zip(lams, devs):
        print(f"{lam:<8.4f} {d:.4e}")
    print(f"log-log slope: {np.polyfit(np.log(lams), np.log(devs), 1)[0]:.3f}")


if __name__ == "__main__":
    main()
