"""Gap between the three non-interacting expectation routes under each evolution sign."""
import argparse

import numpy as np

from smilab.linalg import random_density, random_hermitian, random_state
from smilab.pw import CONVENTIONS, JointSystemConfig, limit_consistency_check


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--instances", type=int, default=100)
    p.add_argument("--seed", type=int, default=2024)
    args = p.parse_args()

    for conv in CONVENTIONS:
        rng = np.random.default_rng(args.seed)
        worst = 0.0
        for _ in range(args.instances):
            cfg = JointSystemConfig(random_hermitian(rng, 2), random_hermitian(rng, 2))
            worst = max(worst, limit_consistency_check(
                cfg, random_hermitian(rng, 2), random_density(rng, 2), random_state(rng, 2),
                float(rng.uniform(0.1, 3.0)), convention=conv))
        print(f"{conv:<12} max gap {worst:.3e}")


if __name__ == "__main__":
    main()
