"""Sample correlation of the two lifetimes as the common-shock rate varies.

    python3 scripts/correlation_range.py [--paths 100000] [--seed 0]
"""

import argparse

from bphlife.distributions import singular_mass
from bphlife.model import TABLE1, build_model
from bphlife.simulation import estimate_correlation, simulate_paths


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--paths", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--i", type=int, default=100)
    ap.add_argument("--j", type=int, default=84)
    args = ap.parse_args()

    print(f"{'lambda_c':>9} {'P(T_x=T_y)':>11} {'pearson':>16} {'kendall':>16}")
    for lam in (0.0, 0.0001, 0.001, 0.01, 0.1, 1.0, 10.0):
        gen = build_model(TABLE1.replace(i=args.i, j=args.j, lambda_c=lam))
        corr = estimate_correlation(simulate_paths(gen, args.paths, args.seed), n_boot=100, seed=args.seed)
        p, k = corr["pearson"], corr["kendall"]
        print(f"{lam:9g} {singular_mass(gen, 0.0):11.5f} {p.value:8.4f} ±{p.std_error:.4f}"
              f" {k.value:8.4f} ±{k.std_error:.4f}")


if __name__ == "__main__":
    main()
