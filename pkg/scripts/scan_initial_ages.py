"""Search starting physiological ages (i, j) that best reproduce a printed annuity table.

    python3 scripts/scan_initial_ages.py [--step 1] [--top 10]

The target values are joint-and-survivor annuities for a couple aged 42/35
at 5%, 10% and 15%. For each (i, j) the largest relative error over the nine
values is reported; the smallest few are printed.
"""

import argparse

import numpy as np

from bphlife.actuarial import apv_table, physiological_age_from_real_age
from bphlife.model import TABLE1, build_model

TARGET = {  # rate: (last survivor, joint life, wife)
    0.05: (17.4444, 14.2534, 16.4525),
    0.10: (10.1519, 9.1281, 9.8199),
    0.15: (7.0833, 6.6433, 6.9370),
}


def max_rel_error(params):
    gen = build_model(params)
    worst = 0.0
    for row in apv_table(gen, tuple(TARGET)):
        ours = np.array([row["a_last"], row["a_joint"], row["a_y"]])
        worst = max(worst, float(np.max(np.abs(ours / np.array(TARGET[row["rate"]]) - 1))))
    return worst


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--step", type=int, default=1)
    ap.add_argument("--top", type=int, default=10)
    ap.add_argument("--imin", type=int, default=40)
    ap.add_argument("--imax", type=int, default=120)
    ap.add_argument("--jmin", type=int, default=60)
    ap.add_argument("--jmax", type=int, default=120)
    args = ap.parse_args()

    i0 = physiological_age_from_real_age(TABLE1, "male", 42.0).rounded_index
    j0 = physiological_age_from_real_age(TABLE1, "female", 35.0).rounded_index
    print(f"mapped from real ages: (i, j) = ({i0}, {j0}), max rel error {max_rel_error(TABLE1.replace(i=i0, j=j0)):.4f}")

    results = []
    for i in range(args.imin, args.imax + 1, args.step):
        for j in range(args.jmin, args.jmax + 1, args.step):
            results.append((max_rel_error(TABLE1.replace(i=i, j=j)), i, j))
    results.sort()
    print("best starting ages:")
    for err, i, j in results[: args.top]:
        print(f"  i={i:3d} j={j:3d}  max rel error {err:.4f}")


if __name__ == "__main__":
    main()
