"""Two-sided bound ratios of the test function on random samples."""

import argparse
from pathlib import Path

from strausslab.testfunc import TestFunctionParams, default_samples, eta_bounds_check, monotonicity_check


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/eta")
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--t-max", type=float, default=1e3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for k in (1, 2, 3):
        p = TestFunctionParams(k)
        rep = eta_bounds_check(p, default_samples(args.n, args.t_max, args.seed))
        rep.write_csv(out / f"ratios_k{k}.csv")
        mono = monotonicity_check(p)
        print(f"k={k}: r1 in [{rep.r1_min:.3g}, {rep.r1_max:.3g}], r2 in [{rep.r2_min:.3g}, {rep.r2_max:.3g}], "
              f"bounds {'ok' if rep.passed else 'FAIL'}, monotone {'ok' if mono.passed else 'FAIL'}")


if __name__ == "__main__":
    main()
