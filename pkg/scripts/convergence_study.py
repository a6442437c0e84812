"""Observed orders of the leapfrog solver and of the integral-identity residual."""

import argparse
import csv
from pathlib import Path

import numpy as np

from strausslab.functional import identity_residual
from strausslab.modulus import iterated_log_modulus, zero_modulus
from strausslab.radial_wave import CharacteristicGrid, InitialData, Profile, homogeneous_solution, solve_leapfrog
from strausslab.testfunc import TestFunctionParams


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/convergence")
    ap.add_argument("--levels", type=int, default=4, help="number of halvings starting at h = 0.04")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    hs = [0.04 / 2 ** i for i in range(args.levels)]
    data = InitialData(Profile.zero(), Profile.bump(), 1.0)
    wide = InitialData(Profile.zero(), Profile.bump(1.0, 2.0, 3), 5.0)
    params = TestFunctionParams(1)
    mu1 = iterated_log_modulus(1)

    rows = []
    for h in hs:
        sol = solve_leapfrog(data, None, CharacteristicGrid(h, 2.0))
        Tm, Rm = np.meshgrid(sol.times, sol.r, indexing="ij")
        lin = np.abs(sol.u - homogeneous_solution(data, Tm, Rm)).max()
        res = [abs(identity_residual(solve_leapfrog(d, s, CharacteristicGrid(h, t)), params, d, t).residual)
               for d, s, t in ((data, zero_modulus(), 1.0), (data, mu1, 1.0), (wide, mu1, 1.2))]
        rows.append([h, lin, *res])

    e = np.array([r[1:] for r in rows])
    orders = np.log2(e[:-1] / e[1:])
    with open(out / "orders.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["h", "linear_sup_error", "residual_linear", "residual_eps1", "residual_eps5"])
        w.writerows(rows)
    print("h        " + "  ".join(f"{h:.5f}" for h in hs[1:]))
    for name, o in zip(("linear", "id linear", "id eps=1", "id eps=5"), orders.T):
        print(f"{name:9s}" + "  ".join(f"{v:7.3f}" for v in o))


if __name__ == "__main__":
    main()
