"""Blow-up time of the leapfrog solution against the data amplitude."""

import argparse
import csv
from pathlib import Path

from strausslab.modulus import iterated_log_modulus
from strausslab.radial_wave import CharacteristicGrid, InitialData, Profile, solve_leapfrog


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/blowup")
    ap.add_argument("--h", type=float, default=0.01)
    ap.add_argument("--T", type=float, default=10.0)
    ap.add_argument("--radius", type=float, default=2.0, help="support radius of the bump")
    ap.add_argument("--eps", type=float, nargs="+", default=[5.0, 7.0, 10.0, 15.0, 20.0])
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    spec = iterated_log_modulus(1)
    prof = Profile.bump(1.0, args.radius, 3)
    rows = []
    for eps in args.eps:
        sol = solve_leapfrog(InitialData(Profile.zero(), prof, eps), spec, CharacteristicGrid(args.h, args.T),
                             store_every=max(1, int(0.5 / args.h)))
        ev = sol.blowup
        if ev is None:
            rows.append([eps, "", "", "", "none"])
            print(f"eps={eps:6.2f}  no blow-up before T={args.T}")
        else:
            rows.append([eps, ev.t_star, ev.r_star, ev.peak, ev.reason])
            print(f"eps={eps:6.2f}  t*={ev.t_star:.4f}  r*={ev.r_star:.3f}  ({ev.reason})")
            ev.write_json(out / f"blowup_eps{eps:g}.json")
    with open(out / "blowup_times.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["eps", "t_star", "r_star", "peak", "reason"])
        w.writerows(rows)


if __name__ == "__main__":
    main()
