"""Classify a panel of moduli by their critical integral and write a CSV table."""

import argparse
import csv
import math
from pathlib import Path

from strausslab.modulus import (
    c_str_index,
    critical_integral,
    decay_predicates,
    iterated_log_modulus,
    log_product,
    power_log,
)
from strausslab.constants import P_S


def panel():
    for g in (0.30, 0.40, 1 / P_S, 0.45, 1.0):
        yield f"power_log({g:.4f})", power_log(g)
    for k in (1, 2, 3):
        yield f"iterated_log({k})", iterated_log_modulus(k)
        yield f"iterated_log({k}, extra 2)", iterated_log_modulus(k, extra_exponent=2.0)
    yield "log_product(1/p, 1)", log_product([1 / P_S, 1.0])


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/classify")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for name, spec in panel():
        rep = critical_integral(spec)
        try:
            cstr = c_str_index(spec)
        except ValueError:
            cstr = math.nan
        flags = decay_predicates(spec)
        rows.append([name, rep.classification, rep.level, rep.value_if_convergent, cstr,
                     flags.satisfies_chen, flags.satisfies_weak])
        print(f"{name:32s} {rep.classification:13s} C_Str={cstr:.4g}")
    with open(out / "classification.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["modulus", "classification", "level", "value", "c_str", "chen", "weak"])
        w.writerows(rows)


if __name__ == "__main__":
    main()
