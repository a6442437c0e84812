"""Fit the frame constants on a long run and turn them into a divergence onset."""

import argparse
import json
from pathlib import Path

import numpy as np

from strausslab.functional import fit_frame_constants
from strausslab.iteration import FrameConstants, blowup_onset, l_k_spot_check
from strausslab.modulus import iterated_log_modulus
from strausslab.radial_wave import CharacteristicGrid, InitialData, Profile, solve_leapfrog
from strausslab.testfunc import TestFunctionParams


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/onset")
    ap.add_argument("--eps", type=float, default=1.0)
    ap.add_argument("--T", type=float, default=200.0)
    ap.add_argument("--h", type=float, default=0.2)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    spec = iterated_log_modulus(1)
    data = InitialData(Profile.zero(), Profile.bump(), args.eps)
    sol = solve_leapfrog(data, spec, CharacteristicGrid(args.h, args.T))
    grid = np.geomspace(args.T / 10, args.T, 8)
    fit = fit_frame_constants(sol, TestFunctionParams(1), grid, s_stride=max(1, int(2 / args.h)))
    print(f"C_1 fit {fit.C_k_fit:.4g}, B_1 fit {fit.B_k_fit:.4g}, t_0 {fit.t_0}, stable {fit.stable}")

    L1 = l_k_spot_check(1)
    consts = FrameConstants(B_k=fit.B_k_fit, C_k=fit.C_k_fit, L_k=L1)
    est = blowup_onset(consts, 1)
    est.write_json(out / "onset_fitted.json")
    print(f"fitted: C~ = {est.C_tilde_inf:.4f}, onset {est.onset_representation} {est.onset_value:.6g}")

    toy = blowup_onset(FrameConstants(), 1, c_tilde_override=-5.0)
    toy.write_json(out / "onset_toy.json")
    print(f"toy C~ = -5: log log t = {toy.onset_value:.3f}")
    with open(out / "frame_fit.json", "w") as fh:
        json.dump({"t_grid": fit.t_grid.tolist(), "C_ratios": fit.C_ratios.tolist(),
                   "B_ratios": fit.B_ratios.tolist(), "t_0": fit.t_0, "L_1_spot": L1}, fh, indent=2)


if __name__ == "__main__":
    main()
