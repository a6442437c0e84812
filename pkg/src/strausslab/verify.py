"""Compact invariant suite behind the ``verify`` command."""

from __future__ import annotations

import math

import numpy as np

from . import functional, iteration, modulus, radial_wave, testfunc
from .constants import P_S, STRAUSS


def _constants():
    res = abs(STRAUSS.quadratic_residual())
    ok = res < 1e-12 and abs(STRAUSS.q - 1 / STRAUSS.p_S_conj) < 1e-12
    return ok, f"quadratic residual {res:.2e}"


def _classifier():
    got = {g: modulus.critical_integral(modulus.power_log(g)).classification
           for g in (0.30, 0.40, 0.45, 1.0)}
    ok = all((got[g] == "convergent") == (g > 1 / P_S) for g in got)
    rep = modulus.critical_integral(modulus.iterated_log_modulus(1), tau0=2.0)
    ok = ok and rep.classification == "divergent" and abs(rep.partial_at(100.0) - math.log(50)) < 1e-6
    return ok, str(got)


def _linear_order():
    data = radial_wave.InitialData(u1=radial_wave.Profile.bump())
    errs = []
    for h in (0.04, 0.02, 0.01):
        sol = radial_wave.solve_leapfrog(data, None, radial_wave.CharacteristicGrid(h, 2.0))
        T, R = np.meshgrid(sol.times, sol.r, indexing="ij")
        errs.append(np.abs(sol.u - radial_wave.homogeneous_solution(data, T, R)).max())
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    return bool(np.all((orders > 1.8) & (orders < 2.2))), f"orders {orders.round(3).tolist()}"


def _propagation():
    data = radial_wave.InitialData(u1=radial_wave.Profile.bump(), eps=1.0)
    sol = radial_wave.solve_leapfrog(data, modulus.iterated_log_modulus(1),
                                     radial_wave.CharacteristicGrid(0.02, 3.0))
    T, R = np.meshgrid(sol.times, sol.r, indexing="ij")
    leak = np.abs(sol.w[R > T + 1 + 1e-9]).max(initial=0.0)
    return leak == 0.0, f"max |w| beyond the cone {leak:.1e}"


def _eta_oracle():
    p = testfunc.TestFunctionParams(1)
    lam = np.linspace(0.0, p.lambda_k, 200001)[1:]
    f = np.exp(testfunc._log_integrand(p, 10.0, 5.0, 3.0, lam))
    ref = np.trapezoid(np.r_[0.0, f], np.r_[0.0, lam])
    val = testfunc.eta(p, 10.0, 5.0, 3.0)
    rel = abs(val - ref) / ref
    return rel < 1e-6, f"relative gap {rel:.1e}"


def _monotone():
    ok = all(testfunc.monotonicity_check(testfunc.TestFunctionParams(k)).passed for k in (1, 2, 3))
    return ok, "k = 1, 2, 3"


def _iteration():
    states = iteration.run(0.0, 1.0, 1.0, 30)
    err = max(abs(s.a - iteration.closed_forms(s.j)[0]) / iteration.closed_forms(s.j)[0] for s in states)
    est = iteration.blowup_onset(iteration.FrameConstants(), 1, c_tilde_override=-5.0)
    ok = err < 1e-10 and est.onset_representation == "LogLog" and abs(est.onset_value - 242.3) < 0.1
    return ok, f"closed-form gap {err:.1e}, toy onset {est.onset_value:.3f}"


def _jensen_constant():
    spec = modulus.iterated_log_modulus(1)
    r = np.linspace(0.0, 4.0, 201)
    sol = radial_wave.SolutionField.from_function([2.0], r, lambda t, rr: np.where(rr <= 3.0, 0.3, 0.0),
                                                  modulus=spec)
    rep = functional.jensen_check(sol, testfunc.TestFunctionParams(1), 2.0)
    return abs(rep.margin) < 1e-10 * rep.U, f"margin {rep.margin:.1e}"


def _picard():
    data = radial_wave.InitialData(u1=radial_wave.Profile.bump(), eps=1.0)
    spec = modulus.iterated_log_modulus(1)
    grid = radial_wave.CharacteristicGrid(0.01, 1.0)
    pic = radial_wave.picard_iterate(data, spec, 1.0, 6, grid)
    lf = radial_wave.solve_leapfrog(data, spec, grid)
    n = min(pic.w.shape[1], lf.w.shape[1])
    gap = float(np.abs(pic.u[:, :n] - lf.u[:, :n]).max())
    return gap < 1e-3, f"sup gap {gap:.1e}"


CHECKS = [("constants", _constants), ("classifier", _classifier), ("linear_order", _linear_order),
          ("finite_propagation", _propagation), ("eta_oracle", _eta_oracle),
          ("weight_monotonicity", _monotone), ("iteration", _iteration),
          ("jensen_constant_field", _jensen_constant)]


def run_checks(quick: bool = True) -> list[tuple[str, bool, str]]:
    out = []
    for name, fn in CHECKS + ([] if quick else [("picard_vs_leapfrog", _picard)]):
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashing check is a failed check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append((name, bool(ok), detail))
    return out
