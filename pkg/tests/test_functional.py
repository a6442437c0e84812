import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import observed_orders
from strausslab.constants import P_S
from strausslab.functional import (
    convexity_scan,
    exponent_identity_residual,
    fit_frame_constants,
    functional_sample,
    functional_series,
    h_of_t,
    holder_chain,
    identity_residual,
    jensen_check,
    weight_integrals,
    write_functional_csv,
)
from strausslab.modulus import iterated_log_modulus, mu_eval, zero_modulus
from strausslab.radial_wave import CharacteristicGrid, InitialData, Profile, SolutionField, solve_leapfrog
from strausslab.testfunc import TestFunctionParams, eta

MU1 = iterated_log_modulus(1)
P1 = TestFunctionParams(1)
BUMP = InitialData(Profile.zero(), Profile.bump(), 1.0)


def _run(h, T=1.0, spec=MU1, data=BUMP):
    return solve_leapfrog(data, spec, CharacteristicGrid(h, T, None))


@pytest.fixture(scope="module")
def runs():
    return {h: _run(h) for h in (0.04, 0.02, 0.01)}


def test_zero_field():
    sol = SolutionField.from_function([0.0, 1.0], np.linspace(0, 3, 31), lambda t, r: 0 * r, modulus=MU1)
    fs = functional_sample(sol, P1, 1.0)
    assert fs.H == 0 and fs.U == 0 and fs.weight_integral > 0
    rep = jensen_check(sol, P1, 1.0)
    assert rep.margin == 0 and rep.passed


@given(st.floats(1e-3, 0.4), st.floats(0.0, 2.0))
def test_constant_field_jensen_equality(c, t):
    sol = SolutionField.from_function([0.0, 2.0], np.linspace(0, 4, 81), lambda tt, r: c + 0 * r, modulus=MU1)
    fs = functional_sample(sol, P1, t)
    expected = float(mu_eval(MU1, c)) ** (1 / P_S) * c * fs.weight_integral
    assert fs.U == pytest.approx(expected, rel=1e-12)
    rep = jensen_check(sol, P1, t)
    assert abs(rep.margin) <= 1e-12 * fs.U


def test_weight_integral_matches_adaptive():
    # int_{|x| <= 2} eta(1,1,x) dx by nested quad on the radial variable
    from scipy import integrate

    ref, _ = integrate.quad(lambda r: 4 * math.pi * r * r * eta(P1, 1.0, 1.0, r), 0.0, 2.0, epsrel=1e-10)
    sol = SolutionField.from_function([0.0, 1.0], np.linspace(0, 3, 301), lambda t, r: 0 * r, modulus=MU1)
    assert functional_sample(sol, P1, 1.0).weight_integral == pytest.approx(ref, rel=1e-8)


def test_h_converges_under_refinement(runs):
    vals = [h_of_t(runs[h], P1, 1.0) for h in (0.04, 0.02, 0.01)]
    assert abs(vals[2] - vals[1]) < abs(vals[1] - vals[0])
    assert abs(vals[2] - vals[1]) / vals[2] < 1e-3


def test_positivity_and_u_bound(runs):
    sol = runs[0.01]
    for t in (0.25, 0.5, 1.0):
        fs = functional_sample(sol, P1, t)
        assert fs.H > 0 and fs.U > 0 and fs.weight_integral > 0
        u = sol.u_at(t)
        assert np.all(u >= -1e-12)
        mu_max = float(mu_eval(MU1, np.abs(u).max())) ** (1 / P_S)
        assert fs.U <= mu_max * fs.H * (1 + 1e-12)


def test_identity_at_zero(runs):
    res = identity_residual(runs[0.02], P1, BUMP, 0.0)
    assert res.lhs == 0 and res.data_term == 0 and res.duhamel_term == 0


def test_identity_requires_zero_position():
    data = InitialData(Profile.bump(), Profile.bump(), 1.0)
    sol = _run(0.04, spec=MU1, data=data)
    with pytest.raises(ValueError):
        identity_residual(sol, P1, data, 0.4)


@pytest.mark.parametrize("spec", [zero_modulus(), MU1], ids=["linear", "nonlinear"])
def test_identity_residual_order(spec):
    res = [identity_residual(_run(h, spec=spec), P1, BUMP, 1.0) for h in (0.04, 0.02, 0.01)]
    errs = [abs(r.residual) for r in res]
    assert min(observed_orders(errs)) >= 1.8
    assert res[-1].relative < 1e-2


def test_series_csv(runs, tmp_path):
    samples = functional_series(runs[0.04], P1, [0.0, 0.4, 0.8], BUMP)
    write_functional_csv(samples, tmp_path / "f.csv")
    lines = (tmp_path / "f.csv").read_text().splitlines()
    assert lines[0] == "t,H,U,W1,residual"
    assert len(lines) == 4
    assert samples[0].residual == 0.0


def test_jensen_on_solution(runs):
    sol = runs[0.01]
    for t in np.linspace(0.1, 1.0, 10):
        rep = jensen_check(sol, P1, float(t))
        assert rep.passed, rep


def test_convexity_scan_detects_kink():
    # the clamp above lambda_max = 1/e leaves a concave corner in tau mu^(1/p)(tau)
    bad, worst = convexity_scan(MU1, 1.0)
    assert bad > 0 and worst < 0
    assert convexity_scan(MU1, 0.3)[0] == 0


def test_exponent_identity():
    assert abs(exponent_identity_residual()) < 1e-12


@pytest.mark.parametrize("s", [10.0, 100.0, 1000.0])
def test_weight_integrals_positive(s):
    wi = weight_integrals(P1, s)
    assert wi.W1 > 0 and wi.W2 > 0 and wi.C1 > 0 and wi.C2 > 0


def test_weight_constant_stable():
    c1 = [weight_integrals(P1, s).C1 for s in (10.0, 100.0, 1000.0)]
    c2 = [weight_integrals(P1, s).C2 for s in (10.0, 100.0, 1000.0)]
    assert max(c1) / min(c1) < 4
    assert max(c2) / min(c2) < 4


def test_weight_integral_needs_order():
    with pytest.raises(ValueError):
        weight_integrals(P1, 5.0, t=5.0)


def test_holder_chain(runs):
    sol = runs[0.02]
    for s, t in [(0.3, 0.6), (0.5, 1.0), (0.9, 1.0)]:
        lhs, rhs = holder_chain(sol, P1, s, t)
        assert 0 < lhs <= rhs


@pytest.fixture(scope="module")
def long_run():
    return solve_leapfrog(BUMP, MU1, CharacteristicGrid(0.2, 200.0, None))


def test_frame_constants_positive_and_stable(long_run):
    grid = np.geomspace(20.0, 200.0, 8)
    fit = fit_frame_constants(long_run, P1, grid, s_stride=10)
    assert fit.C_k_fit > 0 and fit.B_k_fit > 0
    assert fit.stable and fit.t_0 is not None
    assert fit.B_ratios.max() / fit.B_ratios.min() <= 2


def test_frame_constants_short_horizon_flagged(runs):
    fit = fit_frame_constants(runs[0.04], P1, [0.5, 1.0], stability=1.0001)
    assert not fit.stable and fit.notes


def test_frame_constants_reject_linear():
    sol = _run(0.04, spec=zero_modulus())
    with pytest.raises(ValueError):
        fit_frame_constants(sol, P1, [0.5, 1.0])
