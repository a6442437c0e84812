import json
import math

import pytest
from hypothesis import given, strategies as st

from oracles import series_sums
from strausslab.constants import P_S
from strausslab.iteration import (
    PLAIN_SUM_LIMIT,
    WEIGHTED_SUM_LIMIT,
    FrameConstants,
    IterationState,
    advance,
    blowup_onset,
    c_tilde_inf,
    closed_forms,
    l_k_spot_check,
    logN_lower,
    m_seq,
    onset_bracket,
    run,
)


def test_first_steps():
    s1 = advance(IterationState.initial(0.0), 1.0, 1.0)
    assert s1.a == pytest.approx(2 + math.sqrt(2), abs=1e-12)
    assert s1.l == pytest.approx(math.sqrt(2), abs=1e-12)
    s2 = advance(s1, 1.0, 1.0)
    assert s2.b == pytest.approx(3 + 2 * math.sqrt(2), abs=1e-12)
    assert s2.j == 2


def test_closed_form_examples():
    assert closed_forms(0) == pytest.approx((1, 0, 1, 1))
    assert closed_forms(2)[3] == pytest.approx(5 + 3 * math.sqrt(2), abs=1e-12)
    with pytest.raises(ValueError):
        closed_forms(-1)


def test_recursion_matches_closed_forms():
    states = run(0.0, 1.0, 1.0, 30)
    for st_ in states:
        ref = closed_forms(st_.j)
        got = (st_.a, st_.l, st_.b, st_.sigma)
        for g, r in zip(got, ref):
            assert g == pytest.approx(r, rel=1e-10, abs=1e-12)
        assert st_.b <= st_.a


def test_m_sequence():
    assert [m_seq(j) for j in range(3)] == [1.5, 1.75, 1.875]
    vals = [m_seq(j) for j in range(60)]
    assert all(b > a for a, b in zip(vals, vals[1:]) if b < 2)
    assert all(1.5 <= v <= 2 for v in vals)
    assert IterationState.initial(0.0).m == 1.5


def test_sum_limits():
    s1, s0 = series_sums()
    assert WEIGHTED_SUM_LIMIT == pytest.approx(s1, abs=1e-10)
    assert PLAIN_SUM_LIMIT == pytest.approx(s0, abs=1e-10)
    assert WEIGHTED_SUM_LIMIT == pytest.approx(1.20711, abs=1e-5)
    assert PLAIN_SUM_LIMIT == pytest.approx(1 / math.sqrt(2), abs=1e-12)


def test_one_step_bound():
    C, L, logN0 = 2.0, 3.0, 1.5
    ref = math.log(3 * C / (8 * L * 4 * P_S)) + P_S * logN0
    assert logN_lower(1, logN0, C, L) == pytest.approx(ref, rel=1e-12)


@given(st.floats(-5.0, 5.0), st.floats(0.01, 100.0), st.floats(0.01, 100.0))
def test_lower_bound_holds(logN0, C, L):
    states = run(logN0, C, L, 30)
    for s in states[1:]:
        lb = logN_lower(s.j, logN0, C, L)
        assert s.logN >= lb - 1e-9 * max(1.0, abs(lb))


def test_c_tilde_limit():
    c = c_tilde_inf(0.3, 2.0, 1.0)
    assert logN_lower(60, 0.3, 2.0, 1.0) / P_S ** 60 == pytest.approx(c, rel=1e-10)


def test_k1_bracket_reduction():
    # for k = 1 the bracket is C~ + log A - log(2)/(p-1) + log v
    for v in (2.0, 10.0, 1e3):
        assert onset_bracket(v, 1, 0.0, 1.0) == pytest.approx(math.log(v * 2 ** (-1 / math.sqrt(2))), rel=1e-12)


def test_toy_onset():
    est = blowup_onset(FrameConstants(), 1, c_tilde_override=-5.0)
    assert est.onset_representation == "LogLog"
    assert est.onset_value == pytest.approx(242.3, abs=0.1)
    assert est.onset_value == pytest.approx(math.exp(5) / 2 ** (-1 / math.sqrt(2)), rel=1e-10)
    assert not est.at_t0


def test_nonnegative_c_tilde_returns_t0():
    for k in (1, 2, 3):
        est = blowup_onset(FrameConstants(), k, c_tilde_override=0.0)
        assert est.at_t0 and est.onset_level == 2.0


def test_deeper_levels():
    for k in (2, 3):
        est = blowup_onset(FrameConstants(), k, c_tilde_override=-3.0)
        assert est.onset_level > 2
        assert onset_bracket(est.onset_level, k, -3.0, 1.0) == pytest.approx(0.0, abs=1e-9)
    assert blowup_onset(FrameConstants(), 3, c_tilde_override=-3.0).onset_representation == "Log^4"


def test_estimate_json(tmp_path):
    est = blowup_onset(FrameConstants(B_k=0.01), 1)
    est.write_json(tmp_path / "e.json")
    d = json.loads((tmp_path / "e.json").read_text())
    assert {"k", "constants", "C_tilde_inf", "onset_representation", "onset_value"} <= set(d)
    assert d["notes"]


def test_constants_positive():
    with pytest.raises(ValueError):
        FrameConstants(C_k=0.0)


pos = st.floats(1e-3, 1e3)


@given(pos, pos, pos, pos, st.sampled_from(["B_k", "C_k", "A_k", "L_k"]), st.integers(1, 2))
def test_monotone_sensitivity(B, C, L, A, name, k):
    base = FrameConstants(B, C, L, A)
    bumped = FrameConstants(**{**base.__dict__, name: getattr(base, name) * 1.5})
    v0 = blowup_onset(base, k).onset_level
    v1 = blowup_onset(bumped, k).onset_level
    if name == "L_k":
        assert v1 >= v0 * (1 - 1e-12)
    else:
        assert v1 <= v0 * (1 + 1e-12)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_l_k_finite(k):
    val = l_k_spot_check(k)
    assert math.isfinite(val) and val > 0
