"""Lower-bound iteration for the blow-up functional and its divergence onset.

The iterated lower bound after ``j`` steps carries exponents ``(a, l, b, sigma)``
and a constant ``N_j``. Onset times are far beyond double precision, so the
onset is located in the variable ``v = log^(k+1) t``.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field

from scipy import optimize

from .constants import P_S, P_S_CONJ
from .modulus import iterated_exp, iterated_log

X = 1.0 / P_S
# sum_{l>=1} l x^l and sum_{l>=1} x^l at x = 1/p
WEIGHTED_SUM_LIMIT = X / (1 - X) ** 2
PLAIN_SUM_LIMIT = X / (1 - X)


def m_seq(j: int) -> float:
    """``m_j = 2 - 2^-(j+1)``."""
    return 2.0 - 2.0 ** -(j + 1)


@dataclass(frozen=True)
class IterationState:
    j: int
    a: float
    l: float
    b: float
    sigma: float
    logN: float

    @property
    def m(self) -> float:
        return m_seq(2 * self.j)

    @classmethod
    def initial(cls, logB: float) -> "IterationState":
        return cls(0, 1.0, 0.0, 1.0, 1.0, logB)


def advance(state: IterationState, C_k: float, L_k: float) -> IterationState:
    if not (C_k > 0 and L_k > 0):
        raise ValueError("C_k and L_k must be positive")
    j = state.j
    m1 = m_seq(2 * j + 2)
    gap = 3.0 * 2.0 ** -(2 * j + 3)  # m_{2j+2} - m_{2j} without cancellation
    a_next = state.a * P_S + 1
    logN = math.log(C_k * gap / (L_k * a_next * m1)) + P_S * state.logN
    return IterationState(j + 1, a_next, state.l * P_S + P_S / P_S_CONJ,
                          state.b * P_S, state.sigma * P_S + 1, logN)


def run(logB: float, C_k: float, L_k: float, steps: int) -> list[IterationState]:
    out = [IterationState.initial(logB)]
    for _ in range(steps):
        out.append(advance(out[-1], C_k, L_k))
    return out


def closed_forms(j: int) -> tuple[float, float, float, float]:
    """``(a_j, l_j, b_j, sigma_j)`` in closed form."""
    if j < 0:
        raise ValueError("j >= 0")
    a = (P_S ** (j + 1) - 1) / (P_S - 1)
    return a, P_S ** j - 1, P_S ** j, a


def partial_sums(j: int) -> tuple[float, float]:
    """``(sum_{l=1}^j l p^-l, sum_{l=1}^j p^-l)``."""
    s1 = sum(l * X ** l for l in range(1, j + 1))
    s0 = sum(X ** l for l in range(1, j + 1))
    return s1, s0


def c_tilde(j: int, logN0: float, C_k: float, L_k: float) -> float:
    s1, s0 = partial_sums(j)
    return logN0 - math.log(4 * P_S) * s1 + math.log(3 * C_k / (8 * L_k)) * s0


def logN_lower(j: int, logN0: float, C_k: float, L_k: float) -> float:
    """``p^j (log N_0 - log(4p) sum l p^-l + log(3C/(8L)) sum p^-l)``."""
    return P_S ** j * c_tilde(j, logN0, C_k, L_k)


def c_tilde_inf(logB: float, C_k: float, L_k: float) -> float:
    return logB - math.log(4 * P_S) * WEIGHTED_SUM_LIMIT + math.log(3 * C_k / (8 * L_k)) * PLAIN_SUM_LIMIT


# -- onset --------------------------------------------------------------------


@dataclass(frozen=True)
class FrameConstants:
    """Constants of the lower-bound frame.

    ``t0_level`` is ``log^(k+1) t_0``; the default 2 makes the onset
    bracket non-negative at ``t_0`` whenever ``A_k >= 1``.
    """

    B_k: float = 1.0
    C_k: float = 1.0
    L_k: float = 1.0
    A_k: float = 1.0
    t0_level: float = 2.0

    def __post_init__(self):
        for name in ("B_k", "C_k", "L_k", "A_k"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


def _ratio_offset(k: int, v: float) -> float:
    """``d_k`` with ``log^k(t^2) = log^k(t) + d_k``, from ``v = log^(k+1) t``."""
    if k == 1:
        return math.nan  # the ratio is exactly 1/2
    ys = [math.exp(v) if v < 709 else math.inf]  # y_k
    for _ in range(k - 2):
        ys.append(math.exp(ys[-1]) if ys[-1] < 709 else math.inf)
    ys = ys[::-1]  # y_2 ... y_k
    d = math.log(2.0)
    for y in ys[:-1]:
        d = math.log1p(d / y)
    return d


def onset_bracket(v: float, k: int, ct: float, A_k: float) -> float:
    """``C~ + log[A (log^k t)^(1/(p-1)) log^(k+1) t  ti_mu^(p/(p-1))(t^-2)]``."""
    if k == 1:
        log_ratio = -math.log(2.0)
    else:
        y = math.exp(v) if v < 709 else math.inf
        d = _ratio_offset(k, v)
        log_ratio = -math.log1p(d / y)
    return ct + math.log(A_k) + log_ratio / (P_S - 1) + math.log(v)


@dataclass
class BlowupEstimate:
    k: int
    constants: dict
    C_tilde_inf: float
    onset_level: float  # log^(k+1) of the onset time
    onset_representation: str  # "Plain", "LogLog" or "Log^m"
    onset_value: float
    onset_loglog: float
    at_t0: bool
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"k": self.k, "constants": self.constants, "C_tilde_inf": self.C_tilde_inf,
                "onset_representation": self.onset_representation,
                "onset_value": self.onset_value, "onset_level": self.onset_level,
                "onset_loglog": self.onset_loglog, "at_t0": self.at_t0, "notes": list(self.notes)}

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)


def _represent(k: int, v: float) -> tuple[str, float, float]:
    loglog = iterated_exp(k - 1, v)
    t = iterated_exp(k + 1, v)
    if math.isfinite(t) and t < 1e300:
        return "Plain", t, loglog
    if math.isfinite(loglog):
        return "LogLog", loglog, loglog
    return f"Log^{k + 1}", v, loglog


def blowup_onset(consts: FrameConstants, k: int, c_tilde_override: float | None = None) -> BlowupEstimate:
    """Smallest ``t >= t_0`` where the bracket of the final lower bound turns positive.

    The bracket is increasing in ``v = log^(k+1) t``: the ratio
    ``log^k t / log^k t^2`` increases to 1 and ``log v`` increases.
    """
    if k < 1:
        raise ValueError("k >= 1")
    notes = []
    if consts.L_k == 1.0 and consts.A_k == 1.0:
        notes.append("L_k and A_k at default 1; the true constants are not effective")
    ct = c_tilde_inf(math.log(consts.B_k), consts.C_k, consts.L_k) if c_tilde_override is None else c_tilde_override
    f = lambda v: onset_bracket(v, k, ct, consts.A_k)
    v0 = consts.t0_level
    if not v0 > 0:
        raise ValueError("t0_level must be positive")
    if f(v0) >= 0:
        rep, val, ll = _represent(k, v0)
        return BlowupEstimate(k, asdict(consts), ct, v0, rep, val, ll, True, notes)
    hi = v0
    for _ in range(4000):
        hi *= 2
        if f(hi) > 0:
            break
    else:
        raise ArithmeticError("onset bracket did not change sign")
    lo = hi / 2
    grid = [lo + (hi - lo) * i / 16 for i in range(17)]
    vals = [f(x) for x in grid]
    if any(b < a for a, b in zip(vals, vals[1:])):
        raise ArithmeticError("non-monotone onset bracket")
    v = optimize.brentq(f, lo, hi, xtol=1e-14 * hi, rtol=1e-15)
    rep, val, ll = _represent(k, v)
    return BlowupEstimate(k, asdict(consts), ct, v, rep, val, ll, False, notes)


# -- the uniform bound L_k ----------------------------------------------------


def l_kj_expression(k: int, j: int, s: float, t0: float) -> float:
    """The bracketed factor whose bound over ``j`` gives ``L_k``.

    Uses ``r_k`` with ``log^k r_k = 0`` and ``m_0 = 3/2``.
    """
    a, _, b, _ = closed_forms(j)
    m = m_seq(2 * j)
    m0 = m_seq(0)
    r_k = iterated_exp(k - 1, 1.0)
    x1 = r_k * s / (m * t0)
    x2 = m0 * s / m
    first = 1.0
    second = 1.0
    for l in range(1, k):
        first *= iterated_log(l, s) / iterated_log(l, x1)
        second *= iterated_log(l, s) / iterated_log(l, x2)
    coef = b * P_S / (a * P_S + 1)
    return first + coef * iterated_log(k, x1) / iterated_log(k, x2) * second / iterated_log(k + 1, m0 * t0)


def l_k_spot_check(k: int, t0: float | None = None, j_max: int = 10,
                   factors=(1.0, 2.0, 10.0, 1e3, 1e6)) -> float:
    """Max of the bracketed factor at ``s = f m_{2j} t_0`` for ``j <= j_max``."""
    if t0 is None:
        t0 = 10.0 * iterated_exp(k, 1.0)
    best = 0.0
    for j in range(j_max + 1):
        for f in factors:
            s = f * m_seq(2 * j) * t0
            try:
                best = max(best, l_kj_expression(k, j, s, t0))
            except ValueError:
                warnings.warn(f"L_kj undefined at j={j}, s={s:.3g}")
    return best
