"""Test functions Phi, M_k and the auxiliary family eta_q^k.

    eta(t, s, x) = int_0^{lambda_k} exp(-l (1+t)) K(l (t-s)) Phi(l |x|) l^q M_k(l)^(-q) dl

with ``K(z) = sinh(z)/z`` and ``Phi(x) = 4 pi sinh|x| / |x|``. Products of
exponentials are combined in log space before exponentiating.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import integrate

from .constants import Q
from .modulus import DomainError, iterated_exp, tau_convention

FOUR_PI = 4.0 * math.pi


class QuadratureError(RuntimeError):
    def __init__(self, msg, estimate=None, error=None):
        super().__init__(msg)
        self.estimate = estimate
        self.error = error


@dataclass(frozen=True)
class TestFunctionParams:
    """Parameters of eta_q^k.

    ``shift`` is the constant inside the bracket ``<x> = (shift^2 + |x|^2)^(1/2)``
    used by the bound checks. It defaults to ``1/lambda_k``, which keeps
    ``<x>^-1`` inside ``(0, lambda_k]`` where ``M_k`` is positive.
    """

    __test__ = False  # keep pytest from collecting this class

    k: int = 1
    quad_tol: float = 1e-8
    shift: float | None = None

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError("k must be a positive integer")
        if self.k > 3:
            # lambda_4 = exp(-exp(e^2)) underflows in double precision
            raise ValueError("k > 3 is not representable in double precision")
        if not self.quad_tol > 0:
            raise ValueError("quad_tol must be positive")
        if self.shift is None:
            object.__setattr__(self, "shift", 1.0 / self.lambda_k)
        if not self.shift > 0:
            raise ValueError("shift must be positive")

    @property
    def q(self) -> float:
        return Q

    @property
    def tau_k(self) -> float:
        return tau_convention(self.k)

    @property
    def lambda_k(self) -> float:
        return math.exp(-self.tau_k)

    @property
    def R_k(self) -> float:
        """Radius with ``log^(k+1) R_k = 3``; ``inf`` when not representable."""
        return iterated_exp(self.k + 1, 3.0)

    def bracket(self, x):
        return np.hypot(self.shift, np.asarray(x, dtype=float))

    def to_dict(self) -> dict:
        return {"k": int(self.k), "quad_tol": self.quad_tol, "shift": self.shift}


# -- elementary pieces --------------------------------------------------------


def log_sinhc(z):
    """``log(sinh(z)/z)`` for ``z >= 0``, stable for small and large ``z``."""
    z = np.abs(np.asarray(z, dtype=float))
    small = z < 1e-4
    zs = np.where(small, 1.0, z)
    big = zs - np.log(2 * zs) + np.log1p(-np.exp(-2 * zs))
    out = np.where(small, z * z / 6.0, big)
    return float(out) if out.ndim == 0 else out


def log_phi(x):
    return math.log(FOUR_PI) + log_sinhc(x)


def phi(x):
    """``Phi(x) = int_{S^2} exp(x . w) dsigma = 4 pi sinh|x| / |x|``."""
    x = np.abs(np.asarray(x, dtype=float))
    small = x < 1e-4
    xs = np.where(small, 1.0, x)
    with np.errstate(over="ignore"):
        out = np.where(small, FOUR_PI * (1 + x * x / 6 + x ** 4 / 120), FOUR_PI * np.sinh(xs) / xs)
    return float(out) if out.ndim == 0 else out


def log_m_k(k: int, lam):
    """``log M_k(lambda)``; requires ``lambda`` in ``(0, lambda_k]``."""
    lam = np.asarray(lam, dtype=float)
    out = np.zeros_like(lam)
    if k == 1:
        return out
    tau = -np.log(lam)
    if np.any(lam <= 0) or np.any(tau < tau_convention(k) * (1 - 1e-12)):
        raise DomainError(f"M_{k} evaluated outside (0, lambda_k]")
    L = tau
    for _ in range(k - 1):
        out = out + np.log(L)
        L = np.log(L)
    return out


def m_k_eval(k: int, lam):
    """``M_k(l) = (log 1/l)(log log 1/l)...(log^(k-1) 1/l)``, ``M_1 = 1``."""
    out = np.exp(log_m_k(k, lam))
    return float(out) if np.ndim(out) == 0 else out


def sufficient_bound(k: int) -> float:
    """``(k-1) / (2 e^(k-2))``: bound on ``M_2^-1 + ... + M_k^-1`` below ``lambda_k``."""
    return (k - 1) / (2 * math.exp(k - 2))


# -- eta ----------------------------------------------------------------------


def _log_integrand(params, t, s, x, lam):
    lam = np.asarray(lam, dtype=float)
    return (-lam * (1 + t) + log_sinhc(lam * (t - s)) + log_phi(lam * x)
            + params.q * np.log(lam) - params.q * log_m_k(params.k, lam))


def eta(params: TestFunctionParams, t: float, s: float, x: float,
        return_error: bool = False):
    """Adaptive quadrature of eta_q^k at one point; ``0 <= s <= t``."""
    if not 0 <= s <= t:
        raise ValueError("eta needs 0 <= s <= t")
    x = abs(float(x))
    lk = params.lambda_k
    f = lambda l: math.exp(float(_log_integrand(params, t, s, x, l))) if l > 0 else 0.0
    pts = sorted({min(lk * 0.999, c / (1.0 + t)) for c in (0.1, 1.0, 10.0)})
    val, err, *rest = integrate.quad(f, 0.0, lk, points=pts, epsabs=0.0,
                                     epsrel=params.quad_tol, limit=400, full_output=1)
    if not err <= max(10 * params.quad_tol * abs(val), 1e-300) or not val > 0:
        raise QuadratureError(f"eta({t}, {s}, {x}) not converged", val, err)
    return (val, err) if return_error else val


@dataclass(frozen=True)
class LambdaRule:
    nodes: np.ndarray
    log_weights: np.ndarray  # log(quadrature weight * l^q M_k^-q)


_RULES: dict = {}


def lambda_rule(params: TestFunctionParams, n_panels: int = 72, order: int = 20) -> LambdaRule:
    """Composite Gauss-Legendre rule on dyadic panels of ``(0, lambda_k]``.

    Truncating at ``lambda_k 2^-n_panels`` drops a piece of size
    ``O(2^-n_panels (1+q))``, far below double-precision relevance.
    """
    key = (params.k, n_panels, order)
    if key in _RULES:
        return _RULES[key]
    g, w = np.polynomial.legendre.leggauss(order)
    lk = params.lambda_k
    hi = lk * 2.0 ** -np.arange(n_panels)
    lo = hi / 2
    mid, half = (hi + lo) / 2, (hi - lo) / 2
    nodes = (mid[:, None] + half[:, None] * g[None, :]).ravel()
    wts = (half[:, None] * w[None, :]).ravel()
    logw = np.log(wts) + params.q * np.log(nodes) - params.q * log_m_k(params.k, nodes)
    rule = LambdaRule(nodes, logw)
    _RULES[key] = rule
    return rule


def eta_matrix(params: TestFunctionParams, t: float, s_values, x_values) -> np.ndarray:
    """eta(t, s_i, x_j) for all pairs, shape ``(len(s), len(x))``.

    The integrand separates in ``s`` and ``x`` for fixed ``lambda``, so the
    whole table is one matrix product over the lambda rule. Both factors are
    rescaled by ``exp(+-lambda c)`` with ``c = max|x|`` to stay in range.
    """
    s = np.atleast_1d(np.asarray(s_values, dtype=float))
    x = np.abs(np.atleast_1d(np.asarray(x_values, dtype=float)))
    if np.any(s < 0) or np.any(s > t * (1 + 1e-14)):
        raise ValueError("eta needs 0 <= s <= t")
    rule = lambda_rule(params)
    lam = rule.nodes
    c = float(x.max(initial=0.0))
    logA = (-lam[None, :] * (1 + t) + log_sinhc(lam[None, :] * (t - s[:, None]))
            + rule.log_weights[None, :] + lam[None, :] * c)
    if logA.max() > 700:
        raise OverflowError("eta_matrix arguments out of range")
    # Phi(a) exp(-lam c) = 4 pi exp(-lam (c - x)) (1 - exp(-2a)) / (2a), a = lam x <= lam c
    a2 = 2.0 * lam[:, None] * x[None, :]
    with np.errstate(invalid="ignore", divide="ignore"):
        sh = np.where(a2 > 0, -np.expm1(-a2) / a2, 1.0)
    B = FOUR_PI * np.exp(-lam[:, None] * (c - x[None, :])) * sh
    return np.exp(logA) @ B


def eta_many(params: TestFunctionParams, t: float, s: float, x_values) -> np.ndarray:
    return eta_matrix(params, t, [s], x_values)[0]


# -- bound checks -------------------------------------------------------------


@dataclass
class RatioReport:
    k: int
    shift: float
    r1_min: float
    r1_max: float
    r2_min: float
    r2_max: float
    spread_limit: float
    rows: list = field(default_factory=list)  # (cls, t, s, x, eta, bound, ratio)

    @property
    def passed(self) -> bool:
        return (self.r1_min > 0 and self.r2_min > 0
                and self.r2_max / self.r2_min < self.spread_limit)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "s", "x", "eta", "bound", "ratio"])
            for _, t, s, x, e, b, r in self.rows:
                w.writerow([f"{v:.17g}" for v in (t, s, x, e, b, r)])


def default_samples(n: int = 200, t_max: float = 1e3, seed: int = 0):
    """Two sample classes: ``t > s >= 0, |x| <= 1+s`` and ``s = t, |x| <= 1+t``."""
    rng = np.random.default_rng(seed)
    t = np.exp(rng.uniform(0.0, math.log(t_max), n))
    s = t * rng.uniform(0.0, 0.999, n)
    x1 = (1 + s) * rng.uniform(0.0, 1.0, n)
    t2 = np.exp(rng.uniform(0.0, math.log(t_max), n))
    x2 = (1 + t2) * rng.uniform(0.0, 1.0, n)
    return list(zip(t, s, x1)), list(zip(t2, x2))


def _weight_bound(params, a, b):
    # <a>^-1 <b>^-q M_k^-q(<b>^-1)
    bb = params.bracket(b)
    return (1 / params.bracket(a)) * bb ** (-params.q) * np.exp(-params.q * log_m_k(params.k, 1 / bb))


def eta_bounds_check(params: TestFunctionParams,
                     samples: tuple[Sequence, Sequence] | None = None,
                     spread_limit: float = 1e3) -> RatioReport:
    """Ratios of eta to the two-sided envelope over both sample classes."""
    ts_samples, tt_samples = samples if samples is not None else default_samples()
    rows = []
    r1 = []
    for t, s, x in ts_samples:
        e = eta(params, t, s, x)
        b = float(_weight_bound(params, t, s))
        r1.append(e / b)
        rows.append(("ts", t, s, x, e, b, e / b))
    r2 = []
    for t, x in tt_samples:
        e = eta(params, t, t, x)
        b = float(_weight_bound(params, t, t - abs(x)))
        r2.append(e / b)
        rows.append(("tt", t, t, x, e, b, e / b))
    return RatioReport(int(params.k), params.shift, min(r1), max(r1), min(r2), max(r2),
                       spread_limit, rows)


@dataclass
class MonotonicityResult:
    passed: bool
    offending: tuple[float, float] | None
    bound: float


def monotonicity_check(params: TestFunctionParams,
                       lam_samples: Iterable[float] | None = None) -> MonotonicityResult:
    """``l^(q-1) M_k^-q`` strictly decreasing and ``l^q M_k^-q`` strictly increasing."""
    if lam_samples is None:
        lam = params.lambda_k * np.geomspace(1e-30, 1.0, 2000)
    else:
        lam = np.sort(np.asarray(list(lam_samples), dtype=float))
    if np.any(lam <= 0) or lam[-1] > params.lambda_k * (1 + 1e-12):
        raise DomainError("samples must lie in (0, lambda_k]")
    lam = np.unique(lam)
    lm = params.q * log_m_k(params.k, lam)
    dec = (params.q - 1) * np.log(lam) - lm
    inc = params.q * np.log(lam) - lm
    for i in range(len(lam) - 1):
        if not (dec[i + 1] < dec[i] and inc[i + 1] > inc[i]):
            return MonotonicityResult(False, (float(lam[i]), float(lam[i + 1])), sufficient_bound(params.k))
    return MonotonicityResult(True, None, sufficient_bound(params.k))
