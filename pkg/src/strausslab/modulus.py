"""Moduli of continuity and the critical integral.

All evaluation happens in the variable ``tau = log(1/lambda)``, which keeps
deeply iterated logarithms representable long after ``lambda`` itself has
underflowed. A modulus is stored with its domain as ``tau_min`` (that is,
``lambda_max = exp(-tau_min)``); above ``lambda_max`` it is clamped.

Families
--------
``power_log``     c_l * (log 1/lambda)^(-gamma)
``iterated_log``  prod_{j<=k} (log^j 1/lambda)^(-1/p_S), optionally times
                  (log^(k+1) 1/lambda)^(-s/p_S)
``log_product``   c * prod_j (log^j 1/lambda)^(-e_j)
``custom``        sampled table lambda -> mu
``zero``          mu == 0 (switches the nonlinearity off)
"""

from __future__ import annotations

import hashlib
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate

from .constants import P_S

FAMILIES = ("power_log", "iterated_log", "log_product", "custom", "zero")


class DomainError(ValueError):
    """An iterated logarithm is undefined at the requested argument."""


class ApproximationWarning(UserWarning):
    """Result relies on finite differences or extrapolation of sampled data."""


def iterated_log(k: int, x: float) -> float:
    """Natural log applied ``k`` times; ``iterated_log(0, x) == x``."""
    if k < 0:
        raise ValueError("k must be non-negative")
    y = float(x)
    for _ in range(k):
        if not y > 0:
            raise DomainError(f"log applied to non-positive value {y!r}")
        y = math.log(y)
    return y


def iterated_exp(k: int, x: float) -> float:
    """Inverse of :func:`iterated_log`; returns ``inf`` on overflow."""
    y = float(x)
    for _ in range(k):
        if y > 709.0:
            return math.inf
        y = math.exp(y)
    return y


def tau_convention(k: int) -> float:
    """``log(1/lambda_k)`` for the convention ``log^(k-1)(1/lambda_k) = 2``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return math.log(2.0) if k == 1 else iterated_exp(k - 2, 2.0)


def lambda_convention(k: int) -> float:
    """``lambda_k`` itself; underflows to 0.0 for k >= 4."""
    return math.exp(-tau_convention(k))


@dataclass(frozen=True)
class ModulusSpec:
    family: str
    gamma: float | None = None
    c_l: float = 1.0
    k: int | None = None
    extra_exponent: float = 0.0
    exponents: tuple[float, ...] = ()
    table: tuple[tuple[float, float], ...] = ()
    tau_min: float | None = None
    extension: str = "clamp"
    _tab: tuple = field(default=(), init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown modulus family {self.family!r}")
        if self.extension != "clamp":
            raise ValueError("only the 'clamp' extension is supported")
        if self.family == "power_log":
            if self.gamma is None or not self.gamma > 0:
                raise ValueError("power_log needs gamma > 0")
            if not self.c_l > 0:
                raise ValueError("power_log needs c_l > 0")
        elif self.family == "iterated_log":
            if self.k is None or int(self.k) != self.k or self.k < 1:
                raise ValueError("iterated_log needs an integer k >= 1")
        elif self.family == "log_product":
            if not self.exponents or any(e < 0 for e in self.exponents):
                raise ValueError("log_product needs non-negative exponents")
            if not self.c_l > 0:
                raise ValueError("log_product needs a positive coefficient c_l")
        elif self.family == "custom":
            self._init_table()

        if self.tau_min is None:
            object.__setattr__(self, "tau_min", self._default_tau_min())
        if not self.tau_min > 0:
            raise DomainError("lambda_max must lie in (0, 1)")
        n = len(self.log_exponents)
        if n and iterated_log(n - 1, self.tau_min) <= 0:
            raise DomainError(
                f"log^{n} (1/lambda) is not positive at lambda_max = {self.lambda_max:g}"
            )

    def _init_table(self):
        if len(self.table) < 2:
            raise ValueError("custom modulus needs at least two samples")
        lam = np.array([p[0] for p in self.table], dtype=float)
        mu = np.array([p[1] for p in self.table], dtype=float)
        if np.any(lam <= 0) or np.any(lam >= 1) or np.any(mu <= 0):
            raise ValueError("custom samples need 0 < lambda < 1 and mu > 0")
        order = np.argsort(-lam)  # increasing tau
        tau = -np.log(lam[order])
        mu = mu[order]
        if np.any(np.diff(mu) > 0):
            raise ValueError("custom modulus must be non-decreasing in lambda")
        object.__setattr__(self, "_tab", (tau, mu))

    def _default_tau_min(self) -> float:
        if self.family == "custom":
            return float(self._tab[0][0])
        if self.family == "zero":
            return math.log(2.0)
        return tau_convention(len(self.log_exponents))

    @property
    def lambda_max(self) -> float:
        return math.exp(-self.tau_min)

    @property
    def coefficient(self) -> float:
        return self.c_l if self.family in ("power_log", "log_product") else 1.0

    @property
    def log_exponents(self) -> tuple[float, ...]:
        """Exponents ``e_j`` of ``(log^j 1/lambda)^(-e_j)``; empty if not log-product."""
        if self.family == "power_log":
            return (float(self.gamma),)
        if self.family == "iterated_log":
            e = [1.0 / P_S] * int(self.k)
            if self.extra_exponent:
                e.append(self.extra_exponent / P_S)
            return tuple(e)
        if self.family == "log_product":
            return tuple(float(e) for e in self.exponents)
        return ()

    @property
    def is_analytic(self) -> bool:
        return self.family != "custom"

    # -- serialization -------------------------------------------------

    def to_dict(self) -> dict:
        d: dict = {"family": self.family}
        if self.family == "power_log":
            d.update(gamma=self.gamma, c_l=self.c_l)
        elif self.family == "iterated_log":
            d["k"] = int(self.k)
            if self.extra_exponent:
                d["extra_exponent"] = self.extra_exponent
        elif self.family == "log_product":
            d.update(exponents=list(self.exponents), c_l=self.c_l)
        elif self.family == "custom":
            d["table"] = [list(p) for p in self.table]
        if self.tau_min < 700 and -math.log(self.lambda_max) == self.tau_min:
            d["lambda_max"] = self.lambda_max
        else:
            d["tau_min"] = self.tau_min
        d["extension"] = self.extension
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModulusSpec":
        allowed = {"family", "gamma", "c_l", "k", "extra_exponent", "exponents",
                   "table", "lambda_max", "tau_min", "extension"}
        unknown = set(d) - allowed
        if unknown:
            raise ValueError(f"unknown modulus keys: {sorted(unknown)}")
        if "family" not in d:
            raise ValueError("modulus needs a 'family'")
        kw = {key: d[key] for key in ("family", "gamma", "c_l", "k", "extra_exponent",
                                      "tau_min", "extension") if key in d}
        if "exponents" in d:
            kw["exponents"] = tuple(float(e) for e in d["exponents"])
        if "table" in d:
            kw["table"] = tuple((float(a), float(b)) for a, b in d["table"])
        if "lambda_max" in d:
            if "tau_min" in d:
                raise ValueError("give lambda_max or tau_min, not both")
            lm = float(d["lambda_max"])
            if not 0 < lm < 1:
                raise ValueError("lambda_max must lie in (0, 1)")
            kw["tau_min"] = -math.log(lm)
        return cls(**kw)

    def spec_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def power_log(gamma: float, c_l: float = 1.0, lambda_max: float | None = None) -> ModulusSpec:
    return ModulusSpec("power_log", gamma=gamma, c_l=c_l, tau_min=_tau_of(lambda_max))


def iterated_log_modulus(k: int, extra_exponent: float = 0.0,
                         lambda_max: float | None = None,
                         tau_min: float | None = None) -> ModulusSpec:
    if tau_min is None:
        tau_min = _tau_of(lambda_max)
    return ModulusSpec("iterated_log", k=k, extra_exponent=extra_exponent, tau_min=tau_min)


def log_product(exponents: Sequence[float], c_l: float = 1.0,
                lambda_max: float | None = None) -> ModulusSpec:
    return ModulusSpec("log_product", exponents=tuple(exponents), c_l=c_l,
                       tau_min=_tau_of(lambda_max))


def custom(lams: Sequence[float], mus: Sequence[float], lambda_max: float | None = None) -> ModulusSpec:
    return ModulusSpec("custom", table=tuple(zip(map(float, lams), map(float, mus))),
                       tau_min=_tau_of(lambda_max))


def zero_modulus() -> ModulusSpec:
    return ModulusSpec("zero")


def _tau_of(lam):
    return None if lam is None else -math.log(lam)


# -- evaluation ----------------------------------------------------------


def log_mu_tau(spec: ModulusSpec, tau):
    """``log mu(exp(-tau))`` with the clamp applied; vectorized over ``tau``."""
    tau = np.maximum(np.asarray(tau, dtype=float), spec.tau_min)
    if spec.family == "zero":
        return np.full_like(tau, -np.inf)
    if spec.family == "custom":
        return np.log(_custom_mu(spec, tau))
    out = np.full_like(tau, math.log(spec.coefficient))
    L = tau
    with np.errstate(divide="ignore", invalid="ignore"):
        for e in spec.log_exponents:
            out = out - e * np.log(L)
            L = np.log(L)
    return out


def mu_tau(spec: ModulusSpec, tau):
    with np.errstate(over="ignore"):
        return np.exp(log_mu_tau(spec, tau))


def mu_eval(spec: ModulusSpec, lam):
    """Evaluate the modulus at ``lam`` (scalar or array); ``mu(0) = 0``."""
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise DomainError("mu is defined for lambda >= 0")
    with np.errstate(divide="ignore"):
        tau = -np.log(lam)
    out = mu_tau(spec, tau)
    return float(out) if out.ndim == 0 else out


def nonlinearity(spec: ModulusSpec, u):
    """``F(u) = |u|^p_S mu(|u|)``."""
    a = np.abs(np.asarray(u, dtype=float))
    return a ** P_S * mu_eval(spec, a)


def _custom_mu(spec: ModulusSpec, tau):
    t_tab, m_tab = spec._tab
    out = np.interp(tau, t_tab, m_tab)
    beyond = tau > t_tab[-1]
    if np.any(beyond):
        # power law in tau through the last two samples
        s = -math.log(m_tab[-1] / m_tab[-2]) / math.log(t_tab[-1] / t_tab[-2])
        s = max(s, 0.0)
        out = np.where(beyond, m_tab[-1] * (np.maximum(tau, t_tab[-1]) / t_tab[-1]) ** (-s), out)
    return out


def _dlogmu_dlogtau(spec: ModulusSpec, tau: float) -> float:
    if spec.family == "custom":
        d = 1e-4
        return float((log_mu_tau(spec, tau * math.exp(d)) - log_mu_tau(spec, tau * math.exp(-d))) / (2 * d))
    # d log L_j / d log tau = 1 / (L_2 ... L_j)
    total, prod, L = 0.0, 1.0, tau
    for j, e in enumerate(spec.log_exponents):
        if j > 0:
            L = math.log(L)
            prod *= L
        total -= e / prod
    return total


def mu_log_derivative_ratio(spec: ModulusSpec, lam_range: tuple[float, float]) -> float:
    """Smallest ``c_*`` with ``lambda |mu'(lambda)| <= c_* mu(lambda)`` on ``lam_range``.

    The lower end may be 0. For log-product families the ratio equals
    ``sum_j e_j / (L_1 ... L_j)`` with ``L_j = log^j(1/lambda)``, which is
    increasing in lambda, but the sup is still taken over a dense sample.
    """
    lo, hi = lam_range
    if spec.family == "zero":
        return 0.0
    if spec.family == "custom":
        warnings.warn("custom modulus: ratio from finite differences", ApproximationWarning)
    hi = min(hi, spec.lambda_max)
    tau_lo = -math.log(hi)
    tau_hi = 1e12 if lo <= 0 else -math.log(lo)
    if tau_hi < tau_lo:
        raise ValueError("empty lambda range")
    taus = np.unique(np.concatenate([[tau_lo, tau_hi], np.geomspace(tau_lo, tau_hi, 2001)]))
    best = 0.0
    for t in taus:
        # lambda mu'/mu = -(d log mu / d tau) = -(d log mu / d log tau) / tau
        best = max(best, abs(_dlogmu_dlogtau(spec, float(t))) / t)
    return best


# -- critical integral -----------------------------------------------------


@dataclass
class CriticalIntegralReport:
    classification: str  # "convergent" | "divergent" | "inconclusive"
    value_if_convergent: float
    partial_values: list[tuple[float, float]]  # (tau_floor, partial integral), tau = log(1/eps)
    tail_exponent_fit: float
    level: int = 0
    level_exponents: list[float] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)

    def partial_at(self, tau_floor: float) -> float:
        for t, v in self.partial_values:
            if math.isclose(t, tau_floor, rel_tol=1e-12):
                return v
        raise KeyError(tau_floor)

    def to_dict(self) -> dict:
        return {
            "classification": self.classification,
            "value_if_convergent": self.value_if_convergent,
            "partial_values": [[t, v] for t, v in self.partial_values],
            "tail_exponent_fit": self.tail_exponent_fit,
            "level": self.level,
            "level_exponents": self.level_exponents,
            "diagnostics": self.diagnostics,
        }


DEFAULT_TAU_FLOORS = tuple(10.0 ** j for j in range(1, 13))


def log_integral(spec: ModulusSpec, tau_a: float, tau_b: float, rtol: float = 1e-8) -> tuple[float, float]:
    """``int_{tau_a}^{tau_b} mu^p_S(exp(-tau)) dtau`` (equals the ``dlambda/lambda`` integral)."""
    if tau_b <= tau_a:
        return 0.0, 0.0
    f = lambda t: math.exp(P_S * float(log_mu_tau(spec, t)))
    total, err = 0.0, 0.0
    edges = [tau_a]
    while edges[-1] < tau_b:
        edges.append(min(tau_b, max(edges[-1] * 10.0, edges[-1] + 1.0)))
    for a, b in zip(edges[:-1], edges[1:]):
        with warnings.catch_warnings():
            warnings.simplefilter("error", integrate.IntegrationWarning)
            try:
                v, e = integrate.quad(f, a, b, epsrel=rtol, epsabs=0.0, limit=200)
            except integrate.IntegrationWarning:
                warnings.simplefilter("ignore", integrate.IntegrationWarning)
                v, e = integrate.quad(f, a, b, epsrel=rtol, epsabs=0.0, limit=200)
                err = math.inf
        total += v
        err += e
    return total, err


def level_exponents(spec: ModulusSpec, tau: float, max_level: int = 4) -> list[float]:
    """Local decay exponents of the substituted integrand at successive log scales.

    Level 0 is ``-d log f / d log tau`` for ``f(tau) = mu^p_S(e^-tau)``; level
    ``m`` is the same quantity for the integrand rewritten in ``x_m = log^m tau``,
    obtained from ``s_m = x_m (s_{m-1} - 1)``.
    """
    s = -P_S * _dlogmu_dlogtau(spec, tau)
    out = [s]
    x = tau
    for _ in range(max_level):
        if x <= 1.0:
            break
        x = math.log(x)
        s = x * (s - 1.0)
        out.append(s)
    return out


def _level_vars(tau: float, m: int) -> list[float]:
    xs = [tau]
    for _ in range(m + 1):
        xs.append(math.log(xs[-1]) if xs[-1] > 0 else -math.inf)
    return xs


def critical_integral(
    spec: ModulusSpec,
    lam0: float | None = None,
    eps_floors: Sequence[float] | None = None,
    *,
    tau0: float | None = None,
    tau_floors: Sequence[float] | None = None,
    band: float = 0.05,
    rtol: float = 1e-8,
    cauchy_rtol: float = 1e-6,
    max_level: int | None = None,
) -> CriticalIntegralReport:
    """Partial integrals of ``mu^p_S(lambda)/lambda`` and a convergence verdict.

    Floors may be given as ``eps`` values or directly as ``tau = log(1/eps)``.
    The verdict extrapolates the local tail exponent at each log scale to the
    limit (linear fit in ``1/x_{m+1}``) and descends one scale whenever the
    exponent is within ``band`` of 1.
    """
    if tau0 is None:
        tau0 = spec.tau_min if lam0 is None else -math.log(lam0)
    if tau0 < spec.tau_min * (1 - 1e-12):
        raise ValueError("lambda0 must not exceed lambda_max")
    if tau_floors is None:
        tau_floors = ([-math.log(e) for e in eps_floors] if eps_floors is not None
                      else [t for t in DEFAULT_TAU_FLOORS if t > tau0])
    floors = sorted(float(t) for t in tau_floors)
    if not floors or floors[0] <= tau0:
        raise ValueError("every floor must lie below lambda0")
    if max_level is None:
        max_level = 4 if spec.is_analytic else 1

    report = CriticalIntegralReport("inconclusive", math.nan, [], math.nan)
    total, prev = 0.0, tau0
    for t in floors:
        v, e = log_integral(spec, prev, t, rtol=rtol)
        if not e <= max(10 * rtol * abs(v), 1e-300):
            report.diagnostics.append(f"panel [{prev:g}, {t:g}] error estimate {e:.3g}")
        total += v
        report.partial_values.append((t, total))
        prev = t

    if spec.family == "zero":
        report.classification = "convergent"
        report.value_if_convergent = 0.0
        report.tail_exponent_fit = math.inf
        return report
    if len(floors) < 2:
        report.diagnostics.append("need at least two floors to fit a tail exponent")
        return report
    if report.diagnostics:
        return report

    probe = floors[-3:]
    per_floor = [level_exponents(spec, t, max_level) for t in probe]
    depth = min(len(p) for p in per_floor)
    for m in range(depth):
        s = np.array([p[m] for p in per_floor])
        x = np.array([_level_vars(t, m)[m + 1] for t in probe])
        if np.any(x <= 0) or np.ptp(1.0 / x) == 0:
            limit = float(s[-1])
        else:
            slope, limit = np.polyfit(1.0 / x, s, 1)
        report.level_exponents.append(float(limit))
        report.level, report.tail_exponent_fit = m, float(limit)
        if abs(limit - 1) > band and (limit - 1) * (s[-1] - 1) <= 0:
            # extrapolation and raw local exponent disagree: lower-order log
            # corrections are not resolved by the probes
            report.diagnostics.append(
                f"scale {m}: extrapolated exponent {limit:.4g} vs local {s[-1]:.4g}"
            )
            return report
        if limit > 1 + band:
            report.classification = "convergent"
            break
        if limit < 1 - band:
            report.classification = "divergent"
            return report
    else:
        report.diagnostics.append("exponent within the band at every resolvable scale")
        return report

    # extrapolate the tail at the deciding scale and require a Cauchy sequence
    m, s_lim = report.level, report.tail_exponent_fit
    est = []
    for t, v in report.partial_values[-2:]:
        xs = _level_vars(t, m)
        g = math.exp(P_S * float(log_mu_tau(spec, t))) * math.prod(xs[:m])
        est.append(v + g * xs[m] / (s_lim - 1.0))
    if abs(est[-1] - est[-2]) > cauchy_rtol * abs(est[-1]):
        report.classification = "inconclusive"
        report.diagnostics.append(
            f"extrapolated values {est[-2]:.10g}, {est[-1]:.10g} not Cauchy at rtol {cauchy_rtol:g}"
        )
        return report
    report.value_if_convergent = est[-1]
    return report


# -- threshold quantities ----------------------------------------------------


def c_str_index(spec: ModulusSpec) -> float:
    """``lim_{lambda->0} mu(lambda) (log 1/lambda)^(1/p_S)``; may be ``inf``."""
    if spec.family == "zero":
        return 0.0
    if spec.family == "custom":
        taus = spec._tab[0][-3:]
        vals = np.exp(log_mu_tau(spec, taus)) * taus ** (1.0 / P_S)
        if np.ptp(vals) <= 1e-3 * abs(vals[-1]):
            return float(vals[-1])
        warnings.warn("custom modulus: C_Str samples do not converge", ApproximationWarning)
        return math.nan
    e = list(spec.log_exponents)
    d1 = e[0] - 1.0 / P_S
    if abs(d1) > 1e-12:
        return math.inf if d1 < 0 else 0.0
    for ej in e[1:]:
        if ej > 0:
            return 0.0
    return spec.coefficient


@dataclass
class DecayFlags:
    satisfies_chen: bool | None
    satisfies_weak: bool | None
    chen_ratios: list[float]
    weak_ratios: list[float]


DEFAULT_TAU_PROBES = tuple(10.0 ** j for j in range(2, 301, 6))


def _bounded(r: np.ndarray, growth: float) -> bool | None:
    if np.max(r) <= growth * np.min(r):
        return True
    if np.all(np.diff(r) >= -1e-12 * np.abs(r[1:])):
        return False
    if r[-1] <= r[0] * (1 + 1e-9) and np.all(np.diff(r[len(r) // 2:]) <= 0):
        return True
    return None


def decay_predicates(
    spec: ModulusSpec,
    lam_probe: Sequence[float] | None = None,
    *,
    tau_probes: Sequence[float] | None = None,
    growth: float = 1.5,
) -> DecayFlags:
    """Check the two-log and three-log decay conditions along a probe sequence.

    ``satisfies_chen``: ``mu (log 1/l)^(1/p) log log 1/l`` stays bounded.
    ``satisfies_weak``: ``mu (log 1/l)^(1/p) (log log 1/l)^(1/p) log log log 1/l``
    stays bounded. ``None`` means the ratios neither settle nor grow steadily.
    """
    if tau_probes is None:
        tau_probes = ([-math.log(l) for l in lam_probe] if lam_probe is not None
                      else DEFAULT_TAU_PROBES)
    tau = np.sort(np.asarray(tau_probes, dtype=float))
    if np.any(tau <= math.e):
        raise DomainError("probes need log log log(1/lambda) to be defined")
    x1 = np.log(tau)
    x2 = np.log(x1)
    base = mu_tau(spec, tau) * tau ** (1.0 / P_S)
    chen = base * x1
    weak = base * x1 ** (1.0 / P_S) * x2
    return DecayFlags(_bounded(chen, growth), _bounded(weak, growth),
                      chen.tolist(), weak.tolist())


def is_monotone(spec: ModulusSpec, n: int = 400) -> bool:
    """Sampled check that mu is non-decreasing on (0, lambda_max]."""
    tau = np.geomspace(spec.tau_min, spec.tau_min * 1e8, n)
    vals = mu_tau(spec, tau)
    return bool(np.all(np.diff(vals) <= 1e-15 * vals[:-1]))


def ti_mu(spec: ModulusSpec, lam):
    """``(log 1/l)^(1/p) ... (log^(k-1) 1/l)^(1/p) mu(l)`` for an iterated-log modulus."""
    if spec.family != "iterated_log":
        raise ValueError("ti_mu is defined for the iterated_log family")
    lam = np.asarray(lam, dtype=float)
    tau = np.maximum(-np.log(lam), spec.tau_min)
    out = np.asarray(mu_tau(spec, tau), dtype=float)
    L = tau
    for _ in range(int(spec.k) - 1):
        out = out * L ** (1.0 / P_S)
        L = np.log(L)
    return float(out) if out.ndim == 0 else out
