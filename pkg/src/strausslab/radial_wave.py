"""Radial 3-D wave propagation: exact linear solution and two nonlinear solvers.

Everything works with ``w = r u``, which turns the radial problem

    u_tt - u_rr - (2/r) u_r = F(u),    F(u) = |u|^p mu(|u|)

into the 1-D equation ``w_tt - w_rr = r F(u)`` on ``r > 0`` with ``w(t, 0) = 0``.
The odd extension of ``w`` to ``r < 0`` removes the boundary.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from .constants import P_S
from .modulus import ModulusSpec, log_integral, mu_eval, nonlinearity, zero_modulus

SourceFn = Callable[[float, np.ndarray], np.ndarray]


# -- initial data -------------------------------------------------------------


@dataclass(frozen=True)
class Profile:
    """Radial profile with a closed-form primitive ``P(l) = int_0^l f(rho) rho drho``.

    kinds: ``zero``; ``constant`` (unclamped, for closed-form checks);
    ``bump`` ``A (1 - r^2/R^2)^m`` on ``r < R``; ``callable`` (primitive by quadrature).
    """

    kind: str = "bump"
    amplitude: float = 1.0
    radius: float = 1.0
    power: int = 3
    func: Callable | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in ("zero", "constant", "bump", "callable"):
            raise ValueError(f"unknown profile kind {self.kind!r}")
        if self.kind == "bump" and (self.power < 1 or not self.radius > 0):
            raise ValueError("bump needs power >= 1 and radius > 0")
        if self.kind == "callable" and self.func is None:
            raise ValueError("callable profile needs func")

    @classmethod
    def zero(cls):
        return cls("zero", 0.0)

    @classmethod
    def constant(cls, value: float = 1.0):
        return cls("constant", value, math.inf)

    @classmethod
    def bump(cls, amplitude: float = 1.0, radius: float = 1.0, power: int = 3):
        return cls("bump", amplitude, radius, power)

    @classmethod
    def from_callable(cls, f: Callable, radius: float):
        return cls("callable", 1.0, radius, 0, f)

    @property
    def support(self) -> float:
        return 0.0 if self.kind == "zero" else self.radius

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero" or self.amplitude == 0.0

    def __call__(self, r):
        r = np.abs(np.asarray(r, dtype=float))
        if self.kind == "zero":
            out = np.zeros_like(r)
        elif self.kind == "constant":
            out = np.full_like(r, self.amplitude)
        elif self.kind == "bump":
            x = np.clip(1.0 - (r / self.radius) ** 2, 0.0, None)
            out = self.amplitude * x ** self.power
        else:
            out = np.where(r < self.radius, np.vectorize(self.func, otypes=[float])(r), 0.0)
        return out

    def derivative(self, r):
        r = np.abs(np.asarray(r, dtype=float))
        if self.kind in ("zero", "constant"):
            return np.zeros_like(r)
        if self.kind == "bump":
            R, m = self.radius, self.power
            x = np.clip(1.0 - (r / R) ** 2, 0.0, None)
            return -2.0 * m * self.amplitude * r / R ** 2 * x ** (m - 1)
        d = 1e-6
        return (self(r + d) - self(np.abs(r - d))) / (2 * d)

    def primitive(self, lam):
        lam = np.abs(np.asarray(lam, dtype=float))
        if self.kind == "zero":
            return np.zeros_like(lam)
        if self.kind == "constant":
            return 0.5 * self.amplitude * lam ** 2
        if self.kind == "bump":
            R, m = self.radius, self.power
            x = np.clip(1.0 - (lam / R) ** 2, 0.0, None)
            return self.amplitude * R ** 2 / (2 * (m + 1)) * (1.0 - x ** (m + 1))
        f = lambda rho: float(self.func(rho)) * rho
        flat = [integrate.quad(f, 0.0, min(l, self.radius), epsabs=1e-14, epsrel=1e-12)[0]
                for l in lam.ravel()]
        return np.asarray(flat).reshape(lam.shape)

    def to_dict(self) -> dict:
        if self.kind == "callable":
            raise ValueError("callable profiles do not serialize")
        return {"kind": self.kind, "amplitude": self.amplitude,
                "radius": self.radius, "power": self.power}

    @classmethod
    def from_dict(cls, d: dict) -> "Profile":
        d = dict(d)
        kind = d.pop("kind")
        if kind == "constant":
            return cls.constant(d.pop("amplitude", 1.0))
        if kind == "zero":
            return cls.zero()
        out = cls(kind, **d)
        return out


@dataclass(frozen=True)
class InitialData:
    """``u(0) = eps u0``, ``u_t(0) = eps u1``."""

    u0: Profile = field(default_factory=Profile.zero)
    u1: Profile = field(default_factory=Profile.bump)
    eps: float = 1.0

    @property
    def support_radius(self) -> float:
        return max(self.u0.support, self.u1.support)

    @property
    def blowup_setting(self) -> bool:
        """Zero position, non-negative non-trivial velocity (sampled)."""
        if not self.u0.is_zero or self.u1.is_zero:
            return False
        rs = np.linspace(0.0, min(self.u1.support, 1e3), 2001)
        return bool(np.all(self.u1(rs) >= 0))


# -- exact linear solution ----------------------------------------------------


def _odd_rho_u0(profile: Profile, x):
    # g(x) = x u0(|x|), odd in x
    return x * profile(np.abs(x))


def free_solution(data: InitialData, t, r, method: str = "closed"):
    """Solution of the linear problem with data ``(u0, u1)``, without the factor eps.

    ``closed`` uses the profile primitives; ``quad`` integrates the spherical
    means with scipy, which gives an independent route for custom profiles.
    """
    t, r = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(r, dtype=float))
    if np.any(t < 0) or np.any(r < 0):
        raise ValueError("need t >= 0 and r >= 0")
    if method == "quad":
        out = np.vectorize(lambda a, b: _free_quad(data, a, b), otypes=[float])(t, r)
        return float(out) if out.ndim == 0 else out
    if method != "closed":
        raise ValueError("method must be 'closed' or 'quad'")
    small = r < 1e-6
    rs = np.where(small, 1.0, r)
    a, b = t + rs, np.abs(t - rs)
    s1 = (data.u1.primitive(a) - data.u1.primitive(b)) / (2 * rs)
    s0 = (_odd_rho_u0(data.u0, a) - _odd_rho_u0(data.u0, t - rs)) / (2 * rs)
    # r -> 0 limits: t u1(t) and d/dt [t u0(t)]
    lim1 = t * data.u1(t)
    lim0 = data.u0(t) + t * data.u0.derivative(t)
    out = np.where(small, lim0 + lim1, s0 + s1)
    return float(out) if out.ndim == 0 else out


def _free_quad(data: InitialData, t: float, r: float) -> float:
    if r < 1e-6:
        return float(data.u0(t) + t * data.u0.derivative(t) + t * data.u1(t))
    lo, hi = abs(t - r), t + r
    top = min(hi, data.u1.support)
    val = 0.0
    if not data.u1.is_zero and lo < top:
        v, _ = integrate.quad(lambda x: float(data.u1(x)) * x, lo, top,
                              epsabs=1e-13, epsrel=1e-11, limit=200)
        val += v / (2 * r)
    val += float((_odd_rho_u0(data.u0, hi) - _odd_rho_u0(data.u0, t - r)) / (2 * r))
    return val


def homogeneous_solution(data: InitialData, t, r, method: str = "closed"):
    """``eps [d/dt S(t) u0 + S(t) u1](r)``."""
    return data.eps * free_solution(data, t, r, method)


def dispersive_fit(data: InitialData, times, radii, s_shift: float = 1.0,
                   tol: float = 1e-12) -> float:
    """``max |u^0| <t+r>`` over the sample mesh, restricted to ``|t - r| <= R``.

    Samples outside the strip must vanish; an ``AssertionError`` reports
    the largest offending value otherwise.
    """
    T, Rr = np.meshgrid(np.asarray(times, float), np.asarray(radii, float), indexing="ij")
    u = np.abs(free_solution(data, T, Rr))
    strip = np.abs(T - Rr) <= data.support_radius * (1 + 1e-12)
    outside = np.where(strip, 0.0, u)
    scale = max(1.0, float(u.max(initial=0.0)))
    if outside.max(initial=0.0) > tol * scale:
        raise AssertionError(f"free solution nonzero outside the strip: {outside.max():.3e}")
    br = np.sqrt(s_shift ** -2 + (T + Rr) ** 2)
    return float(np.max(np.where(strip, u * br, 0.0), initial=0.0))


# -- grids and solution fields ------------------------------------------------


@dataclass(frozen=True)
class CharacteristicGrid:
    h: float = 0.01
    T_max: float = 1.0
    r_max: float | None = None

    def __post_init__(self):
        if not self.h > 0 or not self.T_max >= 0:
            raise ValueError("need h > 0 and T_max >= 0")

    def radius(self, R: float) -> float:
        need = self.T_max + R + 2 * self.h
        if self.r_max is None:
            return need
        if self.r_max < self.T_max + R:
            raise ValueError("r_max must be at least T_max + R")
        return self.r_max

    @property
    def n_steps(self) -> int:
        return int(round(self.T_max / self.h))


@dataclass
class BlowupEvent:
    t_star: float
    r_star: float
    peak: float
    reason: str  # "threshold" or "numerical"

    def to_dict(self) -> dict:
        return {"t_star": self.t_star, "r_star": self.r_star, "peak": self.peak, "reason": self.reason}

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)


def u_from_w(w: np.ndarray, r: np.ndarray, h: float) -> np.ndarray:
    """``u = w / r`` with ``u(0) = (4 w_1 - w_2) / (2h)``."""
    u = np.empty_like(w)
    u[..., 1:] = w[..., 1:] / r[1:]
    u[..., 0] = (4 * w[..., 1] - w[..., 2]) / (2 * h)
    return u


@dataclass
class SolutionField:
    times: np.ndarray
    r: np.ndarray
    w: np.ndarray  # (n_frames, n_r)
    h: float
    eps: float
    modulus: ModulusSpec | None
    scheme: str  # "leapfrog", "picard" or "synthetic"
    support_radius: float = 1.0
    blowup: BlowupEvent | None = None
    increments: list = field(default_factory=list)

    @property
    def u(self) -> np.ndarray:
        return u_from_w(self.w, self.r, self.h)

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    def u_at(self, t: float) -> np.ndarray:
        """Profile at time ``t``; linear in time between stored frames."""
        ts = self.times
        if t < ts[0] - 1e-12 or t > ts[-1] + 1e-9 * max(1.0, ts[-1]):
            raise ValueError(f"t = {t} outside the stored horizon [{ts[0]}, {ts[-1]}]")
        j = int(np.searchsorted(ts, t))
        if j < len(ts) and abs(ts[j] - t) <= 1e-9 * max(1.0, t):
            return u_from_w(self.w[j], self.r, self.h)
        if j > 0 and abs(ts[j - 1] - t) <= 1e-9 * max(1.0, t):
            return u_from_w(self.w[j - 1], self.r, self.h)
        j = min(max(j, 1), len(ts) - 1)
        a = (t - ts[j - 1]) / (ts[j] - ts[j - 1])
        return u_from_w((1 - a) * self.w[j - 1] + a * self.w[j], self.r, self.h)

    @classmethod
    def from_function(cls, times, r, u_func, eps: float = 1.0, modulus=None,
                      support_radius: float = 1.0) -> "SolutionField":
        """Synthetic field sampled from ``u_func(t, r)``."""
        times = np.asarray(times, dtype=float)
        r = np.asarray(r, dtype=float)
        u = np.array([np.broadcast_to(u_func(t, r), r.shape) for t in times], dtype=float)
        h = float(r[1] - r[0])
        return cls(times, r, u * r, h, eps, modulus, "synthetic", support_radius)

    def write_csv(self, path, every: int = 1) -> None:
        u = self.u
        mod = self.modulus.spec_hash() if self.modulus is not None else "none"
        with open(path, "w", newline="") as fh:
            fh.write(f"# h={self.h!r} eps={self.eps!r} modulus={mod} scheme={self.scheme}\n")
            wr = csv.writer(fh)
            wr.writerow(["t", "r", "u", "w"])
            for n in range(0, len(self.times), every):
                t = self.times[n]
                for i in range(len(self.r)):
                    wr.writerow([f"{t:.17g}", f"{self.r[i]:.17g}", f"{u[n, i]:.17g}", f"{self.w[n, i]:.17g}"])


# -- leapfrog -----------------------------------------------------------------


def solve_leapfrog(data: InitialData, spec: ModulusSpec | None, grid: CharacteristicGrid,
                   U_max: float = 1e8, source: SourceFn | None = None,
                   store_every: int = 1) -> SolutionField:
    """March ``w_tt - w_rr = r F(u) + source`` at unit CFL.

    ``spec=None`` means ``F = 0``. ``source(t, r)`` is an extra right-hand side
    (manufactured solutions). Without a source only the region reachable
    from the data, ``r <= t + R``, is updated.
    """
    spec = zero_modulus() if spec is None else spec
    linear = spec.family == "zero"
    h = grid.h
    R = data.support_radius
    r_max = grid.radius(R)
    n_r = int(math.ceil(r_max / h)) + 1
    r = h * np.arange(n_r)
    n_t = grid.n_steps
    eps = data.eps

    def rhs(t, u, hi):
        g = np.zeros(hi)
        if not linear:
            g += r[:hi] * nonlinearity(spec, u[:hi])
        if source is not None:
            g += source(t, r[:hi])
        return g

    def active(t):
        if source is not None:
            return n_r
        return min(n_r, int(math.ceil((t + R) / h)) + 3)

    w_prev = eps * r * data.u0(r)
    w_t = eps * r * data.u1(r)
    frames, times = [w_prev.copy()], [0.0]
    u_prev = u_from_w(w_prev, r, h)

    def check(t, w, u):
        if not np.all(np.isfinite(w)):
            bad = int(np.argmax(~np.isfinite(w)))
            return BlowupEvent(t, float(r[bad]), float("inf"), "numerical")
        i = int(np.argmax(np.abs(u)))
        if abs(u[i]) > U_max:
            return BlowupEvent(t, float(r[i]), float(abs(u[i])), "threshold")
        return None

    blow = check(0.0, w_prev, u_prev)
    if blow is None and n_t > 0:
        # Taylor first step with central w_rr and w(-h) = -w(h)
        wrr = np.zeros(n_r)
        wrr[1:-1] = (w_prev[2:] - 2 * w_prev[1:-1] + w_prev[:-2]) / h ** 2
        hi = active(0.0)
        w_cur = w_prev + h * w_t
        w_cur[:hi] += 0.5 * h ** 2 * (wrr[:hi] + rhs(0.0, u_prev, hi))
        w_cur[0] = 0.0
        w_cur[-1] = 0.0 if source is None else w_cur[-1]
        with np.errstate(all="ignore"):
            u_cur = u_from_w(w_cur, r, h)
        blow = check(h, w_cur, u_cur)
        if blow is None or blow.reason == "threshold":
            if store_every == 1 or n_t == 1:
                frames.append(w_cur.copy())
                times.append(h)
        n = 1
        with np.errstate(all="ignore"):
            while blow is None and n < n_t:
                t = n * h
                hi = active(t)
                w_next = np.zeros(n_r) if source is None else w_cur.copy()
                w_next[1:hi - 1] = (w_cur[:hi - 2] + w_cur[2:hi] - w_prev[1:hi - 1]
                                    + h ** 2 * rhs(t, u_cur, hi)[1:hi - 1])
                if source is not None:
                    w_next[-1] = 2 * w_cur[-1] - w_prev[-1] + h ** 2 * source(t, r[-1:])[0]
                w_next[0] = 0.0
                w_prev, w_cur = w_cur, w_next
                u_cur = u_from_w(w_cur, r, h)
                n += 1
                blow = check(n * h, w_cur, u_cur)
                if (n % store_every == 0 or n == n_t) and (blow is None or blow.reason == "threshold"):
                    frames.append(w_cur.copy())
                    times.append(n * h)
    return SolutionField(np.array(times), r, np.array(frames), h, eps, spec,
                         "leapfrog", R, blow)


def discrete_energy(w_now: np.ndarray, w_next: np.ndarray, h: float) -> float:
    """Leapfrog-conserved energy between two consecutive time levels."""
    dt = (w_next - w_now) / h
    dr = (np.diff(w_next) * np.diff(w_now)) / h ** 2
    return 0.5 * h * (float(np.sum(dt ** 2)) + float(np.sum(dr)))


def energy_series(sol: SolutionField) -> np.ndarray:
    """Energies of consecutive stored frames; requires ``store_every = 1``."""
    if len(sol.times) > 1 and not np.allclose(np.diff(sol.times), sol.h):
        raise ValueError("energy needs consecutive time levels")
    return np.array([discrete_energy(sol.w[n], sol.w[n + 1], sol.h) for n in range(len(sol.times) - 1)])


# -- Picard -------------------------------------------------------------------


class PicardDivergenceError(RuntimeError):
    pass


def _duhamel_w(G: np.ndarray, h: float) -> np.ndarray:
    """``w(t_n, r_i) = 1/2 int_0^t int_{r-(t-s)}^{r+(t-s)} G(s, |rho|) sgn(rho) drho ds``.

    ``G[m, i]`` samples the source at ``(s_m, r_i)`` and is extended oddly in
    ``rho``. Inner integrals are trapezoid sums read off cumulative sums,
    since the interval ends fall on grid nodes; the outer rule is trapezoid
    in ``s``.
    """
    n_t, n_r = G.shape
    C = np.zeros_like(G)
    C[:, 1:] = np.cumsum(0.5 * h * (G[:, 1:] + G[:, :-1]), axis=1)
    out = np.zeros_like(G)
    idx = np.arange(n_r)
    for n in range(1, n_t):
        d = n - np.arange(n + 1)  # distance in steps, s_m = m h
        hi = np.minimum(idx[None, :] + d[:, None], n_r - 1)
        lo = np.abs(idx[None, :] - d[:, None])
        rows = np.arange(n + 1)[:, None]
        inner = C[rows, hi] - C[rows, lo]
        wts = np.full(n + 1, h)
        wts[0] = wts[-1] = 0.5 * h
        out[n] = 0.5 * (wts @ inner)
    out[:, 0] = 0.0
    return out


def picard_iterate(data: InitialData, spec: ModulusSpec, T: float, n_iter: int,
                   grid: CharacteristicGrid | None = None, U_max: float = 1e8) -> SolutionField:
    """Fixed-point iterates ``u_{n} = eps u^0 + L F(u_{n-1})`` on ``[0, T]``.

    ``L F`` is the radial Duhamel term, evaluated in the ``(s, rho)`` form
    for every ``(t, r)``. The returned field carries the sup-norm
    increments ``|u_n - u_{n-1}|`` in ``increments``.
    """
    h = grid.h if grid is not None else 0.01
    R = data.support_radius
    n_t = int(round(T / h))
    n_r = int(math.ceil((T + R) / h)) + 3
    r = h * np.arange(n_r)
    times = h * np.arange(n_t + 1)
    Tm, Rm = np.meshgrid(times, r, indexing="ij")
    u_lin = homogeneous_solution(data, Tm, Rm)
    u = u_lin.copy()
    incs = []
    for _ in range(n_iter):
        G = Rm * nonlinearity(spec, u)
        w = _duhamel_w(G, h)
        u_new = u_lin + u_from_w(w, r, h)
        if not np.all(np.isfinite(u_new)) or np.abs(u_new).max() > U_max:
            raise PicardDivergenceError("Picard divergence at this amplitude")
        incs.append(float(np.abs(u_new - u).max()))
        u = u_new
    return SolutionField(times, r, u * r, h, data.eps, spec, "picard", R, None, incs)


def duhamel_term(spec: ModulusSpec, u: np.ndarray, r: np.ndarray, h: float) -> np.ndarray:
    """``L F(u)`` on the grid ``(m h, r_i)`` for a field sampled there."""
    return u_from_w(_duhamel_w(r * nonlinearity(spec, u), h), r, h)


# -- bootstrap ansatz ---------------------------------------------------------


@dataclass(frozen=True)
class AnsatzWeight:
    """``Phi_0(t,r) = <t+r>^-1 <t-r>^(-1/p) mu(<t-r>^-1)``, ``<y> = (s^-2 + y^2)^(1/2)``."""

    C_0: float
    modulus: ModulusSpec
    s_shift: float = 1.0

    def bracket(self, y):
        return np.sqrt(self.s_shift ** -2 + np.asarray(y, dtype=float) ** 2)

    def phi0(self, t, r):
        a = self.bracket(np.asarray(t) + np.asarray(r))
        b = self.bracket(np.asarray(t) - np.asarray(r))
        return b ** (-1 / P_S) * mu_eval(self.modulus, 1 / b) / a


def ansatz_constant(N: float, spec: ModulusSpec, support_radius: float,
                    s_shift: float = 1.0) -> float:
    """``C_0`` with ``N <t+r>^-1 <= C_0 Phi_0`` on the strip ``|t - r| <= R``."""
    b = math.sqrt(s_shift ** -2 + support_radius ** 2)  # the factor decreases in |t - r|
    return N / (b ** (-1 / P_S) * float(mu_eval(spec, 1 / b)))


def ansatz_margin(sol: SolutionField, weight: AnsatzWeight, eps: float | None = None) -> float:
    """``sup |u| / (eps C_0 Phi_0)`` over the stored frames."""
    eps = sol.eps if eps is None else eps
    Tm, Rm = np.meshgrid(sol.times, sol.r, indexing="ij")
    return float(np.max(np.abs(sol.u) / (eps * weight.C_0 * weight.phi0(Tm, Rm))))


def first_iterate_ratio(data: InitialData, spec: ModulusSpec, T: float, h: float = 0.02,
                        s_shift: float = 1.0) -> np.ndarray:
    """``|L F(eps u^0)| / [eps^p <t+r>^-1 <t-r>^(-1/p) mu(<t-r>^-1)]`` on the grid."""
    n_t = int(round(T / h))
    r = h * np.arange(int(math.ceil((T + data.support_radius) / h)) + 3)
    Tm, Rm = np.meshgrid(h * np.arange(n_t + 1), r, indexing="ij")
    lf = np.abs(duhamel_term(spec, homogeneous_solution(data, Tm, Rm), r, h))
    wgt = AnsatzWeight(1.0, spec, s_shift).phi0(Tm, Rm)
    return lf / (data.eps ** P_S * wgt)


# -- pointwise lower bounds ---------------------------------------------------

K0 = 63.0 / 65.0


@dataclass
class LowerBoundReport:
    C_near_cone: float
    n_near_cone: int
    C_interior: float | None
    n_interior: int
    violations: int
    status: str  # "ok", "insufficient horizon" or "violated"

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def pointwise_lowerbound_check(sol: SolutionField, r0: float = 0.5, R0: float = 2.0,
                               C_fit: float | None = None, C_int: float = 1.0,
                               k0: float = K0) -> LowerBoundReport:
    """Fit ``u >= C (t+r)^-1`` near the cone and the log-corrected bound inside.

    Region (i): ``0 < t - r < r0``, ``t + r > 1``. Region (ii): ``r >= k0 t``,
    ``t - r > R0``, with envelope
    ``(t+r)^-1 (t-r)^(-1/p) mu((t-r)^-2) int_{C_int/(t-r)}^{C_int/2} mu^p(l)/l dl``.
    A violation is a sample where ``u`` falls below the bound with the given
    ``C_fit`` (or, when fitting, a non-positive ``u``).
    """
    Tm, Rm = np.meshgrid(sol.times, sol.r, indexing="ij")
    u = sol.u
    lag = Tm - Rm
    tol = 1e-9 * sol.h
    reg1 = (lag > tol) & (lag < r0) & (Tm + Rm > 1)
    reg2 = (Rm >= k0 * Tm) & (lag > R0)
    if not np.any(np.abs(u) > 0):
        return LowerBoundReport(0.0, int(reg1.sum()), None, int(reg2.sum()), 0, "ok")
    if not reg1.any():
        return LowerBoundReport(0.0, 0, None, 0, 0, "insufficient horizon")
    ratio1 = u[reg1] * (Tm + Rm)[reg1]
    C1 = float(ratio1.min())
    if C_fit is not None:
        viol = int(np.sum(ratio1 < C_fit))
    else:
        viol = int(np.sum(ratio1 <= 0))
    C2 = None
    if reg2.any() and sol.modulus is not None:
        env = []
        for t, rr in zip(Tm[reg2], Rm[reg2]):
            d = t - rr
            tau_a, tau_b = math.log(2 / C_int), math.log(d / C_int)
            I = log_integral(sol.modulus, tau_a, tau_b)[0] if tau_b > tau_a else 0.0
            env.append(d ** (-1 / P_S) * float(mu_eval(sol.modulus, d ** -2)) * I / (t + rr))
        env = np.array(env)
        ok = env > 0
        if ok.any():
            C2 = float(np.min(u[reg2][ok] / env[ok]))
            viol += int(np.sum(u[reg2][ok] <= 0))
    status = "ok" if viol == 0 else "violated"
    if C2 is None and status == "ok":
        status = "insufficient horizon" if not reg2.any() else "ok"
    return LowerBoundReport(C1, int(reg1.sum()), C2, int(reg2.sum()), viol, status)
