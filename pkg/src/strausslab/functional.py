"""Test-function functionals of a radial solution.

    H(t) = int u(t,x) eta(t,t,x) dx
    U(t) = int u(t,x) mu^(1/p)(|u(t,x)|) eta(t,t,x) dx

Radial integrals run over the ball ``|x| <= t + R`` holding the support.
Between grid nodes ``u`` is linear in ``r``; each cell gets a Gauss-Legendre
rule, so the quadrature error is set by the interpolation, ``O(h^2)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .constants import P_S, P_S_CONJ, Q
from .modulus import ModulusSpec, iterated_log, mu_eval, nonlinearity, ti_mu
from .radial_wave import InitialData, SolutionField
from .testfunc import TestFunctionParams, eta_many, eta_matrix, log_m_k

FOUR_PI = 4.0 * math.pi


@dataclass
class RadialNodes:
    x: np.ndarray  # quadrature nodes in r
    wr2: np.ndarray  # 4 pi r^2 times the weights
    cell: np.ndarray  # left grid index of each node
    theta: np.ndarray  # position inside the cell, in [0, 1]


def radial_nodes(r: np.ndarray, radius: float, per_cell: int = 2) -> RadialNodes:
    """Gauss-Legendre nodes on each grid cell of ``[0, radius]``."""
    h = r[1] - r[0]
    radius = min(radius, r[-1])
    n_full = int(math.floor(radius / h + 1e-9))
    edges = list(r[: n_full + 1])
    if radius - edges[-1] > 1e-12 * h:
        edges.append(radius)
    edges = np.asarray(edges)
    g, w = np.polynomial.legendre.leggauss(per_cell)
    a, b = edges[:-1], edges[1:]
    x = ((a + b)[:, None] / 2 + (b - a)[:, None] / 2 * g[None, :]).ravel()
    wt = ((b - a)[:, None] / 2 * w[None, :]).ravel()
    cell = np.repeat(np.arange(len(a)), per_cell)
    theta = (x - r[cell]) / h
    return RadialNodes(x, FOUR_PI * wt * x ** 2, cell, theta)


def _interp(u_row: np.ndarray, nodes: RadialNodes) -> np.ndarray:
    i = nodes.cell
    return (1 - nodes.theta) * u_row[i] + nodes.theta * u_row[np.minimum(i + 1, len(u_row) - 1)]


def _ball(sol: SolutionField, t: float) -> float:
    return t + sol.support_radius


def _check_time(sol: SolutionField, t: float):
    if t < 0 or t > sol.horizon * (1 + 1e-12):
        raise ValueError(f"t = {t} beyond the solution horizon {sol.horizon}")


@dataclass
class FunctionalSample:
    t: float
    H: float
    U: float
    weight_integral: float
    residual: float = float("nan")


def functional_sample(sol: SolutionField, params: TestFunctionParams, t: float,
                      per_cell: int = 2) -> FunctionalSample:
    """``H``, ``U`` and ``int_{|x|<=t+R} eta(t,t,x) dx`` on one node set."""
    _check_time(sol, t)
    nodes = radial_nodes(sol.r, _ball(sol, t), per_cell)
    e = eta_many(params, t, t, nodes.x) * nodes.wr2
    u = _interp(sol.u_at(t), nodes)
    spec = sol.modulus
    if spec is None:
        mu = np.zeros_like(u)
    else:
        mu = mu_eval(spec, np.abs(u)) ** (1 / P_S)
    return FunctionalSample(t, float(e @ u), float(e @ (u * mu)), float(e.sum()))


def h_of_t(sol: SolutionField, params: TestFunctionParams, t: float, per_cell: int = 2) -> float:
    return functional_sample(sol, params, t, per_cell).H


def u_script_of_t(sol: SolutionField, params: TestFunctionParams, t: float, per_cell: int = 2) -> float:
    return functional_sample(sol, params, t, per_cell).U


# -- integral identity --------------------------------------------------------


@dataclass
class IdentityResidual:
    t: float
    lhs: float
    data_term: float
    duhamel_term: float

    @property
    def residual(self) -> float:
        return self.lhs - self.data_term - self.duhamel_term

    @property
    def relative(self) -> float:
        return abs(self.residual) / abs(self.lhs) if self.lhs else abs(self.residual)


def _data_term(params, data: InitialData, t: float, cells: int = 400) -> float:
    if data.u1.is_zero or t == 0:
        return 0.0
    R = data.u1.support
    nodes = radial_nodes(np.linspace(0.0, R, cells + 1), R, 4)
    vals = data.u1(nodes.x) * eta_many(params, t, 0.0, nodes.x)
    return data.eps * t * float(nodes.wr2 @ vals)


def identity_residual(sol: SolutionField, params: TestFunctionParams, data: InitialData,
                      t: float, per_cell: int = 2) -> IdentityResidual:
    """``H(t) - t eps int u1 eta(t,0,.) - int_0^t (t-s) int F(u) eta(t,s,.) dx ds``.

    The time integral is the trapezoid rule over the stored frames up to ``t``,
    so ``t`` should be a frame time and frames should be every step.
    """
    if not data.u0.is_zero:
        raise ValueError("the identity is implemented for u0 = 0")
    _check_time(sol, t)
    lhs = h_of_t(sol, params, t, per_cell) if t > 0 else 0.0
    dat = _data_term(params, data, t)
    duh = 0.0
    spec = sol.modulus
    if t > 0 and spec is not None and spec.family != "zero":
        k = int(np.searchsorted(sol.times, t * (1 + 1e-12), side="right"))
        s = sol.times[:k]
        if abs(s[-1] - t) > 1e-9 * max(1.0, t):
            raise ValueError("t must be one of the stored frame times")
        nodes = radial_nodes(sol.r, _ball(sol, t), per_cell)
        i, th = nodes.cell, nodes.theta
        u = sol.u[:k]
        uf = (1 - th) * u[:, i] + th * u[:, np.minimum(i + 1, u.shape[1] - 1)]
        Fw = nonlinearity(spec, uf) * nodes.wr2[None, :]
        E = eta_matrix(params, t, s, nodes.x)
        inner = np.sum(Fw * E, axis=1)
        duh = float(np.trapezoid((t - s) * inner, s))
    return IdentityResidual(t, lhs, dat, duh)


# -- Jensen step --------------------------------------------------------------


@dataclass
class JensenReport:
    t: float
    margin: float
    H: float
    U: float
    weight_integral: float
    u_max: float
    convexity_violations: int
    worst_convexity: float  # most negative normalized second difference

    @property
    def passed(self) -> bool:
        return self.margin >= -1e-10 * max(1.0, abs(self.U))


def jensen_function(spec: ModulusSpec, tau):
    """``g(tau) = tau mu^(1/p)(tau)``."""
    tau = np.asarray(tau, dtype=float)
    return tau * mu_eval(spec, np.abs(tau)) ** (1 / P_S)


def convexity_scan(spec: ModulusSpec, upper: float, n: int = 400) -> tuple[int, float]:
    """Second differences of ``g`` on ``(0, upper]``: linear and geometric samples."""
    if not upper > 0:
        return 0, 0.0
    grids = [np.linspace(upper / n, upper, n), np.geomspace(upper * 1e-12, upper, n)]
    bad, worst = 0, 0.0
    for x in grids:
        g = jensen_function(spec, x)
        # divided second differences on a non-uniform grid
        d1 = np.diff(g) / np.diff(x)
        d2 = np.diff(d1) / (x[2:] - x[:-2])
        scale = np.abs(d1).max() / upper
        nrm = d2 / scale
        tol = 1e-6
        bad += int(np.sum(nrm < -tol))
        worst = min(worst, float(nrm.min()))
    return bad, worst


def jensen_check(sol: SolutionField, params: TestFunctionParams, t: float,
                 per_cell: int = 2) -> JensenReport:
    """``U - H mu^(1/p)(H / W)`` with ``W`` the eta-mass of the ball.

    Jensen with the probability measure ``eta dx / W`` and the convex
    function ``g`` gives ``U / W >= g(H / W)``; convexity of ``g`` is sampled
    on ``(0, max u]`` and violations are counted rather than raised.
    """
    spec = sol.modulus
    fs = functional_sample(sol, params, t, per_cell)
    u_max = float(np.abs(sol.u_at(t)).max())
    if fs.weight_integral > 0 and fs.H != 0:
        margin = fs.U - fs.H * float(mu_eval(spec, abs(fs.H) / fs.weight_integral)) ** (1 / P_S)
    else:
        margin = fs.U
    bad, worst = convexity_scan(spec, u_max)
    return JensenReport(t, margin, fs.H, fs.U, fs.weight_integral, u_max, bad, worst)


# -- weight integrals ---------------------------------------------------------


def exponent_identity_residual() -> float:
    """``-p' + q p'/p + 2 - p'/p``, zero for the Strauss exponent."""
    return -P_S_CONJ + Q * P_S_CONJ / P_S + 2 - P_S_CONJ / P_S


@dataclass
class WeightIntegrals:
    s: float
    t: float
    W1: float
    W2: float
    C1: float  # W1 over its envelope
    C2: float


def _bracket_terms(params: TestFunctionParams, y: float):
    b = float(params.bracket(y))
    return b, math.exp(float(log_m_k(params.k, 1 / b)))


def weight_integrals(params: TestFunctionParams, s: float, t: float | None = None,
                     radius: float | None = None, n_cells: int = 800) -> WeightIntegrals:
    """``W1 = int eta(s,s,x) dx`` and the Hoelder companion ``W2`` over ``|x| <= 1+s``.

    ``C1``, ``C2`` are the ratios to ``<s>^(1+1/p) M_k^-q(<s>^-1)`` and
    ``<t>^(p'/p) <s>^(p'/p) M_k^(1/p)(<s>^-1) log^k <s>``.
    """
    t = 2 * s if t is None else t
    if not t > s >= 0:
        raise ValueError("need t > s >= 0")
    radius = 1 + s if radius is None else radius
    nodes = radial_nodes(np.linspace(0.0, radius, n_cells + 1), radius, 4)
    e_ss = eta_many(params, s, s, nodes.x)
    e_ts = eta_many(params, t, s, nodes.x)
    W1 = float(nodes.wr2 @ e_ss)
    W2 = float(nodes.wr2 @ (e_ss / e_ts ** (1 / P_S)) ** P_S_CONJ)
    bs, Ms = _bracket_terms(params, s)
    bt, _ = _bracket_terms(params, t)
    env1 = bs ** (1 + 1 / P_S) * Ms ** (-Q)
    env2 = (bt * bs) ** (P_S_CONJ / P_S) * Ms ** (1 / P_S) * iterated_log(params.k, bs)
    return WeightIntegrals(s, t, W1, W2, W1 / env1, W2 / env2)


def holder_chain(sol: SolutionField, params: TestFunctionParams, s: float, t: float,
                 per_cell: int = 2) -> tuple[float, float]:
    """Both sides of ``U(s)^p <= [int F(u(s)) eta(t,s,.)] W2^(p/p')``."""
    nodes = radial_nodes(sol.r, _ball(sol, s), per_cell)
    u = _interp(sol.u_at(s), nodes)
    e_ss = eta_many(params, s, s, nodes.x)
    e_ts = eta_many(params, t, s, nodes.x)
    spec = sol.modulus
    U = float(nodes.wr2 @ (u * mu_eval(spec, np.abs(u)) ** (1 / P_S) * e_ss))
    FI = float(nodes.wr2 @ (nonlinearity(spec, u) * e_ts))
    W2 = float(nodes.wr2 @ (e_ss / e_ts ** (1 / P_S)) ** P_S_CONJ)
    return abs(U) ** P_S, FI * W2 ** (P_S / P_S_CONJ)


# -- iteration frame ----------------------------------------------------------


@dataclass
class FrameFit:
    C_k_fit: float
    B_k_fit: float
    t_0: float | None
    t_grid: np.ndarray
    C_ratios: np.ndarray
    B_ratios: np.ndarray
    stable: bool
    notes: list = field(default_factory=list)


def _first_stable(ratios: np.ndarray, factor: float) -> int | None:
    for i in range(len(ratios)):
        tail = ratios[i:]
        if np.all(tail > 0) and tail.max() / tail.min() <= factor:
            return i
    return None


def fit_frame_constants(sol: SolutionField, params: TestFunctionParams, t_grid,
                        s_stride: int = 1, stability: float = 2.0) -> FrameFit:
    """Fit the constants of the iteration frame and the first lower bound.

    ``C_k``: min over ``t_grid`` of ``H(t)`` divided by
    ``<t>^-1 int_0^t (t-s) <s>^-1 M_k^-q(<s>^-1) (log^k <s>)^(-p/p') H(s)^p mu(H(s) <s>^-2) ds``.
    ``B_k``: min of ``H(t) / [(log^k t)(log^(k+1) t) ti_mu(t^-2)]`` over grid
    times where the iterated logs are positive. ``t_0`` is the first grid
    time after which both ratios stay within ``stability`` of each other.
    """
    spec = sol.modulus
    if spec is None or spec.family == "zero":
        raise ValueError("frame constants need a nonzero nonlinearity")
    if spec.family != "iterated_log":
        raise ValueError("frame constants are defined for the iterated_log family")
    k = params.k
    t_grid = np.asarray(t_grid, dtype=float)
    s_all = sol.times[::s_stride]
    s_all = s_all[s_all <= t_grid.max() * (1 + 1e-12)]
    H = np.array([h_of_t(sol, params, s) for s in s_all])
    weights = np.empty_like(s_all)
    for i, s in enumerate(s_all):
        b, M = _bracket_terms(params, s)
        weights[i] = (1 / b) * M ** (-Q) * iterated_log(k, b) ** (-P_S / P_S_CONJ)
    with np.errstate(divide="ignore"):
        integrand_base = weights * np.abs(H) ** P_S * mu_eval(spec, np.abs(H) / params.bracket(s_all) ** 2)
    C_r, B_r = [], []
    for t in t_grid:
        m = s_all <= t * (1 + 1e-12)
        s = s_all[m]
        Ht = np.interp(t, s_all, H)
        denom = float(np.trapezoid((t - s) * integrand_base[m], s)) / float(params.bracket(t)) if len(s) > 1 else 0.0
        C_r.append(Ht / denom if denom > 0 else np.nan)
        try:
            dB = iterated_log(k, t) * iterated_log(k + 1, t) * float(ti_mu(spec, t ** -2.0))
        except ValueError:
            dB = -1.0
        B_r.append(Ht / dB if dB > 0 else np.nan)
    C_r, B_r = np.array(C_r), np.array(B_r)
    notes = []
    okC, okB = np.isfinite(C_r), np.isfinite(B_r)
    if not okC.any() or not okB.any():
        return FrameFit(np.nan, np.nan, None, t_grid, C_r, B_r, False, ["no admissible grid times"])
    iC = _first_stable(np.where(okC, C_r, -1.0), stability)
    iB = _first_stable(np.where(okB, B_r, -1.0), stability)
    stable = iC is not None and iB is not None
    t0 = float(t_grid[max(iC, iB)]) if stable else None
    if not stable:
        notes.append("horizon too short for the ratios to stabilize")
    return FrameFit(float(np.nanmin(C_r)), float(np.nanmin(B_r)), t0, t_grid, C_r, B_r, stable, notes)


# -- series export ------------------------------------------------------------


def functional_series(sol: SolutionField, params: TestFunctionParams, times,
                      data: InitialData | None = None) -> list[FunctionalSample]:
    out = []
    for t in times:
        fs = functional_sample(sol, params, float(t))
        if data is not None:
            fs.residual = identity_residual(sol, params, data, float(t)).residual
        out.append(fs)
    return out


def write_functional_csv(samples: list[FunctionalSample], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "H", "U", "W1", "residual"])
        for s in samples:
            w.writerow([f"{v:.17g}" for v in (s.t, s.H, s.U, s.weight_integral, s.residual)])
