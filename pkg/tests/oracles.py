"""Independent reference computations used by the tests.

Each oracle takes a different route from the package code: sphere averages
instead of primitives, raw trapezoid sums instead of adaptive quadrature,
direct series instead of closed forms.
"""

import math

import numpy as np

P = 1 + math.sqrt(2)
Q = 2 - math.sqrt(2)


def kirchhoff_velocity_term(u1, t, r, n=20001):
    """``S(t) u1 (r) = (t/2) int_{-1}^{1} u1(sqrt(r^2 + t^2 + 2 r t c)) dc``."""
    c = np.linspace(-1.0, 1.0, n)
    rho = np.sqrt(np.maximum(r * r + t * t + 2 * r * t * c, 0.0))
    return 0.5 * t * np.trapezoid(u1(rho), c)


def kirchhoff_position_term(u0, t, r, dt=1e-4, n=20001):
    """``d/dt [t * sphere mean of u0]`` by a central difference in ``t``."""
    f = lambda tt: kirchhoff_velocity_term(u0, tt, r, n)
    if t < dt:
        return (f(t + dt) - f(t)) / dt
    return (f(t + dt) - f(t - dt)) / (2 * dt)


def eta_trapezoid(k, t, s, x, lam_k, n=10 ** 6):
    """Trapezoid rule with ``n`` panels, written with plain sinh and exp."""
    lam = np.linspace(0.0, lam_k, n + 1)[1:]
    z = lam * (t - s)
    K = np.where(z > 0, np.sinh(np.maximum(z, 1e-300)) / np.maximum(z, 1e-300), 1.0)
    ax = lam * abs(x)
    Phi = np.where(ax > 0, 4 * np.pi * np.sinh(ax) / np.maximum(ax, 1e-300), 4 * np.pi)
    M = np.ones_like(lam)
    L = np.log(1 / lam)
    for _ in range(k - 1):
        M = M * L
        L = np.log(L)
    f = np.exp(-lam * (1 + t)) * K * Phi * lam ** Q * M ** (-Q)
    return np.trapezoid(np.r_[0.0, f], np.r_[0.0, lam])


def power_log_partial(gamma, c, tau0, tau):
    """``int_{tau0}^{tau} (c s^-gamma)^p ds`` in closed form."""
    e = 1 - gamma * P
    if abs(e) < 1e-14:
        return c ** P * math.log(tau / tau0)
    return c ** P * (tau ** e - tau0 ** e) / e


def series_sums(n_terms=400):
    x = 1 / P
    s1 = sum(l * x ** l for l in range(1, n_terms))
    s0 = sum(x ** l for l in range(1, n_terms))
    return s1, s0


def observed_orders(errors):
    e = np.asarray(errors, dtype=float)
    return np.log2(e[:-1] / e[1:])
