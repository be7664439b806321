"""Stationary flows: ``rho u = J`` and ``1/2 u^2 + h(rho) - c w''/w = K`` with ``w = sqrt(rho)``.

Eliminating ``u = J / w^2`` leaves the second-order ODE

    c w'' = w (J^2 / (2 w^4) + h(w^2) - K),      c = eps2 / 2,

integrated here by shooting from ``x = 0`` with classical RK4. Along a shot
``F = c w'^2/2 + J^2/(4 w^2) - g(w^2)/2 + K w^2/2`` is conserved.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import VacuumError
from .numerics import Grid1D, derivative
from .physics import PressureLaw

W_FLOOR = 1e-6  # sqrt of the density floor
W_CEILING = 1e8


@dataclass(frozen=True)
class StationaryParams:
    J: float
    K: float
    law: PressureLaw
    w0: float
    dw0: float = 0.0
    span: float = 1.0
    eps2: float = 2.0

    def __post_init__(self):
        if not self.w0 > 0:
            raise ValueError("w0 must be positive")
        if not self.span > 0:
            raise ValueError("span must be positive")
        if not self.eps2 > 0:
            raise ValueError("eps2 must be positive")

    def rhs(self, w, dw):
        c = 0.5 * self.eps2
        return dw, w * (0.5 * self.J**2 / w**4 + self.law.enthalpy(w * w) - self.K) / c


@dataclass(frozen=True)
class ShotProfile:
    x: np.ndarray
    w: np.ndarray
    dw: np.ndarray
    event: str | None = None  # "vacuum" or "overflow"
    event_x: float | None = None

    @property
    def complete(self) -> bool:
        return self.event is None

    def grid(self) -> Grid1D:
        return Grid1D(float(self.x[0]), float(self.x[-1]), len(self.x))


def stationary_shoot(p: StationaryParams, dx: float, floor: float = W_FLOOR, ceiling: float = W_CEILING) -> ShotProfile:
    """RK4 shot of ``(w, w')`` from ``x = 0`` across ``p.span``.

    The step is adjusted so the span is covered exactly. Stops early when
    ``w <= floor`` (vacuum) or ``|w|``/``|w'|`` exceeds ``ceiling`` or turns
    non-finite (overflow); the profile up to that point is returned.
    """
    if not dx > 0:
        raise ValueError("dx must be positive")
    n = max(8, math.ceil(p.span / dx - 1e-9))
    h = p.span / n
    w = np.empty(n + 1)
    dw = np.empty(n + 1)
    w[0], dw[0] = p.w0, p.dw0
    f = p.rhs
    event = None
    k = 0
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for k in range(n):
            y, v = w[k], dw[k]
            a1, b1 = f(y, v)
            a2, b2 = f(y + 0.5 * h * a1, v + 0.5 * h * b1)
            a3, b3 = f(y + 0.5 * h * a2, v + 0.5 * h * b2)
            a4, b4 = f(y + h * a3, v + h * b3)
            w[k + 1] = y + h / 6 * (a1 + 2 * a2 + 2 * a3 + a4)
            dw[k + 1] = v + h / 6 * (b1 + 2 * b2 + 2 * b3 + b4)
            if not (np.isfinite(w[k + 1]) and np.isfinite(dw[k + 1])) or max(abs(w[k + 1]), abs(dw[k + 1])) > ceiling:
                event = "overflow"
                break
            if w[k + 1] <= floor:
                event = "vacuum"
                break
    x = h * np.arange(n + 1)
    if event is None:
        return ShotProfile(x, w, dw)
    m = k + 1
    return ShotProfile(x[:m], w[:m], dw[:m], event, float(x[m]))


def first_integral(p: StationaryParams, w, dw) -> np.ndarray:
    """Conserved quantity of the stationary ODE along a shot."""
    w = np.asarray(w, dtype=float)
    c = 0.5 * p.eps2
    return 0.5 * c * np.asarray(dw) ** 2 + p.J**2 / (4 * w**2) - 0.5 * p.law.primitive(w * w) + 0.5 * p.K * w * w


def _second_derivative(w, grid):
    # interior: the shared central stencil; ends: five-point one-sided
    # closure (third order) so the edge rows do not dominate the residual
    d2 = derivative(w, grid, 2, edge="onesided")
    h2 = grid.dx**2
    # weights (35, -104, 114, -56, 11)/12 applied to differences from the
    # edge value, so constants give exactly zero
    cf = np.array([-104.0, 114.0, -56.0, 11.0])
    d2[0] = cf @ (w[1:5] - w[0]) / (12 * h2)
    d2[-1] = cf @ (w[-2:-6:-1] - w[-1]) / (12 * h2)
    return d2


def stationary_residual(w, p: StationaryParams, grid: Grid1D | None = None, floor: float = W_FLOOR) -> np.ndarray:
    """Pointwise ``J^2/(2 w^4) + h(w^2) - c w''/w - K`` on a bounded grid."""
    w = np.asarray(w, dtype=float)
    if grid is None:
        grid = Grid1D(0.0, p.span, len(w))
    if not np.min(w) > floor:
        raise VacuumError(float(np.min(w)) ** 2, floor**2)
    c = 0.5 * p.eps2
    return 0.5 * p.J**2 / w**4 + p.law.enthalpy(w * w) - c * _second_derivative(w, grid) / w - p.K


def neumann_flux_profile(law: PressureLaw, w0: float, k0: float, bracket, span=1.0, dx=1e-3, eps2=2.0):
    """Find ``J`` in ``bracket`` such that the shot with ``w'(0) = 0`` and
    ``K = J^2/2 + k0`` also ends with ``w'(span) = 0``.

    Returns ``(params, profile)``. Such profiles are smooth states with
    zero density slope at both ends and constant flux ``J``.
    """

    def end_slope(J):
        p = StationaryParams(J, 0.5 * J**2 + k0, law, w0, 0.0, span, eps2)
        prof = stationary_shoot(p, dx)
        if not prof.complete:
            raise ValueError(f"shot with J={J} stopped early ({prof.event})")
        return prof.dw[-1]

    J = brentq(end_slope, *bracket, xtol=1e-14, rtol=1e-14)
    p = StationaryParams(J, 0.5 * J**2 + k0, law, w0, 0.0, span, eps2)
    return p, stationary_shoot(p, dx)


def positivity_sweep(J_values, K: float, law: PressureLaw, w0: float, dw0=0.0, span=1.0, dx=1e-3, eps2=2.0):
    """Shoot for each ``J`` at fixed ``K`` and report where positivity is lost, if anywhere."""
    out = []
    for J in J_values:
        prof = stationary_shoot(StationaryParams(float(J), K, law, w0, dw0, span, eps2), dx)
        out.append(
            {
                "J": float(J),
                "event": prof.event,
                "event_x": prof.event_x,
                "min_w": float(np.min(prof.w)),
            }
        )
    return out


__all__ = [
    "StationaryParams",
    "ShotProfile",
    "stationary_shoot",
    "stationary_residual",
    "first_integral",
    "neumann_flux_profile",
    "positivity_sweep",
]
