"""Uniform grids, finite-difference operators and quadrature.

Everything here is a pure function of numpy arrays. Fields are plain
``ndarray`` objects whose shape matches ``grid.shape``; the grid carries
spacing and the periodic/bounded distinction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import NonFiniteError, StencilError

EDGE_MODES = ("onesided", "neumann")


@dataclass(frozen=True)
class Grid1D:
    """Uniform 1D grid.

    Bounded grids include both endpoints, ``dx = (x_hi - x_lo)/(n - 1)``.
    Periodic grids omit the right endpoint, ``dx = (x_hi - x_lo)/n``.
    """

    x_lo: float
    x_hi: float
    n: int
    periodic: bool = False

    def __post_init__(self):
        if self.n < 8:
            raise StencilError(f"grid needs n >= 8 points, got {self.n}")
        if not self.x_hi > self.x_lo:
            raise ValueError("x_hi must exceed x_lo")

    @property
    def length(self) -> float:
        return self.x_hi - self.x_lo

    @property
    def dx(self) -> float:
        return self.length / (self.n if self.periodic else self.n - 1)

    @cached_property
    def x(self) -> np.ndarray:
        return self.x_lo + self.dx * np.arange(self.n)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,)

    @property
    def ndim(self) -> int:
        return 1

    @property
    def axes(self) -> tuple["Grid1D", ...]:
        return (self,)

    def axis(self, i: int) -> "Grid1D":
        if i != 0:
            raise IndexError("1D grid has a single axis")
        return self

    def mesh(self) -> tuple[np.ndarray, ...]:
        return (self.x,)

    def refined(self, factor: int = 2) -> "Grid1D":
        """Grid with spacing divided by ``factor`` on the same interval."""
        if self.periodic:
            return Grid1D(self.x_lo, self.x_hi, self.n * factor, True)
        return Grid1D(self.x_lo, self.x_hi, (self.n - 1) * factor + 1, False)


@dataclass(frozen=True)
class TensorGrid:
    """Tensor product of 1D grids (used for the 2D wave solver and weights)."""

    axes: tuple[Grid1D, ...]

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(self.axes))

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(a.n for a in self.axes)

    @property
    def ndim(self) -> int:
        return len(self.axes)

    @property
    def periodic(self) -> bool:
        return all(a.periodic for a in self.axes)

    def axis(self, i: int) -> Grid1D:
        return self.axes[i]

    def mesh(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*(a.x for a in self.axes), indexing="ij"))

    @property
    def cell_volume(self) -> float:
        return math.prod(a.dx for a in self.axes)


@dataclass(frozen=True)
class BoundaryKind:
    """Boundary treatment for the 1D hydrodynamic solver.

    ``periodic``: wrap-around.
    ``dirichlet_velocity``: rho_x = 0 by even reflection, u pinned to
    (u0, u1) at the two ends.
    ``monitored``: rho_x = 0, momentum extrapolated; (c1, c2) are the
    target values of the boundary indicator, which is observed and never
    imposed.
    """

    kind: str = "periodic"
    u0: float = 0.0
    u1: float = 0.0
    c1: float = 0.0
    c2: float = 0.0

    def __post_init__(self):
        if self.kind not in ("periodic", "dirichlet_velocity", "monitored"):
            raise ValueError(f"unknown boundary kind {self.kind!r}")
        vals = (self.u0, self.u1, self.c1, self.c2)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("boundary constants must be finite")

    @classmethod
    def periodic_bc(cls) -> "BoundaryKind":
        return cls("periodic")

    @classmethod
    def dirichlet_velocity(cls, u0: float = 0.0, u1: float = 0.0) -> "BoundaryKind":
        return cls("dirichlet_velocity", u0=float(u0), u1=float(u1))

    @classmethod
    def monitored(cls, c1: float = 0.0, c2: float = 0.0) -> "BoundaryKind":
        return cls("monitored", c1=float(c1), c2=float(c2))

    @property
    def is_periodic(self) -> bool:
        return self.kind == "periodic"

    @property
    def blowup_regime(self) -> bool:
        """True when the monitored targets satisfy c1 <= 0 and c2 <= 0 (flag only)."""
        return self.kind == "monitored" and self.c1 <= 0 and self.c2 <= 0


def _check_finite(f):
    if not np.all(np.isfinite(f)):
        raise NonFiniteError("field contains non-finite values")


def derivative(f, grid, order: int = 1, axis: int = 0, edge: str = "onesided") -> np.ndarray:
    """Finite-difference derivative of ``f`` along ``axis``.

    Second-order central differences in the interior. On bounded axes the
    edge rows use ``edge``:

    * ``"onesided"``: second-order one-sided stencils for orders 1 and 2,
      first-order one-sided for order 3.
    * ``"neumann"``: ``f`` is continued evenly across each end (ghost
      reflection), so odd-order derivatives vanish on the boundary.

    Works for real or complex ``f``.
    """
    if order not in (1, 2, 3):
        raise ValueError("order must be 1, 2 or 3")
    if edge not in EDGE_MODES:
        raise ValueError(f"edge must be one of {EDGE_MODES}")
    f = np.asarray(f)
    _check_finite(f)
    g1 = grid.axis(axis)
    n = f.shape[axis]
    if n != g1.n:
        raise ValueError(f"field has {n} samples along axis {axis}, grid has {g1.n}")
    if n < order + 2:
        raise StencilError(f"order-{order} stencil needs at least {order + 2} points")
    h = g1.dx
    a = np.moveaxis(f, axis, 0)
    if g1.periodic:
        out = _periodic(a, order, h)
    elif edge == "neumann":
        out = _neumann(a, order, h)
    else:
        out = _onesided(a, order, h)
    return np.moveaxis(out, 0, axis)


def _periodic(a, order, h):
    if order == 1:
        return (np.roll(a, -1, 0) - np.roll(a, 1, 0)) / (2 * h)
    if order == 2:
        return (np.roll(a, -1, 0) - 2 * a + np.roll(a, 1, 0)) / h**2
    return (np.roll(a, -2, 0) - 2 * np.roll(a, -1, 0) + 2 * np.roll(a, 1, 0) - np.roll(a, 2, 0)) / (
        2 * h**3
    )


def _interior(a, out, order, h):
    if order == 1:
        out[1:-1] = (a[2:] - a[:-2]) / (2 * h)
    elif order == 2:
        out[1:-1] = (a[2:] - 2 * a[1:-1] + a[:-2]) / h**2
    else:
        out[2:-2] = (a[4:] - 2 * a[3:-1] + 2 * a[1:-3] - a[:-4]) / (2 * h**3)


def _onesided(a, order, h):
    out = np.empty_like(a, dtype=np.result_type(a, float))
    _interior(a, out, order, h)
    # closures written on differences from the edge value so constants give exactly zero
    l1, l2, l3 = a[1] - a[0], a[2] - a[0], a[3] - a[0]
    r1, r2, r3 = a[-2] - a[-1], a[-3] - a[-1], a[-4] - a[-1]
    if order == 1:
        out[0] = (4 * l1 - l2) / (2 * h)
        out[-1] = -(4 * r1 - r2) / (2 * h)
    elif order == 2:
        out[0] = (-5 * l1 + 4 * l2 - l3) / h**2
        out[-1] = (-5 * r1 + 4 * r2 - r3) / h**2
    else:
        fwd = (3 * l1 - 3 * l2 + l3) / h**3
        bwd = -(3 * r1 - 3 * r2 + r3) / h**3
        out[0] = out[1] = fwd
        out[-1] = out[-2] = bwd
    return out


def _neumann(a, order, h):
    out = np.empty_like(a, dtype=np.result_type(a, float))
    _interior(a, out, order, h)
    if order == 1:
        out[0] = 0.0
        out[-1] = 0.0
    elif order == 2:
        out[0] = 2 * (a[1] - a[0]) / h**2
        out[-1] = 2 * (a[-2] - a[-1]) / h**2
    else:
        out[0] = 0.0
        out[-1] = 0.0
        # ghost a[-1] = a[1] (left), a[n] = a[n-2] (right)
        out[1] = (a[3] - 2 * a[2] + 2 * a[0] - a[1]) / (2 * h**3)
        out[-2] = (a[-2] - 2 * a[-1] + 2 * a[-3] - a[-4]) / (2 * h**3)
    return out


def quadrature_weights(g1: Grid1D) -> np.ndarray:
    """Trapezoid weights on bounded grids, rectangle weights on periodic ones."""
    w = np.full(g1.n, g1.dx)
    if not g1.periodic:
        w[0] *= 0.5
        w[-1] *= 0.5
    return w


def integrate(f, grid) -> float:
    """Integral of ``f`` over the grid domain (tensorized 1D rules)."""
    f = np.asarray(f)
    if np.iscomplexobj(f):
        raise TypeError("integrate expects a real field")
    _check_finite(f)
    if f.shape != tuple(grid.shape):
        raise ValueError(f"field shape {f.shape} does not match grid {grid.shape}")
    out = f
    for ax in reversed(range(grid.ndim)):
        out = np.tensordot(out, quadrature_weights(grid.axis(ax)), axes=([ax], [0]))
    return float(out)


def trapezoid_in_time(values, times) -> np.ndarray:
    """Cumulative trapezoid integral of a time series, starting at zero."""
    values = np.asarray(values, dtype=float)
    times = np.asarray(times, dtype=float)
    out = np.zeros_like(values)
    if len(values) > 1:
        out[1:] = np.cumsum(0.5 * (values[1:] + values[:-1]) * np.diff(times))
    return out
