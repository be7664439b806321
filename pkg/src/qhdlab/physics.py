"""Pressure laws, the Bohm potential and the Madelung transforms.

Conventions: ``eps`` is the scaled Planck constant, the quantum pressure
enters the momentum balance with weight ``eps**2 / 2``. The 1D blow-up
analysis uses ``eps**2 = 2`` so that weight is one.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import NonFiniteError, VacuumError
from .numerics import Grid1D, derivative

VACUUM_FLOOR = 1e-12
# bounded fields in this package carry homogeneous Neumann density data
DEFAULT_EDGE = "neumann"


@dataclass(frozen=True)
class PressureLaw:
    """Barotropic law ``P(rho) = sum_i c_i rho**gamma_i``.

    With ``h' = P'/rho`` and ``h(0) = 0``:
    ``h = sum c_i gamma_i/(gamma_i - 1) rho**(gamma_i - 1)`` and
    ``g = int_0^rho h = sum c_i/(gamma_i - 1) rho**gamma_i``.
    An empty term list is the free (pressureless) law.
    """

    terms: tuple[tuple[float, float], ...] = ((1.0, 2.0),)

    def __post_init__(self):
        terms = tuple((float(c), float(e)) for c, e in self.terms)
        for c, e in terms:
            if not c > 0:
                raise ValueError(f"pressure coefficients must be positive, got {c}")
            if not e > 1:
                raise ValueError(f"pressure exponents must exceed 1, got {e}")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def power(cls, gamma: float, coefficient: float = 1.0) -> "PressureLaw":
        return cls(((coefficient, gamma),))

    @classmethod
    def sum_of_powers(cls, terms) -> "PressureLaw":
        return cls(tuple(terms))

    @classmethod
    def free(cls) -> "PressureLaw":
        return cls(())

    @property
    def is_free(self) -> bool:
        return not self.terms

    def describe(self) -> str:
        if self.is_free:
            return "free"
        return " + ".join(f"{c:g}*rho^{e:g}" for c, e in self.terms)

    def _sum(self, fn, rho):
        rho = np.asarray(rho, dtype=float)
        out = np.zeros_like(rho)
        for c, e in self.terms:
            out = out + fn(c, e, rho)
        return out if out.ndim else float(out)

    def pressure(self, rho):
        return self._sum(lambda c, e, r: c * r**e, rho)

    def dpressure(self, rho):
        return self._sum(lambda c, e, r: c * e * r ** (e - 1), rho)

    def enthalpy(self, rho):
        return self._sum(lambda c, e, r: c * e / (e - 1) * r ** (e - 1), rho)

    def denthalpy(self, rho):
        return self._sum(lambda c, e, r: c * e * r ** (e - 2), rho)

    def primitive(self, rho):
        """g(rho), the density primitive of the enthalpy."""
        return self._sum(lambda c, e, r: c / (e - 1) * r**e, rho)


def law_eval(law: PressureLaw, rho):
    """Return ``(P, h, g)`` at ``rho >= 0``."""
    r = np.asarray(rho, dtype=float)
    if np.any(r < 0):
        raise ValueError("negative density")
    return law.pressure(rho), law.enthalpy(rho), law.primitive(rho)


@dataclass(frozen=True)
class AssumptionReport:
    """Outcome of :func:`law_assumption_check`."""

    lam: float
    ratio_ok: bool
    inf_ratio: float
    gap_ok: bool
    sup_gap: float
    enthalpy_ok: bool
    max_enthalpy_err: float

    @property
    def passed(self) -> bool:
        return self.ratio_ok and self.gap_ok and self.enthalpy_ok

    def as_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "pressure_ratio": {"passed": self.ratio_ok, "inf_P_over_g": self.inf_ratio},
            "pressure_gap": {"passed": self.gap_ok, "sup_P_over_rho_minus_h": self.sup_gap},
            "enthalpy_relation": {"passed": self.enthalpy_ok, "max_rel_err": self.max_enthalpy_err},
        }


def law_assumption_check(
    law: PressureLaw,
    rho_max: float,
    lam: float,
    samples: int = 400,
    decades: float = 8.0,
    tol: float = 1e-6,
) -> AssumptionReport:
    """Check ``P/g >= lam``, ``P/rho - h <= 0`` and ``h' = P'/rho`` on (0, rho_max].

    Densities are log-spaced over ``decades`` decades below ``rho_max``.
    The enthalpy relation is tested with central differences of step
    ``1e-5 * rho``, relative tolerance ``tol``.
    """
    if not rho_max > 0 or not lam > 0:
        raise ValueError("rho_max and lambda must be positive")
    rho = np.logspace(np.log10(rho_max) - decades, np.log10(rho_max), samples)
    P, h, g = law_eval(law, rho)
    P = np.asarray(P)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(np.asarray(g) > 0, P / np.asarray(g), 0.0)
    inf_ratio = float(ratio.min())
    gap = P / rho - h
    sup_gap = float(np.max(gap))
    step = 1e-5 * rho
    dh = (np.asarray(law.enthalpy(rho + step)) - np.asarray(law.enthalpy(rho - step))) / (2 * step)
    target = np.asarray(law.dpressure(rho)) / rho
    err = np.abs(dh - target) / (1 + np.abs(target))
    max_err = float(err.max())
    return AssumptionReport(
        lam=float(lam),
        # relative slack absorbs round-off in P/g for non-integer exponents
        ratio_ok=inf_ratio >= lam * (1 - 1e-12),
        inf_ratio=inf_ratio,
        gap_ok=sup_gap <= 0.0,
        sup_gap=sup_gap,
        enthalpy_ok=max_err <= tol,
        max_enthalpy_err=max_err,
    )


@dataclass(frozen=True)
class FluidState:
    """Hydrodynamic state. In 1D ``u`` has the grid shape; in d dimensions
    it is stacked with a leading component axis, ``u.shape == (d, *grid.shape)``."""

    t: float
    rho: np.ndarray
    u: np.ndarray
    grid: object = field(repr=False)

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=float)
        u = np.asarray(self.u, dtype=float)
        shape = tuple(self.grid.shape)
        if rho.shape != shape:
            raise ValueError(f"rho shape {rho.shape} does not match grid {shape}")
        want_u = shape if self.grid.ndim == 1 else (self.grid.ndim, *shape)
        if u.shape != want_u:
            raise ValueError(f"u shape {u.shape}, expected {want_u}")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "u", u)

    @property
    def momentum(self) -> np.ndarray:
        return self.rho * self.u

    def velocity_components(self) -> tuple[np.ndarray, ...]:
        return (self.u,) if self.grid.ndim == 1 else tuple(self.u)


# multi-D hydrodynamic states share the same container
FluidStateND = FluidState


@dataclass(frozen=True)
class WaveState:
    t: float
    psi: np.ndarray
    eps: float
    grid: object = field(repr=False)

    def __post_init__(self):
        psi = np.asarray(self.psi, dtype=complex)
        if psi.shape != tuple(self.grid.shape):
            raise ValueError("psi shape does not match grid")
        if not np.all(np.isfinite(psi)):
            raise NonFiniteError("wavefunction contains non-finite samples")
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        object.__setattr__(self, "psi", psi)

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.psi) ** 2


@dataclass(frozen=True)
class MadelungGauge:
    """Anchor of the phase integration: ``S(x0) = phase``."""

    x0: float = 0.0
    phase: float = 0.0

    def index(self, grid: Grid1D) -> int:
        i = int(round((self.x0 - grid.x_lo) / grid.dx))
        if not 0 <= i < grid.n or abs(grid.x[i] - self.x0) > 1e-9 * grid.dx:
            raise ValueError(f"gauge anchor x0={self.x0} is not a grid point")
        return i


def check_floor(rho, floor: float = VACUUM_FLOOR, t=None) -> None:
    m = float(np.min(rho))
    if not m > floor:
        raise VacuumError(m, floor, t)


def bohm(rho, grid, floor: float = VACUUM_FLOOR, edge: str | None = None) -> np.ndarray:
    """Bohm potential ``Laplacian(sqrt rho) / sqrt rho``."""
    check_floor(rho, floor)
    edge = edge or DEFAULT_EDGE
    s = np.sqrt(rho)
    lap = sum(derivative(s, grid, 2, axis=ax, edge=edge) for ax in range(grid.ndim))
    return lap / s


def madelung_forward(w: WaveState, floor: float = VACUUM_FLOOR, edge: str | None = None) -> FluidState:
    """``rho = |psi|^2``, ``u = eps Im(conj(psi) grad psi) / |psi|^2``."""
    rho = w.density
    check_floor(rho, floor, w.t)
    edge = edge or DEFAULT_EDGE
    comps = []
    for ax in range(w.grid.ndim):
        dpsi = derivative(w.psi, w.grid, 1, axis=ax, edge=edge)
        comps.append(w.eps * np.imag(np.conj(w.psi) * dpsi) / rho)
    u = comps[0] if w.grid.ndim == 1 else np.stack(comps)
    return FluidState(w.t, rho, u, w.grid)


def madelung_inverse(
    f: FluidState, eps: float, gauge: MadelungGauge | None = None, floor: float = VACUUM_FLOOR
) -> WaveState:
    """1D inverse transform ``psi = sqrt(rho) exp(i S / eps)`` with ``S' = u``.

    The phase is the cumulative trapezoid integral of ``u`` anchored at the
    gauge point (left endpoint by default).
    """
    if f.grid.ndim != 1:
        raise ValueError("inverse Madelung transform is 1D only (irrotationality is not checked)")
    check_floor(f.rho, floor, f.t)
    grid = f.grid
    gauge = gauge or MadelungGauge(x0=grid.x_lo)
    S = cumulative_trapezoid(f.u, dx=grid.dx, initial=0.0)
    i0 = gauge.index(grid)
    S = S - S[i0] + gauge.phase
    return WaveState(f.t, np.sqrt(f.rho) * np.exp(1j * S / eps), eps, grid)
