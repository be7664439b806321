"""Functionals, identity residuals and conditional blow-up monitors.

The 1D functionals follow the scaling used throughout the package: the
quantum terms carry the factor ``c = eps2 / 2`` (one for ``eps2 = 2``).

* energy       E = int 1/2 rho u^2 + g(rho) + c (sqrt(rho)_x)^2
* iso-energy   K = 1/2 u^2 + h(rho) - c sqrt(rho)_xx / sqrt(rho)
* indicator    B = u^2 + P(rho)/rho - c sqrt(rho)_xx / sqrt(rho)
* observable   I = int a rho, with a = (x - x_lo)(x_hi - x) by default
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import AssumptionError
from .numerics import BoundaryKind, derivative, integrate, trapezoid_in_time
from .physics import (
    DEFAULT_EDGE,
    VACUUM_FLOOR,
    FluidState,
    PressureLaw,
    bohm,
    check_floor,
    law_assumption_check,
)

NAN = float("nan")
CSV_COLUMNS = ("t", "E", "I", "K0", "K1", "B0", "B1", "mass", "min_rho", "res_energy", "res_dI")


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    E: float = NAN
    I: float = NAN
    K0: float = NAN
    K1: float = NAN
    B0: float = NAN
    B1: float = NAN
    mass: float = NAN
    min_rho: float = NAN
    res_energy: float = NAN
    res_dI: float = NAN

    def row(self) -> tuple[float, ...]:
        return tuple(getattr(self, c) for c in CSV_COLUMNS)


@dataclass
class Trajectory:
    """Snapshots of a hydrodynamic run plus the context needed to evaluate them."""

    grid: object
    law: PressureLaw
    eps2: float = 2.0
    bc: BoundaryKind = field(default_factory=BoundaryKind)
    states: list = field(default_factory=list)
    records: list = field(default_factory=list)
    weight: np.ndarray | None = None
    vacuum_time: float | None = None
    floor: float = VACUUM_FLOOR
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.weight is None and self.grid.ndim == 1:
            self.weight = default_weight(self.grid)

    @property
    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.records])

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    def append(self, state: FluidState, record: DiagnosticsRecord) -> None:
        if self.records and not record.t > self.records[-1].t:
            raise ValueError("snapshot times must increase strictly")
        self.states.append(state)
        self.records.append(record)

    @property
    def bounded(self) -> bool:
        return self.grid.ndim == 1 and not self.grid.periodic

    def smooth_indices(self) -> list[int]:
        """Snapshots taken strictly before any vacuum event."""
        return [i for i, r in enumerate(self.records) if r.min_rho > self.floor]


def default_weight(grid) -> np.ndarray:
    """Concave quadratic vanishing at both ends of a 1D interval."""
    x = grid.x
    return np.clip((x - grid.x_lo) * (grid.x_hi - x), 0.0, None)


def default_weight_gradient(grid) -> np.ndarray:
    return grid.x_lo + grid.x_hi - 2 * grid.x


def _c(eps2):
    return 0.5 * eps2


def _grad_sqrt_rho_sq(rho, grid, edge):
    s = np.sqrt(rho)
    return sum(derivative(s, grid, 1, axis=ax, edge=edge) ** 2 for ax in range(grid.ndim))


def _speed_sq(s: FluidState):
    return sum(c**2 for c in s.velocity_components())


def energy(s: FluidState, law: PressureLaw, eps2: float = 2.0, floor=VACUUM_FLOOR, edge=DEFAULT_EDGE) -> float:
    check_floor(s.rho, floor)
    dens = 0.5 * s.rho * _speed_sq(s) + law.primitive(s.rho) + _c(eps2) * _grad_sqrt_rho_sq(s.rho, s.grid, edge)
    return integrate(dens, s.grid)


def iso_energy_K(s: FluidState, law: PressureLaw, eps2: float = 2.0, floor=VACUUM_FLOOR, edge=DEFAULT_EDGE):
    Q = bohm(s.rho, s.grid, floor, edge)
    return 0.5 * _speed_sq(s) + law.enthalpy(s.rho) - _c(eps2) * Q


def indicator_field(s: FluidState, law: PressureLaw, eps2: float = 2.0, floor=VACUUM_FLOOR, edge=DEFAULT_EDGE):
    Q = bohm(s.rho, s.grid, floor, edge)
    return _speed_sq(s) + law.pressure(s.rho) / s.rho - _c(eps2) * Q


def boundary_indicator_B(s: FluidState, law: PressureLaw, eps2: float = 2.0, floor=VACUUM_FLOOR, edge=DEFAULT_EDGE):
    """``(B0, B1)``: ``u^2 + P/rho - c Q`` at the two ends of a 1D grid."""
    b = indicator_field(s, law, eps2, floor, edge)
    return float(b[0]), float(b[-1])


def observable_I(s: FluidState, weight) -> float:
    weight = np.asarray(weight, dtype=float)
    if np.min(weight) < -1e-12 * max(1.0, float(np.max(np.abs(weight)))):
        raise ValueError("observable weight must be nonnegative")
    return integrate(weight * s.rho, s.grid)


def weighted_momentum(s: FluidState, weight_grad) -> float:
    """``int rho u . grad(a)``; for 1D ``weight_grad`` is the derivative array.

    Values that are round-off relative to ``int |rho u . grad(a)|`` are
    returned as exactly zero, so the sign test on M0 is not decided by noise.
    """
    wg = np.asarray(weight_grad, dtype=float)
    if s.grid.ndim == 1:
        f = s.rho * s.u * wg
    else:
        f = s.rho * np.sum(s.u * wg, axis=0)
    m = integrate(f, s.grid)
    scale = integrate(np.abs(f), s.grid)
    return 0.0 if abs(m) <= 1e-13 * scale else m


def make_record(
    s: FluidState,
    law: PressureLaw,
    eps2: float = 2.0,
    weight=None,
    floor=VACUUM_FLOOR,
    edge=DEFAULT_EDGE,
) -> DiagnosticsRecord:
    """Snapshot diagnostics; boundary columns are NaN on periodic or multi-D grids."""
    min_rho = float(np.min(s.rho))
    mass = integrate(s.rho, s.grid)
    if not min_rho > floor:
        return DiagnosticsRecord(t=s.t, mass=mass, min_rho=min_rho)
    E = energy(s, law, eps2, floor, edge)
    I = observable_I(s, weight) if weight is not None else NAN
    K0 = K1 = B0 = B1 = NAN
    if s.grid.ndim == 1 and not s.grid.periodic:
        K = iso_energy_K(s, law, eps2, floor, edge)
        K0, K1 = float(K[0]), float(K[-1])
        B0, B1 = boundary_indicator_B(s, law, eps2, floor, edge)
    return DiagnosticsRecord(t=s.t, E=E, I=I, K0=K0, K1=K1, B0=B0, B1=B1, mass=mass, min_rho=min_rho)


@dataclass(frozen=True)
class BlowupReport:
    I0: float
    M0: float
    T_star: float | None
    hypothesis_windows: tuple = ()
    bound_satisfied: tuple = ()
    envelope: tuple = ()
    times: tuple = ()
    vacuum_time: float | None = None
    tol: float | None = None
    message: str = ""
    anchored_window: tuple | None = None

    @property
    def violations(self) -> int:
        return sum(1 for b in self.bound_satisfied if b is False)

    @property
    def anchored_violations(self) -> int:
        """Violations inside the window that starts at the first snapshot,
        i.e. where the boundary sign has held on all of [0, t]."""
        if self.anchored_window is None:
            return 0
        t1 = self.anchored_window[1]
        return sum(1 for t, b in zip(self.times, self.bound_satisfied) if b is False and t <= t1)

    def as_dict(self) -> dict:
        return {
            "I0": self.I0,
            "M0": self.M0,
            "T_star": self.T_star,
            "hypothesis_windows": [list(w) for w in self.hypothesis_windows],
            "checked": sum(1 for b in self.bound_satisfied if b is not None),
            "violations": self.violations,
            "anchored_window": None if self.anchored_window is None else list(self.anchored_window),
            "anchored_violations": self.anchored_violations,
            "vacuum_time": self.vacuum_time,
            "tol": self.tol,
            "message": self.message,
        }


def initial_data_report(rho_I, u_I, grid, weight=None, weight_grad=None) -> BlowupReport:
    """``I0 = int a rho_I``, ``M0 = int rho_I u_I . grad a`` and ``T* = -I0/M0`` when ``M0 < 0``.

    Defaults to the 1D quadratic weight (``grad a = 1 - 2x`` on [0, 1]).
    """
    if np.min(rho_I) <= 0:
        raise ValueError("initial density must be positive")
    if weight is None:
        weight = default_weight(grid)
        weight_grad = default_weight_gradient(grid)
    elif weight_grad is None:
        raise ValueError("weight_grad is required with a custom weight")
    s = FluidState(0.0, rho_I, u_I, grid)
    I0 = observable_I(s, weight)
    M0 = weighted_momentum(s, weight_grad)
    T_star = -I0 / M0 if M0 < 0 else None
    return BlowupReport(I0=I0, M0=M0, T_star=T_star)


def _boundary_flux_terms(traj: Trajectory, idx):
    """Per snapshot: (u rho K) and (rho B) at both ends, from the stored states."""
    edge = DEFAULT_EDGE
    out = []
    for i in idx:
        s = traj.states[i]
        K = iso_energy_K(s, traj.law, traj.eps2, traj.floor, edge)
        B = indicator_field(s, traj.law, traj.eps2, traj.floor, edge)
        J = s.rho * s.u
        out.append((J[0] * K[0], J[-1] * K[-1], s.rho[0] * B[0], s.rho[-1] * B[-1]))
    return np.array(out).reshape(-1, 4)


def energy_balance_residual(traj: Trajectory) -> np.ndarray:
    """``E(t) - E(0) + int_0^t (u rho K)(x_hi) - (u rho K)(x_lo) ds`` per snapshot.

    Periodic runs drop the boundary bracket. Entries at or after a vacuum
    event are NaN.
    """
    idx = traj.smooth_indices()
    out = np.full(len(traj.records), NAN)
    if not idx:
        return out
    t = traj.times[idx]
    E = traj.column("E")[idx]
    r = E - E[0]
    if traj.bounded:
        fl = _boundary_flux_terms(traj, idx)
        r = r + trapezoid_in_time(fl[:, 1] - fl[:, 0], t)
    out[idx] = r
    return out


def observable_identity_residual(traj: Trajectory) -> np.ndarray:
    """Residual of the observable identity on a bounded 1D run.

    ``dI/dt`` (central differences over snapshots) minus
    ``M0 - 2 int_0^t int (rho u^2 + P + 2c sqrt(rho)_x^2) dx ds
    + L int_0^t [(rho B)(x_lo) + (rho B)(x_hi)] ds`` with ``L`` the interval
    length (one on [0, 1]).
    """
    if not traj.bounded:
        raise ValueError("observable identity applies to bounded 1D runs only")
    idx = traj.smooth_indices()
    out = np.full(len(traj.records), NAN)
    if len(idx) < 3:
        return out
    g = traj.grid
    t = traj.times[idx]
    I = np.array([observable_I(traj.states[i], traj.weight) for i in idx])
    dI = np.gradient(I, t, edge_order=2)
    wg = default_weight_gradient(g)
    M0 = weighted_momentum(traj.states[idx[0]], wg)
    c = _c(traj.eps2)
    phi = []
    for i in idx:
        s = traj.states[i]
        dens = s.rho * s.u**2 + traj.law.pressure(s.rho) + 2 * c * _grad_sqrt_rho_sq(s.rho, g, DEFAULT_EDGE)
        phi.append(integrate(dens, g))
    fl = _boundary_flux_terms(traj, idx)
    rhs = M0 - 2 * trapezoid_in_time(phi, t) + g.length * trapezoid_in_time(fl[:, 2] + fl[:, 3], t)
    out[idx] = dI - rhs
    return out


def attach_residuals(traj: Trajectory) -> Trajectory:
    """Fill ``res_energy`` (and ``res_dI`` on bounded runs) into every record."""
    if traj.grid.ndim != 1 or not traj.records:
        return traj
    re = energy_balance_residual(traj)
    rd = observable_identity_residual(traj) if traj.bounded else np.full(len(traj.records), NAN)
    traj.records = [replace(r, res_energy=float(a), res_dI=float(b)) for r, a, b in zip(traj.records, re, rd)]
    return traj


def _windows(times, mask):
    """Contiguous runs of True in ``mask`` as (t_start, t_end) pairs."""
    wins = []
    start = None
    for t, m in zip(times, mask):
        if m and start is None:
            start = t
        if m:
            end = t
        if not m and start is not None:
            wins.append((float(start), float(end)))
            start = None
    if start is not None:
        wins.append((float(start), float(end)))
    return tuple(wins)


def theorem2_monitor(traj: Trajectory, report: BlowupReport, tol: float | None = None) -> BlowupReport:
    """Check ``I(t) <= I0 + M0 t + tol`` wherever both boundary indicators are <= 0.

    Snapshots outside the hypothesis windows are left unchecked (``None``).
    The window starting at the first snapshot, if any, is also reported as
    ``anchored_window``: only there has the boundary sign held on all of
    ``[0, t]``.
    """
    tol = 1e-3 * (1 + abs(report.I0)) if tol is None else tol
    times = traj.times
    B0, B1, I = traj.column("B0"), traj.column("B1"), traj.column("I")
    mask = (B0 <= 0) & (B1 <= 0)
    wins = _windows(times, mask)
    env = report.I0 + report.M0 * times
    sat = tuple(bool(i <= e + tol) if m else None for i, e, m in zip(I, env, mask))
    vac = blowup_detect(traj, traj.floor)
    if not wins:
        msg = "hypothesis never satisfied"
    elif any(s is False for s in sat):
        msg = "envelope violated inside a hypothesis window"
    else:
        msg = "envelope holds in all hypothesis windows"
    if report.M0 >= 0 and wins:
        msg += " (M0 >= 0: no blow-up prediction)"
    return replace(
        report,
        hypothesis_windows=wins,
        bound_satisfied=sat,
        envelope=tuple(float(e) for e in env),
        times=tuple(float(t) for t in times),
        anchored_window=wins[0] if wins and wins[0][0] == float(times[0]) else None,
        vacuum_time=None if vac is None else vac.t,
        tol=tol,
        message=msg,
    )


@dataclass(frozen=True)
class Theorem4Params:
    alpha: float
    M: float
    u0: float = 0.0
    u1: float = 0.0
    lam: float = 1.0

    def __post_init__(self):
        if not self.alpha > 1:
            raise ValueError("alpha must exceed 1")
        if not self.M > 0:
            raise ValueError("M must be positive")
        if not self.lam > 0:
            raise ValueError("lambda must be positive")

    @property
    def umax(self) -> float:
        return max(abs(self.u0), abs(self.u1))


@dataclass(frozen=True)
class Theorem4Report:
    max_K_jump: float
    windows: tuple
    branch: tuple
    envelope: tuple
    satisfied: tuple
    I0: float
    M0: float
    E0: float
    energy_threshold: float
    energy_threshold_met: bool
    T_star: float | None
    tol: float
    integrated_envelope: tuple = ()

    @property
    def violations(self) -> int:
        return sum(1 for s in self.satisfied if s is False)

    def as_dict(self) -> dict:
        return {
            "max_K_jump": self.max_K_jump,
            "windows": [list(w) for w in self.windows],
            "branches": sorted(set(self.branch)),
            "checked": sum(1 for s in self.satisfied if s is not None),
            "violations": self.violations,
            "I0": self.I0,
            "M0": self.M0,
            "E0": self.E0,
            "energy_threshold": self.energy_threshold,
            "energy_threshold_met": self.energy_threshold_met,
            "T_star": self.T_star,
            "tol": self.tol,
        }


def zero_velocity_envelope(I0, M0, E0, lam, t):
    """Envelope of the ``u0 = u1 = 0`` branch, ``I0 + t (M0 - 2 E0 min(lam, 2))``.

    Kept in this linear form on purpose; the time-integrated bound is
    reported separately as ``integrated_envelope``."""
    return I0 + np.asarray(t) * (M0 - 2.0 * E0 * min(lam, 2.0))


def theorem4_monitor(traj: Trajectory, law: PressureLaw, p: Theorem4Params, tol: float | None = None) -> Theorem4Report:
    """Machinery of the Dirichlet-velocity blow-up configuration.

    Reports the endpoint jump of K, the windows where
    ``-M <= K(0,t) <= -alpha max(|u0|,|u1|)^2`` (required at both ends), the
    branch of the case split per snapshot, its envelope, and whether
    ``I(t) <= envelope + tol`` inside the windows.
    """
    rho_max = max(float(np.max(s.rho)) for s in traj.states)
    rep = law_assumption_check(law, 2 * rho_max, p.lam)
    if not (rep.ratio_ok and rep.gap_ok):
        raise AssumptionError(
            f"pressure law {law.describe()} fails the pressure assumptions with lambda={p.lam}: "
            f"inf P/g={rep.inf_ratio:.6g}, sup P/rho-h={rep.sup_gap:.3g}",
            rep,
        )
    times = traj.times
    K0, K1, I, E = traj.column("K0"), traj.column("K1"), traj.column("I"), traj.column("E")
    I0, E0 = float(I[0]), float(E[0])
    M0 = weighted_momentum(traj.states[0], default_weight_gradient(traj.grid))
    tol = 1e-3 * (1 + abs(I0)) if tol is None else tol
    lm = min(p.lam, 2.0)
    um = p.umax
    upper = -p.alpha * um**2
    mask = (K0 >= -p.M) & (K0 <= upper) & (K1 >= -p.M) & (K1 <= upper)
    wins = _windows(times, mask)

    rho_ends = np.array([[s.rho[0], s.rho[-1]] for s in traj.states])
    cum0 = trapezoid_in_time(rho_ends[:, 0], times)
    cum1 = trapezoid_in_time(rho_ends[:, 1], times)

    branch, env = [], []
    if um == 0.0:
        env = list(zero_velocity_envelope(I0, M0, E0, p.lam, times))
        branch = ["zero_velocity"] * len(times)
        threshold = M0 / (2 * lm)
        denom = 2 * E0 * lm - M0
        T_star = I0 / denom if denom > 0 else None
    elif M0 < 0:
        env = list(I0 + M0 * times)
        branch = ["negative_M0"] * len(times)
        threshold = -math.inf
        T_star = -I0 / M0
    else:
        cut = 2 * M0 / um**2
        threshold = 4 * M0 * p.M / um
        for t, c0, c1 in zip(times, cum0, cum1):
            if c0 >= cut or c1 >= cut:
                branch.append("first_part")
                env.append(I0 - M0 * t * (2 * p.alpha - 2))
            else:
                branch.append("second_part")
                env.append(I0 + M0 * t - lm * t**2 * (E0 - threshold))
        T_star = None
    sat = tuple(bool(i <= e + tol) if m else None for i, e, m in zip(I, env, mask))
    integrated = tuple(float(v) for v in I0 + M0 * times - lm * E0 * times**2) if um == 0.0 else ()
    return Theorem4Report(
        max_K_jump=float(np.max(np.abs(K0 - K1))),
        windows=wins,
        branch=tuple(branch),
        envelope=tuple(float(e) for e in env),
        satisfied=sat,
        I0=I0,
        M0=float(M0),
        E0=E0,
        energy_threshold=float(threshold),
        energy_threshold_met=bool(E0 >= threshold),
        T_star=T_star,
        tol=tol,
        integrated_envelope=integrated,
    )


@dataclass(frozen=True)
class VacuumEvent:
    t: float
    min_rho: float
    fraction_below: float


def blowup_detect(traj: Trajectory, floor: float = VACUUM_FLOOR) -> VacuumEvent | None:
    """First snapshot with ``min rho <= floor``, plus the fraction of grid
    points below ``10 * floor`` there."""
    for r, s in zip(traj.records, traj.states):
        if not r.min_rho > floor:
            frac = float(np.mean(s.rho <= 10 * floor))
            return VacuumEvent(t=r.t, min_rho=r.min_rho, fraction_below=frac)
    return None
