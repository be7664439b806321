"""Method-of-lines integrator for the 1D hydrodynamic system in (rho, rho u).

Spatial operators are second-order central differences with ghost cells;
time stepping is classical RK4 with ``dt = sigma * dx**2`` (the Bohm term
is dispersive, so the explicit step must scale with dx squared).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .diagnostics import DiagnosticsRecord, Trajectory, attach_residuals, make_record
from .errors import InstabilityError, NonFiniteError, VacuumError
from .numerics import BoundaryKind, Grid1D, integrate
from .physics import VACUUM_FLOOR, FluidState, PressureLaw, check_floor


@dataclass(frozen=True)
class QhdConfig:
    eps2: float = 2.0
    bc: BoundaryKind = field(default_factory=BoundaryKind)
    sigma: float = 0.1
    dt: float | None = None
    floor: float = VACUUM_FLOOR
    t_final: float = 1.0
    record_every: int = 100

    def __post_init__(self):
        if not 0 < self.sigma <= 1:
            raise ValueError("sigma must lie in (0, 1]")
        if not self.t_final > 0:
            raise ValueError("t_final must be positive")
        if not self.eps2 > 0:
            raise ValueError("eps2 must be positive")
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")

    def time_step(self, grid: Grid1D) -> tuple[float, int]:
        """Step size and count landing exactly on ``t_final``."""
        dt = self.dt if self.dt is not None else self.sigma * grid.dx**2
        steps = max(1, math.ceil(self.t_final / dt - 1e-9))
        return self.t_final / steps, steps


class FluxRHS:
    """Semi-discrete right-hand side on (rho, m) with reusable ghost buffers."""

    def __init__(self, grid: Grid1D, law: PressureLaw, eps2: float, bc: BoundaryKind):
        if grid.periodic != bc.is_periodic:
            raise ValueError("periodic boundary kind requires a periodic grid and vice versa")
        self.grid, self.law, self.bc = grid, law, bc
        self.n = grid.n
        self.dx = grid.dx
        self.c = 0.5 * eps2
        self._s = np.zeros(self.n + 4)
        self._r = np.zeros(self.n + 2)
        self._u = np.zeros(self.n + 2)

    def _ghost_sqrt(self, rho):
        s = self._s
        s[2:-2] = np.sqrt(rho)
        if self.bc.is_periodic:
            s[:2] = s[-4:-2]
            s[-2:] = s[2:4]
        else:
            s[1], s[0] = s[3], s[4]
            s[-2], s[-1] = s[-4], s[-5]
        return s

    def _ghost_velocity(self, rho, u):
        r, v = self._r, self._u
        r[1:-1] = rho
        v[1:-1] = u
        bc = self.bc
        if bc.is_periodic:
            r[0], r[-1] = rho[-1], rho[0]
            v[0], v[-1] = u[-1], u[0]
        else:
            r[0], r[-1] = rho[1], rho[-2]
            if bc.kind == "dirichlet_velocity":
                # odd reflection at a wall keeps mass exact; quadratic
                # extrapolation keeps the boundary flux second order otherwise
                v[0] = -u[1] if bc.u0 == 0 else 3 * bc.u0 - 3 * u[1] + u[2]
                v[-1] = -u[-2] if bc.u1 == 0 else 3 * bc.u1 - 3 * u[-2] + u[-3]
        return r, v

    def __call__(self, rho, m):
        dx, c = self.dx, self.c
        mn = rho.min()
        if not mn > 0:
            raise VacuumError(mn, 0.0)
        s = self._ghost_sqrt(rho)
        Q = (s[2:] - 2 * s[1:-1] + s[:-2]) / (dx * dx * s[1:-1])
        dQ = (Q[2:] - Q[:-2]) / (2 * dx)
        u = m / rho
        r, v = self._ghost_velocity(rho, u)
        mg = r * v
        F = mg * v + self.law.pressure(r)
        if self.bc.kind == "monitored":
            mg[0], mg[-1] = 2 * m[0] - m[1], 2 * m[-1] - m[-2]
            F[0], F[-1] = 2 * F[1] - F[2], 2 * F[-2] - F[-3]
        drho = (mg[:-2] - mg[2:]) / (2 * dx)
        dm = (F[:-2] - F[2:]) / (2 * dx) + c * rho * dQ
        if self.bc.kind == "dirichlet_velocity":
            dm[0] = self.bc.u0 * drho[0]
            dm[-1] = self.bc.u1 * drho[-1]
        return drho, dm


def qhd_rhs(s: FluidState, law: PressureLaw, cfg: QhdConfig):
    """Time derivatives ``(d rho/dt, d(rho u)/dt)`` of a 1D state."""
    check_floor(s.rho, cfg.floor, s.t)
    drho, dm = FluxRHS(s.grid, law, cfg.eps2, cfg.bc)(s.rho, s.rho * s.u)
    if not (np.all(np.isfinite(drho)) and np.all(np.isfinite(dm))):
        raise NonFiniteError("non-finite right-hand side")
    return drho, dm


def _pin(rho, u, bc):
    if bc.kind == "dirichlet_velocity":
        u = u.copy()
        u[0], u[-1] = bc.u0, bc.u1
    return rho, u


def qhd_run(ic: FluidState, law: PressureLaw, cfg: QhdConfig, weight=None) -> Trajectory:
    """Integrate from ``ic`` to ``cfg.t_final`` with RK4.

    Snapshots (with diagnostics) every ``cfg.record_every`` steps and at the
    final time. A vacuum event (min rho <= floor) ends the run early and is
    recorded on the trajectory; non-finite values raise
    :class:`InstabilityError` carrying the partial trajectory.
    """
    grid = ic.grid
    if grid.ndim != 1:
        raise ValueError("hydrodynamic integration is 1D only")
    if not (np.all(np.isfinite(ic.rho)) and np.all(np.isfinite(ic.u))):
        raise NonFiniteError("initial state contains non-finite values")
    check_floor(ic.rho, cfg.floor, ic.t)
    rhs = FluxRHS(grid, law, cfg.eps2, cfg.bc)
    dt, steps = cfg.time_step(grid)
    traj = Trajectory(grid=grid, law=law, eps2=cfg.eps2, bc=cfg.bc, weight=weight, floor=cfg.floor)
    traj.meta.update(dt=dt, steps=steps, sigma=dt / grid.dx**2)

    rho, u = _pin(ic.rho.copy(), ic.u.copy(), cfg.bc)
    m = rho * u
    t0 = ic.t

    def snapshot(t, rho, m):
        st = FluidState(t, rho.copy(), m / rho, grid)
        traj.append(st, make_record(st, law, cfg.eps2, traj.weight, cfg.floor))

    snapshot(t0, rho, m)
    h2, h6 = dt / 2, dt / 6
    for k in range(1, steps + 1):
        t = t0 + k * dt
        try:
            a1, b1 = rhs(rho, m)
            a2, b2 = rhs(rho + h2 * a1, m + h2 * b1)
            a3, b3 = rhs(rho + h2 * a2, m + h2 * b2)
            a4, b4 = rhs(rho + dt * a3, m + dt * b3)
            rho_new = rho + h6 * (a1 + 2 * (a2 + a3) + a4)
            mn = rho_new.min()
        except VacuumError as exc:
            # an RK stage crossed zero density: the step lands in vacuum;
            # keep the last positive field and the stage minimum
            rho_new, mn = rho, exc.min_rho
        if math.isnan(mn):
            raise InstabilityError(t, attach_residuals(traj))
        if not mn > cfg.floor:
            traj.vacuum_time = t
            traj.append(FluidState(t, rho_new, m / rho, grid),
                        DiagnosticsRecord(t=t, mass=integrate(rho_new, grid), min_rho=float(mn)))
            break
        m = m + h6 * (b1 + 2 * (b2 + b3) + b4)
        rho = rho_new
        if not np.isfinite(m).all():
            raise InstabilityError(t, attach_residuals(traj))
        if k % cfg.record_every == 0 or k == steps:
            snapshot(t, rho, m)
    return attach_residuals(traj)


__all__ = ["QhdConfig", "FluxRHS", "qhd_rhs", "qhd_run", "VacuumError"]
