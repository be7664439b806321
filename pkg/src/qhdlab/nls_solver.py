"""Strang split-step integrator for ``i eps psi_t = -eps^2/2 Lap psi + h(|psi|^2) psi``.

The kinetic sub-step is diagonal in a trigonometric basis: complex
exponentials on periodic axes (FFT), cosines on Neumann axes (DCT-I on
grids that include both endpoints). The nonlinear sub-step is an exact
pointwise phase rotation because it leaves ``|psi|`` unchanged.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft

from .diagnostics import DiagnosticsRecord, Trajectory, attach_residuals, make_record
from .errors import InstabilityError
from .numerics import BoundaryKind, integrate
from .physics import VACUUM_FLOOR, FluidState, PressureLaw, WaveState, madelung_forward


@dataclass(frozen=True)
class NlsConfig:
    eps: float = float(np.sqrt(2.0))
    bc: str = "periodic"
    dt: float = 1e-4
    t_final: float = 1.0
    dims: int = 1
    record_every: int = 100
    floor: float = VACUUM_FLOOR

    def __post_init__(self):
        if self.bc not in ("periodic", "neumann"):
            raise ValueError("bc must be 'periodic' or 'neumann'")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.dims not in (1, 2):
            raise ValueError("dims must be 1 or 2")
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if not self.t_final > 0:
            raise ValueError("t_final must be positive")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")

    @property
    def eps2(self) -> float:
        return self.eps**2

    def steps(self) -> tuple[float, int]:
        n = max(1, int(np.ceil(self.t_final / self.dt - 1e-9)))
        return self.t_final / n, n


def _wavenumbers(g1, bc):
    if bc == "periodic":
        if not g1.periodic:
            raise ValueError("periodic NLS run needs periodic grid axes")
        return 2 * np.pi * np.fft.fftfreq(g1.n, d=g1.dx)
    if g1.periodic:
        raise ValueError("Neumann NLS run needs bounded grid axes")
    return np.pi * np.arange(g1.n) / g1.length


class SplitStep:
    """Precomputed propagators for one (grid, law, eps, dt)."""

    def __init__(self, grid, law: PressureLaw, eps: float, bc: str, dt: float):
        if grid.ndim not in (1, 2):
            raise ValueError("wave solver supports 1D and 2D grids")
        self.grid, self.law, self.eps, self.bc, self.dt = grid, law, eps, bc, dt
        ks = [_wavenumbers(grid.axis(i), bc) for i in range(grid.ndim)]
        k2 = sum(np.meshgrid(*[k**2 for k in ks], indexing="ij"))
        self.kinetic = np.exp(-0.5j * eps * k2 * dt)
        self.axes = tuple(range(grid.ndim))

    def _forward(self, psi):
        if self.bc == "periodic":
            return sfft.fftn(psi, axes=self.axes)
        return sfft.dctn(psi, type=1, axes=self.axes)

    def _backward(self, c):
        if self.bc == "periodic":
            return sfft.ifftn(c, axes=self.axes)
        return sfft.idctn(c, type=1, axes=self.axes)

    def _phase(self, psi, tau):
        h = self.law.enthalpy(np.abs(psi) ** 2)
        return psi * np.exp(-1j * h * tau / self.eps)

    def __call__(self, psi):
        psi = self._phase(psi, 0.5 * self.dt)
        psi = self._backward(self.kinetic * self._forward(psi))
        return self._phase(psi, 0.5 * self.dt)


def nls_step(w: WaveState, law: PressureLaw, cfg: NlsConfig, dt: float | None = None) -> WaveState:
    """One Strang step of size ``dt`` (default ``cfg.dt``; negative steps run backwards)."""
    dt = cfg.dt if dt is None else dt
    psi = SplitStep(w.grid, law, w.eps, cfg.bc, dt)(w.psi)
    if not np.all(np.isfinite(psi)):
        raise InstabilityError(w.t + dt)
    return WaveState(w.t + dt, psi, w.eps, w.grid)


def spectral_gradient(psi, grid, bc: str):
    """Spectral partial derivatives of ``psi`` along each axis.

    Neumann axes are differentiated through their even extension, which is
    the derivative of the cosine interpolant.
    """
    out = []
    for ax in range(grid.ndim):
        g1 = grid.axis(ax)
        a = np.moveaxis(psi, ax, 0)
        if bc == "periodic":
            k = 2 * np.pi * np.fft.fftfreq(g1.n, d=g1.dx)
            d = np.fft.ifft(1j * k.reshape((-1,) + (1,) * (a.ndim - 1)) * np.fft.fft(a, axis=0), axis=0)
        else:
            ext = np.concatenate([a, a[-2:0:-1]], axis=0)
            m = ext.shape[0]
            k = 2 * np.pi * np.fft.fftfreq(m, d=g1.dx)
            if m % 2 == 0:
                k[m // 2] = 0.0
            d = np.fft.ifft(1j * k.reshape((-1,) + (1,) * (a.ndim - 1)) * np.fft.fft(ext, axis=0), axis=0)
            d = d[: g1.n]
        out.append(np.moveaxis(d, 0, ax))
    return out


def wave_mass(w: WaveState) -> float:
    return integrate(np.abs(w.psi) ** 2, w.grid)


def wave_energy(w: WaveState, law: PressureLaw, bc: str) -> float:
    """``int eps^2/2 |grad psi|^2 + g(|psi|^2)``."""
    grads = spectral_gradient(w.psi, w.grid, bc)
    dens = 0.5 * w.eps**2 * sum(np.abs(d) ** 2 for d in grads) + law.primitive(np.abs(w.psi) ** 2)
    return integrate(dens, w.grid)


@dataclass
class WaveTrajectory:
    """Wave snapshots with mass and energy series and the hydrodynamic image."""

    grid: object
    law: PressureLaw
    cfg: NlsConfig
    states: list = field(default_factory=list)
    mass: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    hydro: Trajectory | None = None
    vacuum_events: list = field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])


def _hydro_bc(cfg: NlsConfig) -> BoundaryKind:
    return BoundaryKind.periodic_bc() if cfg.bc == "periodic" else BoundaryKind.monitored()


def hydro_image(w: WaveState, law: PressureLaw, eps2: float, weight, floor: float):
    """Madelung image and its diagnostics; vacuum snapshots keep only mass and min density."""
    rho = np.abs(w.psi) ** 2
    mn = float(rho.min())
    if not mn > floor:
        u = np.zeros(rho.shape if w.grid.ndim == 1 else (w.grid.ndim, *rho.shape))
        st = FluidState(w.t, rho, u, w.grid)
        return st, DiagnosticsRecord(t=w.t, mass=integrate(rho, w.grid), min_rho=mn)
    st = madelung_forward(w, floor)
    return st, make_record(st, law, eps2, weight, floor)


def nls_run(ic: WaveState, law: PressureLaw, cfg: NlsConfig, weight=None) -> WaveTrajectory:
    """Repeated Strang steps to ``cfg.t_final`` with snapshots every ``record_every`` steps.

    Each snapshot stores mass, NLS energy and, through the Madelung map,
    the hydrodynamic diagnostics. When ``min |psi|^2 <= floor`` the
    hydrodynamic diagnostics are suspended for that snapshot and a vacuum
    event is logged; the wave evolution itself continues.
    """
    if ic.grid.ndim != cfg.dims:
        raise ValueError(f"config dims={cfg.dims} but grid has {ic.grid.ndim} axes")
    if not np.isclose(ic.eps, cfg.eps):
        raise ValueError("initial state eps differs from config eps")
    dt, steps = cfg.steps()
    stepper = SplitStep(ic.grid, law, cfg.eps, cfg.bc, dt)
    hydro = Trajectory(grid=ic.grid, law=law, eps2=cfg.eps2, bc=_hydro_bc(cfg), weight=weight, floor=cfg.floor)
    hydro.meta.update(dt=dt, steps=steps, solver="nls")
    traj = WaveTrajectory(grid=ic.grid, law=law, cfg=cfg, hydro=hydro)

    def snapshot(w):
        traj.states.append(w)
        traj.mass.append(wave_mass(w))
        traj.energy.append(wave_energy(w, law, cfg.bc))
        st, rec = hydro_image(w, law, cfg.eps2, hydro.weight, cfg.floor)
        if not rec.min_rho > cfg.floor:
            traj.vacuum_events.append((w.t, rec.min_rho))
        hydro.append(st, rec)

    psi = ic.psi.copy()
    snapshot(ic)
    for k in range(1, steps + 1):
        psi = stepper(psi)
        t = ic.t + k * dt
        if k % cfg.record_every == 0 or k == steps:
            if not np.all(np.isfinite(psi)):
                raise InstabilityError(t, traj)
            snapshot(WaveState(t, psi, cfg.eps, ic.grid))
    if ic.grid.ndim == 1:
        attach_residuals(hydro)
    return traj


__all__ = [
    "NlsConfig",
    "SplitStep",
    "nls_step",
    "nls_run",
    "spectral_gradient",
    "wave_mass",
    "wave_energy",
    "hydro_image",
    "WaveTrajectory",
]
