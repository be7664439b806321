import numpy as np
import pytest
import sympy as sp

from qhdlab import BoundaryKind, FluidState, Grid1D, InstabilityError, NonFiniteError, PressureLaw, VacuumError
from qhdlab.diagnostics import blowup_detect
from qhdlab.qhd_solver import QhdConfig, qhd_rhs, qhd_run


def periodic(n, L=2 * np.pi):
    return Grid1D(0, L, n, True)


def test_config_validation():
    with pytest.raises(ValueError):
        QhdConfig(sigma=1.5)
    with pytest.raises(ValueError):
        QhdConfig(t_final=0)
    dt, steps = QhdConfig(t_final=0.1, dt=0.03).time_step(periodic(16))
    assert steps == 4 and dt * steps == pytest.approx(0.1)


@pytest.mark.parametrize("rho0,u0", [(1.0, 0.0), (2.0, 3.0)])
def test_constant_states_have_zero_rhs(rho0, u0):
    g = periodic(32)
    s = FluidState(0, np.full(32, rho0), np.full(32, u0), g)
    for law in (PressureLaw.power(2), PressureLaw.power(3, 0.7), PressureLaw.free()):
        drho, dm = qhd_rhs(s, law, QhdConfig())
        assert np.max(np.abs(drho)) < 1e-12 and np.max(np.abs(dm)) < 1e-12


def _symbolic_momentum_rhs():
    x = sp.symbols("x")
    rho = 1 + sp.Rational(1, 10) * sp.cos(x)
    Q = sp.diff(sp.sqrt(rho), x, 2) / sp.sqrt(rho)
    dm = -sp.diff(rho**2, x) + rho * sp.diff(Q, x)  # u = 0, gamma = 2, eps^2 = 2
    return sp.lambdify(x, dm, "numpy")


def test_rhs_matches_symbolic_flux_derivative():
    exact = _symbolic_momentum_rhs()
    errs = []
    for n in (64, 128, 256):
        g = periodic(n)
        s = FluidState(0, 1 + 0.1 * np.cos(g.x), np.zeros(n), g)
        drho, dm = qhd_rhs(s, PressureLaw.power(2), QhdConfig())
        assert np.all(drho == 0)
        errs.append(np.max(np.abs(dm - exact(g.x))))
    assert errs[-1] < 1e-4
    assert 3.5 <= errs[1] / errs[2] <= 4.5


def test_rhs_vacuum():
    g = periodic(16)
    s = FluidState(0, np.zeros(16), np.zeros(16), g)
    with pytest.raises(VacuumError):
        qhd_rhs(s, PressureLaw.power(2), QhdConfig())


def test_periodic_grid_bc_mismatch():
    g = Grid1D(0, 1, 16)
    s = FluidState(0, np.ones(16), np.zeros(16), g)
    with pytest.raises(ValueError):
        qhd_rhs(s, PressureLaw.power(2), QhdConfig(bc=BoundaryKind.periodic_bc()))


def test_constant_state_is_fixed_point_of_rk4():
    g = periodic(32)
    ic = FluidState(0, np.full(32, 1.3), np.full(32, 0.4), g)
    tr = qhd_run(ic, PressureLaw.power(2), QhdConfig(dt=1e-3, t_final=1.0, record_every=250))
    assert tr.meta["steps"] == 1000
    last = tr.states[-1]
    assert np.max(np.abs(last.rho - ic.rho)) <= 1e-12
    assert np.max(np.abs(last.u - ic.u)) <= 1e-12


def test_periodic_mass_drift():
    g = periodic(64)
    ic = FluidState(0, 1 + 0.1 * np.cos(g.x), 0.1 * np.sin(g.x), g)
    tr = qhd_run(ic, PressureLaw.power(2), QhdConfig(sigma=0.2, t_final=0.5, record_every=200))
    mass = tr.column("mass")
    assert np.max(np.abs(mass / mass[0] - 1)) <= 1e-8


def test_wall_run_conserves_mass_and_pins_velocity():
    g = Grid1D(0, 1, 65)
    ic = FluidState(0, 1 + 0.1 * np.cos(np.pi * g.x), 0.2 * np.sin(np.pi * g.x), g)
    tr = qhd_run(ic, PressureLaw.power(2), QhdConfig(bc=BoundaryKind.dirichlet_velocity(), sigma=0.5, t_final=0.05, record_every=100))
    mass = tr.column("mass")
    assert np.max(np.abs(mass / mass[0] - 1)) <= 1e-8
    for s in tr.states:
        assert s.u[0] == 0 and s.u[-1] == 0


def test_self_convergence_order_two():
    finals = []
    for n in (32, 64, 128):
        g = periodic(n)
        ic = FluidState(0, 1 + 0.1 * np.cos(g.x), 0.1 * np.sin(g.x), g)
        cfg = QhdConfig(dt=2e-4, t_final=0.1, record_every=10_000)
        finals.append(qhd_run(ic, PressureLaw.power(2), cfg).states[-1].rho)
    d1 = np.max(np.abs(finals[0] - finals[1][::2]))
    d2 = np.max(np.abs(finals[1] - finals[2][::2]))
    assert 3.5 <= d1 / d2 <= 4.5


def test_snapshot_cadence_and_final_time():
    g = periodic(16)
    ic = FluidState(0, np.ones(16), np.zeros(16), g)
    tr = qhd_run(ic, PressureLaw.power(2), QhdConfig(dt=0.01, t_final=0.095, record_every=3))
    t = tr.times
    assert t[0] == 0 and t[-1] == pytest.approx(0.095)
    assert np.all(np.diff(t) > 0)


def test_vacuum_event_terminates_run():
    g = periodic(128)
    # diverging flow empties the neighbourhood of x = 0
    ic = FluidState(0, 1 + 0.1 * np.cos(g.x), 2.0 * np.sin(g.x), g)
    cfg = QhdConfig(sigma=0.2, t_final=3.0, floor=0.02, record_every=50)
    tr = qhd_run(ic, PressureLaw.free(), cfg)
    assert tr.vacuum_time is not None and 0.5 < tr.vacuum_time < 2.0
    assert tr.times[-1] == tr.vacuum_time
    ev = blowup_detect(tr, 0.02)
    assert ev is not None and ev.t == tr.vacuum_time and ev.min_rho <= 0.02
    assert 0 < ev.fraction_below < 0.5
    assert np.isnan(tr.records[-1].E)


def test_unstable_step_ends_in_detected_event():
    # dt far above the dispersive limit: the density goes negative first
    g = periodic(64)
    ic = FluidState(0, 1 + 0.1 * np.cos(g.x), np.zeros(64), g)
    tr = qhd_run(ic, PressureLaw.power(2), QhdConfig(dt=0.05, t_final=5.0, record_every=1))
    assert tr.vacuum_time is not None and tr.records[-1].min_rho <= 0


def test_non_finite_initial_state_rejected():
    g = periodic(32)
    u = np.zeros(32)
    u[5] = np.inf
    with pytest.raises(NonFiniteError):
        qhd_run(FluidState(0, np.ones(32), u, g), PressureLaw.power(2), QhdConfig(dt=1e-3, t_final=0.01))


class _FailingLaw(PressureLaw):
    """gamma = 2 law whose pressure turns NaN after a set number of calls."""

    def __init__(self, good_calls):
        super().__init__(((1.0, 2.0),))
        object.__setattr__(self, "_left", [good_calls])

    def pressure(self, rho):
        self._left[0] -= 1
        out = super().pressure(rho)
        return out if self._left[0] >= 0 else out * np.nan


def test_non_finite_step_raises_instability_with_time():
    g = periodic(32)
    ic = FluidState(0, 1 + 0.1 * np.cos(g.x), np.zeros(32), g)
    cfg = QhdConfig(dt=1e-3, t_final=0.1, record_every=1)
    with pytest.raises(InstabilityError) as info:
        qhd_run(ic, _FailingLaw(40), cfg)
    assert 0 < info.value.t < 0.1
    partial = info.value.partial
    assert partial.records and partial.times[-1] < info.value.t
