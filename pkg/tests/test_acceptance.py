"""Acceptance criteria 1-10, each at its stated tolerance.

Every test records one ``[PASS]``/``[FAIL]`` line, printed immediately and
again in the pytest terminal summary. Run directly with
``python3 tests/test_acceptance.py`` for the same report.
"""
import sys
import time
from functools import lru_cache

import numpy as np
import pytest

import conftest
from qhdlab import BoundaryKind, FluidState, Grid1D, PressureLaw, TensorGrid, WaveState, law_assumption_check, madelung_inverse
from qhdlab.diagnostics import (
    Theorem4Params,
    initial_data_report,
    theorem2_monitor,
    theorem4_monitor,
)
from qhdlab.nls_solver import NlsConfig, nls_run
from qhdlab.qhd_solver import QhdConfig, qhd_run
from qhdlab.stationary import StationaryParams, neumann_flux_profile, stationary_residual, stationary_shoot
from qhdlab.weights import (
    BoundaryTrace,
    DomainDescriptor,
    WeightFunction,
    dirichlet_integrand,
    integrand_general,
    integrand_reduced,
    make_weight,
    verify_weight,
)

EPS = np.sqrt(2.0)
H_RHO = PressureLaw.sum_of_powers([(0.5, 2.0)])  # h(rho) = rho
G2 = PressureLaw.power(2)


def record(n, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}"
    conftest.ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


# -- criteria 1-3: the periodic equivalence runs ---------------------------


@lru_cache(maxsize=None)
def periodic_pair(n, dt):
    g = Grid1D(0, 2 * np.pi, n, True)
    f = FluidState(0, 1 + 0.1 * np.cos(g.x), np.zeros(n), g)
    t0 = time.perf_counter()
    q = qhd_run(f, H_RHO, QhdConfig(dt=dt, t_final=0.5, record_every=1000))
    # 10^4 wave steps to t = 0.5
    w = nls_run(madelung_inverse(f, EPS), H_RHO, NlsConfig(eps=EPS, dt=5e-5, t_final=0.5, record_every=500))
    return q, w, time.perf_counter() - t0


def density_gap(q, w):
    return float(np.max(np.abs(q.states[-1].rho - w.states[-1].density)))


def test_criterion_1_madelung_equivalence():
    q, w, secs = periodic_pair(256, 1e-5)
    qc, wc, _ = periodic_pair(128, 2e-5)
    gap, gap_c = density_gap(q, w), density_gap(qc, wc)
    ratio = gap_c / gap
    ok = gap <= 5e-3 and 3 <= ratio <= 5 and secs <= 60
    record(1, ok, f"density gap {gap:.3e} <= 5e-3 at n=256, ratio {ratio:.2f} in [3, 5], runtime {secs:.1f}s <= 60s")


def test_criterion_2_conservation():
    q, w, _ = periodic_pair(256, 1e-5)
    steps = w.hydro.meta["steps"]
    m = np.array(w.mass)
    nls_drift = float(np.max(np.abs(m / m[0] - 1)))
    mq = q.column("mass")
    qhd_drift = float(np.max(np.abs(mq / mq[0] - 1)))
    ok = steps >= 10_000 and nls_drift <= 1e-10 and qhd_drift <= 1e-8
    record(2, ok, f"wave mass drift {nls_drift:.2e} <= 1e-10 over {steps} steps, hydro mass drift {qhd_drift:.2e} <= 1e-8")


def test_criterion_3_energy_balance():
    q, _, _ = periodic_pair(256, 1e-5)
    qc, _, _ = periodic_pair(128, 2e-5)
    E, Ec = q.column("E"), qc.column("E")
    drift, drift_c = float(np.max(np.abs(E - E[0]))), float(np.max(np.abs(Ec - Ec[0])))
    ratio = drift_c / drift
    record(3, drift <= 1e-6 and ratio >= 3, f"max |E(t)-E(0)| {drift:.3e} <= 1e-6 at dt=1e-5, refinement ratio {ratio:.2f} >= 3")


# -- criterion 4: observable identity on a bounded run ---------------------


@lru_cache(maxsize=None)
def wall_run(n, every):
    g = Grid1D(0, 1, n)
    f = FluidState(0, 1 + 0.1 * np.cos(np.pi * g.x), 0.2 * np.sin(np.pi * g.x), g)
    cfg = QhdConfig(bc=BoundaryKind.dirichlet_velocity(), sigma=0.5, t_final=0.1, record_every=every)
    return qhd_run(f, G2, cfg)


def test_criterion_4_observable_identity():
    # fixed physical snapshot spacing: dt scales as dx^2, so steps per snapshot x4
    fine = float(np.nanmax(np.abs(wall_run(257, 200).column("res_dI"))))
    coarse = float(np.nanmax(np.abs(wall_run(129, 50).column("res_dI"))))
    ratio = coarse / fine
    record(4, fine <= 1e-3 and ratio >= 1.8, f"identity residual {fine:.3e} <= 1e-3 at n=257, refinement ratio {ratio:.2f} >= 1.8")


# -- criterion 5: exact functional values ----------------------------------


def test_criterion_5_exact_functionals():
    g = Grid1D(0, 1, 1025)
    one = np.ones(g.n)
    a = initial_data_report(one, np.zeros(g.n), g)
    b = initial_data_report(one, g.x - 0.5, g)
    rho = 1 + 0.3 * np.cos(np.pi * g.x)
    worst = 0.0
    base = initial_data_report(rho, g.x - 0.5, g).T_star
    for lam in (1e-3, 0.5, 7.0, 1e3):
        worst = max(worst, abs(initial_data_report(lam * rho, g.x - 0.5, g).T_star / base - 1))
    e_I, e_M, e_T = abs(a.I0 - 1 / 6), abs(b.M0 + 1 / 6), abs(b.T_star - 1)
    ok = e_I <= 1e-6 and e_M <= 1e-6 and e_T <= 2e-5 and worst <= 1e-12
    record(5, ok, f"|I0-1/6| {e_I:.1e}, |M0+1/6| {e_M:.1e} (<= 1e-6), |T*-1| {e_T:.1e} <= 2e-5, scaling change {worst:.1e} <= 1e-12")


# -- criterion 6: conditional envelope -------------------------------------


def _neumann_wave_run(rho, u, g):
    w = madelung_inverse(FluidState(0, rho, u, g), EPS)
    cfg = NlsConfig(eps=EPS, bc="neumann", dt=1e-5, t_final=0.1, record_every=50)
    tr = nls_run(w, G2, cfg).hydro
    return tr, theorem2_monitor(tr, initial_data_report(rho, u, g))


def test_criterion_6_envelope_in_hypothesis_windows():
    g = Grid1D(0, 1, 257)
    tr, rep = _neumann_wave_run(1 - 0.3 * np.cos(2 * np.pi * g.x), -np.sin(2 * np.pi * g.x), g)
    checked = sum(1 for s in rep.bound_satisfied if s is not None)
    _, ctrl = _neumann_wave_run(np.ones(g.n), np.zeros(g.n), g)
    ok = bool(rep.hypothesis_windows) and checked > 0 and rep.violations == 0
    ok = ok and ctrl.hypothesis_windows == () and ctrl.message == "hypothesis never satisfied"
    wins = ", ".join(f"[{a:.4g}, {b:.4g}]" for a, b in rep.hypothesis_windows)
    record(6, ok, f"M0 {rep.M0:.4f}, windows {wins}, {checked} snapshots checked, {rep.violations} violations; control windows empty")


# -- criterion 7: weight functions -----------------------------------------


def _ball_trace(d, rho0, u0):
    dom = DomainDescriptor.ball(d)
    pts = dom.facet_samples(dom.facets[0], 256) if d > 1 else np.array([[-1.0], [1.0]])
    N = len(pts)
    return BoundaryTrace(pts, pts.copy(), np.full(N, rho0), np.zeros((N, d)), np.zeros(N), np.tile(u0, (N, 1)))


def test_criterion_7_weight_functions():
    notes = []
    ok = True
    for d in (1, 2, 3):
        w = make_weight(DomainDescriptor.ball(d))
        X = DomainDescriptor.ball(d).interior_samples(512)
        H = w.hess(X)
        e_lap = float(np.max(np.abs(np.trace(H, axis1=1, axis2=2) + 2 * d)))
        e_eig = float(np.max(np.abs(np.linalg.eigvalsh(H) + 2)))
        ok &= e_lap <= 1e-12 and e_eig <= 1e-12
    for dom in (DomainDescriptor.cylinder(2), DomainDescriptor.cylinder(3), DomainDescriptor.box(1), DomainDescriptor.box(2), DomainDescriptor.box(3, 2)):
        rep = verify_weight(make_weight(dom), tol=1e-10)
        ok &= rep.passed
        if not rep.passed:
            notes.append(f"{dom.kind}{dom.d} failed {rep.failed}")
    dom2 = DomainDescriptor.ball(2)
    quad = WeightFunction.from_quadratic(dom2, [0.5, 0.5], 0.5)
    ok &= bool(np.all(quad.monge_ampere_det(dom2.interior_samples(256)) == 1.0))
    disc = 0.0
    for d in (2, 3):
        w = make_weight(DomainDescriptor.ball(d))
        for u0 in (np.zeros(d), np.linspace(0.4, -0.7, d)):
            tr = _ball_trace(d, 1.3, u0)
            disc = max(disc, float(np.max(np.abs(integrand_general(w, tr, G2) - integrand_reduced(w, tr, G2)))))
    for dims, axes in ((2, (33, 17)), (3, (17, 9, 9))):
        dom = DomainDescriptor.cylinder(dims)
        G = TensorGrid(tuple(Grid1D(lo, hi, n) for (lo, hi), n in zip(dom.bounds, axes)))
        u = np.stack([np.full(G.shape, 0.3 * (k + 1)) for k in range(dims)])
        rep = dirichlet_integrand(make_weight(dom), FluidState(0, np.full(G.shape, 1.3), u, G), G2)
        disc = max(disc, rep.max_discrepancy)
    ok &= disc <= 1e-10
    record(7, ok, f"ball Laplacian/eigenvalues exact, cylinder/box checks pass, det = 1, reduced vs general {disc:.1e} <= 1e-10" + (f" ({'; '.join(notes)})" if notes else ""))


# -- criterion 8: iso-energy machinery -------------------------------------


@lru_cache(maxsize=None)
def stationary_run(n):
    p, prof = neumann_flux_profile(G2, 0.95, 2.0, (2.5, 2.8), dx=1 / (n - 1))
    g = Grid1D(0, 1, n)
    rho = prof.w**2
    u = p.J / rho
    cfg = QhdConfig(bc=BoundaryKind.dirichlet_velocity(u[0], u[-1]), sigma=0.5, t_final=0.05, record_every=200)
    tr = qhd_run(FluidState(0, rho, u, g), G2, cfg)
    return tr, theorem4_monitor(tr, G2, Theorem4Params(1.5, 10.0, u[0], u[-1], 1.0))


def test_criterion_8_iso_energy_machinery():
    chk = law_assumption_check(G2, 10.0, 1.0)
    r = np.geomspace(1e-6, 10, 200)
    margin = float(np.max(np.abs(G2.pressure(r) / r - G2.enthalpy(r) + r)))
    _, fine = stationary_run(257)
    _, coarse = stationary_run(129)
    ratio = coarse.max_K_jump / fine.max_K_jump
    tr = wall_run(129, 50)
    zrep = theorem4_monitor(tr, G2, Theorem4Params(1.5, 10.0, 0.0, 0.0, 1.0))
    I0, E0 = tr.records[0].I, tr.records[0].E
    formula = I0 + tr.times * (zrep.M0 - 2 * E0 * min(1.0, 2.0))
    exact = np.array_equal(np.array(zrep.envelope), formula) and set(zrep.branch) == {"zero_velocity"}
    ok = chk.passed and margin <= 1e-12 and fine.max_K_jump <= 5e-3 and ratio >= 1.8 and exact
    record(
        8,
        ok,
        f"gamma=2 ratio check passes at lambda=1, P/rho-h = -rho to {margin:.0e}, max K jump {fine.max_K_jump:.2e} <= 5e-3 at n=257, "
        f"ratio {ratio:.2f} >= 1.8, zero-velocity envelope {'matches' if exact else 'differs from'} the closed formula",
    )


# -- criterion 9: stationary system ----------------------------------------


def test_criterion_9_stationary_system():
    # constant admissible profiles w = w0 with K = J^2/(2 w0^4) + h(w0^2)
    worst_const = 0.0
    g = Grid1D(0, 1, 1001)
    for J, w0 in ((0.0, 1.0), (0.5, 1.0), (1.0, 1.2), (2.0, 0.7)):
        p = StationaryParams(J, J**2 / (2 * w0**4) + G2.enthalpy(w0**2), G2, w0)
        worst_const = max(worst_const, float(np.max(np.abs(stationary_residual(np.full(g.n, w0), p, g)))))
    p = StationaryParams(0.0, 2.0, G2, 1 + 1e-3)
    shots = [stationary_shoot(p, dx) for dx in (1e-2, 5e-3, 2.5e-3)]
    d1 = np.max(np.abs(shots[0].w - shots[1].w[::2]))
    d2 = np.max(np.abs(shots[1].w - shots[2].w[::2]))
    order = float(np.log2(d1 / d2))
    prof = stationary_shoot(p, 1e-3)
    res = float(np.max(np.abs(stationary_residual(prof.w, p, prof.grid()))))
    ok = worst_const <= 1e-12 and 3.5 <= order <= 4.5 and res <= 1e-8
    record(9, ok, f"constant profiles residual {worst_const:.1e} <= 1e-12, observed order {order:.2f}, shot residual {res:.2e} <= 1e-8 at dx=1e-3")


# -- criterion 10: what is not reproduced ----------------------------------


def test_criterion_10_singularity_note():
    note = (
        "density collapse to zero at T* is not reproduced quantitatively; the results only rule out "
        "smooth solutions past T*, so the suite checks conditional envelopes (criteria 6, 8) and vacuum-event detection"
    )
    # vacuum-event detection: a wave built to vanish exactly at x = 0, t = 0.5
    g = Grid1D(-20, 20, 1024, True)
    s0 = 1 - 0.5j * EPS
    amp = np.sqrt(1 / s0)

    def psi(t):
        s = s0 + 1j * EPS * t
        return 1 - amp * np.sqrt(s0 / s) * np.exp(-(g.x**2) / (2 * s))

    tr = nls_run(WaveState(0, psi(0), EPS, g), PressureLaw.free(), NlsConfig(eps=EPS, dt=1e-3, t_final=1.0, record_every=10, floor=1e-4))
    hit = [t for t, _ in tr.vacuum_events if abs(t - 0.5) < 1e-9]
    record(10, bool(hit), f"note: {note}; vacuum event detected at t={hit[0] if hit else None} (exact node at 0.5)")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s", "-p", "no:cacheprovider"]))
