"""Built-in verification suites run by ``qhdlab verify``.

Each check returns a measured value and the threshold it is held to, so
the report is machine-readable. Parameters are pinned at desk scale.
"""
from __future__ import annotations

import time

import numpy as np

from .diagnostics import energy_balance_residual, initial_data_report
from .numerics import BoundaryKind, Grid1D, derivative, integrate
from .physics import FluidState, PressureLaw, bohm, law_assumption_check, madelung_forward, madelung_inverse
from .qhd_solver import QhdConfig, qhd_run
from .stationary import StationaryParams, stationary_residual, stationary_shoot
from .weights import DomainDescriptor, WeightFunction, make_weight, verify_weight

SUITES = ("numerics", "physics", "identities", "weights", "stationary")


def _check(name, value, threshold, mode="le"):
    ok = value <= threshold if mode == "le" else value >= threshold
    return {"name": name, "value": float(value), "threshold": float(threshold), "mode": mode, "passed": bool(ok)}


def _numerics():
    errs = []
    for n in (64, 128):
        g = Grid1D(0, 2 * np.pi, n, True)
        errs.append(np.max(np.abs(derivative(np.sin(g.x), g) - np.cos(g.x))))
    g = Grid1D(0, 1, 513)
    return [
        _check("derivative_order1_ratio", errs[0] / errs[1], 3.5, "ge"),
        _check("integrate_x(1-x)_n513", abs(integrate(g.x * (1 - g.x), g) - 1 / 6), 1e-6),
    ]


def _physics():
    rep = law_assumption_check(PressureLaw.power(2), 10.0, 1.0)
    g = Grid1D(0, 2 * np.pi, 1024, True)
    f = FluidState(0, 1 + 0.1 * np.cos(g.x), 0.05 * np.sin(g.x), g)
    back = madelung_forward(madelung_inverse(f, 1.0))
    gb = Grid1D(0, 1, 257)
    Q = bohm(np.exp(2 * gb.x), gb, edge="onesided")
    return [
        _check("gamma2_lambda1_inf_P_over_g", rep.inf_ratio, 1.0, "ge"),
        _check("gamma2_sup_P_over_rho_minus_h", rep.sup_gap, 0.0),
        _check("madelung_round_trip_n1024", max(np.max(np.abs(back.rho - f.rho)), np.max(np.abs(back.u - f.u))), 1e-6),
        _check("bohm_exp_profile", np.max(np.abs(Q - 1)), 1e-3),
    ]


def _periodic_energy_residual(n, dt):
    g = Grid1D(0, 2 * np.pi, n, True)
    ic = FluidState(0, 1 + 0.1 * np.cos(g.x), np.zeros(n), g)
    tr = qhd_run(ic, PressureLaw.sum_of_powers([(0.5, 2.0)]), QhdConfig(dt=dt, t_final=0.1, record_every=1000))
    return float(np.nanmax(np.abs(energy_balance_residual(tr))))


def _bounded_identity_residual(n, every):
    g = Grid1D(0, 1, n)
    ic = FluidState(0, 1 + 0.1 * np.cos(np.pi * g.x), 0.2 * np.sin(np.pi * g.x), g)
    cfg = QhdConfig(bc=BoundaryKind.dirichlet_velocity(0, 0), sigma=0.5, t_final=0.05, record_every=every)
    tr = qhd_run(ic, PressureLaw.power(2), cfg)
    return float(np.nanmax(np.abs(tr.column("res_dI"))))


def _identities():
    e1, e2 = _periodic_energy_residual(64, 4e-5), _periodic_energy_residual(128, 2e-5)
    r1, r2 = _bounded_identity_residual(65, 25), _bounded_identity_residual(129, 50)
    g = Grid1D(0, 1, 1025)
    rep = initial_data_report(np.ones(g.n), g.x - 0.5, g)
    return [
        _check("energy_residual_n128", e2, 1e-5),
        _check("energy_residual_ratio", e1 / e2, 3.0, "ge"),
        _check("observable_identity_residual_n129", r2, 1e-3),
        _check("observable_identity_ratio", r1 / r2, 1.8, "ge"),
        _check("T_star_linear_velocity", abs(rep.T_star - 1.0), 2e-5),
    ]


def _weights():
    out = []
    for d in (1, 2, 3):
        w = make_weight(DomainDescriptor.ball(d))
        rep = verify_weight(w, samples=2048)
        X = DomainDescriptor.ball(d).interior_samples(256)
        lap = np.trace(w.hess(X), axis1=1, axis2=2)
        out.append(_check(f"ball_d{d}_all_conditions", len(rep.failed), 0))
        out.append(_check(f"ball_d{d}_laplacian", np.max(np.abs(lap + 2 * d)), 1e-12))
    for d in (2, 3):
        rep = verify_weight(make_weight(DomainDescriptor.cylinder(d)), samples=2048)
        out.append(_check(f"cylinder_d{d}_all_conditions", len(rep.failed), 0))
    rep = verify_weight(make_weight(DomainDescriptor.box(1)), samples=2048)
    out.append(_check("box_d1_all_conditions", len(rep.failed), 0))
    half = WeightFunction.from_quadratic(DomainDescriptor.ball(2), [0.5, 0.5], 0.5)
    det = half.monge_ampere_det(np.zeros((1, 2)))[0]
    out.append(_check("monge_ampere_det_minus_1", abs(det - 1), 0.0))
    return out


def _stationary():
    law = PressureLaw.power(2)
    const = StationaryParams(0.0, float(law.enthalpy(1.0)), law, 1.0)
    prof = stationary_shoot(const, 1e-3)
    p = StationaryParams(0.0, 2.0, law, 1 + 1e-3)
    shots = [stationary_shoot(p, h) for h in (4e-3, 2e-3, 1e-3)]
    e1 = abs(shots[0].w[-1] - shots[1].w[-1])
    e2 = abs(shots[1].w[-1] - shots[2].w[-1])
    res = stationary_residual(shots[2].w, p)
    return [
        _check("constant_profile_residual", np.max(np.abs(stationary_residual(prof.w, const))), 1e-12),
        _check("shot_order4_ratio", e1 / e2, 12.0, "ge"),
        _check("shot_residual_dx1e-3", np.max(np.abs(res)), 1e-8),
    ]


_RUNNERS = {
    "numerics": _numerics,
    "physics": _physics,
    "identities": _identities,
    "weights": _weights,
    "stationary": _stationary,
}


def verify_suite(name: str) -> dict:
    """Run a named suite (or ``"all"``) and return a pass/fail report."""
    names = SUITES if name == "all" else (name,)
    unknown = [n for n in names if n not in _RUNNERS]
    if unknown:
        raise ValueError(f"unknown suite {name!r}; choose from all, {', '.join(SUITES)}")
    t0 = time.perf_counter()
    checks = []
    for n in names:
        for c in _RUNNERS[n]():
            checks.append({"suite": n, **c})
    return {
        "suite": name,
        "passed": all(c["passed"] for c in checks),
        "checks": checks,
        "seconds": round(time.perf_counter() - t0, 3),
    }


__all__ = ["SUITES", "verify_suite"]
