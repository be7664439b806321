"""Weight functions for the multi-dimensional observable ``I = int a rho``.

A weight must be nonnegative, concave (negative semidefinite Hessian),
vanish on the Dirichlet part of the boundary, be normal-flat on the
Neumann part, and have ``g = -Lap a`` with ``g >= 0``, ``Lap g <= 0`` and
``dg/dnu >= 0``. Weights are closed-form objects so these checks are
exact up to round-off rather than limited by a grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.stats import norm, qmc

from .diagnostics import NAN, _windows
from .errors import VacuumError
from .numerics import Grid1D, TensorGrid, derivative, integrate
from .physics import DEFAULT_EDGE, VACUUM_FLOOR, FluidState, PressureLaw

DOMAIN_KINDS = ("ball", "cylinder", "box")


def _sobol(d, n, seed):
    m = max(1, math.ceil(math.log2(max(n, 2))))
    return qmc.Sobol(d, scramble=True, seed=seed).random_base2(m)[:n]


@dataclass(frozen=True)
class Facet:
    """A boundary piece: label, Dirichlet/Neumann role and geometry."""

    name: str
    role: str
    axis: int | None = None  # flat facets: the normal axis
    side: int = 0  # -1 for the low face, +1 for the high face
    value: float = 0.0  # coordinate of a flat facet

    def normal(self, X) -> np.ndarray:
        X = np.atleast_2d(X)
        if self.axis is None:
            return X / np.linalg.norm(X, axis=1, keepdims=True)
        nu = np.zeros_like(X, dtype=float)
        nu[:, self.axis] = self.side
        return nu


@dataclass(frozen=True)
class DomainDescriptor:
    """Unit ball, cylinder ``[-1,1] x [0,1]^(d-1)``, or box ``[0,1]^d``.

    The Dirichlet part is the sphere (ball), the two ``x1 = +-1`` faces
    (cylinder), or the two faces normal to ``dirichlet_axis`` (box).
    Everything else is Neumann.
    """

    kind: str
    d: int
    dirichlet_axis: int = 0

    def __post_init__(self):
        if self.kind not in DOMAIN_KINDS:
            raise ValueError(f"unsupported domain kind {self.kind!r}")
        if self.d not in (1, 2, 3):
            raise ValueError("dimension must be 1, 2 or 3")
        if not 0 <= self.dirichlet_axis < self.d:
            raise ValueError("dirichlet_axis out of range")

    @classmethod
    def ball(cls, d):
        return cls("ball", d)

    @classmethod
    def cylinder(cls, d):
        return cls("cylinder", d)

    @classmethod
    def box(cls, d=1, dirichlet_axis=0):
        return cls("box", d, dirichlet_axis)

    @property
    def bounds(self) -> tuple[tuple[float, float], ...]:
        if self.kind == "ball":
            return ((-1.0, 1.0),) * self.d
        if self.kind == "cylinder":
            return ((-1.0, 1.0),) + ((0.0, 1.0),) * (self.d - 1)
        return ((0.0, 1.0),) * self.d

    @property
    def facets(self) -> tuple[Facet, ...]:
        if self.kind == "ball" and self.d > 1:
            return (Facet("sphere", "dirichlet"),)
        daxis = 0 if self.kind != "box" else self.dirichlet_axis
        out = []
        for ax, (lo, hi) in enumerate(self.bounds):
            role = "dirichlet" if ax == daxis else "neumann"
            out.append(Facet(f"x{ax + 1}={lo:g}", role, ax, -1, lo))
            out.append(Facet(f"x{ax + 1}={hi:g}", role, ax, +1, hi))
        return tuple(out)

    def contains(self, X, slack=1e-12) -> np.ndarray:
        X = np.atleast_2d(X)
        if self.kind == "ball":
            return np.linalg.norm(X, axis=1) <= 1 + slack
        lo = np.array([b[0] for b in self.bounds])
        hi = np.array([b[1] for b in self.bounds])
        return np.all((X >= lo - slack) & (X <= hi + slack), axis=1)

    def interior_samples(self, n=10_000, seed=0) -> np.ndarray:
        lo = np.array([b[0] for b in self.bounds])
        hi = np.array([b[1] for b in self.bounds])
        pts = np.empty((0, self.d))
        k = 0
        while len(pts) < n:
            raw = lo + (hi - lo) * _sobol(self.d, 2 * n, seed + k)
            pts = np.vstack([pts, raw[self.contains(raw)]])
            k += 1
        return pts[:n]

    def facet_samples(self, facet: Facet, n=2_000, seed=0) -> np.ndarray:
        if facet.axis is None:
            z = norm.ppf(np.clip(_sobol(self.d, n, seed), 1e-12, 1 - 1e-12))
            return z / np.linalg.norm(z, axis=1, keepdims=True)
        if self.d == 1:
            return np.array([[facet.value]])
        others = [ax for ax in range(self.d) if ax != facet.axis]
        u = _sobol(self.d - 1, n, seed)
        X = np.empty((len(u), self.d))
        X[:, facet.axis] = facet.value
        for j, ax in enumerate(others):
            lo, hi = self.bounds[ax]
            X[:, ax] = lo + (hi - lo) * u[:, j]
        return X

    def tensor_grid(self, n: int):
        """Boundary-fitted tensor grid (not available for balls in d >= 2)."""
        if self.kind == "ball" and self.d > 1:
            raise ValueError("a ball in d >= 2 has no boundary-fitted tensor grid")
        axes = tuple(Grid1D(lo, hi, n) for lo, hi in self.bounds)
        return axes[0] if self.d == 1 else TensorGrid(axes)


@dataclass(frozen=True)
class WeightFunction:
    """Closed-form weight with derivatives; all evaluators take points of shape (N, d)."""

    domain: DomainDescriptor
    a: Callable
    grad: Callable
    hess: Callable
    g: Callable
    grad_g: Callable
    lap_g: Callable
    name: str = "weight"
    quadratic: tuple | None = field(default=None, repr=False)

    @classmethod
    def from_quadratic(cls, domain: DomainDescriptor, q, c=1.0, center=None, name="quadratic"):
        """``a = c - sum_i q_i (x_i - center_i)^2`` with ``q_i >= 0``."""
        q = np.asarray(q, dtype=float)
        if q.shape != (domain.d,) or np.any(q < 0):
            raise ValueError("q must hold d nonnegative entries")
        x0 = np.zeros(domain.d) if center is None else np.asarray(center, dtype=float)
        c = float(c)
        d = domain.d

        def pts(X):
            return np.atleast_2d(np.asarray(X, dtype=float)) - x0

        return cls(
            domain=domain,
            a=lambda X: c - pts(X) ** 2 @ q,
            grad=lambda X: -2 * q * pts(X),
            hess=lambda X: np.broadcast_to(np.diag(-2 * q), (len(pts(X)), d, d)).copy(),
            g=lambda X: np.full(len(pts(X)), 2 * q.sum()),
            grad_g=lambda X: np.zeros((len(pts(X)), d)),
            lap_g=lambda X: np.zeros(len(pts(X))),
            name=name,
            quadratic=(c, tuple(q), tuple(x0)),
        )

    @classmethod
    def from_sympy(cls, expr, symbols, domain: DomainDescriptor, name="symbolic"):
        """Weight from a sympy expression; derivatives by symbolic differentiation."""
        import sympy as sp

        xs = list(symbols)
        if len(xs) != domain.d:
            raise ValueError("one symbol per dimension is required")
        grad = [sp.diff(expr, x) for x in xs]
        hess = [[sp.diff(gi, x) for x in xs] for gi in grad]
        g = -sum(hess[i][i] for i in range(len(xs)))
        grad_g = [sp.diff(g, x) for x in xs]
        lap_g = sum(sp.diff(g, x, 2) for x in xs)

        def vec(e):
            f = sp.lambdify(xs, e, "numpy")
            return lambda X: np.broadcast_to(f(*np.atleast_2d(X).T), (len(np.atleast_2d(X)),)).astype(float)

        def stack(es):
            fs = [vec(e) for e in es]
            return lambda X: np.stack([f(X) for f in fs], axis=-1)

        hs = [stack(row) for row in hess]
        return cls(
            domain=domain,
            a=vec(expr),
            grad=stack(grad),
            hess=lambda X: np.stack([h(X) for h in hs], axis=1),
            g=vec(g),
            grad_g=stack(grad_g),
            lap_g=vec(lap_g),
            name=name,
        )

    def on_grid(self, grid):
        """``(a, grad a)`` sampled on a tensor grid; grad stacked as (d, *shape)."""
        mesh = grid.mesh()
        X = np.stack([m.ravel() for m in mesh], axis=1)
        a = self.a(X).reshape(grid.shape)
        gr = self.grad(X).T.reshape((grid.ndim, *grid.shape))
        return a, (gr[0] if grid.ndim == 1 else gr)

    def monge_ampere_det(self, X) -> np.ndarray:
        """``det(Hess(-a))`` at the given points."""
        return np.linalg.det(-self.hess(X))


def make_weight(dom: DomainDescriptor) -> WeightFunction:
    """Standard weight for a supported domain.

    ball: ``1 - |x|^2``; cylinder: ``1 - x1^2``; box: ``x(1 - x)`` along the
    Dirichlet axis.
    """
    if dom.kind == "ball":
        return WeightFunction.from_quadratic(dom, np.ones(dom.d), 1.0, name="ball")
    if dom.kind == "cylinder":
        q = np.zeros(dom.d)
        q[0] = 1.0
        return WeightFunction.from_quadratic(dom, q, 1.0, name="cylinder")
    q = np.zeros(dom.d)
    q[dom.dirichlet_axis] = 1.0
    return WeightFunction.from_quadratic(dom, q, 0.25, center=np.full(dom.d, 0.5), name="box")


@dataclass(frozen=True)
class Check:
    passed: bool
    worst: float
    tol: float


@dataclass(frozen=True)
class WeightReport:
    name: str
    checks: dict

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values())

    @property
    def failed(self) -> list[str]:
        return [k for k, c in self.checks.items() if not c.passed]

    def as_dict(self) -> dict:
        return {
            "weight": self.name,
            "passed": self.passed,
            "checks": {k: {"passed": c.passed, "worst": c.worst, "tol": c.tol} for k, c in self.checks.items()},
        }


def verify_weight(w: WeightFunction, samples: int = 10_000, seed: int = 0, tol: float = 1e-10) -> WeightReport:
    """Check every weight condition on quasi-random interior and boundary samples."""
    dom = w.domain
    X = dom.interior_samples(samples, seed)
    H = w.hess(X)
    eig = np.linalg.eigvalsh(0.5 * (H + np.swapaxes(H, 1, 2)))
    lap_a = np.trace(H, axis1=1, axis2=2)
    g = w.g(X)
    checks = {
        "a_nonneg": ("min", float(np.min(w.a(X)))),
        "hessian_nsd": ("max", float(np.max(eig))),
        "g_is_minus_laplacian": ("abs", float(np.max(np.abs(lap_a + g)))),
        "g_nonneg": ("min", float(np.min(g))),
        "lap_g_nonpos": ("max", float(np.max(w.lap_g(X)))),
    }
    nb = max(64, samples // 5)
    dz, nf, dg = [0.0], [0.0], [math.inf]
    for k, f in enumerate(dom.facets):
        B = dom.facet_samples(f, nb, seed + 101 + k)
        nu = f.normal(B)
        if f.role == "dirichlet":
            dz.append(float(np.max(np.abs(w.a(B)))))
        else:
            nf.append(float(np.max(np.abs(np.sum(w.grad(B) * nu, axis=1)))))
        dg.append(float(np.min(np.sum(w.grad_g(B) * nu, axis=1))))
    checks["dirichlet_zero"] = ("abs", max(dz))
    checks["neumann_flat"] = ("abs", max(nf))
    checks["dg_dnu_nonneg"] = ("min", min(dg))

    out = {}
    for name, (mode, val) in checks.items():
        ok = val >= -tol if mode == "min" else val <= tol
        out[name] = Check(bool(ok), val, tol)
    return WeightReport(w.name, out)


# -- boundary integrand ----------------------------------------------------


@dataclass(frozen=True)
class BoundaryTrace:
    """Fields sampled on Dirichlet boundary points.

    ``grad_sqrt`` and ``u`` have shape (N, d); the rest are length N.
    """

    points: np.ndarray
    normals: np.ndarray
    rho: np.ndarray
    grad_sqrt: np.ndarray
    lap_sqrt: np.ndarray
    u: np.ndarray


def integrand_general(w: WeightFunction, tr: BoundaryTrace, law: PressureLaw, eps2: float = 2.0) -> np.ndarray:
    """``da/dnu (c (Q + |grad sqrt rho|^2/rho) - P/rho) - (u . grad a)(u . nu)``, ``c = eps2/2``."""
    c = 0.5 * eps2
    ga = w.grad(tr.points)
    dadn = np.sum(ga * tr.normals, axis=1)
    sq = np.sqrt(tr.rho)
    Q = tr.lap_sqrt / sq
    quantum = Q + np.sum(tr.grad_sqrt**2, axis=1) / tr.rho
    flux = np.sum(tr.u * ga, axis=1) * np.sum(tr.u * tr.normals, axis=1)
    return dadn * (c * quantum - law.pressure(tr.rho) / tr.rho) - flux


def integrand_reduced(w: WeightFunction, tr: BoundaryTrace, law: PressureLaw, eps2: float = 2.0) -> np.ndarray:
    """Closed reductions: ball ``2((u.x)^2 + P/rho - cQ)``, cylinder ``2(u_1^2 + P/rho - cQ)``.

    Both drop the ``|grad sqrt rho|^2/rho`` term; the factor 2 is ``-da/dnu``.
    """
    c = 0.5 * eps2
    Q = tr.lap_sqrt / np.sqrt(tr.rho)
    P_rho = law.pressure(tr.rho) / tr.rho
    kind = w.domain.kind
    if kind == "ball":
        un = np.sum(tr.u * tr.points, axis=1)
    elif kind == "cylinder":
        un = tr.u[:, 0]
    else:
        raise ValueError("reduced integrand is defined for ball and cylinder weights")
    return 2 * (un**2 + P_rho - c * Q)


def _grid_points(grid):
    mesh = grid.mesh()
    return np.stack([m.ravel() for m in mesh], axis=1)


def grid_traces(w: WeightFunction, s: FluidState, floor=VACUUM_FLOOR, edge=DEFAULT_EDGE, role="dirichlet"):
    """Facet-aligned traces of a state on a boundary-fitted grid, one per facet of ``role``."""
    grid = s.grid
    dom = w.domain
    if grid.ndim != dom.d:
        raise ValueError("state and weight dimensions differ")
    rho = s.rho
    if not np.min(rho) > floor:
        raise VacuumError(np.min(rho), floor, s.t)
    sq = np.sqrt(rho)
    grads = [derivative(sq, grid, 1, axis=ax, edge=edge) for ax in range(grid.ndim)]
    lap = sum(derivative(sq, grid, 2, axis=ax, edge=edge) for ax in range(grid.ndim))
    comps = s.velocity_components()
    X = _grid_points(grid).reshape((*grid.shape, grid.ndim))
    out = []
    for f in dom.facets:
        if f.role != role:
            continue
        if f.axis is None:
            raise ValueError("curved facets need pointwise traces")
        lo, hi = grid.axis(f.axis).x_lo, grid.axis(f.axis).x_hi
        if not np.isclose(f.value, lo if f.side < 0 else hi):
            raise ValueError("grid is not fitted to the domain")
        idx = 0 if f.side < 0 else -1

        def take(a):
            return np.take(a, idx, axis=f.axis).ravel()

        pts = np.take(X, idx, axis=f.axis).reshape(-1, grid.ndim)
        out.append(
            (
                f,
                BoundaryTrace(
                    points=pts,
                    normals=f.normal(pts),
                    rho=take(rho),
                    grad_sqrt=np.stack([take(gk) for gk in grads], axis=1),
                    lap_sqrt=take(lap),
                    u=np.stack([take(c) for c in comps], axis=1),
                ),
            )
        )
    return out


@dataclass(frozen=True)
class IntegrandReport:
    general: dict
    reduced: dict
    max_discrepancy: float
    max_value: float

    def as_dict(self) -> dict:
        return {"max_value": self.max_value, "max_discrepancy": self.max_discrepancy}


def dirichlet_integrand(w: WeightFunction, s: FluidState, law: PressureLaw, eps2=2.0, floor=VACUUM_FLOOR, edge=DEFAULT_EDGE):
    """General and (where available) reduced boundary integrands on every Dirichlet facet."""
    gen, red = {}, {}
    disc = 0.0
    for f, tr in grid_traces(w, s, floor, edge):
        gen[f.name] = integrand_general(w, tr, law, eps2)
        if w.domain.kind in ("ball", "cylinder"):
            red[f.name] = integrand_reduced(w, tr, law, eps2)
            disc = max(disc, float(np.max(np.abs(gen[f.name] - red[f.name]))))
    top = max(float(np.max(v)) for v in gen.values())
    return IntegrandReport(gen, red, disc if red else NAN, top)


# -- multi-D observable monitor -------------------------------------------


@dataclass(frozen=True)
class MultiDReport:
    I0: float
    M0: float
    T_star: float | None
    times: tuple
    I: tuple
    envelope: tuple
    windows: tuple
    satisfied: tuple
    max_integrand: tuple
    tol: float
    message: str

    @property
    def violations(self) -> int:
        return sum(1 for s in self.satisfied if s is False)

    def as_dict(self) -> dict:
        return {
            "I0": self.I0,
            "M0": self.M0,
            "T_star": self.T_star,
            "windows": [list(w) for w in self.windows],
            "checked": sum(1 for s in self.satisfied if s is not None),
            "violations": self.violations,
            "tol": self.tol,
            "message": self.message,
        }


def _normal_flags(w, s, floor, flag_tol):
    """Normal velocity on Neumann facets and normal derivative of sqrt(rho) everywhere,
    measured with one-sided stencils so they are observed, not assumed."""
    un, dn = 0.0, 0.0
    for role in ("dirichlet", "neumann"):
        for f, tr in grid_traces(w, s, floor, "onesided", role):
            dn = max(dn, float(np.max(np.abs(np.sum(tr.grad_sqrt * tr.normals, axis=1)))))
            if role == "neumann":
                un = max(un, float(np.max(np.abs(np.sum(tr.u * tr.normals, axis=1)))))
    return un <= flag_tol and dn <= flag_tol


def multid_observable_monitor(traj, w: WeightFunction, tol: float | None = None, flag_tol: float = 1e-3):
    """Envelope ``I(t) <= I0 + M0 t + tol`` inside windows where the boundary
    integrand is <= 0 on every Dirichlet sample and the Neumann-side flags hold.

    ``traj`` is a hydrodynamic :class:`Trajectory` on a boundary-fitted grid
    (typically the Madelung image of a wave run).
    """
    grid = traj.grid
    a, ga = w.on_grid(grid)
    idx = traj.smooth_indices()
    s0 = traj.states[0]
    I = [integrate(a * s.rho, grid) for s in traj.states]
    if grid.ndim == 1:
        M0 = integrate(s0.rho * s0.u * ga, grid)
    else:
        M0 = integrate(s0.rho * np.sum(s0.u * ga, axis=0), grid)
    I0 = I[0]
    tol = 1e-3 * (1 + abs(I0)) if tol is None else tol
    times = traj.times
    env = I0 + M0 * times
    mask, top = [], []
    for i, s in enumerate(traj.states):
        if i not in idx:
            mask.append(False)
            top.append(NAN)
            continue
        rep = dirichlet_integrand(w, s, traj.law, traj.eps2, traj.floor)
        top.append(rep.max_value)
        mask.append(rep.max_value <= 0 and _normal_flags(w, s, traj.floor, flag_tol))
    wins = _windows(times, mask)
    sat = tuple(bool(i <= e + tol) if m else None for i, e, m in zip(I, env, mask))
    if M0 >= 0:
        msg = "M0 >= 0: no envelope claim"
    elif not wins:
        msg = "hypothesis never satisfied"
    elif any(x is False for x in sat):
        msg = "envelope violated inside a hypothesis window"
    else:
        msg = "envelope holds in all hypothesis windows"
    return MultiDReport(
        I0=float(I0),
        M0=float(M0),
        T_star=float(-I0 / M0) if M0 < 0 else None,
        times=tuple(float(t) for t in times),
        I=tuple(float(v) for v in I),
        envelope=tuple(float(e) for e in env),
        windows=wins,
        satisfied=sat if M0 < 0 else tuple(None for _ in sat),
        max_integrand=tuple(top),
        tol=tol,
        message=msg,
    )


__all__ = [
    "DomainDescriptor",
    "Facet",
    "WeightFunction",
    "make_weight",
    "verify_weight",
    "WeightReport",
    "BoundaryTrace",
    "integrand_general",
    "integrand_reduced",
    "grid_traces",
    "dirichlet_integrand",
    "IntegrandReport",
    "multid_observable_monitor",
    "MultiDReport",
]
