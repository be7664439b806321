"""Scenario configuration and execution.

A scenario is an INI document. Every section and key is listed in
``SCHEMA`` with its type and default; unknown keys are rejected so typos
surface as configuration errors instead of silently using defaults.
"""
from __future__ import annotations

import configparser
import csv
import io
import json
import math
import os
import tempfile
import time
from dataclasses import dataclass

import numpy as np

from .diagnostics import (
    CSV_COLUMNS,
    Theorem4Params,
    blowup_detect,
    initial_data_report,
    theorem2_monitor,
    theorem4_monitor,
)
from .errors import AssumptionError, ConfigError, InstabilityError, VacuumError
from .nls_solver import NlsConfig, nls_run
from .numerics import BoundaryKind, Grid1D
from .physics import VACUUM_FLOOR, FluidState, PressureLaw, madelung_inverse
from .qhd_solver import QhdConfig, qhd_run

OUTPUT_ENV = "QHDLAB_OUTPUT_DIR"

EXIT_OK, EXIT_CONFIG, EXIT_INSTABILITY, EXIT_MONITOR = 0, 2, 3, 4


def _bool(v):
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _list(v):
    if isinstance(v, (list, tuple)):
        return [str(x).strip() for x in v]
    return [s.strip() for s in str(v).split(",") if s.strip()]


def _optfloat(v):
    if v is None or str(v).strip().lower() in ("", "none", "auto"):
        return None
    return float(v)


SCHEMA = {
    "scenario": {"name": (str, "unnamed"), "solver": (str, "qhd"), "seed": (int, 0), "refine_check": (_bool, False)},
    "grid": {"x_lo": (float, 0.0), "x_hi": (float, 1.0), "n": (int, 257), "periodic": (_bool, False)},
    "law": {"terms": (str, "1:2")},
    "solver": {
        "eps2": (float, 2.0),
        "sigma": (float, 0.1),
        "dt": (_optfloat, None),
        "nls_dt": (float, 1e-4),
        "t_final": (float, 0.1),
        "snapshot_dt": (_optfloat, None),
        "floor": (float, VACUUM_FLOOR),
    },
    "boundary": {"kind": (str, "periodic"), "u0": (float, 0.0), "u1": (float, 0.0), "c1": (float, 0.0), "c2": (float, 0.0)},
    "initial": {
        "recipe": (str, "cosine"),
        "rho_mean": (float, 1.0),
        "rho_amp": (float, 0.0),
        "rho_k": (float, 1.0),
        "u_amp": (float, 0.0),
        "u_k": (float, 1.0),
        "u_shift": (float, 0.0),
        "w0": (float, 0.95),
        "k0": (float, 2.0),
        "J_lo": (float, 2.5),
        "J_hi": (float, 2.8),
    },
    "monitors": {
        "enabled": (_list, ["energy", "vacuum"]),
        "alpha": (float, 1.5),
        "M": (float, 10.0),
        "lam": (float, 1.0),
        "tol": (_optfloat, None),
        "energy_tol": (_optfloat, None),
        "identity_tol": (_optfloat, None),
        "xcheck_tol": (_optfloat, None),
    },
    "output": {"dir": (str, ""), "prefix": (str, "")},
}

SOLVERS = ("qhd", "nls", "both")
RECIPES = ("cosine", "linear", "stationary")
MONITORS = ("energy", "identity", "theorem2", "theorem4", "vacuum")


def parse_terms(text: str) -> PressureLaw:
    """``"free"`` or comma-separated ``coefficient:exponent`` pairs."""
    text = text.strip()
    if text.lower() == "free":
        return PressureLaw.free()
    terms = []
    for item in text.split(","):
        c, _, e = item.partition(":")
        if not e:
            raise ValueError(f"law term {item.strip()!r} is not coefficient:exponent")
        terms.append((float(c), float(e)))
    return PressureLaw.sum_of_powers(terms)


@dataclass(frozen=True)
class ScenarioConfig:
    """Fully resolved scenario: ``values[section][key]`` with typed values."""

    values: dict

    def __getitem__(self, section):
        return self.values[section]

    @property
    def name(self) -> str:
        return self.values["scenario"]["name"]

    def as_dict(self) -> dict:
        return json.loads(json.dumps(self.values))

    def to_ini(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        for sec, kv in self.values.items():
            cp[sec] = {k: (", ".join(v) if isinstance(v, list) else ("none" if v is None else str(v))) for k, v in kv.items()}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()


def _resolve(raw: dict, source: str) -> ScenarioConfig:
    out = {}
    for sec, keys in SCHEMA.items():
        given = raw.get(sec, {})
        unknown = set(given) - set(keys)
        if unknown:
            raise ConfigError(f"{source}: unknown key(s) in [{sec}]: {', '.join(sorted(unknown))}")
        out[sec] = {}
        for key, (conv, default) in keys.items():
            if key in given:
                try:
                    out[sec][key] = conv(given[key])
                except (TypeError, ValueError) as exc:
                    raise ConfigError(f"{source}: [{sec}] {key} = {given[key]!r}: {exc}") from None
            else:
                out[sec][key] = list(default) if isinstance(default, list) else default
    extra = set(raw) - set(SCHEMA)
    if extra:
        raise ConfigError(f"{source}: unknown section(s): {', '.join(sorted(extra))}")
    cfg = ScenarioConfig(out)
    validate(cfg, source)
    return cfg


def validate(cfg: ScenarioConfig, source: str = "config") -> None:
    s = cfg.values
    if s["scenario"]["solver"] not in SOLVERS:
        raise ConfigError(f"{source}: [scenario] solver must be one of {SOLVERS}")
    if s["initial"]["recipe"] not in RECIPES:
        raise ConfigError(f"{source}: [initial] recipe must be one of {RECIPES}")
    bad = [m for m in s["monitors"]["enabled"] if m not in MONITORS]
    if bad:
        raise ConfigError(f"{source}: [monitors] enabled has unknown monitor(s) {bad}; known: {MONITORS}")
    kind = s["boundary"]["kind"]
    if kind not in ("periodic", "dirichlet_velocity", "monitored", "neumann"):
        raise ConfigError(f"{source}: [boundary] kind {kind!r} unknown")
    if (kind == "periodic") != s["grid"]["periodic"]:
        raise ConfigError(f"{source}: [boundary] kind={kind} is inconsistent with [grid] periodic={s['grid']['periodic']}")
    if s["scenario"]["solver"] in ("nls", "both") and kind not in ("periodic", "neumann", "monitored"):
        raise ConfigError(f"{source}: the wave solver supports periodic or neumann boundaries only")
    if not 0 < s["solver"]["sigma"] <= 1:
        raise ConfigError(f"{source}: [solver] sigma must lie in (0, 1]")
    if s["grid"]["n"] < 8:
        raise ConfigError(f"{source}: [grid] n must be >= 8")
    if not s["solver"]["t_final"] > 0:
        raise ConfigError(f"{source}: [solver] t_final must be positive")
    try:
        parse_terms(s["law"]["terms"])
    except ValueError as exc:
        raise ConfigError(f"{source}: [law] terms: {exc}") from None


def load_config(text: str, source: str = "config") -> ScenarioConfig:
    """Parse INI text, or a JSON summary that embeds a resolved config."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{source}: line {exc.lineno}: {exc.msg}") from None
        raw = doc.get("run", {}).get("config", doc)
        return _resolve(raw, source)
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str  # keys are case-sensitive (J_lo, M)
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    raw = {sec: dict(cp[sec]) for sec in cp.sections()}
    return _resolve(raw, source)


def load_config_file(path: str) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return load_config(fh.read(), path)


# -- building blocks -------------------------------------------------------


def build_grid(cfg: ScenarioConfig, n: int | None = None) -> Grid1D:
    g = cfg["grid"]
    return Grid1D(g["x_lo"], g["x_hi"], n or g["n"], g["periodic"])


def build_law(cfg: ScenarioConfig) -> PressureLaw:
    return parse_terms(cfg["law"]["terms"])


def build_initial(cfg: ScenarioConfig, grid: Grid1D, law: PressureLaw):
    """Initial state and, for the stationary recipe, the boundary velocities."""
    p = cfg["initial"]
    x = grid.x
    rec = p["recipe"]
    if rec == "stationary":
        from .stationary import neumann_flux_profile

        if grid.periodic:
            raise ConfigError("stationary recipe needs a bounded grid")
        sp, prof = neumann_flux_profile(
            law, p["w0"], p["k0"], (p["J_lo"], p["J_hi"]), span=grid.length, dx=grid.dx, eps2=cfg["solver"]["eps2"]
        )
        rho = prof.w**2
        return FluidState(0.0, rho, sp.J / rho, grid)
    rho = p["rho_mean"] + p["rho_amp"] * np.cos(p["rho_k"] * x)
    if rec == "cosine":
        u = p["u_amp"] * np.sin(p["u_k"] * x)
    else:
        u = p["u_amp"] * (x - p["u_shift"])
    if not np.min(rho) > 0:
        raise ConfigError("[initial] recipe produces nonpositive density")
    return FluidState(0.0, rho, u, grid)


def build_bc(cfg: ScenarioConfig, ic: FluidState | None = None) -> BoundaryKind:
    b = cfg["boundary"]
    kind = b["kind"]
    if kind == "periodic":
        return BoundaryKind.periodic_bc()
    if kind == "dirichlet_velocity":
        if cfg["initial"]["recipe"] == "stationary" and ic is not None:
            return BoundaryKind.dirichlet_velocity(ic.u[0], ic.u[-1])
        return BoundaryKind.dirichlet_velocity(b["u0"], b["u1"])
    return BoundaryKind.monitored(b["c1"], b["c2"])


def _record_every(snapshot_dt, dt, t_final):
    if snapshot_dt is None:
        snapshot_dt = t_final / 100
    return max(1, int(round(snapshot_dt / dt)))


def run_qhd(cfg: ScenarioConfig, grid=None, ic=None, law=None):
    law = law or build_law(cfg)
    grid = grid or build_grid(cfg)
    ic = ic or build_initial(cfg, grid, law)
    s = cfg["solver"]
    bc = build_bc(cfg, ic)
    probe = QhdConfig(eps2=s["eps2"], bc=bc, sigma=s["sigma"], dt=s["dt"], floor=s["floor"], t_final=s["t_final"])
    dt, _ = probe.time_step(grid)
    every = _record_every(s["snapshot_dt"], dt, s["t_final"])
    qc = QhdConfig(eps2=s["eps2"], bc=bc, sigma=s["sigma"], dt=s["dt"], floor=s["floor"], t_final=s["t_final"], record_every=every)
    return qhd_run(ic, law, qc)


def run_nls(cfg: ScenarioConfig, grid=None, ic=None, law=None):
    law = law or build_law(cfg)
    grid = grid or build_grid(cfg)
    ic = ic or build_initial(cfg, grid, law)
    s = cfg["solver"]
    eps = math.sqrt(s["eps2"])
    nc0 = NlsConfig(eps=eps, bc="periodic" if grid.periodic else "neumann", dt=s["nls_dt"], t_final=s["t_final"], floor=s["floor"])
    dt, _ = nc0.steps()
    every = _record_every(s["snapshot_dt"], dt, s["t_final"])
    nc = NlsConfig(eps=eps, bc=nc0.bc, dt=s["nls_dt"], t_final=s["t_final"], record_every=every, floor=s["floor"])
    return nls_run(madelung_inverse(ic, eps, floor=s["floor"]), law, nc)


def _finite(v):
    if v is None:
        return None
    v = float(v)
    return v if math.isfinite(v) else None


def _max_abs(a):
    a = np.asarray(a, dtype=float)
    a = a[np.isfinite(a)]
    return float(np.max(np.abs(a))) if a.size else None


def write_atomic(path: str, data: str) -> None:
    """Write-then-rename so readers never see partial files."""
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(records) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(CSV_COLUMNS)
    for r in records:
        wr.writerow(["%.17g" % v for v in r.row()])
    return buf.getvalue()


def output_dir(cfg: ScenarioConfig | None = None, override: str | None = None) -> str:
    if override:
        return override
    if cfg is not None and cfg["output"]["dir"]:
        return cfg["output"]["dir"]
    return os.environ.get(OUTPUT_ENV, os.getcwd())


def _density_gap(traj_q, traj_n):
    return float(np.max(np.abs(traj_q.states[-1].rho - traj_n.states[-1].density)))


def run_scenario(cfg: ScenarioConfig, out_dir: str | None = None, write: bool = True):
    """Run the configured solver(s) and monitors.

    Returns ``(csv_path, summary, exit_code)``. Exit code 0 means every
    selected check passed or its hypotheses were vacuous, 3 a solver
    instability, 4 a failed monitor.
    """
    t_start = time.perf_counter()
    law = build_law(cfg)
    grid = build_grid(cfg)
    ic = build_initial(cfg, grid, law)
    solver = cfg["scenario"]["solver"]
    mon = cfg["monitors"]
    summary = {
        "run": {"scenario": cfg.name, "solver": solver, "law": law.describe(), "config": cfg.as_dict()},
        "hypotheses": {},
        "monitors": {},
        "events": [],
    }
    failures = []
    code = EXIT_OK
    traj = wave = None
    try:
        if solver in ("qhd", "both"):
            traj = run_qhd(cfg, grid, ic, law)
        if solver in ("nls", "both"):
            wave = run_nls(cfg, grid, ic, law)
    except InstabilityError as exc:
        summary["events"].append({"type": "instability", "t": exc.t, "message": str(exc)})
        partial = exc.partial
        traj = getattr(partial, "hydro", partial)
        code = EXIT_INSTABILITY
    except VacuumError as exc:
        summary["events"].append({"type": "vacuum_at_start", "t": exc.t, "min_rho": exc.min_rho})
        code = EXIT_INSTABILITY
    primary = traj if traj is not None else (wave.hydro if wave is not None else None)

    if primary is not None and primary.records:
        summary["run"]["snapshots"] = len(primary.records)
        summary["run"]["dt"] = primary.meta.get("dt")
        if "energy" in mon["enabled"]:
            r = _max_abs(primary.column("res_energy"))
            ok = True if mon["energy_tol"] is None or r is None else r <= mon["energy_tol"]
            summary["monitors"]["energy_residual"] = {"max_abs": r, "tol": mon["energy_tol"], "passed": ok}
            if not ok:
                failures.append("energy_residual")
        if "identity" in mon["enabled"]:
            if primary.bounded:
                r = _max_abs(primary.column("res_dI"))
                ok = True if mon["identity_tol"] is None or r is None else r <= mon["identity_tol"]
                summary["monitors"]["observable_identity"] = {"max_abs": r, "tol": mon["identity_tol"], "passed": ok}
                if not ok:
                    failures.append("observable_identity")
            else:
                summary["monitors"]["observable_identity"] = {"skipped": "periodic grid"}
        if "theorem2" in mon["enabled"] and primary.bounded:
            rep = theorem2_monitor(primary, initial_data_report(ic.rho, ic.u, grid), mon["tol"])
            summary["monitors"]["theorem2"] = rep.as_dict()
            summary["hypotheses"]["M0_negative"] = rep.M0 < 0
            summary["hypotheses"]["boundary_windows"] = [list(w) for w in rep.hypothesis_windows]
            if rep.violations:
                failures.append("theorem2")
        if "theorem4" in mon["enabled"] and traj is not None and traj.bounded:
            bc = traj.bc
            try:
                p = Theorem4Params(mon["alpha"], mon["M"], bc.u0, bc.u1, mon["lam"])
                rep4 = theorem4_monitor(traj, law, p, mon["tol"])
                summary["monitors"]["theorem4"] = rep4.as_dict()
                summary["hypotheses"]["condition_windows"] = [list(w) for w in rep4.windows]
                if rep4.violations:
                    failures.append("theorem4")
            except AssumptionError as exc:
                summary["monitors"]["theorem4"] = {"error": str(exc), "report": exc.report.as_dict() if exc.report else None}
                failures.append("theorem4")
        if "vacuum" in mon["enabled"]:
            ev = blowup_detect(primary, primary.floor)
            summary["monitors"]["vacuum"] = None if ev is None else {"t": ev.t, "min_rho": ev.min_rho, "fraction_below": ev.fraction_below}
            if ev is not None:
                summary["events"].append({"type": "vacuum", "t": ev.t, "min_rho": ev.min_rho})
    if traj is not None and wave is not None:
        xc = {"max_density_gap": _density_gap(traj, wave)}
        if cfg["scenario"]["refine_check"]:
            coarse = build_grid(cfg, grid.n // 2 if grid.periodic else (grid.n - 1) // 2 + 1)
            ic_c = build_initial(cfg, coarse, law)
            s = cfg["solver"]
            dt_c = None if s["dt"] is None else 2 * s["dt"]
            cc = ScenarioConfig({**cfg.values, "solver": {**s, "dt": dt_c}})
            gap_c = _density_gap(run_qhd(cc, coarse, ic_c, law), run_nls(cc, coarse, ic_c, law))
            xc["coarse_density_gap"] = gap_c
            xc["refinement_ratio"] = gap_c / xc["max_density_gap"] if xc["max_density_gap"] > 0 else None
        tolx = mon["xcheck_tol"]
        xc["tol"] = tolx
        xc["passed"] = True if tolx is None else xc["max_density_gap"] <= tolx
        if not xc["passed"]:
            failures.append("madelung_xcheck")
        summary["monitors"]["madelung_xcheck"] = xc
    if wave is not None:
        m = np.asarray(wave.mass)
        summary["monitors"]["wave_mass_drift"] = float(np.max(np.abs(m / m[0] - 1)))
        for t, mr in wave.vacuum_events[:1]:
            summary["events"].append({"type": "wave_vacuum", "t": t, "min_rho": mr})

    summary["failures"] = failures
    if code == EXIT_OK and failures:
        code = EXIT_MONITOR
    summary["run"]["exit_code"] = code
    summary["run"]["wall_seconds"] = round(time.perf_counter() - t_start, 3)
    csv_path = None
    if write:
        d = output_dir(cfg, out_dir)
        stem = cfg["output"]["prefix"] or cfg.name
        csv_path = os.path.join(d, f"{stem}.csv")
        if primary is not None:
            write_atomic(csv_path, csv_text(primary.records))
        write_atomic(os.path.join(d, f"{stem}.json"), json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n")
    return csv_path, summary, code


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return _finite(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def predict(cfg: ScenarioConfig) -> dict:
    """Initial-data report only: I0, M0 and T* (when M0 < 0)."""
    law = build_law(cfg)
    grid = build_grid(cfg)
    ic = build_initial(cfg, grid, law)
    rep = initial_data_report(ic.rho, ic.u, grid)
    return {"run": {"scenario": cfg.name, "config": cfg.as_dict()}, "I0": rep.I0, "M0": rep.M0, "T_star": rep.T_star}


# -- built-in scenarios ----------------------------------------------------

BUILTINS = {
    "madelung-xcheck": """
[scenario]
name = madelung-xcheck
solver = both
refine_check = true
[grid]
x_lo = 0
x_hi = 6.283185307179586
n = 128
periodic = true
[law]
terms = 0.5:2
[solver]
dt = 2e-5
nls_dt = 1e-4
t_final = 0.5
snapshot_dt = 0.05
[boundary]
kind = periodic
[initial]
recipe = cosine
rho_amp = 0.1
[monitors]
enabled = energy, vacuum
xcheck_tol = 5e-3
""",
    "predict": """
[scenario]
name = predict
[grid]
n = 257
[boundary]
kind = dirichlet_velocity
[initial]
recipe = linear
u_amp = 1
u_shift = 0.5
""",
    "inward-momentum": """
[scenario]
name = inward-momentum
solver = nls
[grid]
n = 257
[law]
terms = 1:2
[solver]
nls_dt = 1e-5
t_final = 0.1
snapshot_dt = 5e-4
[boundary]
kind = neumann
[initial]
recipe = cosine
rho_amp = -0.3
rho_k = 6.283185307179586
u_amp = -1.0
u_k = 6.283185307179586
[monitors]
enabled = energy, identity, theorem2, vacuum
""",
    "dirichlet-supersonic": """
[scenario]
name = dirichlet-supersonic
solver = qhd
[grid]
n = 129
[law]
terms = 1:2
[solver]
sigma = 0.5
t_final = 0.05
snapshot_dt = 2.5e-3
[boundary]
kind = dirichlet_velocity
[initial]
recipe = stationary
w0 = 0.95
k0 = 2.0
J_lo = 2.5
J_hi = 2.8
[monitors]
enabled = energy, identity, theorem4, vacuum
alpha = 1.5
M = 10
lam = 1
""",
}


def builtin_config(name: str) -> ScenarioConfig:
    if name not in BUILTINS:
        raise ConfigError(f"no built-in scenario {name!r}; known: {', '.join(sorted(BUILTINS))}")
    return load_config(BUILTINS[name], f"builtin:{name}")


__all__ = [
    "SCHEMA",
    "ScenarioConfig",
    "load_config",
    "load_config_file",
    "run_scenario",
    "predict",
    "builtin_config",
    "BUILTINS",
    "csv_text",
    "write_atomic",
    "EXIT_OK",
    "EXIT_CONFIG",
    "EXIT_INSTABILITY",
    "EXIT_MONITOR",
]
