"""Command-line front end.

    qhdlab run <config|builtin-name>
    qhdlab predict <config|builtin-name>
    qhdlab verify {all,numerics,physics,identities,weights,stationary}
    qhdlab weights {ball,cylinder,box} [--dim D]
    qhdlab stationary <config>

Exit codes: 0 success, 2 configuration error, 3 solver instability,
4 monitor or check failure. Outputs go to ``--out``, else the config's
``[output] dir``, else ``$QHDLAB_OUTPUT_DIR``, else the working directory.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import os
import sys

import numpy as np

from .errors import ConfigError, VacuumError
from .scenarios import (
    BUILTINS,
    EXIT_CONFIG,
    EXIT_MONITOR,
    EXIT_OK,
    _jsonable,
    builtin_config,
    load_config_file,
    output_dir,
    predict,
    run_scenario,
    write_atomic,
)
from .physics import PressureLaw
from .stationary import StationaryParams, positivity_sweep, stationary_residual, stationary_shoot
from .suites import SUITES, verify_suite
from .weights import DomainDescriptor, make_weight, verify_weight


def _load(ref: str):
    if os.path.exists(ref):
        return load_config_file(ref)
    if ref in BUILTINS:
        return builtin_config(ref)
    raise ConfigError(f"{ref}: no such file or built-in scenario (built-ins: {', '.join(sorted(BUILTINS))})")


def _emit(doc, path=None):
    text = json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"
    if path:
        write_atomic(path, text)
    sys.stdout.write(text)


def cmd_run(args):
    cfg = _load(args.config)
    csv_path, summary, code = run_scenario(cfg, args.out)
    summary["outputs"] = {"csv": csv_path}
    _emit({"exit_code": code, "failures": summary["failures"], "monitors": summary["monitors"], "events": summary["events"], "csv": csv_path})
    return code


def cmd_predict(args):
    cfg = _load(args.config)
    doc = predict(cfg)
    d = output_dir(cfg, args.out)
    _emit(doc, os.path.join(d, f"{cfg['output']['prefix'] or cfg.name}-predict.json"))
    return EXIT_OK


def cmd_verify(args):
    rep = verify_suite(args.suite)
    for c in rep["checks"]:
        status = "PASS" if c["passed"] else "FAIL"
        op = "<=" if c["mode"] == "le" else ">="
        print(f"[{status}] {c['suite']}.{c['name']}: {c['value']:.6g} {op} {c['threshold']:.6g}", file=sys.stderr)
    if args.out:
        write_atomic(os.path.join(args.out, f"verify-{args.suite}.json"), json.dumps(rep, indent=2) + "\n")
    sys.stdout.write(json.dumps(rep, indent=2) + "\n")
    return EXIT_OK if rep["passed"] else EXIT_MONITOR


def cmd_weights(args):
    dom = DomainDescriptor(args.domain, args.dim, args.dirichlet_axis)
    w = make_weight(dom)
    rep = verify_weight(w, samples=args.samples, seed=args.seed)
    X = dom.interior_samples(256, args.seed)
    H = w.hess(X)
    doc = {
        "domain": {"kind": dom.kind, "d": dom.d, "facets": [(f.name, f.role) for f in dom.facets]},
        "laplacian_a": float(np.mean(np.trace(H, axis1=1, axis2=2))),
        "hessian_eigenvalues": sorted(set(np.round(np.linalg.eigvalsh(H).ravel(), 12).tolist())),
        "verification": rep.as_dict(),
    }
    _emit(doc, os.path.join(args.out, f"weights-{dom.kind}-d{dom.d}.json") if args.out else None)
    return EXIT_OK if rep.passed else EXIT_MONITOR


STATIONARY_KEYS = {"J", "K", "gamma", "w0", "dw0", "span", "dx", "eps2", "sweep_J", "name"}


def cmd_stationary(args):
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        with open(args.config, encoding="utf-8") as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"{args.config}: {exc}") from None
    if "stationary" not in cp:
        raise ConfigError(f"{args.config}: missing [stationary] section")
    sec = dict(cp["stationary"])
    unknown = set(sec) - STATIONARY_KEYS
    if unknown:
        raise ConfigError(f"{args.config}: unknown key(s) in [stationary]: {', '.join(sorted(unknown))}")
    try:
        law = PressureLaw.power(float(sec.get("gamma", 2.0)))
        p = StationaryParams(
            J=float(sec.get("J", 0.0)),
            K=float(sec["K"]),
            law=law,
            w0=float(sec.get("w0", 1.0)),
            dw0=float(sec.get("dw0", 0.0)),
            span=float(sec.get("span", 1.0)),
            eps2=float(sec.get("eps2", 2.0)),
        )
        dx = float(sec.get("dx", 1e-3))
        sweep = [float(v) for v in sec.get("sweep_J", "").split(",") if v.strip()]
    except KeyError as exc:
        raise ConfigError(f"{args.config}: [stationary] missing key {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"{args.config}: [stationary] {exc}") from None
    prof = stationary_shoot(p, dx)
    name = sec.get("name", "stationary")
    d = output_dir(None, args.out)
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    res = stationary_residual(prof.w, p, prof.grid()) if len(prof.w) >= 8 and prof.complete else None
    wr.writerow(["x", "w", "dw", "residual"])
    for i in range(len(prof.x)):
        r = res[i] if res is not None else float("nan")
        wr.writerow(["%.17g" % v for v in (prof.x[i], prof.w[i], prof.dw[i], r)])
    write_atomic(os.path.join(d, f"{name}.csv"), buf.getvalue())
    doc = {
        "params": {"J": p.J, "K": p.K, "gamma": float(sec.get("gamma", 2.0)), "w0": p.w0, "dw0": p.dw0, "span": p.span, "dx": dx},
        "event": prof.event,
        "event_x": prof.event_x,
        "max_residual": None if res is None else float(np.max(np.abs(res))),
        "sweep": positivity_sweep(sweep, p.K, law, p.w0, p.dw0, p.span, dx, p.eps2) if sweep else [],
    }
    _emit(doc, os.path.join(d, f"{name}.json"))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qhdlab", description="Quantum hydrodynamics simulation and verification.")
    sub = ap.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("run", help="run a scenario")
    p.add_argument("config", help="INI file, JSON summary, or built-in name")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("predict", help="initial-data report only (I0, M0, T*)")
    p.add_argument("config")
    p.add_argument("--out")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("verify", help="run a built-in verification suite")
    p.add_argument("suite", choices=("all",) + SUITES)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("weights", help="construct and verify a weight function")
    p.add_argument("domain", choices=("ball", "cylinder", "box"))
    p.add_argument("--dim", type=int, default=3)
    p.add_argument("--dirichlet-axis", type=int, default=0)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_weights)

    p = sub.add_parser("stationary", help="shoot a stationary profile")
    p.add_argument("config")
    p.add_argument("--out")
    p.set_defaults(func=cmd_stationary)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except VacuumError as exc:
        print(f"vacuum: {exc}", file=sys.stderr)
        return EXIT_MONITOR
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
