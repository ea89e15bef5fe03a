"""Command-line front end.

Subcommands mirror the package layers: `solve` runs the coupled solver,
`shoot` the two-parameter shooting validation, `verify-barriers` the
differential-inequality checks, `sweep` the current continuation, and
`report` the regime classification. Configuration comes from an optional
JSON file plus flags; flags win. Results land in CSV or JSON on the path
given by --out, or on stdout.

Exit codes: 0 success, 2 configuration error, 3 output error, 4 solver
error, 1 anything unexpected.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Any, Mapping

from . import serialize
from .barriers import anode_bounds, build_box, current_ceiling, verify_box
from .errors import ConfigError, InvalidParameter, MagdiodeError
from .errors import IoError as OutputError
from .grids import make_mesh
from .model import DiodeParams
from .regime import classify, sweep_jx
from .shooting import shoot_system
from .system_solver import solve_system

import numpy as np

DEFAULTS: dict[str, Any] = {
    "jx": 0.1,
    "jx_max": None,       # defaults to jx
    "phi_l": 1.0,
    "a_l": 0.0,
    "nodes": 257,
    "grading": "graded",
    "format": "csv",
    "out": None,          # stdout
    "eta": 1e-4,
    "alpha": None,        # barrier overrides
    "beta": None,
    "delta": None,
    "tol_residual": 1e-10,
    "tol_iter": 1e-10,
    "probe": True,
    "sweep": {"j_min": None, "j_max": None, "steps": 10},
}

_SWEEP_KEYS = set(DEFAULTS["sweep"])

# keys the CLI itself echoes into output configs; accepted on re-ingest so a
# round trip of an emitted artifact re-runs, recomputed rather than trusted
_ECHOED_KEYS = {"barrier_fallback", "beta_found", "jx_found"}


def load_config(path: str) -> dict[str, Any]:
    try:
        with open(path, encoding="utf-8") as f:
            raw = json.load(f)
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    except json.JSONDecodeError as err:
        raise ConfigError(f"config {path} is not valid JSON: {err}") from err
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    return raw


def resolve_config(args: argparse.Namespace) -> dict[str, Any]:
    """Layer defaults, then the config file, then explicit flags."""
    config: dict[str, Any] = {k: (dict(v) if isinstance(v, dict) else v)
                              for k, v in DEFAULTS.items()}
    if args.config:
        file_cfg = load_config(args.config)
        for key in _ECHOED_KEYS:
            file_cfg.pop(key, None)
        unknown = set(file_cfg) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        sweep_cfg = file_cfg.pop("sweep", None)
        if sweep_cfg is not None:
            if not isinstance(sweep_cfg, dict):
                raise ConfigError("config key 'sweep' must be an object")
            bad = set(sweep_cfg) - _SWEEP_KEYS
            if bad:
                raise ConfigError(f"unknown sweep keys: {sorted(bad)}")
            config["sweep"].update(sweep_cfg)
        config.update(file_cfg)
    for flag, key in (("jx", "jx"), ("phi_l", "phi_l"), ("a_l", "a_l"),
                      ("nodes", "nodes"), ("grading", "grading"),
                      ("out", "out"), ("format", "format")):
        value = getattr(args, flag)
        if value is not None:
            config[key] = value
    _validate(config)
    return config


def _validate(config: Mapping[str, Any]) -> None:
    if config["grading"] not in ("uniform", "graded"):
        raise ConfigError(f"grading must be uniform or graded, got {config['grading']!r}")
    if config["format"] not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {config['format']!r}")
    nodes = config["nodes"]
    if not isinstance(nodes, int) or nodes < 33:
        raise ConfigError(f"nodes must be an integer >= 33, got {nodes!r}")
    for key in ("jx", "phi_l", "a_l", "eta", "tol_residual", "tol_iter"):
        value = config[key]
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ConfigError(f"config key {key!r} must be a number, got {value!r}")


def _params(config: Mapping[str, Any]) -> DiodeParams:
    jx_max = config["jx_max"]
    try:
        return DiodeParams(
            j_x=float(config["jx"]),
            phi_L=float(config["phi_l"]),
            a_L=float(config["a_l"]),
            j_x_max=None if jx_max is None else float(jx_max),
            tol_residual=float(config["tol_residual"]),
            tol_iter=float(config["tol_iter"]),
        )
    except InvalidParameter as err:
        raise ConfigError(str(err)) from err


def _mesh(config: Mapping[str, Any]):
    return make_mesh(int(config["nodes"]), str(config["grading"]))


def _box(p: DiodeParams, config: dict[str, Any]):
    alpha, beta, delta = config["alpha"], config["beta"], config["delta"]
    try:
        return build_box(p, alpha=alpha, beta=beta, delta=delta)
    except InvalidParameter:
        if delta is not None:
            raise
        # parameters beyond the barrier-certified region: fall back to a
        # containment-only box so the solver can still run
        config["barrier_fallback"] = True
        return build_box(p, alpha=alpha, beta=beta, delta=0.0)


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)


def cmd_solve(config: dict[str, Any]) -> None:
    p = _params(config)
    mesh = _mesh(config)
    box = _box(p, config)
    pair = solve_system(p, box, mesh)
    out = config["out"]
    if config["format"] == "csv":
        _emit(serialize.pair_csv(pair, config, out), out)
    else:
        _emit(serialize.pair_json(pair, config, out), out)


def cmd_shoot(config: dict[str, Any]) -> None:
    p = _params(config)
    mesh = _mesh(config)
    shot = shoot_system(p, mesh=mesh, eta=float(config["eta"]))
    config["beta_found"] = shot.beta
    config["jx_found"] = shot.j_x
    out = config["out"]
    if config["format"] == "csv":
        _emit(serialize.trajectory_csv(shot.trajectory, config, out), out)
    else:
        _emit(serialize.shot_json(shot, config, out), out)


def cmd_verify_barriers(config: dict[str, Any]) -> None:
    p = _params(config)
    mesh = _mesh(config)
    box = _box(p, config)
    checks = verify_box(box, p, mesh)
    phi_up_1 = float(box.phi_upper.value(np.asarray(1.0)))
    bounds = anode_bounds(p, phi_up_1, box.delta)
    out = config["out"]
    if config["format"] == "csv":
        _emit(serialize.verification_csv(checks, config, out), out)
    else:
        _emit(serialize.verification_json(checks, bounds, config, out), out)


def cmd_sweep(config: dict[str, Any]) -> None:
    p = _params(config)
    mesh = _mesh(config)
    sweep_cfg = config["sweep"]
    ceiling = current_ceiling(p.phi_L)
    j_min = sweep_cfg["j_min"]
    j_max = sweep_cfg["j_max"]
    steps = int(sweep_cfg["steps"])
    if steps < 1:
        raise ConfigError(f"sweep steps must be >= 1, got {steps}")
    j_min = 0.1 * ceiling if j_min is None else float(j_min)
    j_max = ceiling if j_max is None else float(j_max)
    if not (0.0 < j_min <= j_max):
        raise ConfigError(f"need 0 < j_min <= j_max, got [{j_min}, {j_max}]")
    js = np.linspace(j_min, j_max, steps)
    result = sweep_jx(p, js, mesh=mesh, probe=bool(config["probe"]))
    out = config["out"]
    if config["format"] == "csv":
        _emit(serialize.sweep_csv(result, config, out), out)
    else:
        _emit(serialize.sweep_json(result, config, out), out)


def cmd_report(config: dict[str, Any]) -> None:
    p = _params(config)
    box = _box(p, config)
    report = classify(p, box, probe=bool(config["probe"]))
    out = config["out"]
    if config["format"] == "csv":
        _emit(serialize.regime_csv(report, config, out), out)
    else:
        _emit(serialize.regime_json(report, config, out), out)


COMMANDS = {
    "solve": cmd_solve,
    "shoot": cmd_shoot,
    "verify-barriers": cmd_verify_barriers,
    "sweep": cmd_sweep,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="magdiode",
        description="Boundary value solvers for space-charge flow in a "
                    "magnetically insulated diode",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("solve", "solve the coupled system inside a barrier box"),
        ("shoot", "two-parameter shooting for the anode targets"),
        ("verify-barriers", "check the barrier differential inequalities"),
        ("sweep", "continuation sweep over the current"),
        ("report", "admissibility bounds and regime classification"),
    ):
        s = sub.add_parser(name, help=help_text)
        s.add_argument("--config", metavar="PATH", help="JSON config file")
        s.add_argument("--jx", type=float, metavar="F", help="current density")
        s.add_argument("--phi-l", dest="phi_l", type=float, metavar="F",
                       help="anode potential")
        s.add_argument("--a-l", dest="a_l", type=float, metavar="F",
                       help="anode magnetic potential")
        s.add_argument("--nodes", type=int, metavar="N", help="mesh nodes (>= 33)")
        s.add_argument("--grading", choices=("uniform", "graded"),
                       help="mesh point distribution")
        s.add_argument("--out", metavar="PATH", help="output path (default stdout)")
        s.add_argument("--format", choices=("csv", "json"), help="output format")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = resolve_config(args)
        COMMANDS[args.command](config)
    except ConfigError as err:
        _error_json(err)
        return 2
    except OutputError as err:
        _error_json(err)
        return 3
    except MagdiodeError as err:
        _error_json(err)
        return 4
    except Exception as err:  # pragma: no cover - last-resort guard
        _error_json(err)
        return 1
    return 0


def _error_json(err: Exception) -> None:
    sys.stdout.write(json.dumps(
        {"error": type(err).__name__, "message": str(err)},
        sort_keys=True, ensure_ascii=False) + "\n")


if __name__ == "__main__":
    sys.exit(main())
