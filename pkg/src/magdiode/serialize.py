"""CSV and JSON writers for profiles, trajectories, sweeps, and reports.

Every artifact embeds the resolved run configuration: CSV files carry it as
a first-line comment, JSON files under the "config" key. CSV numbers are
printed with 17 significant digits so binary floats round-trip exactly;
JSON relies on Python's shortest-round-trip float encoding, which is
equally lossless.
"""

from __future__ import annotations

import csv
import io
import json
from typing import Any, Mapping, Sequence

import numpy as np

from .barriers import AnodeBounds, BarrierCheck
from .errors import IoError as OutputError
from .grids import FieldProfile
from .regime import RegimeReport, SweepResult
from .shooting import SystemShot, Trajectory
from .system_solver import SolutionPair


def fmt(value: float | None) -> str:
    if value is None:
        return ""
    return "%.17g" % value


def _config_line(config: Mapping[str, Any]) -> str:
    return "# config: " + json.dumps(dict(config), sort_keys=True,
                                     ensure_ascii=False, default=str)


def _write_text(path: str | None, text: str) -> str:
    """Write to path, or return text unchanged for path=None (stdout use)."""
    if path is None:
        return text
    try:
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    except OSError as err:
        raise OutputError(f"cannot write {path}: {err}") from err
    return text


def _csv_text(config: Mapping[str, Any], header: Sequence[str],
              rows: Sequence[Sequence[str]]) -> str:
    buf = io.StringIO()
    buf.write(_config_line(config) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _json_text(payload: Mapping[str, Any]) -> str:
    return json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _listify(values: np.ndarray) -> list[float]:
    return [float(v) for v in np.asarray(values)]


# ---------------------------------------------------------------------------
# Profiles and solution pairs


def profile_csv(profile: FieldProfile, config: Mapping[str, Any],
                path: str | None = None) -> str:
    rows = [(fmt(x), fmt(v)) for x, v in zip(profile.mesh.nodes, profile.values)]
    return _write_text(path, _csv_text(config, ("x", "value"), rows))


def profile_json(profile: FieldProfile, config: Mapping[str, Any],
                 path: str | None = None) -> str:
    payload = {
        "config": dict(config),
        "mesh": {"nodes": _listify(profile.mesh.nodes),
                 "grading": profile.mesh.grading,
                 "n_nodes": profile.mesh.n_nodes},
        "values": _listify(profile.values),
        "residual": profile.residual,
        "metadata": {k: v for k, v in profile.info.items() if k != "ladder"},
    }
    return _write_text(path, _json_text(payload))


def pair_csv(pair: SolutionPair, config: Mapping[str, Any],
             path: str | None = None) -> str:
    rows = [(fmt(x), fmt(phi), fmt(a)) for x, phi, a in
            zip(pair.phi.mesh.nodes, pair.phi.values, pair.a.values)]
    return _write_text(path, _csv_text(config, ("x", "phi", "a"), rows))


def pair_json(pair: SolutionPair, config: Mapping[str, Any],
              path: str | None = None) -> str:
    payload = {
        "config": dict(config),
        "x": _listify(pair.phi.mesh.nodes),
        "phi": _listify(pair.phi.values),
        "a": _listify(pair.a.values),
        "residual_phi": pair.residual_phi,
        "residual_a": pair.residual_a,
        "iterations": pair.iterations,
        "phi_contained": pair.phi_contained,
        "a_contained": pair.a_contained,
    }
    return _write_text(path, _json_text(payload))


# ---------------------------------------------------------------------------
# Trajectories


def trajectory_csv(traj: Trajectory, config: Mapping[str, Any],
                   path: str | None = None) -> str:
    disc = traj.discriminant
    rows = [
        (fmt(traj.x[i]), fmt(traj.phi[i]), fmt(traj.phi_prime[i]),
         fmt(traj.a[i]), fmt(traj.a_prime[i]), fmt(disc[i]))
        for i in range(traj.x.size)
    ]
    header = ("x", "phi", "phi_prime", "a", "a_prime", "discriminant")
    return _write_text(path, _csv_text(config, header, rows))


def shot_json(shot: SystemShot, config: Mapping[str, Any],
              path: str | None = None) -> str:
    traj = shot.trajectory
    payload = {
        "config": dict(config),
        "beta": shot.beta,
        "j_x": shot.j_x,
        "iterations": shot.iterations,
        "method": shot.method,
        "termination": traj.reason,
        "x": _listify(traj.x),
        "phi": _listify(traj.phi),
        "phi_prime": _listify(traj.phi_prime),
        "a": _listify(traj.a),
        "a_prime": _listify(traj.a_prime),
        "discriminant": _listify(traj.discriminant),
    }
    return _write_text(path, _json_text(payload))


# ---------------------------------------------------------------------------
# Verification and regime reports


def _check_payload(check: BarrierCheck) -> dict[str, Any]:
    return {
        "field": check.field_name,
        "kind": check.kind,
        "x": _listify(check.x),
        "margins": _listify(check.margins),
        "indeterminate": [bool(b) for b in check.indeterminate],
        "n_indeterminate": check.n_indeterminate,
        "n_violations": check.n_violations,
        "passed": check.passed,
        "frozen_at": check.frozen_at,
    }


def _bounds_payload(bounds: AnodeBounds) -> dict[str, Any]:
    def one(c) -> dict[str, Any]:
        return {"value": c.value, "bound": c.bound, "satisfied": c.satisfied}

    return {
        "current": one(bounds.current),
        "magnetic_top": one(bounds.magnetic_top),
        "magnetic_half": one(bounds.magnetic_half),
        "delta": bounds.delta,
    }


def verification_json(checks: Mapping[str, BarrierCheck], bounds: AnodeBounds,
                      config: Mapping[str, Any], path: str | None = None) -> str:
    payload = {
        "config": dict(config),
        "checks": {name: _check_payload(c) for name, c in checks.items()},
        "bounds": _bounds_payload(bounds),
        "all_passed": all(c.passed for c in checks.values()),
    }
    return _write_text(path, _json_text(payload))


def verification_csv(checks: Mapping[str, BarrierCheck],
                     config: Mapping[str, Any], path: str | None = None) -> str:
    """Margins table: one row per interior node, one column pair per barrier."""
    names = list(checks)
    header = ["x"]
    for name in names:
        header += [f"margin_{name}", f"indeterminate_{name}"]
    first = checks[names[0]]
    rows = []
    for i, x in enumerate(first.x):
        row = [fmt(float(x))]
        for name in names:
            c = checks[name]
            row += [fmt(float(c.margins[i])), str(int(c.indeterminate[i]))]
        rows.append(row)
    return _write_text(path, _csv_text(config, header, rows))


def regime_json(report: RegimeReport, config: Mapping[str, Any],
                path: str | None = None) -> str:
    def one(c) -> dict[str, Any]:
        return {"value": c.value, "bound": c.bound, "satisfied": c.satisfied}

    payload = {
        "config": dict(config),
        "bound_17": one(report.bound_17),
        "bound_18": one(report.bound_18),
        "bound_23": one(report.bound_23),
        "classification": report.classification,
        "provenance": dict(report.provenance),
    }
    return _write_text(path, _json_text(payload))


def regime_csv(report: RegimeReport, config: Mapping[str, Any],
               path: str | None = None) -> str:
    rows = [
        ("bound_17_value", fmt(report.bound_17.value)),
        ("bound_17_bound", fmt(report.bound_17.bound)),
        ("bound_17_satisfied", str(int(report.bound_17.satisfied))),
        ("bound_18_value", fmt(report.bound_18.value)),
        ("bound_18_bound", fmt(report.bound_18.bound)),
        ("bound_18_satisfied", str(int(report.bound_18.satisfied))),
        ("bound_23_value", fmt(report.bound_23.value)),
        ("bound_23_bound", fmt(report.bound_23.bound)),
        ("bound_23_satisfied", str(int(report.bound_23.satisfied))),
        ("classification", report.classification),
    ]
    return _write_text(path, _csv_text(config, ("key", "value"), rows))


# ---------------------------------------------------------------------------
# Sweeps


SWEEP_HEADER = ("j_x", "phi_mid", "a_mid", "residual_phi", "residual_a",
                "classification", "converged", "error")


def sweep_csv(result: SweepResult, config: Mapping[str, Any],
              path: str | None = None) -> str:
    rows = []
    for r in result.rows:
        rows.append((
            fmt(r.j_x), fmt(r.phi_mid), fmt(r.a_mid), fmt(r.residual_phi),
            fmt(r.residual_a), r.classification, str(int(r.converged)),
            r.error or "",
        ))
    return _write_text(path, _csv_text(config, SWEEP_HEADER, rows))


def sweep_json(result: SweepResult, config: Mapping[str, Any],
               path: str | None = None) -> str:
    payload = {
        "config": dict(config),
        "max_converged_jx": result.max_converged_jx,
        "rows": [
            {
                "j_x": r.j_x, "phi_mid": r.phi_mid, "a_mid": r.a_mid,
                "residual_phi": r.residual_phi, "residual_a": r.residual_a,
                "classification": r.classification, "converged": r.converged,
                "error": r.error,
            }
            for r in result.rows
        ],
    }
    return _write_text(path, _json_text(payload))
