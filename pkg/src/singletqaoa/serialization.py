"""Result persistence: CSV matrices and series, JSON records, run manifests.

Every float is serialized with 17 significant digits so reruns with the
same seed produce byte-identical files.
"""
from __future__ import annotations

import hashlib
import json
import platform
from pathlib import Path

import numpy as np
import scipy


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        if np.isnan(value):
            return "nan"
        return f"{float(value):.17g}"
    return str(value)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return None if np.isnan(v) else float(fmt(v))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    return obj


def write_json(path, payload) -> Path:
    path = Path(path)
    with open(path, "w") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def config_hash(config: dict) -> str:
    canon = json.dumps(_jsonable(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def write_trajectory_csv(path, trajectory) -> Path:
    """Columns: time_s, sphere_label, x, y, z, fidelity (one row per sphere)."""
    rows = []
    for pt in trajectory:
        if pt.bloch:
            for label, (x, y, z) in pt.bloch.items():
                rows.append((pt.time, label, x, y, z, pt.fidelity))
        else:
            rows.append((pt.time, "", np.nan, np.nan, np.nan, pt.fidelity))
    return write_csv(path, ("time_s", "sphere_label", "x", "y", "z", "fidelity"),
                     rows)


def write_heatmap(csv_path, json_path, result) -> tuple[Path, Path]:
    """CSV of (nu_hz, delta_hz, fidelity, converged) plus a JSON sidecar."""
    nu = result.grid.nu_values()
    de = result.grid.delta_values()
    rows = []
    for i, nv in enumerate(nu):
        for j, dv in enumerate(de):
            rows.append((nv, dv, result.fidelity[i, j], bool(result.converged[i, j])))
    csv_file = write_csv(csv_path, ("nu_hz", "delta_hz", "fidelity", "converged"),
                         rows)
    sidecar = {
        "mode": result.grid.mode,
        "nu_axis": list(result.grid.nu_axis),
        "delta_axis": list(result.grid.delta_axis),
        "best_point": (None if result.best_point is None else
                       {"nu_hz": result.best_point[0],
                        "delta_hz": result.best_point[1],
                        "fidelity": result.best_point[2]}),
        "wall_time_s": result.wall_time,
        "meta": result.meta,
    }
    return csv_file, write_json(json_path, sidecar)


def optim_result_record(result) -> dict:
    """Documented record for an optimization outcome (durations in ms)."""
    return {
        "problem_hash": result.problem_hash,
        "gammas_ms": [g * 1e3 for g in result.gammas],
        "betas_ms": [b * 1e3 for b in result.betas],
        "nu_hz": result.nu_hz,
        "delta_hz": result.delta_hz,
        "fidelity": result.fidelity,
        "total_time_ms": result.total_time * 1e3,
        "cost": result.cost,
        "n_evals": result.n_evals,
        "converged": result.converged,
        "seed": result.seed,
    }


def load_optim_result(path):
    from .qaoa import OptimResult
    with open(path) as fh:
        rec = json.load(fh)
    return OptimResult(
        gammas=tuple(g * 1e-3 for g in rec["gammas_ms"]),
        betas=tuple(b * 1e-3 for b in rec["betas_ms"]),
        fidelity=rec["fidelity"],
        total_time=rec["total_time_ms"] * 1e-3,
        cost=rec["cost"],
        n_evals=rec["n_evals"],
        converged=rec["converged"],
        seed=rec["seed"],
        nu_hz=rec["nu_hz"],
        delta_hz=rec["delta_hz"],
        problem_hash=rec["problem_hash"],
    )


def write_manifest(path, config: dict, seed, outputs, wall_time_s) -> Path:
    from . import __version__
    payload = {
        "config_sha256": config_hash(config),
        "seed": seed,
        "outputs": [str(Path(p).name) for p in outputs],
        "wall_time_s": wall_time_s,
        "versions": {
            "package": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
    }
    return write_json(path, payload)
