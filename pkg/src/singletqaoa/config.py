"""Experiment configuration: documented JSON schema, validation with
key-path errors, and constructors for the domain objects.

Pair indices in config files are 1-based (spins are numbered from 1, as in
spectra); they are converted to 0-based indices internally. Durations in
config files are milliseconds unless the key says otherwise; frequencies
are Hz.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import SchemaError
from .hamiltonians import (
    ControlParams,
    SpinSystem,
    SystemContext,
    build_target,
    make_context,
    thermal_and_initial_states,
)
from .objective import CostConfig
from .qaoa import OptimizerSettings, QaoaProblem
from .spinops import DeviationState
from .sweeps import SweepGrid

TASKS = ("evaluate", "optimize", "heatmap", "robustness", "trajectory",
         "baseline", "search", "fit-decay", "report", "total-protocol")


def load_config(path) -> dict:
    path = Path(path)
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"config is not valid JSON: {exc}", keys=("<file>",))
    if not isinstance(cfg, dict):
        raise SchemaError("config top level must be an object", keys=("<root>",))
    cfg.setdefault("_dir", str(path.parent))
    return cfg


def _need(cfg: dict, key: str, where: str = ""):
    if key not in cfg:
        raise SchemaError(f"missing required key {where}{key}",
                          keys=(f"{where}{key}",))
    return cfg[key]


def _number(cfg: dict, key: str, where: str, minimum=None, maximum=None):
    v = _need(cfg, key, where)
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        raise SchemaError(f"{where}{key} must be a number", keys=(f"{where}{key}",))
    if minimum is not None and v < minimum:
        raise SchemaError(f"{where}{key} must be >= {minimum}, got {v}",
                          keys=(f"{where}{key}",))
    if maximum is not None and v > maximum:
        raise SchemaError(f"{where}{key} must be <= {maximum}, got {v}",
                          keys=(f"{where}{key}",))
    return v


def _pair(raw, where: str) -> tuple[int, int]:
    if (not isinstance(raw, (list, tuple)) or len(raw) != 2
            or not all(isinstance(v, int) for v in raw)):
        raise SchemaError(f"{where} must be a pair of 1-based spin indices",
                          keys=(where,))
    return raw[0] - 1, raw[1] - 1


def _resolve(cfg: dict, path_str: str) -> Path:
    p = Path(path_str)
    if not p.is_absolute() and cfg.get("_dir"):
        p = Path(cfg["_dir"]) / p
    return p


def build_system(cfg: dict) -> SpinSystem:
    sec = _need(cfg, "system")
    if "file" in sec:
        nested = load_config(_resolve(cfg, sec["file"]))
        nested = {"system": nested, "_dir": nested.get("_dir", cfg.get("_dir"))}
        return build_system(nested)
    if "delta_hz" in sec or "j_hz" in sec:
        delta = _number(sec, "delta_hz", "system.")
        j = _number(sec, "j_hz", "system.")
        return SpinSystem.two_spin(delta, j)
    n = int(_number(sec, "n_spins", "system.", minimum=1))
    offsets = _need(sec, "offsets_hz", "system.")
    jmat = _need(sec, "j_couplings_hz", "system.")
    try:
        return SpinSystem(n_spins=n, offsets_hz=tuple(offsets),
                          j_couplings_hz=np.array(jmat, dtype=float))
    except ValueError as exc:
        raise SchemaError(f"system: {exc}",
                          keys=("system.offsets_hz", "system.j_couplings_hz"))


def build_target_from_config(cfg: dict, system: SpinSystem, ctx: SystemContext):
    sec = cfg.get("target", {"kind": "singlet_order", "pair": [1, 2]})
    kind = _need(sec, "kind", "target.")
    kwargs = {}
    if kind in ("singlet_order", "antiphase_magnetization"):
        kwargs["pair"] = _pair(sec.get("pair", [1, 2]), "target.pair")
    elif kind == "pairwise_singlet_sum":
        raw = _need(sec, "pairs", "target.")
        kwargs["pairs"] = tuple(_pair(p, "target.pairs") for p in raw)
    elif kind == "custom":
        kwargs["path"] = _resolve(cfg, _need(sec, "path", "target."))
    else:
        raise SchemaError(f"unknown target kind {kind!r}", keys=("target.kind",))
    return build_target(system, kind, ops=ctx.ops, **kwargs)


def build_initial(cfg: dict, system: SpinSystem, ctx: SystemContext,
                  direction: str) -> DeviationState:
    sec = cfg.get("initial")
    thermal, transverse = thermal_and_initial_states(system, ctx.ops)
    if sec is None:
        if direction == "s_to_m":
            return build_target(system, "singlet_order", ops=ctx.ops).as_state()
        return thermal
    if isinstance(sec, str):
        sec = {"kind": sec}
    kind = _need(sec, "kind", "initial.")
    if kind == "thermal":
        return thermal
    if kind == "transverse":
        return transverse
    if kind == "singlet_order":
        pair = _pair(sec.get("pair", [1, 2]), "initial.pair")
        return build_target(system, "singlet_order", ops=ctx.ops,
                            pair=pair).as_state()
    if kind == "custom":
        path = _resolve(cfg, _need(sec, "path", "initial."))
        t = build_target(system, "custom", ops=ctx.ops, path=path)
        return t.as_state()
    raise SchemaError(f"unknown initial kind {kind!r}", keys=("initial.kind",))


def build_problem(cfg: dict, system: SpinSystem, ctx: SystemContext) -> QaoaProblem:
    sec = _need(cfg, "problem")
    direction = sec.get("direction", "m_to_s")
    if direction not in ("m_to_s", "s_to_m", "custom"):
        raise SchemaError(f"unknown direction {direction!r}",
                          keys=("problem.direction",))
    layers = int(_number(sec, "layers", "problem.", minimum=1))
    nu = _number(sec, "nu_hz", "problem.", minimum=0.0)
    delta = sec.get("delta_hz", 0.0)
    r = _number(sec, "r", "problem.", minimum=0.0, maximum=1.0) \
        if "r" in sec else 0.4
    scale = sec.get("time_unit_scale", 1.0)
    bounds_ms = sec.get("bounds_ms", [0.0, 100.0])
    if (not isinstance(bounds_ms, (list, tuple)) or len(bounds_ms) != 2
            or bounds_ms[0] < 0 or bounds_ms[1] <= bounds_ms[0]):
        raise SchemaError(
            f"problem.bounds_ms must be [min, max] with 0 <= min < max, "
            f"got {bounds_ms}", keys=("problem.bounds_ms",))
    target = build_target_from_config(cfg, system, ctx)
    initial = build_initial(cfg, system, ctx, direction)
    init_rotation = sec.get("init_rotation")
    return QaoaProblem(
        system=system,
        layers=layers,
        ctrl=ControlParams(nu_hz=float(nu), delta_hz=float(delta)),
        initial=initial,
        target=target,
        cost_cfg=CostConfig(r=float(r), time_unit_scale=float(scale)),
        bounds=(bounds_ms[0] * 1e-3, bounds_ms[1] * 1e-3),
        direction=direction,
        init_rotation=init_rotation,
    )


def build_settings(cfg: dict, seed_override=None) -> OptimizerSettings:
    sec = cfg.get("optimizer", {})
    seed = sec.get("seed", cfg.get("seed", 0))
    if seed_override is not None:
        seed = seed_override
    return OptimizerSettings(
        max_evals=int(sec.get("max_evals", 2000)),
        rhobeg_s=sec.get("rhobeg_ms", 5.0) * 1e-3,
        rhoend_s=sec.get("rhoend_ms", 1e-3) * 1e-3,
        n_starts=int(sec.get("n_starts", 8)),
        seed=int(seed),
        optimize_controls=bool(sec.get("optimize_controls", False)),
    )


def build_schedule_params(cfg: dict, layers: int):
    sec = _need(cfg, "schedule")
    gammas = _need(sec, "gammas_ms", "schedule.")
    betas = _need(sec, "betas_ms", "schedule.")
    if len(gammas) != layers or len(betas) != layers:
        raise SchemaError(
            f"schedule needs {layers} gammas and betas, got "
            f"{len(gammas)} and {len(betas)}",
            keys=("schedule.gammas_ms", "schedule.betas_ms"))
    for name, vals in (("gammas_ms", gammas), ("betas_ms", betas)):
        if any(v < 0 for v in vals):
            raise SchemaError(f"schedule.{name} entries must be >= 0",
                              keys=(f"schedule.{name}",))
    return ([g * 1e-3 for g in gammas], [b * 1e-3 for b in betas])


def build_sweep_grid(cfg: dict, mode: str, reference=None) -> SweepGrid:
    sec = _need(cfg, "grid")
    def axis(key):
        raw = _need(sec, key, "grid.")
        if not isinstance(raw, (list, tuple)) or len(raw) != 3:
            raise SchemaError(f"grid.{key} must be [min, max, n_points]",
                              keys=(f"grid.{key}",))
        if int(raw[2]) < 2:
            raise SchemaError(f"grid.{key} needs n_points >= 2",
                              keys=(f"grid.{key}",))
        return (float(raw[0]), float(raw[1]), int(raw[2]))
    return SweepGrid(nu_axis=axis("nu_hz"), delta_axis=axis("delta_hz"),
                     mode=mode, reference=reference)


def build_search(cfg: dict):
    from .baselines import SearchGrid
    sec = _need(cfg, "search")
    method = _need(sec, "method", "search.")
    raw = _need(sec, "grid", "search.")
    axes = {}
    for name, spec in raw.items():
        if not isinstance(spec, (list, tuple)) or len(spec) != 3:
            raise SchemaError(f"search.grid.{name} must be [min, max, step]",
                              keys=(f"search.grid.{name}",))
        axes[name] = (float(spec[0]), float(spec[1]), float(spec[2]))
    threshold = sec.get("threshold", 0.0)
    try:
        grid = SearchGrid(axes=axes, fidelity_threshold=float(threshold))
    except ValueError as exc:
        raise SchemaError(f"search.grid: {exc}", keys=("search.grid",))
    return method, grid, bool(sec.get("export_rows", False))
