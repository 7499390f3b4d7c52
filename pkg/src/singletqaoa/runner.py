"""Experiment dispatch: config in, result bundle plus manifest on disk.

Every task writes its outputs into the target directory and finishes with
a manifest (config hash, seed, versions, wall time). On failure the files
written so far are removed, leaving the directory as it was.
"""
from __future__ import annotations

import time
from pathlib import Path

import numpy as np

from .baselines import BaselineSpec, PulseMode, brute_force_search, build_baseline
from .config import (
    _need,
    _number,
    _pair,
    _resolve,
    build_problem,
    build_schedule_params,
    build_search,
    build_settings,
    build_sweep_grid,
    build_system,
    build_target_from_config,
    load_config,
)
from .decay import DecaySeries, fit_exponential_decay, synthetic_series
from .errors import NonConvergenceError, SchemaError
from .hamiltonians import make_context
from .objective import fidelity, unitary_bound
from .propagation import run_schedule
from .qaoa import evaluate_schedule, optimize
from .serialization import (
    load_optim_result,
    optim_result_record,
    write_csv,
    write_heatmap,
    write_json,
    write_manifest,
    write_trajectory_csv,
)
from .spinops import singlet_triplet_basis
from .sweeps import heatmap, robustness_map, total_protocol_map


def run_experiment(config, out_dir, seed=None, threads: int = 1,
                   strict: bool = False) -> dict:
    """Execute the task named in the config; returns the manifest payload."""
    if not isinstance(config, dict):
        config = load_config(config)
    task = _need(config, "task")
    if task not in _HANDLERS:
        raise SchemaError(f"unknown task {task!r}", keys=("task",))
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    prefix = config.get("output", {}).get("prefix", task.replace("-", "_"))
    eff_seed = seed if seed is not None else config.get("seed", 0)
    outputs = []
    t0 = time.time()
    try:
        _HANDLERS[task](config, out_dir, prefix, eff_seed, threads, strict, outputs)
    except Exception:
        for p in outputs:
            Path(p).unlink(missing_ok=True)
        raise
    manifest_path = out_dir / f"{prefix}_manifest.json"
    public = {k: v for k, v in config.items() if not k.startswith("_")}
    write_manifest(manifest_path, public, eff_seed, outputs, time.time() - t0)
    return {"task": task, "outputs": [str(p) for p in outputs],
            "manifest": str(manifest_path)}


def _task_evaluate(cfg, out_dir, prefix, seed, threads, strict, outputs):
    system = build_system(cfg)
    ctx = make_context(system)
    problem = build_problem(cfg, system, ctx)
    gammas, betas = build_schedule_params(cfg, problem.layers)
    outcome = evaluate_schedule(problem, gammas, betas)
    bound = unitary_bound(problem.initial.matrix, problem.target.matrix)
    payload = {
        "fidelity": outcome.fidelity,
        "relative_fidelity": outcome.fidelity / bound,
        "unitary_bound": bound,
        "total_time_ms": outcome.total_time * 1e3,
        "cost": outcome.cost,
        "gammas_ms": [g * 1e3 for g in gammas],
        "betas_ms": [b * 1e3 for b in betas],
        "nu_hz": problem.ctrl.nu_hz,
        "delta_hz": problem.ctrl.delta_hz,
    }
    outputs.append(write_json(out_dir / f"{prefix}_evaluation.json", payload))


def _task_optimize(cfg, out_dir, prefix, seed, threads, strict, outputs):
    system = build_system(cfg)
    ctx = make_context(system)
    problem = build_problem(cfg, system, ctx)
    settings = build_settings(cfg, seed_override=seed)
    result = optimize(problem, settings)
    if strict and not result.converged:
        raise NonConvergenceError(
            f"optimizer did not converge within {settings.max_evals} evaluations")
    outputs.append(write_json(out_dir / f"{prefix}_optimum.json",
                              optim_result_record(result)))


def _task_heatmap(cfg, out_dir, prefix, seed, threads, strict, outputs):
    system = build_system(cfg)
    ctx = make_context(system)
    problem = build_problem(cfg, system, ctx)
    settings = build_settings(cfg, seed_override=seed)
    grid = build_sweep_grid(cfg, mode="reoptimize")
    result = heatmap(problem, grid, settings, threads=threads)
    csv_p, json_p = write_heatmap(out_dir / f"{prefix}_heatmap.csv",
                                  out_dir / f"{prefix}_heatmap.json", result)
    outputs.extend([csv_p, json_p])


def _reference_from_config(cfg, problem):
    sec = _need(cfg, "reference")
    if isinstance(sec, str):
        return load_optim_result(_resolve(cfg, sec))
    gammas = [g * 1e-3 for g in _need(sec, "gammas_ms", "reference.")]
    betas = [b * 1e-3 for b in _need(sec, "betas_ms", "reference.")]
    if len(gammas) != problem.layers or len(betas) != problem.layers:
        raise SchemaError("reference durations do not match problem.layers",
                          keys=("reference.gammas_ms",))
    outcome = evaluate_schedule(problem, gammas, betas)
    from .qaoa import OptimResult, problem_hash
    return OptimResult(
        gammas=tuple(gammas), betas=tuple(betas), fidelity=outcome.fidelity,
        total_time=outcome.total_time, cost=outcome.cost, n_evals=0,
        converged=True, seed=0, nu_hz=problem.ctrl.nu_hz,
        delta_hz=problem.ctrl.delta_hz, problem_hash=problem_hash(problem))


def _task_robustness(cfg, out_dir, prefix, seed, threads, strict, outputs):
    system = build_system(cfg)
    ctx = make_context(system)
    problem = build_problem(cfg, system, ctx)
    reference = _reference_from_config(cfg, problem)
    grid = build_sweep_grid(cfg, mode="fixed_schedule", reference=reference)
    result = robustness_map(problem, reference, grid, threads=threads)
    csv_p, json_p = write_heatmap(out_dir / f"{prefix}_robustness.csv",
                                  out_dir / f"{prefix}_robustness.json", result)
    outputs.extend([csv_p, json_p])


def _task_total_protocol(cfg, out_dir, prefix, seed, threads, strict, outputs):
    system = build_system(cfg)
    ctx = make_context(system)
    prep_cfg = dict(cfg)
    prep_cfg["problem"] = _need(cfg, "problem")
    prep_problem = build_problem(prep_cfg, system, ctx)
    det_section = _need(cfg, "detection")
    det_cfg = {"_dir": cfg.get("_dir"), "problem": _need(det_section, "problem"),
               "target": det_section.get("target",
                                         {"kind": "antiphase_magnetization",
                                          "pair": [1, 2]}),
               "initial": det_section.get("initial",
                                          {"kind": "singlet_order", "pair": [1, 2]})}
    det_problem = build_problem(det_cfg, system, ctx)
    prep_ref = _reference_from_config(cfg, prep_problem)
    det_ref = _reference_from_config(
        {"reference": _need(det_section, "reference"), "_dir": cfg.get("_dir")},
        det_problem)
    grid = build_sweep_grid(cfg, mode="fixed_schedule", reference=prep_ref)
    result = total_protocol_map(prep_problem, det_problem, prep_ref, det_ref,
                                grid, threads=threads)
    csv_p, json_p = write_heatmap(out_dir / f"{prefix}_total_protocol.csv",
                                  out_dir / f"{prefix}_total_protocol.json", result)
    outputs.extend([csv_p, json_p])


def _task_trajectory(cfg, out_dir, prefix, seed, threads, strict, outputs):
    system = build_system(cfg)
    ctx = make_context(system)
    problem = build_problem(cfg, system, ctx)
    gammas, betas = build_schedule_params(cfg, problem.layers)
    sec = cfg.get("trajectory", {})
    pair = _pair(sec.get("pair", [1, 2]), "trajectory.pair")
    basis = singlet_triplet_basis(pair, system.n_spins)
    from .qaoa import build_qaoa_schedule
    schedule = build_qaoa_schedule(problem, gammas, betas, ops=ctx.ops)
    record_every = sec.get("record_every_ms", None)
    record_steps = None if record_every is not None else int(sec.get("steps_per_segment", 50))
    result = run_schedule(problem.initial, schedule,
                          record_every=None if record_every is None else record_every * 1e-3,
                          record_steps=record_steps,
                          basis=basis, target=problem.target.as_state())
    outputs.append(write_trajectory_csv(out_dir / f"{prefix}_trajectory.csv",
                                        result.trajectory))


def _baseline_targets(cfg, system, ctx, stage):
    if "target" in cfg:
        return build_target_from_config(cfg, system, ctx)
    kind = "singlet_order" if stage == "prep" else "antiphase_magnetization"
    from .hamiltonians import build_target
    return build_target(system, kind, ops=ctx.ops)


def _task_baseline(cfg, out_dir, prefix, seed, threads, strict, outputs):
    system = build_system(cfg)
    ctx = make_context(system)
    sec = _need(cfg, "baseline")
    spec = BaselineSpec(_need(sec, "method", "baseline."),
                        dict(_need(sec, "params", "baseline.")))
    stage = sec.get("stage", "prep")
    mode = PulseMode(ideal=bool(sec.get("ideal_pulses", True)),
                     amplitude_hz=float(sec.get("hard_pulse_hz", 25000.0)))
    schedule = build_baseline(ctx, spec, stage, mode)
    from .hamiltonians import thermal_and_initial_states
    thermal, _ = thermal_and_initial_states(system, ctx.ops)
    if stage == "prep":
        initial = thermal
        target = _baseline_targets(cfg, system, ctx, "prep")
    else:
        from .hamiltonians import build_target
        initial = build_target(system, "singlet_order", ops=ctx.ops).as_state()
        target = _baseline_targets(cfg, system, ctx, "detect")
    out = run_schedule(initial, schedule)
    fid = fidelity(out.final_state, target.matrix)
    bound = unitary_bound(initial.matrix, target.matrix)
    payload = {
        "method": spec.method,
        "stage": stage,
        "params": spec.params,
        "duration_ms": schedule.total_duration * 1e3,
        "fidelity": fid,
        "relative_fidelity": fid / bound,
        "unitary_bound": bound,
        "n_items": len(schedule.items),
    }
    outputs.append(write_json(out_dir / f"{prefix}_baseline.json", payload))


def _task_search(cfg, out_dir, prefix, seed, threads, strict, outputs):
    system = build_system(cfg)
    ctx = make_context(system)
    method, grid, export_rows = build_search(cfg)
    from .hamiltonians import thermal_and_initial_states
    thermal, _ = thermal_and_initial_states(system, ctx.ops)
    target = _baseline_targets(cfg, system, ctx, "prep")
    result = brute_force_search(ctx, method, grid, thermal, target,
                                threads=threads, collect_rows=export_rows)
    payload = {
        "method": method,
        "best_params": result.spec.params,
        "fidelity": result.fidelity,
        "relative_fidelity": result.relative_fidelity,
        "duration_ms": result.duration * 1e3,
        "met_threshold": result.met_threshold,
        "n_points": result.n_points,
        "threshold": grid.fidelity_threshold,
    }
    outputs.append(write_json(out_dir / f"{prefix}_search.json", payload))
    if export_rows and result.rows is not None:
        header = tuple(grid.axes.keys()) + ("fidelity", "duration_s")
        outputs.append(write_csv(out_dir / f"{prefix}_search_points.csv",
                                 header, result.rows))


def _task_fit_decay(cfg, out_dir, prefix, seed, threads, strict, outputs):
    sec = _need(cfg, "decay")
    if "input_csv" in sec:
        path = _resolve(cfg, sec["input_csv"])
        data = np.genfromtxt(path, delimiter=",", names=True)
        if data.dtype.names is None or "time_s" not in data.dtype.names \
                or "amplitude" not in data.dtype.names:
            raise SchemaError("decay CSV needs columns time_s, amplitude",
                              keys=("decay.input_csv",))
        series = DecaySeries(tuple(np.atleast_1d(data["time_s"])),
                             tuple(np.atleast_1d(data["amplitude"])))
    elif "synthetic" in sec:
        syn = sec["synthetic"]
        t_max = _number(syn, "t_max_s", "decay.synthetic.")
        n = int(_number(syn, "n_points", "decay.synthetic.", minimum=3))
        series = synthetic_series(
            t_lls=_number(syn, "t_lls_s", "decay.synthetic.", minimum=1e-9),
            amplitude0=syn.get("amplitude0", 1.0),
            times=np.linspace(0.0, t_max, n),
            noise_fraction=syn.get("noise_fraction", 0.0),
            seed=int(syn.get("seed", seed)))
        outputs.append(write_csv(out_dir / f"{prefix}_decay_series.csv",
                                 ("time_s", "amplitude"),
                                 list(zip(series.times, series.amplitudes))))
    else:
        raise SchemaError("decay task needs input_csv or synthetic",
                          keys=("decay",))
    fit = fit_exponential_decay(series)
    payload = {
        "t_lls_s": fit.t_lls,
        "t_lls_stderr_s": fit.t_lls_stderr,
        "amplitude0": fit.amplitude0,
        "residual_rms": fit.residual_rms,
        "n_points": len(series.times),
    }
    outputs.append(write_json(out_dir / f"{prefix}_decay_fit.json", payload))


def _task_report(cfg, out_dir, prefix, seed, threads, strict, outputs):
    """Summarize every result JSON present in the scan directory."""
    scan_dir = Path(cfg.get("report", {}).get("scan_dir", out_dir))
    rows = []
    import json as _json
    for path in sorted(scan_dir.glob("*.json")):
        if path.name.endswith("_manifest.json"):
            continue
        try:
            with open(path) as fh:
                rec = _json.load(fh)
        except (OSError, ValueError):
            continue
        if not isinstance(rec, dict):
            continue
        kind = path.stem
        fid = rec.get("fidelity")
        rows.append((kind,
                     "" if fid is None else fid,
                     rec.get("relative_fidelity", ""),
                     rec.get("duration_ms", rec.get("total_time_ms", "")),
                     rec.get("t_lls_s", "")))
    if not rows:
        rows.append(("(no results found)", "", "", "", ""))
    outputs.append(write_csv(out_dir / f"{prefix}_report.csv",
                             ("result", "fidelity", "relative_fidelity",
                              "duration_ms", "t_lls_s"), rows))


_HANDLERS = {
    "evaluate": _task_evaluate,
    "optimize": _task_optimize,
    "heatmap": _task_heatmap,
    "robustness": _task_robustness,
    "trajectory": _task_trajectory,
    "baseline": _task_baseline,
    "search": _task_search,
    "fit-decay": _task_fit_decay,
    "report": _task_report,
    "total-protocol": _task_total_protocol,
}
