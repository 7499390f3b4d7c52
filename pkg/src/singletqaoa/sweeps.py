"""Fidelity heatmaps over the RF control plane and robustness maps around
fixed optimized schedules.

Two grid modes:

- ``reoptimize``: at every (nu, Delta) cell the layer durations are
  re-optimized from scratch (the per-cell seed is derived from the base
  seed and the cell index, so results do not depend on worker count or
  evaluation order);
- ``fixed_schedule``: the reference durations are held fixed and the cell
  axes are deviations (eps_nu, eps_Delta) applied to the reference
  controls.

The composed preparation-storage-detection map scores the amplitude of the
detected observable against the preparation input norm, so its value at
zero deviation factorizes into F_prep * F_detect (storage is an ideal
singlet-order filter: the state is projected onto its target component,
standing in for triplet equilibration under the lock).
"""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .hamiltonians import drive_matrix
from .objective import unitary_bound
from .propagation import run_schedule
from .qaoa import (
    OptimResult,
    OptimizerSettings,
    QaoaProblem,
    _ProblemOperators,
    build_qaoa_schedule,
    evaluate_with_controls,
    optimize,
)
from .spinops import DeviationState, OperatorMatrix


@dataclass(frozen=True)
class SweepGrid:
    """Axes over (nu, Delta) in Hz, or over their deviations in fixed mode."""

    nu_axis: tuple[float, float, int]
    delta_axis: tuple[float, float, int]
    mode: str = "reoptimize"
    reference: OptimResult | None = None

    def __post_init__(self):
        if self.mode not in ("reoptimize", "fixed_schedule"):
            raise ValueError(f"unknown sweep mode {self.mode!r}")
        for name, ax in (("nu_axis", self.nu_axis), ("delta_axis", self.delta_axis)):
            if int(ax[2]) < 2:
                raise ValueError(f"{name} needs at least 2 points")
        if self.mode == "fixed_schedule" and self.reference is None:
            raise ValueError("fixed_schedule mode requires a reference result")

    def nu_values(self) -> np.ndarray:
        lo, hi, n = self.nu_axis
        return np.linspace(lo, hi, int(n))

    def delta_values(self) -> np.ndarray:
        lo, hi, n = self.delta_axis
        return np.linspace(lo, hi, int(n))


@dataclass
class HeatmapResult:
    grid: SweepGrid
    fidelity: np.ndarray          # shape (n_nu, n_delta)
    converged: np.ndarray         # bool, same shape
    best_point: tuple[float, float, float] | None
    wall_time: float
    meta: dict = field(default_factory=dict)


def _cell_seed(base_seed: int, index: int) -> int:
    return int(np.random.SeedSequence([base_seed, index]).generate_state(1)[0])


def _finish(grid, fid, conv, t0, meta) -> HeatmapResult:
    nu = grid.nu_values()
    de = grid.delta_values()
    best = None
    if np.any(np.isfinite(fid)):
        k = int(np.nanargmax(fid))
        i, j = divmod(k, fid.shape[1])
        best = (float(nu[i]), float(de[j]), float(fid[i, j]))
    return HeatmapResult(grid=grid, fidelity=fid, converged=conv,
                         best_point=best, wall_time=time.time() - t0, meta=meta)


def _run_cells(n_cells, worker, threads):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(worker, range(n_cells)))
    else:
        for k in range(n_cells):
            worker(k)


def heatmap(problem: QaoaProblem, grid: SweepGrid,
            settings: OptimizerSettings = OptimizerSettings(n_starts=3, max_evals=800),
            threads: int = 1) -> HeatmapResult:
    """Re-optimized transfer fidelity at every control grid point."""
    if grid.mode != "reoptimize":
        raise ValueError("heatmap requires a reoptimize-mode grid")
    t0 = time.time()
    nu = grid.nu_values()
    de = grid.delta_values()
    fid = np.full((len(nu), len(de)), np.nan)
    conv = np.zeros((len(nu), len(de)), dtype=bool)

    def worker(k):
        i, j = divmod(k, len(de))
        cell = replace(problem, ctrl=replace(problem.ctrl, nu_hz=float(nu[i]),
                                             delta_hz=float(de[j])))
        cell_settings = replace(settings, seed=_cell_seed(settings.seed, k))
        try:
            res = optimize(cell, cell_settings)
        except Exception:
            return  # converged stays False, fidelity NaN
        fid[i, j] = res.fidelity
        conv[i, j] = res.converged

    _run_cells(len(nu) * len(de), worker, threads)
    meta = {"mode": grid.mode,
            "bound": unitary_bound(problem.initial.matrix, problem.target.matrix),
            "layers": problem.layers, "seed": settings.seed}
    return _finish(grid, fid, conv, t0, meta)


def robustness_map(problem: QaoaProblem, reference: OptimResult,
                   grid: SweepGrid, threads: int = 1) -> HeatmapResult:
    """Fixed reference durations re-simulated at deviated controls."""
    t0 = time.time()
    eps_nu = grid.nu_values()
    eps_de = grid.delta_values()
    fid = np.full((len(eps_nu), len(eps_de)), np.nan)
    conv = np.ones((len(eps_nu), len(eps_de)), dtype=bool)

    def worker(k):
        i, j = divmod(k, len(eps_de))
        out = evaluate_with_controls(
            problem, reference.gammas, reference.betas,
            reference.nu_hz + float(eps_nu[i]),
            reference.delta_hz + float(eps_de[j]))
        fid[i, j] = out.fidelity

    _run_cells(len(eps_nu) * len(eps_de), worker, threads)
    meta = {"mode": "fixed_schedule",
            "bound": unitary_bound(problem.initial.matrix, problem.target.matrix),
            "reference_fidelity": reference.fidelity,
            "reference_hash": reference.problem_hash}
    return _finish(grid, fid, conv, t0, meta)


def singlet_filter(state: DeviationState, target) -> DeviationState:
    """Project a state onto its target-operator component.

    Models ideal storage: the triplet populations equilibrate and every
    term orthogonal to the stored order decays, leaving c * rho_T with
    c = Tr(rho rho_T) / Tr(rho_T^2).
    """
    tm = target.matrix.entries if hasattr(target, "matrix") else np.asarray(target)
    coef = np.trace(state.entries @ tm).real / np.trace(tm @ tm).real
    return DeviationState(OperatorMatrix(coef * tm, hermitian=True),
                          label="stored order")


def _protocol_metric(prep_problem, det_problem, prep_ref, det_ref,
                     nu_eps, de_eps) -> float:
    """Detected-signal amplitude of prep -> filter -> detect, normalized to
    the preparation input norm (so perfect transfer scores 1)."""
    pops = _ProblemOperators(prep_problem)
    h_drive = drive_matrix(pops.h_free, pops.ops,
                           prep_ref.nu_hz + nu_eps, prep_ref.delta_hz + de_eps)
    schedule = build_qaoa_schedule(prep_problem, prep_ref.gammas, prep_ref.betas,
                                   ops=pops.ops, h_free=pops.h_free,
                                   h_drive=h_drive)
    mid = run_schedule(prep_problem.initial, schedule, cache=pops.cache).final_state
    stored = singlet_filter(mid, prep_problem.target)

    dops = _ProblemOperators(det_problem)
    h_drive_d = drive_matrix(dops.h_free, dops.ops,
                             det_ref.nu_hz + nu_eps, det_ref.delta_hz + de_eps)
    det_sched = build_qaoa_schedule(det_problem, det_ref.gammas, det_ref.betas,
                                    ops=dops.ops, h_free=dops.h_free,
                                    h_drive=h_drive_d)
    final = run_schedule(stored, det_sched, cache=dops.cache).final_state
    sigma = det_problem.target.matrix.entries
    norm = np.sqrt(
        np.trace(prep_problem.initial.entries @ prep_problem.initial.entries).real
        * np.trace(sigma @ sigma).real)
    return float(np.trace(final.entries @ sigma).real / norm)


def total_protocol_map(prep_problem: QaoaProblem, det_problem: QaoaProblem,
                       prep_reference: OptimResult, det_reference: OptimResult,
                       grid: SweepGrid, threads: int = 1) -> HeatmapResult:
    """Composed prep -> storage filter -> detect map.

    The same deviation (eps_nu, eps_Delta) is applied to both phases.
    """
    t0 = time.time()
    eps_nu = grid.nu_values()
    eps_de = grid.delta_values()
    fid = np.full((len(eps_nu), len(eps_de)), np.nan)
    conv = np.ones((len(eps_nu), len(eps_de)), dtype=bool)

    def worker(k):
        i, j = divmod(k, len(eps_de))
        fid[i, j] = _protocol_metric(prep_problem, det_problem,
                                     prep_reference, det_reference,
                                     float(eps_nu[i]), float(eps_de[j]))

    _run_cells(len(eps_nu) * len(eps_de), worker, threads)
    meta = {"mode": "total_protocol",
            "prep_hash": prep_reference.problem_hash,
            "detect_hash": det_reference.problem_hash}
    return _finish(grid, fid, conv, t0, meta)
