"""The four benchmark singlet-order sequences and their brute-force
parameter searches.

Structures follow the original references with the phase conventions fixed
here; the regression anchors are the published optimal delays and total
durations, which the bundled search grids recover.

    CL prep      (pi/2)_x  tau1  (pi)_x  tau2  (pi/2)_y  tau3
    CL detect    tau5  (pi/2)_-x
    M2S          (pi/2)_y  [tau_d (pi)_x tau_d] x n1  (pi/2)_x  tau_d
                 [tau_d (pi)_x tau_d] x n2
    S2M          chronological mirror of M2S (same pulse phases), final
                 readout pulse omitted (output is transverse
                 magnetization); realizes exact transfer reciprocity with
                 M2S, not the operator inverse, which no non-negative-time
                 sequence can achieve because global pulses cannot reverse
                 the isotropic coupling term.
    SLIC prep    (pi/2)_y then lock under H0 - 2*pi*nu*Ix for tau_p
    SLIC detect  lock only
    APSOC prep   RF amplitude ramped 0 -> nu_max at fixed offset (adiabatic
                 level-crossing passage from thermal populations)
    APSOC detect amplitude ramped nu_max -> 0, then a (pi/2)_y readout

Hard pulses are ideal instantaneous rotations by default; the finite mode
models them as segments of H0 plus an RF term at a calibrated amplitude
(default 25 kHz, a 10 us pi/2).
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .errors import SchemaError
from .hamiltonians import SystemContext
from .objective import fidelity, unitary_bound
from .propagation import (
    DEFAULT_CACHE,
    HardRotation,
    PropagatorCache,
    PulseSchedule,
    PulseSegment,
    hard_rotation,
    run_schedule,
)
from .spinops import DeviationState, OperatorMatrix

METHODS = ("cl", "m2s", "s2m", "slic", "apsoc")

_PHASES = {"x": 0.0, "y": np.pi / 2.0, "-x": np.pi, "-y": -np.pi / 2.0}


@dataclass(frozen=True)
class PulseMode:
    """Ideal rotations, or finite-duration pulses at a hard RF amplitude."""

    ideal: bool = True
    amplitude_hz: float = 25000.0


@dataclass(frozen=True)
class BaselineSpec:
    method: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHODS:
            raise SchemaError(f"unknown baseline method {self.method!r}",
                              keys=("method",))


@dataclass(frozen=True)
class SearchGrid:
    """Per-parameter (min, max, step) axes plus the acceptance threshold.

    The threshold is relative to the unitary transfer bound of the
    (initial, target) pair: a point qualifies when
    fidelity >= threshold * bound.
    """

    axes: dict
    fidelity_threshold: float = 0.0

    def __post_init__(self):
        for name, (lo, hi, step) in self.axes.items():
            if step <= 0:
                raise ValueError(f"axis {name}: step must be > 0")
            if lo > hi:
                raise ValueError(f"axis {name}: min must be <= max")

    def axis_values(self, name: str) -> np.ndarray:
        lo, hi, step = self.axes[name]
        n = int(np.floor((hi - lo) / step + 1e-9)) + 1
        return lo + step * np.arange(n)


@dataclass
class SearchResult:
    spec: BaselineSpec
    fidelity: float
    relative_fidelity: float
    duration: float
    met_threshold: bool
    n_points: int
    rows: list | None = None  # (params..., fidelity, duration) when collected


def _rotation(ctx: SystemContext, phase_name: str, angle: float,
              mode: PulseMode, label: str = ""):
    """One hard pulse: a HardRotation, or its finite-amplitude segment."""
    phase = _PHASES[phase_name]
    if mode.ideal:
        return (hard_rotation(ctx.ops, "x", angle, phase=phase, label=label),)
    gen = hard_rotation(ctx.ops, "x", angle, phase=phase).generator
    duration = angle / (2.0 * np.pi * mode.amplitude_hz)
    h = OperatorMatrix(ctx.h0.entries + 2.0 * np.pi * mode.amplitude_hz * gen.entries)
    return (PulseSegment(h, duration, label=label or "pulse"),)


def _free(ctx: SystemContext, duration: float, label: str = "free"):
    return PulseSegment(ctx.h0, float(duration), label=label)


def build_cl(ctx: SystemContext, tau1: float, tau2: float, tau3: float,
             mode: PulseMode = PulseMode()) -> PulseSchedule:
    """Carravetta-Levitt preparation from thermal magnetization."""
    for t in (tau1, tau2, tau3):
        if t < 0:
            raise ValueError("delays must be >= 0")
    items = []
    items += _rotation(ctx, "x", np.pi / 2.0, mode, "90")
    items.append(_free(ctx, tau1, "tau1"))
    items += _rotation(ctx, "x", np.pi, mode, "180")
    items.append(_free(ctx, tau2, "tau2"))
    items += _rotation(ctx, "y", np.pi / 2.0, mode, "90(y)")
    items.append(_free(ctx, tau3, "tau3"))
    return PulseSchedule(tuple(items), label="cl prep")


def build_cl_detection(ctx: SystemContext, tau5: float,
                       mode: PulseMode = PulseMode()) -> PulseSchedule:
    """Free evolution tau5 then a readout pulse; yields antiphase magnetization."""
    if tau5 < 0:
        raise ValueError("tau5 must be >= 0")
    items = [_free(ctx, tau5, "tau5")]
    items += _rotation(ctx, "-x", np.pi / 2.0, mode, "read 90")
    return PulseSchedule(tuple(items), label="cl detect")


def _m2s_core(ctx: SystemContext, tau_d: float, n1: int, n2: int,
              mode: PulseMode):
    """M2S items after the initial pulse (echo trains around the mid pulse)."""
    items = []
    for _ in range(n1):
        items.append(_free(ctx, tau_d))
        items += _rotation(ctx, "x", np.pi, mode, "180")
        items.append(_free(ctx, tau_d))
    items += _rotation(ctx, "x", np.pi / 2.0, mode, "90(x)")
    items.append(_free(ctx, tau_d))
    for _ in range(n2):
        items.append(_free(ctx, tau_d))
        items += _rotation(ctx, "x", np.pi, mode, "180")
        items.append(_free(ctx, tau_d))
    return items


def build_m2s(ctx: SystemContext, tau_d: float, n1: int, n2: int,
              mode: PulseMode = PulseMode()) -> PulseSchedule:
    """Echo-train conversion of magnetization into singlet order."""
    if tau_d <= 0:
        raise ValueError("tau_d must be > 0")
    if n1 < 0 or n2 < 0:
        raise ValueError("repetition counts must be >= 0")
    items = list(_rotation(ctx, "y", np.pi / 2.0, mode, "90(y)"))
    items += _m2s_core(ctx, tau_d, n1, n2, mode)
    return PulseSchedule(tuple(items), label="m2s")


def build_s2m(ctx: SystemContext, tau_d: float, n1: int, n2: int,
              mode: PulseMode = PulseMode()) -> PulseSchedule:
    """Chronological mirror of M2S (same pulse phases, reversed order);
    ends at transverse magnetization, so the readout pulse that a full
    mirror would append is omitted."""
    if tau_d <= 0:
        raise ValueError("tau_d must be > 0")
    forward = _m2s_core(ctx, tau_d, n1, n2, mode)
    return PulseSchedule(tuple(reversed(forward)), label="s2m")


def build_slic(ctx: SystemContext, nu_hz: float, tau_p: float,
               mode: PulseMode = PulseMode()) -> PulseSchedule:
    """Spin-lock induced crossing: align magnetization, then low-power lock."""
    if nu_hz <= 0 or tau_p < 0:
        raise ValueError("SLIC requires nu > 0 and tau_p >= 0")
    items = list(_rotation(ctx, "y", np.pi / 2.0, mode, "90(y)"))
    lock = OperatorMatrix(ctx.h0.entries
                          - 2.0 * np.pi * nu_hz * ctx.ops.total_x.entries)
    items.append(PulseSegment(lock, float(tau_p), label="lock"))
    return PulseSchedule(tuple(items), label="slic prep")


def build_slic_detection(ctx: SystemContext, nu_hz: float, tau_p: float,
                         mode: PulseMode = PulseMode()) -> PulseSchedule:
    if nu_hz <= 0 or tau_p < 0:
        raise ValueError("SLIC requires nu > 0 and tau_p >= 0")
    lock = OperatorMatrix(ctx.h0.entries
                          - 2.0 * np.pi * nu_hz * ctx.ops.total_x.entries)
    return PulseSchedule((PulseSegment(lock, float(tau_p), label="lock"),),
                         label="slic detect")


def _apsoc_fractions(n_steps: int, ramp: str, ascending: bool) -> np.ndarray:
    s = (np.arange(n_steps) + 0.5) / n_steps  # segment midpoints
    frac = s if ascending else 1.0 - s
    if ramp == "cosine":
        frac = 0.5 * (1.0 - np.cos(np.pi * frac))
    elif ramp != "linear":
        raise SchemaError(f"unknown ramp shape {ramp!r}", keys=("ramp",))
    return frac


def build_apsoc(ctx: SystemContext, delta_hz: float, tau: float,
                nu_max_hz: float, ramp: str = "linear", n_steps: int = 200,
                mode: PulseMode = PulseMode()) -> PulseSchedule:
    """Adiabatic passage: amplitude ramped up from zero at a fixed offset.

    The offset must be non-zero; it makes the relevant level crossings
    avoided. Preparation ramps up starting from thermal populations (no
    alignment pulse needed); detection is the descending ramp.
    """
    if delta_hz == 0:
        raise ValueError("APSOC offset must be non-zero")
    if n_steps < 10:
        raise ValueError("APSOC needs n_steps >= 10")
    if tau <= 0 or nu_max_hz <= 0:
        raise ValueError("APSOC requires tau > 0 and nu_max > 0")
    dt = tau / n_steps
    items = []
    for k, frac in enumerate(_apsoc_fractions(n_steps, ramp, ascending=True)):
        h = OperatorMatrix(ctx.h0.entries
                           - 2.0 * np.pi * nu_max_hz * frac * ctx.ops.total_x.entries
                           - 2.0 * np.pi * delta_hz * ctx.ops.total_z.entries)
        items.append(PulseSegment(h, dt, label=f"ramp[{k}]"))
    return PulseSchedule(tuple(items), label="apsoc prep")


def build_apsoc_detection(ctx: SystemContext, delta_hz: float, tau: float,
                          nu_max_hz: float, ramp: str = "linear",
                          n_steps: int = 200,
                          mode: PulseMode = PulseMode()) -> PulseSchedule:
    if delta_hz == 0:
        raise ValueError("APSOC offset must be non-zero")
    if n_steps < 10:
        raise ValueError("APSOC needs n_steps >= 10")
    dt = tau / n_steps
    items = []
    for k, frac in enumerate(_apsoc_fractions(n_steps, ramp, ascending=False)):
        h = OperatorMatrix(ctx.h0.entries
                           - 2.0 * np.pi * nu_max_hz * frac * ctx.ops.total_x.entries
                           - 2.0 * np.pi * delta_hz * ctx.ops.total_z.entries)
        items.append(PulseSegment(h, dt, label=f"ramp[{k}]"))
    items += _rotation(ctx, "y", np.pi / 2.0, mode, "read 90")
    return PulseSchedule(tuple(items), label="apsoc detect")


def build_baseline(ctx: SystemContext, spec: BaselineSpec, stage: str = "prep",
                   mode: PulseMode = PulseMode()) -> PulseSchedule:
    """Dispatch a BaselineSpec to the matching builder."""
    p = spec.params
    if stage not in ("prep", "detect"):
        raise ValueError(f"stage must be prep or detect, got {stage!r}")
    try:
        if spec.method == "cl":
            if stage == "prep":
                return build_cl(ctx, p["tau1_s"], p["tau2_s"], p["tau3_s"], mode)
            return build_cl_detection(ctx, p["tau5_s"], mode)
        if spec.method in ("m2s", "s2m"):
            builder = build_m2s if (spec.method == "m2s") == (stage == "prep") else build_s2m
            return builder(ctx, p["tau_d_s"], int(p["n1"]), int(p["n2"]), mode)
        if spec.method == "slic":
            builder = build_slic if stage == "prep" else build_slic_detection
            return builder(ctx, p["nu_hz"], p["tau_p_s"], mode)
        if spec.method == "apsoc":
            builder = build_apsoc if stage == "prep" else build_apsoc_detection
            return builder(ctx, p["delta_hz"], p["tau_s"], p["nu_max_hz"],
                           p.get("ramp", "linear"), int(p.get("n_steps", 200)), mode)
    except KeyError as exc:
        raise SchemaError(f"{spec.method} is missing parameter {exc.args[0]!r}",
                          keys=(f"params.{exc.args[0]}",)) from None
    raise SchemaError(f"unknown baseline method {spec.method!r}", keys=("method",))


def _evaluate_point(ctx, method, names, values, initial, target, mode, cache):
    params = dict(zip(names, values))
    if method in ("m2s", "s2m"):
        params = {k: (int(v) if k in ("n1", "n2") else v) for k, v in params.items()}
    schedule = build_baseline(ctx, BaselineSpec(method, params), "prep", mode)
    out = run_schedule(initial, schedule, cache=cache)
    return fidelity(out.final_state, target), schedule.total_duration


def _cl_fast_scan(ctx, grid, initial, target):
    """Vectorized CL scan: propagator banks per delay axis, contracted."""
    cache = PropagatorCache()
    t1 = grid.axis_values("tau1_s")
    t2 = grid.axis_values("tau2_s")
    t3 = grid.axis_values("tau3_s")
    evals, evecs = cache.decomposition(ctx.h0)

    def bank(ts):
        phases = np.exp(-1j * evals[None, :] * ts[:, None])
        return np.einsum("ab,ib,cb->iac", evecs, phases, evecs.conj())

    r1 = cache.unitary(hard_rotation(ctx.ops, "x", np.pi / 2.0).generator, np.pi / 2.0)
    r2 = cache.unitary(hard_rotation(ctx.ops, "x", np.pi).generator, np.pi)
    r3 = cache.unitary(hard_rotation(ctx.ops, "y", np.pi / 2.0).generator, np.pi / 2.0)
    rho0 = r1 @ initial.entries @ r1.conj().T
    u1 = bank(t1)
    a = np.einsum("iab,bc,idc->iad", u1, rho0, u1.conj())
    a = np.einsum("ab,ibc,dc->iad", r2, a, r2.conj())
    u3 = bank(t3)
    b = np.einsum("iba,bc,icd->iad", u3.conj(), target.entries, u3)
    b = np.einsum("ab,ibc,cd->iad", r3.conj().T, b, r3)
    norm = np.sqrt(np.trace(initial.entries @ initial.entries).real
                   * np.trace(target.entries @ target.entries).real)
    u2 = bank(t2)
    fid_cube = np.empty((len(t1), len(t2), len(t3)))
    for j in range(len(t2)):
        c = np.einsum("ab,ibc,dc->iad", u2[j], a, u2[j].conj())
        fid_cube[:, j, :] = np.einsum("iab,kba->ik", c, b).real / norm
    return (t1, t2, t3), fid_cube


def brute_force_search(ctx: SystemContext, method: str, grid: SearchGrid,
                       initial: DeviationState, target,
                       mode: PulseMode = PulseMode(), threads: int = 1,
                       collect_rows: bool = False) -> SearchResult:
    """Exhaustive scan of the grid.

    Among points whose fidelity reaches ``threshold * unitary_bound`` the
    winner has minimum total duration, then maximum fidelity, then the
    lexicographically smallest parameters (axis order as given). If no
    point qualifies the best-fidelity point is returned with
    met_threshold=False. The result does not depend on ``threads``.
    """
    target_m = target.matrix if hasattr(target, "matrix") else target
    bound = unitary_bound(initial.matrix, target_m)
    names = list(grid.axes.keys())
    axes = [grid.axis_values(n) for n in names]
    n_points = int(np.prod([len(a) for a in axes]))
    thr = grid.fidelity_threshold * bound

    if method == "cl" and names == ["tau1_s", "tau2_s", "tau3_s"] and mode.ideal \
            and not collect_rows:
        (t1, t2, t3), cube = _cl_fast_scan(ctx, grid, initial, target_m)
        dur = t1[:, None, None] + t2[None, :, None] + t3[None, None, :]
        return _select(cube.ravel(), dur.ravel(),
                       _index_params(axes), names, method, thr, bound, n_points)

    cache = PropagatorCache()
    combos = list(product(*axes))
    fids = np.empty(n_points)
    durs = np.empty(n_points)

    def work(span):
        lo, hi = span
        for k in range(lo, hi):
            fids[k], durs[k] = _evaluate_point(
                ctx, method, names, combos[k], initial, target_m, mode, cache)

    if threads > 1:
        chunk = max(1, n_points // (threads * 8))
        spans = [(i, min(i + chunk, n_points)) for i in range(0, n_points, chunk)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, spans))
    else:
        work((0, n_points))
    rows = [combos[k] + (fids[k], durs[k]) for k in range(n_points)] \
        if collect_rows else None
    result = _select(fids, durs, combos, names, method, thr, bound, n_points)
    result.rows = rows
    return result


def _index_params(axes):
    """Iterator-free cartesian product as an indexable virtual list."""
    class _Combos:
        def __init__(self, axes):
            self.axes = axes
            self.sizes = [len(a) for a in axes]

        def __getitem__(self, k):
            out = []
            for a, size in zip(reversed(self.axes), reversed(self.sizes)):
                out.append(a[k % size])
                k //= size
            return tuple(reversed(out))

    return _Combos(axes)


def _select(fids, durs, combos, names, method, thr, bound, n_points):
    fids = np.asarray(fids)
    durs = np.asarray(durs)
    qualifying = np.flatnonzero(fids >= thr)
    met = qualifying.size > 0
    if met:
        cand = qualifying
        # min duration, then max fidelity, then lexicographic params
        dmin = durs[cand].min()
        cand = cand[np.abs(durs[cand] - dmin) <= 1e-12]
        fmax = fids[cand].max()
        cand = cand[np.abs(fids[cand] - fmax) <= 1e-15]
    else:
        fmax = fids.max()
        cand = np.flatnonzero(fids >= fmax - 1e-15)
        dmin = durs[cand].min()
        cand = cand[np.abs(durs[cand] - dmin) <= 1e-12]
    best = min((int(k) for k in cand), key=lambda k: tuple(combos[k]))
    params = dict(zip(names, (float(v) for v in combos[best])))
    if method in ("m2s", "s2m"):
        params = {k: (int(v) if k in ("n1", "n2") else v) for k, v in params.items()}
    return SearchResult(
        spec=BaselineSpec(method, params),
        fidelity=float(fids[best]),
        relative_fidelity=float(fids[best] / bound),
        duration=float(durs[best]),
        met_threshold=bool(met),
        n_points=n_points,
    )
