"""Unitary propagation of deviation states under piecewise-constant
Hamiltonians, schedule execution with trajectory recording, and projection
onto singlet-triplet Bloch spheres.

Propagators are computed from the Hermitian eigendecomposition,
U = V diag(exp(-i*lambda*t)) V^dag, which is exact for piecewise-constant
Hamiltonians. Decompositions are cached per OperatorMatrix token so sweeps
that reuse a Hamiltonian at many durations pay for eigh once.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidPairError, NumericalError
from .spinops import (
    DeviationState,
    OperatorMatrix,
    SingletTripletBasis,
    SpinOperators,
    partial_trace_to_pair,
)

_AXIS_PHASE = {"x": 0.0, "y": np.pi / 2.0}


@dataclass(frozen=True)
class PulseSegment:
    """Constant Hamiltonian (rad/s) applied for a non-negative duration (s)."""

    hamiltonian: OperatorMatrix
    duration: float
    label: str = ""

    def __post_init__(self):
        if not np.isfinite(self.duration) or self.duration < 0:
            raise ValueError(f"segment duration must be finite and >= 0, "
                             f"got {self.duration}")


@dataclass(frozen=True)
class HardRotation:
    """Instantaneous ideal global rotation exp(-i * angle * G).

    G is I^axis rotated in the transverse plane by ``phase`` (radians);
    phase is ignored for axis 'z'.
    """

    generator: OperatorMatrix
    angle: float
    axis: str = "x"
    phase: float = 0.0
    label: str = ""


def hard_rotation(ops: SpinOperators, axis: str, angle: float,
                  phase: float = 0.0, label: str = "") -> HardRotation:
    if axis == "z":
        gen = ops.total_z
    elif axis in _AXIS_PHASE:
        total = _AXIS_PHASE[axis] + phase
        gen = OperatorMatrix(np.cos(total) * ops.total_x.entries
                             + np.sin(total) * ops.total_y.entries)
    else:
        raise ValueError(f"axis must be one of x, y, z, got {axis!r}")
    return HardRotation(generator=gen, angle=float(angle), axis=axis,
                        phase=phase, label=label)


@dataclass(frozen=True)
class PulseSchedule:
    """Ordered pulse-sequence items: segments and interleaved hard rotations."""

    items: tuple
    label: str = ""

    def __post_init__(self):
        for it in self.items:
            if not isinstance(it, (PulseSegment, HardRotation)):
                raise TypeError(f"schedule items must be PulseSegment or "
                                f"HardRotation, got {type(it).__name__}")
        object.__setattr__(self, "items", tuple(self.items))

    @property
    def segments(self) -> tuple[PulseSegment, ...]:
        return tuple(it for it in self.items if isinstance(it, PulseSegment))

    @property
    def total_duration(self) -> float:
        return float(sum(seg.duration for seg in self.segments))


@dataclass
class TrajectoryPoint:
    time: float
    bloch: dict
    fidelity: float


@dataclass
class ScheduleResult:
    final_state: DeviationState
    trajectory: list | None = None
    warning: str | None = None


class PropagatorCache:
    """Eigendecompositions keyed by operator token; safe for concurrent use."""

    def __init__(self, max_unitaries: int = 8192):
        self._decomps = {}
        self._unitaries = {}
        self._max_unitaries = max_unitaries
        self._lock = threading.Lock()

    def decomposition(self, op: OperatorMatrix):
        hit = self._decomps.get(op.token)
        if hit is not None:
            return hit
        try:
            evals, evecs = np.linalg.eigh(op.entries)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(
                f"eigendecomposition failed for a dim-{op.dim} operator "
                f"(max |entry| = {np.abs(op.entries).max():.3e}): {exc}") from exc
        with self._lock:
            self._decomps[op.token] = (evals, evecs)
        return evals, evecs

    def unitary(self, op: OperatorMatrix, t: float) -> np.ndarray:
        key = (op.token, t)
        hit = self._unitaries.get(key)
        if hit is not None:
            return hit
        evals, evecs = self.decomposition(op)
        u = (evecs * np.exp(-1j * evals * t)) @ evecs.conj().T
        with self._lock:
            if len(self._unitaries) >= self._max_unitaries:
                self._unitaries.clear()
            self._unitaries[key] = u
        return u


DEFAULT_CACHE = PropagatorCache()


def _conjugate(u: np.ndarray, state: DeviationState, label: str) -> DeviationState:
    m = u @ state.entries @ u.conj().T
    # re-symmetrize against accumulated rounding
    m = 0.5 * (m + m.conj().T)
    return DeviationState(OperatorMatrix(m), label=label)


def propagate(state: DeviationState, h: OperatorMatrix, t: float,
              cache: PropagatorCache | None = None) -> DeviationState:
    """Evolve a deviation state: rho -> U rho U^dag with U = exp(-i*H*t)."""
    if not h.hermitian:
        raise ValueError("propagation requires a Hermitian Hamiltonian")
    if h.dim != state.dim:
        raise ValueError(f"dimension mismatch: H is {h.dim}, state is {state.dim}")
    cache = cache or DEFAULT_CACHE
    u = cache.unitary(h, t)
    return _conjugate(u, state, state.label)


def apply_hard_rotation(state: DeviationState, ops: SpinOperators, axis: str,
                        angle: float, phase: float = 0.0,
                        cache: PropagatorCache | None = None) -> DeviationState:
    """Ideal instantaneous global rotation applied by conjugation."""
    rot = hard_rotation(ops, axis, angle, phase)
    cache = cache or DEFAULT_CACHE
    u = cache.unitary(rot.generator, rot.angle)
    return _conjugate(u, state, state.label)


def bloch_project(state: DeviationState, basis: SingletTripletBasis,
                  partner: str) -> tuple[float, float, float]:
    """Components of the state in the {S0, partner} two-level subspace.

    Returns (2*Re rho01, 2*Im rho10, rho00 - rho11); z = +1 corresponds to
    pure S0 content of a normalized subspace population.
    """
    if partner not in ("T0", "Tplus", "Tminus"):
        raise InvalidPairError(f"partner must be T0, Tplus or Tminus, got {partner!r}")
    reduced = partial_trace_to_pair(state.entries, basis.pair, basis.n_spins)
    k0 = basis.s0
    k1 = basis.ket(partner)
    r00 = (k0.conj() @ reduced @ k0).real
    r11 = (k1.conj() @ reduced @ k1).real
    r01 = k0.conj() @ reduced @ k1
    r10 = k1.conj() @ reduced @ k0
    return (2.0 * r01.real, 2.0 * r10.imag, r00 - r11)


def _fidelity(a: np.ndarray, b: np.ndarray) -> float:
    na = np.sqrt(np.trace(a @ a).real)
    nb = np.sqrt(np.trace(b @ b).real)
    return float(np.trace(a @ b).real / (na * nb))


def schedule_unitary(schedule: PulseSchedule, dim: int,
                     cache: PropagatorCache | None = None) -> np.ndarray:
    """Total unitary of a schedule (leftmost item applied first)."""
    cache = cache or DEFAULT_CACHE
    u = np.eye(dim, dtype=complex)
    for item in schedule.items:
        if isinstance(item, HardRotation):
            u = cache.unitary(item.generator, item.angle) @ u
        elif item.duration > 0.0:
            u = cache.unitary(item.hamiltonian, item.duration) @ u
    return u


def run_schedule(state: DeviationState, schedule: PulseSchedule,
                 record_every: float | None = None,
                 record_steps: int | None = None,
                 basis: SingletTripletBasis | None = None,
                 partners: tuple[str, ...] = ("T0", "Tplus", "Tminus"),
                 target: DeviationState | None = None,
                 cache: PropagatorCache | None = None) -> ScheduleResult:
    """Apply schedule items in order, optionally recording a trajectory.

    With ``record_every`` set (seconds), each segment is subdivided into
    steps no longer than that; ``record_steps`` instead fixes the step count
    per segment. The final state is the same (to rounding) with or without
    recording.
    """
    cache = cache or DEFAULT_CACHE
    if not schedule.items:
        return ScheduleResult(final_state=state, trajectory=None,
                              warning="empty schedule; state returned unchanged")

    recording = record_every is not None or record_steps is not None
    trajectory = [] if recording else None
    now = 0.0

    def record():
        bloch = {}
        if basis is not None:
            for p in partners:
                bloch[p] = bloch_project(current, basis, p)
        fid = _fidelity(current.entries, target.entries) if target is not None else np.nan
        trajectory.append(TrajectoryPoint(time=now, bloch=bloch, fidelity=fid))

    current = state
    if recording:
        record()
    for item in schedule.items:
        if isinstance(item, HardRotation):
            u = cache.unitary(item.generator, item.angle)
            current = _conjugate(u, current, current.label)
            if recording:
                record()
            continue
        if item.duration == 0.0:
            continue
        if not recording:
            current = propagate(current, item.hamiltonian, item.duration, cache)
            continue
        if record_every is not None:
            n_steps = max(1, int(np.ceil(item.duration / record_every - 1e-12)))
        else:
            n_steps = max(1, int(record_steps))
        dt = item.duration / n_steps
        for _ in range(n_steps):
            current = propagate(current, item.hamiltonian, dt, cache)
            now += dt
            record()
    return ScheduleResult(final_state=current, trajectory=trajectory)
