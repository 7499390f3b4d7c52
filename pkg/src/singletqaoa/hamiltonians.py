"""Rotating-frame Hamiltonians and target operators.

The internal unit for every Hamiltonian is angular frequency (rad/s);
chemical shifts, couplings, RF amplitudes and offsets are supplied in Hz
and converted here, at the boundary.

For two spins the free Hamiltonian reproduces

    H0 = -pi*delta*(I1z - I2z) + 2*pi*J * I1.I2

through the offset convention offsets = (-delta/2, +delta/2). The drive
Hamiltonian is H_B = H0 - 2*pi*nu*Ix - 2*pi*Delta*Iz with global transverse
and longitudinal operators.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidPairError, SchemaError
from .spinops import (
    DeviationState,
    OperatorMatrix,
    SpinOperators,
    build_spin_operators,
    check_pair,
    scalar_product_operator,
)

TARGET_KINDS = ("singlet_order", "antiphase_magnetization",
                "pairwise_singlet_sum", "custom")


@dataclass(frozen=True)
class SpinSystem:
    """Chemical-shift offsets (Hz) and scalar-coupling matrix (Hz)."""

    n_spins: int
    offsets_hz: tuple[float, ...]
    j_couplings_hz: np.ndarray

    def __post_init__(self):
        j = np.array(self.j_couplings_hz, dtype=float)
        if len(self.offsets_hz) != self.n_spins:
            raise ValueError(
                f"{len(self.offsets_hz)} offsets for {self.n_spins} spins")
        if j.shape != (self.n_spins, self.n_spins):
            raise ValueError(f"J matrix shape {j.shape} does not match n_spins")
        if np.any(np.diag(j) != 0.0):
            raise ValueError("J matrix diagonal must be exactly zero")
        if not np.array_equal(j, j.T):
            raise ValueError("J matrix must be symmetric")
        j.setflags(write=False)
        object.__setattr__(self, "j_couplings_hz", j)
        object.__setattr__(self, "offsets_hz", tuple(float(v) for v in self.offsets_hz))

    @classmethod
    def two_spin(cls, delta_hz: float, j_hz: float) -> "SpinSystem":
        """Two-spin system from the shift difference delta and coupling J."""
        j = np.array([[0.0, j_hz], [j_hz, 0.0]])
        return cls(n_spins=2, offsets_hz=(-delta_hz / 2.0, +delta_hz / 2.0),
                   j_couplings_hz=j)

    @property
    def delta_hz(self) -> float:
        """Shift difference of a two-spin system (offset 2 minus offset 1)."""
        if self.n_spins != 2:
            raise ValueError("delta_hz is defined for two-spin systems only")
        return self.offsets_hz[1] - self.offsets_hz[0]


@dataclass(frozen=True)
class ControlParams:
    """RF drive parameters: amplitude nu and frequency offset Delta, in Hz."""

    nu_hz: float
    delta_hz: float = 0.0

    def __post_init__(self):
        if self.nu_hz < 0:
            raise ValueError(f"RF amplitude must be >= 0, got {self.nu_hz}")


@dataclass(frozen=True)
class TargetOperator:
    """Hermitian traceless operator the transfer aims at."""

    kind: str
    matrix: OperatorMatrix
    label: str = ""

    def __post_init__(self):
        m = self.matrix.entries
        if abs(np.trace(m)) > 1e-12 * max(1.0, np.abs(m).max()) * m.shape[0]:
            raise ValueError("target operator must be traceless")

    def as_state(self) -> DeviationState:
        return DeviationState(self.matrix, label=self.label or self.kind)


@dataclass(frozen=True)
class SystemContext:
    """A spin system bundled with its operator set and free Hamiltonian.

    Building the context once and passing it around keeps every schedule on
    the same OperatorMatrix instances, which is what makes the propagator
    cache effective across repeated evaluations.
    """

    system: SpinSystem
    ops: SpinOperators
    h0: OperatorMatrix


def build_h0(system: SpinSystem, ops: SpinOperators | None = None) -> OperatorMatrix:
    """Free-evolution Hamiltonian in rad/s: shifts plus isotropic couplings."""
    ops = ops or build_spin_operators(system.n_spins)
    h = np.zeros((ops.dim, ops.dim), dtype=complex)
    for i, off in enumerate(system.offsets_hz):
        if off:
            h += 2.0 * np.pi * off * ops.z[i].entries
    j = system.j_couplings_hz
    for a in range(system.n_spins):
        for b in range(a + 1, system.n_spins):
            if j[a, b]:
                h += 2.0 * np.pi * j[a, b] * scalar_product_operator(ops, a, b).entries
    return OperatorMatrix(h)


def drive_matrix(h0: OperatorMatrix, ops: SpinOperators, nu_hz: float,
                 delta_hz: float) -> OperatorMatrix:
    """H0 - 2*pi*nu*Ix - 2*pi*Delta*Iz without amplitude validation.

    Robustness sweeps may push the effective amplitude through zero; a
    negative value is the same drive with the RF phase flipped.
    """
    h = (h0.entries
         - 2.0 * np.pi * nu_hz * ops.total_x.entries
         - 2.0 * np.pi * delta_hz * ops.total_z.entries)
    return OperatorMatrix(h)


def build_hb(h0: OperatorMatrix, ctrl: ControlParams,
             ops: SpinOperators) -> OperatorMatrix:
    """Driven Hamiltonian H_B = H0 - 2*pi*nu*Ix - 2*pi*Delta*Iz."""
    if h0.dim != ops.dim:
        raise ValueError("H0 dimension does not match the operator set")
    return drive_matrix(h0, ops, ctrl.nu_hz, ctrl.delta_hz)


def make_context(system: SpinSystem) -> SystemContext:
    ops = build_spin_operators(system.n_spins)
    return SystemContext(system=system, ops=ops, h0=build_h0(system, ops))


def load_custom_target(path) -> np.ndarray:
    """Read a dense complex matrix stored as CSV of re,im pairs, row-major.

    Row k of the file holds 2*d values re(k,0), im(k,0), ..., re(k,d-1), im(k,d-1).
    """
    rows = []
    with open(path, newline="") as fh:
        for line in csv.reader(fh):
            if not line or all(not cell.strip() for cell in line):
                continue
            rows.append([float(cell) for cell in line])
    d = len(rows)
    for k, row in enumerate(rows):
        if len(row) != 2 * d:
            raise SchemaError(
                f"custom target row {k} has {len(row)} values, expected {2 * d}",
                keys=(f"row[{k}]",))
    m = np.empty((d, d), dtype=complex)
    for k, row in enumerate(rows):
        m[k] = np.array(row[0::2]) + 1j * np.array(row[1::2])
    return m


def build_target(system: SpinSystem, kind: str,
                 ops: SpinOperators | None = None,
                 pair: tuple[int, int] = (0, 1),
                 pairs: tuple[tuple[int, int], ...] | None = None,
                 matrix: np.ndarray | None = None,
                 path=None) -> TargetOperator:
    """Construct one of the supported target operators.

    singlet_order(pair)          -I_i.I_j
    antiphase_magnetization(pair) I^x_i I^z_j - I^z_i I^x_j
    pairwise_singlet_sum(pairs)   sum over pairs of -I_a.I_b
    custom                        Hermitian traceless matrix (array or CSV path)
    """
    ops = ops or build_spin_operators(system.n_spins)
    if kind == "singlet_order":
        i, j = check_pair(pair, system.n_spins)
        m = -scalar_product_operator(ops, i, j).entries
        return TargetOperator(kind, OperatorMatrix(m), label=f"-I{i+1}.I{j+1}")
    if kind == "antiphase_magnetization":
        i, j = check_pair(pair, system.n_spins)
        m = (ops.x[i].entries @ ops.z[j].entries
             - ops.z[i].entries @ ops.x[j].entries)
        return TargetOperator(kind, OperatorMatrix(m),
                              label=f"I{i+1}xI{j+1}z-I{i+1}zI{j+1}x")
    if kind == "pairwise_singlet_sum":
        if not pairs:
            raise InvalidPairError("pairwise_singlet_sum requires a pair list")
        m = np.zeros((ops.dim, ops.dim), dtype=complex)
        for p in pairs:
            a, b = check_pair(tuple(p), system.n_spins)
            m -= scalar_product_operator(ops, a, b).entries
        return TargetOperator(kind, OperatorMatrix(m), label="sum of pair singlet orders")
    if kind == "custom":
        if matrix is None:
            if path is None:
                raise SchemaError("custom target needs a matrix or a file path",
                                  keys=("target.path",))
            matrix = load_custom_target(path)
        m = np.asarray(matrix, dtype=complex)
        if np.abs(m - m.conj().T).max() > 1e-12 * max(1.0, np.abs(m).max()):
            raise SchemaError("custom target must be Hermitian", keys=("target",))
        op = OperatorMatrix(m)  # validates square power-of-two
        return TargetOperator(kind, op, label="custom")
    raise SchemaError(f"unknown target kind {kind!r}", keys=("target.kind",))


def thermal_and_initial_states(system: SpinSystem,
                               ops: SpinOperators | None = None
                               ) -> tuple[DeviationState, DeviationState]:
    """Thermal deviation state sum_i I^z_i and its transverse image sum_i I^x_i."""
    ops = ops or build_spin_operators(system.n_spins)
    thermal = DeviationState(ops.total_z, label="thermal Iz")
    transverse = DeviationState(ops.total_x, label="transverse Ix")
    return thermal, transverse
