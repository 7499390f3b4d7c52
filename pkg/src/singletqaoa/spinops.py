"""Spin-1/2 operator algebra: angular-momentum operators, tensor embeddings,
and the singlet-triplet basis of a designated spin pair.

Conventions used everywhere in this package:

- basis state ``|0>`` is spin-up (m = +1/2), ``|1>`` spin-down;
- kets of an N-spin register are ordered spin 1 (x) spin 2 (x) ... (x) spin N;
- spin operators carry the physics normalization I = sigma/2, so the
  eigenvalues of any single-spin I^z are +1/2 and -1/2.

All matrices are dense complex arrays; the largest supported register
(10 spins) is a 1024-dimensional Hilbert space.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionLimitError, InvalidPairError

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12

_PAULI_HALF = {
    "x": np.array([[0.0, 0.5], [0.5, 0.0]], dtype=complex),
    "y": np.array([[0.0, -0.5j], [0.5j, 0.0]], dtype=complex),
    "z": np.array([[0.5, 0.0], [0.0, -0.5]], dtype=complex),
}

_token_counter = itertools.count()


@dataclass(frozen=True)
class OperatorMatrix:
    """Dense complex operator on a 2^N-dimensional spin Hilbert space.

    ``token`` is a process-unique id used as the key of the propagator
    cache; two OperatorMatrix objects never share a token.
    """

    entries: np.ndarray
    hermitian: bool = True
    token: int = field(default_factory=lambda: next(_token_counter), compare=False)

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=complex)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError(f"operator must be square, got shape {entries.shape}")
        dim = entries.shape[0]
        if dim < 1 or dim & (dim - 1):
            raise ValueError(f"dimension {dim} is not a power of two")
        if self.hermitian:
            err = np.abs(entries - entries.conj().T).max()
            if err > HERMITIAN_TOL:
                raise ValueError(f"hermitian flag set but max |A - A^dag| = {err:.3e}")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def dagger(self) -> "OperatorMatrix":
        if self.hermitian:
            return self
        return OperatorMatrix(self.entries.conj().T, hermitian=False)


@dataclass(frozen=True)
class DeviationState:
    """Traceless Hermitian deviation density matrix (high-temperature NMR)."""

    matrix: OperatorMatrix
    label: str = ""

    def __post_init__(self):
        m = self.matrix.entries
        if not self.matrix.hermitian:
            raise ValueError("deviation state must be Hermitian")
        tr = abs(np.trace(m))
        if tr > TRACE_TOL * max(1.0, np.abs(m).max()) * m.shape[0]:
            raise ValueError(f"deviation state must be traceless, |Tr| = {tr:.3e}")

    @property
    def dim(self) -> int:
        return self.matrix.dim

    @property
    def entries(self) -> np.ndarray:
        return self.matrix.entries


@dataclass(frozen=True)
class SingletTripletBasis:
    """The four pair-subspace kets {S0, T0, T+, T-} for spins (i, j).

    Kets are 4-vectors over the pair's product basis |00>, |01>, |10>, |11>,
    with S0 = (|01> - |10>)/sqrt(2). For registers larger than the pair the
    projection machinery reduces the full state onto the pair first.
    """

    pair: tuple[int, int]
    n_spins: int
    s0: np.ndarray
    t0: np.ndarray
    tplus: np.ndarray
    tminus: np.ndarray

    def ket(self, name: str) -> np.ndarray:
        try:
            return {"S0": self.s0, "T0": self.t0,
                    "Tplus": self.tplus, "Tminus": self.tminus}[name]
        except KeyError:
            raise InvalidPairError(f"unknown basis ket {name!r}") from None


@dataclass(frozen=True)
class SpinOperators:
    """Single-spin operators I^x_i, I^y_i, I^z_i plus the global totals."""

    n_spins: int
    x: tuple[OperatorMatrix, ...]
    y: tuple[OperatorMatrix, ...]
    z: tuple[OperatorMatrix, ...]
    total_x: OperatorMatrix
    total_y: OperatorMatrix
    total_z: OperatorMatrix

    @property
    def dim(self) -> int:
        return 2 ** self.n_spins

    def single(self, axis: str, i: int) -> OperatorMatrix:
        return {"x": self.x, "y": self.y, "z": self.z}[axis][i]

    def total(self, axis: str) -> OperatorMatrix:
        return {"x": self.total_x, "y": self.total_y, "z": self.total_z}[axis]


def _embed(op2: np.ndarray, i: int, n: int) -> np.ndarray:
    mats = [np.eye(2, dtype=complex)] * n
    mats[i] = op2
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def build_spin_operators(n_spins: int) -> SpinOperators:
    """Construct all single-spin and total angular-momentum operators.

    Supports 1 <= n_spins <= 10 (dense 1024x1024 at the top end).
    """
    if not 1 <= n_spins <= 10:
        raise DimensionLimitError(
            f"n_spins must be within [1, 10], got {n_spins}")
    per_axis = {}
    for axis, s in _PAULI_HALF.items():
        per_axis[axis] = tuple(
            OperatorMatrix(_embed(s, i, n_spins)) for i in range(n_spins))
    totals = {
        axis: OperatorMatrix(sum(op.entries for op in ops))
        for axis, ops in per_axis.items()
    }
    return SpinOperators(
        n_spins=n_spins,
        x=per_axis["x"], y=per_axis["y"], z=per_axis["z"],
        total_x=totals["x"], total_y=totals["y"], total_z=totals["z"],
    )


def check_pair(pair: tuple[int, int], n_spins: int) -> tuple[int, int]:
    i, j = pair
    if i == j:
        raise InvalidPairError(f"pair indices must differ, got ({i}, {j})")
    if not (0 <= i < n_spins and 0 <= j < n_spins):
        raise InvalidPairError(f"pair ({i}, {j}) out of range for {n_spins} spins")
    return i, j


def scalar_product_operator(ops: SpinOperators, i: int, j: int) -> OperatorMatrix:
    """I_i . I_j = I^x_i I^x_j + I^y_i I^y_j + I^z_i I^z_j."""
    i, j = check_pair((i, j), ops.n_spins)
    m = (ops.x[i].entries @ ops.x[j].entries
         + ops.y[i].entries @ ops.y[j].entries
         + ops.z[i].entries @ ops.z[j].entries)
    return OperatorMatrix(m)


def singlet_projector(ops: SpinOperators, i: int, j: int) -> OperatorMatrix:
    """P_S = (1/4) 1 - I_i . I_j, the projector onto the pair singlet."""
    dot = scalar_product_operator(ops, i, j)
    return OperatorMatrix(0.25 * np.eye(ops.dim, dtype=complex) - dot.entries)


def singlet_triplet_basis(pair: tuple[int, int], n_spins: int) -> SingletTripletBasis:
    """Singlet-triplet kets of the designated pair, in the pair's 4-dim space."""
    pair = check_pair(pair, n_spins)
    inv = 1.0 / np.sqrt(2.0)
    s0 = np.array([0.0, inv, -inv, 0.0], dtype=complex)
    t0 = np.array([0.0, inv, inv, 0.0], dtype=complex)
    tplus = np.array([1.0, 0.0, 0.0, 0.0], dtype=complex)
    tminus = np.array([0.0, 0.0, 0.0, 1.0], dtype=complex)
    for v in (s0, t0, tplus, tminus):
        v.setflags(write=False)
    return SingletTripletBasis(pair=pair, n_spins=n_spins,
                               s0=s0, t0=t0, tplus=tplus, tminus=tminus)


def partial_trace_to_pair(matrix: np.ndarray, pair: tuple[int, int],
                          n_spins: int) -> np.ndarray:
    """Reduce an operator on the full register to the (i, j) pair subspace.

    Returns a 4x4 matrix over the pair product basis, spin i first.
    """
    i, j = check_pair(pair, n_spins)
    dim = 2 ** n_spins
    if matrix.shape != (dim, dim):
        raise ValueError(f"matrix shape {matrix.shape} does not match {n_spins} spins")
    if n_spins == 2:
        if (i, j) == (0, 1):
            return np.array(matrix)
        # swapped pair: permute the two-spin basis
        perm = [0, 2, 1, 3]
        return matrix[np.ix_(perm, perm)]
    tensor = matrix.reshape((2,) * (2 * n_spins))
    keep = (i, j)
    others = [k for k in range(n_spins) if k not in keep]
    # order row/col axes as (i, j, rest...) then trace the rest pairwise
    perm = list(keep) + others
    tensor = np.transpose(tensor, perm + [n_spins + k for k in perm])
    tensor = tensor.reshape(4, 2 ** (n_spins - 2), 4, 2 ** (n_spins - 2))
    return np.einsum("akbk->ab", tensor)
