"""Normalized trace-overlap fidelity, the scalarized transfer cost, and the
unitary transfer bound from sorted spectra.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UndefinedFidelityError
from .spinops import DeviationState, OperatorMatrix

ZERO_NORM_TOL = 1e-12


@dataclass(frozen=True)
class CostConfig:
    """Scalarization weight r and the seconds-to-cost-units multiplier.

    The duration sum enters the cost in seconds scaled by
    ``time_unit_scale`` (default 1.0 per second); the scale is exposed
    because the trade-off point moves with it.
    """

    r: float = 0.4
    time_unit_scale: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.r <= 1.0:
            raise ValueError(f"weight r must lie in [0, 1], got {self.r}")
        if self.time_unit_scale <= 0:
            raise ValueError("time_unit_scale must be positive")


def _as_array(x) -> np.ndarray:
    if isinstance(x, DeviationState):
        return x.entries
    if isinstance(x, OperatorMatrix):
        return x.entries
    return np.asarray(x, dtype=complex)


def fidelity(rho_f, rho_t) -> float:
    """Tr(rho_f rho_t) / sqrt(Tr rho_t^2 * Tr rho_f^2), real in [-1, 1].

    Symmetric in its arguments and invariant under positive rescaling of
    either one.
    """
    a = _as_array(rho_f)
    b = _as_array(rho_t)
    na = np.sqrt(np.trace(a @ a.conj().T).real)
    nb = np.sqrt(np.trace(b @ b.conj().T).real)
    if na < ZERO_NORM_TOL or nb < ZERO_NORM_TOL:
        raise UndefinedFidelityError(
            f"fidelity undefined for zero-norm state (norms {na:.3e}, {nb:.3e})")
    return float(np.trace(a @ b).real / (na * nb))


def infidelity(rho_f, rho_t) -> float:
    return 1.0 - fidelity(rho_f, rho_t)


def qaoa_cost(gammas, betas, fidelity_value: float, cfg: CostConfig) -> float:
    """r * (1 - F) + (1 - r) * scale * sum of durations (seconds)."""
    gammas = np.asarray(gammas, dtype=float)
    betas = np.asarray(betas, dtype=float)
    if np.any(gammas < 0) or np.any(betas < 0):
        raise ValueError("durations must be non-negative")
    total = float(gammas.sum() + betas.sum())
    return cfg.r * (1.0 - fidelity_value) + (1.0 - cfg.r) * cfg.time_unit_scale * total


def unitary_bound(rho_i, rho_t) -> float:
    """Largest fidelity any unitary can achieve between the two operators.

    Equal to the inner product of the descending-sorted spectra divided by
    the norms (von Neumann trace inequality).
    """
    a = _as_array(rho_i)
    b = _as_array(rho_t)
    la = np.sort(np.linalg.eigvalsh(a))[::-1]
    lb = np.sort(np.linalg.eigvalsh(b))[::-1]
    na = np.sqrt(np.sum(la * la))
    nb = np.sqrt(np.sum(lb * lb))
    if na < ZERO_NORM_TOL or nb < ZERO_NORM_TOL:
        raise UndefinedFidelityError("unitary bound undefined for zero-norm operator")
    return float(np.dot(la, lb) / (na * nb))
