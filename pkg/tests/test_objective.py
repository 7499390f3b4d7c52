import numpy as np
import pytest

from singletqaoa import (
    CostConfig,
    build_spin_operators,
    fidelity,
    infidelity,
    qaoa_cost,
    unitary_bound,
)
from singletqaoa.errors import UndefinedFidelityError

from conftest import BOUND, DOT12, I1Z, I2Z, I1X, I2X


def test_self_fidelity_is_one():
    assert fidelity(-DOT12, -DOT12) == pytest.approx(1.0, abs=1e-14)


def test_trace_orthogonal_states():
    assert fidelity(I1Z + I2Z, -DOT12) == pytest.approx(0.0, abs=1e-14)


def test_fidelity_symmetric_and_scale_invariant():
    a = I1Z + I2Z + 0.3 * DOT12
    b = -DOT12 + 0.1 * (I1X + I2X)
    assert fidelity(a, b) == pytest.approx(fidelity(b, a), abs=1e-14)
    assert fidelity(2.7 * a, b) == pytest.approx(fidelity(a, b), abs=1e-14)
    assert fidelity(a, 0.004 * b) == pytest.approx(fidelity(a, b), abs=1e-14)


def test_fidelity_invariant_under_joint_conjugation():
    rng = np.random.default_rng(3)
    a = I1Z + I2Z
    b = -DOT12
    base = fidelity(a, b)
    for _ in range(3):
        g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        q, _ = np.linalg.qr(g)
        assert fidelity(q @ a @ q.conj().T, q @ b @ q.conj().T) == \
            pytest.approx(base, abs=1e-12)


def test_zero_norm_rejected():
    with pytest.raises(UndefinedFidelityError):
        fidelity(np.zeros((4, 4)), -DOT12)


def test_unitary_bound_thermal_to_singlet_order():
    assert unitary_bound(I1Z + I2Z, -DOT12) == pytest.approx(BOUND, abs=1e-12)


def test_unitary_bound_self_is_one():
    assert unitary_bound(-DOT12, -DOT12) == pytest.approx(1.0, abs=1e-12)


def test_unitary_bound_invariant_under_unitary_on_input():
    assert unitary_bound(I1X + I2X, -DOT12) == pytest.approx(BOUND, abs=1e-12)


def test_bound_oracle():
    # no random unitary exceeds the sorted-spectra value, and the unitary
    # aligning the descending eigenbases achieves it exactly
    rng = np.random.default_rng(7)
    a = I1Z + I2Z
    b = -DOT12
    for _ in range(500):
        g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        q, _ = np.linalg.qr(g)
        assert fidelity(q @ a @ q.conj().T, b) <= BOUND + 1e-9
    la, va = np.linalg.eigh(a)
    lb, vb = np.linalg.eigh(b)
    u = vb[:, ::-1] @ va[:, ::-1].conj().T
    assert fidelity(u @ a @ u.conj().T, b) == pytest.approx(BOUND, abs=1e-12)


def test_cost_endpoints():
    cfg = CostConfig(r=1.0)
    assert qaoa_cost([1e-3], [2e-3], 0.6, cfg) == pytest.approx(0.4, abs=1e-14)
    cfg = CostConfig(r=0.0)
    assert qaoa_cost([0.0], [0.0], 0.2, cfg) == 0.0


def test_cost_reference_schedule_form():
    cfg = CostConfig(r=0.4, time_unit_scale=1.0)
    f = 0.8152
    total = 24.356e-3
    expected = 0.4 * (1 - f) + 0.6 * total
    got = qaoa_cost([14.069e-3, 6.810e-3], [3.452e-3, 0.025e-3], f, cfg)
    assert got == pytest.approx(expected, abs=1e-12)


def test_cost_monotone_in_duration():
    cfg = CostConfig(r=0.4)
    c1 = qaoa_cost([1e-3, 1e-3], [1e-3, 1e-3], 0.8, cfg)
    c2 = qaoa_cost([2e-3, 2e-3], [2e-3, 2e-3], 0.8, cfg)
    assert c2 > c1


def test_cost_rejects_negative_durations():
    with pytest.raises(ValueError):
        qaoa_cost([-1e-3], [0.0], 0.5, CostConfig())


def test_cost_config_validation():
    with pytest.raises(ValueError):
        CostConfig(r=1.5)
    with pytest.raises(ValueError):
        CostConfig(time_unit_scale=0.0)


def test_infidelity_complement():
    assert infidelity(-DOT12, -DOT12) == pytest.approx(0.0, abs=1e-14)
