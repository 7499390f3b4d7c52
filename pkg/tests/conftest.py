import numpy as np
import pytest

from singletqaoa import (
    ControlParams,
    QaoaProblem,
    SpinSystem,
    build_target,
    make_context,
    thermal_and_initial_states,
)

BOUND = np.sqrt(2.0 / 3.0)

# directly constructed two-spin operators, independent of the package
SX = np.array([[0, 1], [1, 0]], dtype=complex) / 2
SY = np.array([[0, -1j], [1j, 0]], dtype=complex) / 2
SZ = np.array([[1, 0], [0, -1]], dtype=complex) / 2
E2 = np.eye(2, dtype=complex)
I1X, I2X = np.kron(SX, E2), np.kron(E2, SX)
I1Y, I2Y = np.kron(SY, E2), np.kron(E2, SY)
I1Z, I2Z = np.kron(SZ, E2), np.kron(E2, SZ)
DOT12 = I1X @ I2X + I1Y @ I2Y + I1Z @ I2Z


def raw_h0(delta, j):
    return -np.pi * delta * (I1Z - I2Z) + 2 * np.pi * j * DOT12


def raw_unitary(h, t):
    lam, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * lam * t)) @ v.conj().T


def raw_fidelity(a, b):
    na = np.sqrt(np.trace(a @ a).real)
    nb = np.sqrt(np.trace(b @ b).real)
    return float(np.trace(a @ b).real / (na * nb))


@pytest.fixture(scope="session")
def moderate_system():
    return SpinSystem.two_spin(35.8, 17.2)


@pytest.fixture(scope="session")
def moderate_ctx(moderate_system):
    return make_context(moderate_system)


@pytest.fixture(scope="session")
def moderate_states(moderate_system, moderate_ctx):
    thermal, transverse = thermal_and_initial_states(moderate_system,
                                                     moderate_ctx.ops)
    return thermal, transverse


@pytest.fixture(scope="session")
def singlet_target(moderate_system, moderate_ctx):
    return build_target(moderate_system, "singlet_order", ops=moderate_ctx.ops)


@pytest.fixture(scope="session")
def prep_problem(moderate_system, moderate_states, singlet_target):
    _, transverse = moderate_states
    return QaoaProblem(system=moderate_system, layers=2,
                       ctrl=ControlParams(100.0, 0.0),
                       initial=transverse, target=singlet_target)


PUBLISHED_PREP = ([14.069e-3, 6.810e-3], [3.452e-3, 0.025e-3])
PUBLISHED_DETECT = ([2.457e-3, 6.401e-3], [6.255e-3, 2.420e-3])
