import numpy as np
import pytest

from singletqaoa import (
    ControlParams,
    SpinSystem,
    build_h0,
    build_hb,
    build_spin_operators,
    build_target,
    make_context,
    scalar_product_operator,
    singlet_projector,
    thermal_and_initial_states,
)
from singletqaoa.errors import SchemaError
from singletqaoa.hamiltonians import load_custom_target

from conftest import raw_h0


def comm_norm(a, b):
    return np.abs(a @ b - b @ a).max()


def test_two_spin_h0_matches_closed_form(moderate_ctx):
    expected = raw_h0(35.8, 17.2)
    assert np.abs(moderate_ctx.h0.entries - expected).max() <= 1e-10


def test_h0_commutes_with_total_iz(moderate_ctx):
    assert comm_norm(moderate_ctx.h0.entries,
                     moderate_ctx.ops.total_z.entries) <= 1e-10


def test_h0_delta_zero_commutes_with_singlet_projector():
    ctx = make_context(SpinSystem.two_spin(0.0, 17.2))
    ps = singlet_projector(ctx.ops, 0, 1).entries
    assert comm_norm(ctx.h0.entries, ps) <= 1e-10


def test_h0_nonzero_delta_does_not_commute_with_projector(moderate_ctx):
    ps = singlet_projector(moderate_ctx.ops, 0, 1).entries
    assert comm_norm(moderate_ctx.h0.entries, ps) > 1.0  # rad/s scale


def test_h0_linearity_in_delta_and_j():
    rng = np.random.default_rng(5)
    for _ in range(3):
        d1, d2, j1, j2 = rng.uniform(1.0, 60.0, 4)
        h = lambda d, j: build_h0(SpinSystem.two_spin(d, j)).entries
        assert np.abs(h(d1 + d2, j1) - h(d1, j1) - h(d2, 0.0)).max() <= 1e-9
        assert np.abs(h(d1, j1 + j2) - h(d1, j1) - h(0.0, j2)).max() <= 1e-9


def test_h0_spectrum_delta_zero():
    h = build_h0(SpinSystem.two_spin(0.0, 17.2)).entries
    vals = np.sort(np.linalg.eigvalsh(h))
    w = 2 * np.pi * 17.2
    assert np.allclose(vals, [-0.75 * w, 0.25 * w, 0.25 * w, 0.25 * w], atol=1e-9)


def test_hb_zero_control_is_h0(moderate_ctx):
    hb = build_hb(moderate_ctx.h0, ControlParams(0.0, 0.0), moderate_ctx.ops)
    assert np.abs(hb.entries - moderate_ctx.h0.entries).max() == 0.0


def test_hb_difference_is_rf_term(moderate_ctx):
    hb = build_hb(moderate_ctx.h0, ControlParams(100.0, 0.0), moderate_ctx.ops)
    diff = hb.entries - moderate_ctx.h0.entries
    assert np.abs(diff + 2 * np.pi * 100.0 * moderate_ctx.ops.total_x.entries).max() <= 1e-10


def test_hb_with_offset_does_not_commute_with_h0(moderate_ctx):
    hb = build_hb(moderate_ctx.h0, ControlParams(58.0, 4.0), moderate_ctx.ops)
    assert np.abs(hb.entries - hb.entries.conj().T).max() <= 1e-12
    assert comm_norm(hb.entries, moderate_ctx.h0.entries) > 1.0


def test_hb_never_commutes_with_iz_when_driven(moderate_ctx):
    hb = build_hb(moderate_ctx.h0, ControlParams(25.0, 0.0), moderate_ctx.ops)
    assert comm_norm(hb.entries, moderate_ctx.ops.total_z.entries) > 1.0


def test_control_params_validation():
    with pytest.raises(ValueError):
        ControlParams(-1.0, 0.0)


def test_spin_system_validation():
    with pytest.raises(ValueError):
        SpinSystem(2, (0.0,), np.zeros((2, 2)))
    j = np.zeros((2, 2))
    j[0, 1] = 5.0  # asymmetric
    with pytest.raises(ValueError):
        SpinSystem(2, (0.0, 0.0), j)
    j = np.full((2, 2), 3.0)  # nonzero diagonal
    with pytest.raises(ValueError):
        SpinSystem(2, (0.0, 0.0), j)


def test_singlet_order_target(moderate_system, moderate_ctx):
    t = build_target(moderate_system, "singlet_order", ops=moderate_ctx.ops)
    vals = np.sort(np.linalg.eigvalsh(t.matrix.entries))
    assert np.allclose(vals, [-0.25, -0.25, -0.25, 0.75], atol=1e-13)


def test_antiphase_target(moderate_system, moderate_ctx):
    t = build_target(moderate_system, "antiphase_magnetization",
                     ops=moderate_ctx.ops)
    m = t.matrix.entries
    assert abs(np.trace(m)) <= 1e-13
    assert np.abs(m - m.conj().T).max() <= 1e-13


def test_pairwise_singlet_sum_six_spins():
    system = SpinSystem(6, (0.0,) * 6, np.zeros((6, 6)))
    t = build_target(system, "pairwise_singlet_sum",
                     pairs=((0, 1), (2, 3), (4, 5)))
    assert t.matrix.dim == 64
    assert abs(np.trace(t.matrix.entries)) <= 1e-10


def test_custom_target_roundtrip(tmp_path, moderate_system):
    ops = build_spin_operators(2)
    m = scalar_product_operator(ops, 0, 1).entries * -1.0
    rows = []
    for row in m:
        cells = []
        for v in row:
            cells += [f"{v.real:.17g}", f"{v.imag:.17g}"]
        rows.append(",".join(cells))
    path = tmp_path / "target.csv"
    path.write_text("\n".join(rows) + "\n")
    loaded = load_custom_target(path)
    assert np.abs(loaded - m).max() <= 1e-15
    t = build_target(moderate_system, "custom", path=path)
    assert np.abs(t.matrix.entries - m).max() <= 1e-15


def test_custom_target_rejects_non_hermitian(tmp_path, moderate_system):
    path = tmp_path / "bad.csv"
    path.write_text("0,0,1,0\n0,0,0,0\n")
    with pytest.raises(SchemaError):
        build_target(moderate_system, "custom", path=path)


def test_thermal_and_initial_states(moderate_system, moderate_ctx):
    thermal, transverse = thermal_and_initial_states(moderate_system,
                                                     moderate_ctx.ops)
    assert abs(np.trace(thermal.entries)) <= 1e-13
    # (pi/2)_y rotation carries thermal onto the transverse state
    gen = moderate_ctx.ops.total_y.entries
    lam, v = np.linalg.eigh(gen)
    u = (v * np.exp(-1j * lam * np.pi / 2)) @ v.conj().T
    rotated = u @ thermal.entries @ u.conj().T
    assert np.abs(rotated - transverse.entries).max() <= 1e-12
