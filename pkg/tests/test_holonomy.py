import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from novlab.errors import UnsupportedConfigurationError, ValidationError
from novlab.holonomy import (
    ModelPoint,
    classify,
    compute_invariants,
    evaluate_holonomy,
    from_tube,
    inverse_holonomy,
    make_elementary_family,
    make_family,
    moved_family,
    sphere_tangent_basis,
    tube_coordinates,
    velocity_balance,
    verify_elementary,
)
from novlab.morse_model import MorseModelConfig, q_value
from novlab.passages import v1_dot

CFG = MorseModelConfig(4, 2, 1.0, 1.0)

magnitudes = st.floats(0.1, 0.9)
signs = st.sampled_from([-1.0, 1.0])
params = st.tuples(magnitudes, signs, magnitudes, signs, st.floats(0.5, 2.0)).map(
    lambda t: (t[0] * t[1], t[2] * t[3], t[4])
)


def test_chi_zero_fixture():
    inv = compute_invariants(make_elementary_family(CFG, -0.5, 0.5, 1.0))
    assert abs(inv.chi) < 1e-12
    assert inv.label == "S_g^{0,-}"


def test_positive_character_fixture():
    inv = compute_invariants(make_elementary_family(CFG, 0.1, 0.3, 2.0))
    assert inv.chi == pytest.approx(0.7, abs=1e-9)
    assert inv.label == "S_g^+"


def test_phi_axis_label():
    psi0 = np.array([1.0, 0.0])
    f = make_family(CFG, [1.0, 0.0], psi0, [0.6, 0.8], [0.0, 1.0], 1.0)
    assert compute_invariants(f).label == "phi-axis"


def test_zero_psi_latitude_is_unsupported():
    with pytest.raises(UnsupportedConfigurationError):
        make_elementary_family(CFG, 0.5, 0.0, 1.0)
    with pytest.raises(ValidationError):
        make_elementary_family(CFG, 0.5, 0.5, -1.0)


def test_classify_table():
    assert classify(0.0, 0.0, 0.0) == "S_g^{0,0}"
    assert classify(0.5, 0.0, 0.5) == "phi-axis"
    assert classify(0.0, 0.5, 0.5) == "psi-axis"
    assert classify(0.5, -0.5, 0.0) == "S_g^{0,+}"
    assert classify(-0.2, 0.5, 0.3) == "S_g^+"
    assert classify(0.2, -0.5, -0.3) == "S_g^-"


@settings(max_examples=20, deadline=None)
@given(params)
def test_invariants_round_trip(p):
    wp, ws, eta = p
    inv = compute_invariants(make_elementary_family(CFG, wp, ws, eta))
    assert inv.omega_phi == pytest.approx(wp, abs=1e-6)
    assert inv.omega_psi == pytest.approx(ws, abs=1e-6)
    assert inv.eta == pytest.approx(eta, abs=1e-6)
    assert inv.chi == pytest.approx(eta * ws + wp, abs=1e-6)


def test_tangent_basis_is_positive():
    for c in ([1.0, 0.0], [0.6, -0.8], [0.0, 0.0, 1.0]):
        c = np.asarray(c)
        t = sphere_tangent_basis(c)
        assert np.linalg.det(np.column_stack([c, t])) == pytest.approx(1.0)


def test_family_sends_a_minus_to_a_plus():
    f = make_elementary_family(CFG, 0.4, -0.7, 1.3)
    q = evaluate_holonomy(f, 0.0, f.a_minus)
    np.testing.assert_allclose(q.xm, f.a_plus.xm, atol=1e-14)
    np.testing.assert_allclose(q.xp, f.a_plus.xp, atol=1e-14)
    back = inverse_holonomy(f, 0.0, f.a_plus)
    np.testing.assert_allclose(back.as_vector(), f.a_minus.as_vector(), atol=1e-14)


def test_out_of_domain():
    f = make_elementary_family(CFG, 0.4, -0.7, 1.3)
    far = ModelPoint(-f.a_minus.xm, f.a_minus.xp)
    assert evaluate_holonomy(f, 0.0, far) is None
    assert tube_coordinates(f, far, "bottom") is None


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-0.2, 0.2), min_size=3, max_size=3), st.floats(-0.03, 0.03))
def test_inverse_undoes_holonomy(z, s):
    f = make_elementary_family(CFG, 0.4, -0.7, 1.3)
    p = from_tube(f, z, "bottom")
    assert q_value(p) == pytest.approx(-1.0, abs=1e-13)
    q = evaluate_holonomy(f, s, p)
    assume(q is not None)
    back = inverse_holonomy(f, s, q)
    np.testing.assert_allclose(back.as_vector(), p.as_vector(), atol=1e-10)


def test_elementary_conditions_hold():
    for p in ((0.5, 0.5, 1.0), (-0.6, 0.3, 2.0), (0.3, -0.8, 0.7)):
        rep = verify_elementary(make_elementary_family(CFG, *p))
        assert rep.ok, rep
        assert rep.a_plus_velocity == pytest.approx(1.0, abs=1e-6)


def test_velocity_balance_examples():
    vb = velocity_balance(make_elementary_family(CFG, 0.5, 0.5, 1.0))
    assert vb.forward == pytest.approx(1.0, abs=1e-6)
    assert vb.backward == pytest.approx(-1.0, abs=1e-6)
    assert abs(vb.total) < 1e-5


@pytest.mark.parametrize("p, expected", [((-0.6, 0.3, 2.0), 0.0), ((0.5, 0.5, 1.0), 2.0)])
def test_first_passage_speed(p, expected):
    wp, ws, eta = p
    f = make_elementary_family(CFG, wp, ws, eta)
    vd = v1_dot(f)
    assert vd == pytest.approx(expected, abs=1e-5)
    assert wp * vd == pytest.approx(eta * ws + wp, abs=1e-5)


def test_moved_family_keeps_everything_else():
    base = make_elementary_family(CFG, -0.5, 0.5, 1.0)
    moved = compute_invariants(moved_family(base, -0.3))
    assert moved.omega_phi == pytest.approx(-0.3, abs=1e-9)
    assert moved.omega_psi == pytest.approx(0.5, abs=1e-9)
    assert moved.eta == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(UnsupportedConfigurationError):
        moved_family(base, 1.0)


def test_higher_index_family():
    cfg = MorseModelConfig(5, 3, 1.0, 1.0)
    inv = compute_invariants(make_elementary_family(cfg, 0.3, -0.4, 1.5))
    assert (inv.omega_phi, inv.omega_psi, inv.eta) == pytest.approx((0.3, -0.4, 1.5), abs=1e-6)
    assert math.isclose(inv.chi, 1.5 * -0.4 + 0.3, abs_tol=1e-6)
