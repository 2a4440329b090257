import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from novlab.errors import OnCoSphereError, ValidationError
from novlab.morse_model import (
    COSPHERE_EPS,
    LatitudeFrame,
    ModelPoint,
    MorseModelConfig,
    ascend,
    bottom_point,
    descend,
    descend_arrays,
    exit_time,
    flow,
    in_model,
    latitude,
    q_value,
    top_point,
)

from conftest import BACKENDS, use_backend
from oracles import descend_by_flow_time


def test_q_values():
    assert q_value(ModelPoint([0.0, 0.0], [0.0])) == 0.0
    assert q_value(ModelPoint([1.0, 0.0], [0.0])) == -1.0


def test_q_decreases_along_flow():
    p = ModelPoint([0.3, -0.2], [0.5, 0.1])
    assert q_value(flow(p, 0.1)) < q_value(p)


def test_flow_examples():
    p = ModelPoint([0.1], [1.0])
    assert flow(p, 0.0) == p
    out = flow(p, 0.5)
    assert out.xm[0] == pytest.approx(0.1 * math.e, abs=1e-15)
    assert out.xp[0] == pytest.approx(math.exp(-1.0), abs=1e-15)


@given(st.floats(-2, 2))
def test_flow_preserves_product(t):
    p = ModelPoint([0.3, 0.4], [0.6, -0.8])
    q = flow(p, t)
    assert np.linalg.norm(q.xm) * np.linalg.norm(q.xp) == pytest.approx(0.5, rel=1e-12)


def test_in_model():
    cfg = MorseModelConfig(4, 2, 1.0, 1.0)
    assert in_model(ModelPoint([0, 0], [0, 0]), cfg)
    assert not in_model(ModelPoint([0, 0], [math.sqrt(2), 0]), cfg)
    # |xm|^2 |xp|^2 = 1 exactly, Q = 0
    assert in_model(ModelPoint([1.0, 0.0], [0.0, 1.0]), cfg)


def test_config_validation():
    with pytest.raises(ValidationError):
        MorseModelConfig(4, 0)
    with pytest.raises(ValidationError):
        MorseModelConfig(4, 2, delta=-1.0)
    cfg = MorseModelConfig(5, 3, 0.5, 2.0)
    assert MorseModelConfig.from_json(cfg.to_json()) == cfg


@pytest.mark.parametrize("bk", sorted(BACKENDS))
def test_descend_is_identity_in_spherical_coordinates(bk):
    cfg = MorseModelConfig(4, 2, 1.0, 1.0)
    p = top_point([0.2 * math.cos(0.3), 0.2 * math.sin(0.3)], [0.6, 0.8], cfg)
    with use_backend(bk):
        out = descend(p, cfg)
    phi, r, psi = p.spherical("top")
    phi2, r2, psi2 = out.spherical("bottom")
    assert q_value(out) == pytest.approx(-1.0, abs=1e-14)
    assert r2 == pytest.approx(r, abs=1e-15)
    np.testing.assert_allclose(phi2, phi, atol=1e-15)
    np.testing.assert_allclose(psi2, psi, atol=1e-15)


@pytest.mark.parametrize("bk", sorted(BACKENDS))
def test_descend_matches_flow_time_oracle(bk):
    cfg = MorseModelConfig(5, 2, 1.0, 0.7)
    rng = np.random.default_rng(3)
    for _ in range(50):
        u = rng.normal(size=2) * rng.uniform(0.05, 1.0)
        psi = rng.normal(size=3)
        p = top_point(u, psi / np.linalg.norm(psi), cfg)
        with use_backend(bk):
            out = descend(p, cfg)
        xm, xp = descend_by_flow_time(p.xm.tolist(), p.xp.tolist(), cfg.delta_star)
        np.testing.assert_allclose(out.xm, xm, rtol=1e-12)
        np.testing.assert_allclose(out.xp, xp, rtol=1e-12)
        assert flow(p, exit_time(p, cfg)).xm == pytest.approx(out.xm, rel=1e-12)


def test_ascend_undoes_descend():
    cfg = MorseModelConfig(4, 2, 1.0, 1.0)
    p = top_point([0.1, -0.3], np.array([1.0, 2.0]) / math.sqrt(5.0), cfg)
    back = ascend(descend(p, cfg), cfg)
    np.testing.assert_allclose(back.xm, p.xm, atol=1e-14)
    np.testing.assert_allclose(back.xp, p.xp, atol=1e-14)


def test_cosphere_is_rejected():
    cfg = MorseModelConfig(4, 2, 1.0, 1.0)
    with pytest.raises(OnCoSphereError):
        descend(top_point([COSPHERE_EPS / 2, 0.0], [1.0, 0.0], cfg), cfg)
    xm, xp = descend_arrays(np.array([[0.0, 0.0], [0.3, 0.0]]), np.ones((2, 2)), cfg)
    assert np.isnan(xm[0]).all() and np.isfinite(xm[1]).all()


def test_bottom_point_is_on_bottom():
    cfg = MorseModelConfig(4, 2, 1.0, 2.0)
    p = bottom_point([0.6, 0.8], [0.1, 0.2], cfg)
    assert q_value(p) == pytest.approx(-2.0, abs=1e-14)


def test_latitude_examples():
    f = LatitudeFrame([0.0, 0.0, 1.0])
    assert latitude(f, [0.0, 0.0, 1.0]) == 1.0
    assert latitude(f, [1.0, 0.0, 0.0]) == 0.0
    assert latitude(f, [0.0, math.sqrt(3) / 2, 0.5]) == pytest.approx(0.5, abs=1e-15)
    with pytest.raises(ValidationError):
        LatitudeFrame([1.0, 1.0, 0.0])
