import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from curvemag import perturbation as pt
from curvemag.errors import NormalizationError

finite = st.floats(-3, 3, allow_nan=False)
vec3 = arrays(float, 3, elements=finite).filter(lambda v: np.linalg.norm(v) > 1e-3)
TENSOR = np.random.default_rng(7).normal(size=27)

MODELS = [pt.DMI(0.8), pt.Ado(1.7), pt.Linear(TENSOR)]


def _unit(v):
    return np.asarray(v) / np.linalg.norm(v)


def _frame(t):
    t = _unit(t)
    n = np.cross(t, [0.3, -0.5, 0.81])
    n /= np.linalg.norm(n)
    return t, n, np.cross(t, n)


@given(vec3, vec3)
def test_dmi_anisotropy_vanishes(s, t):
    m = pt.DMI(1.3)
    assert abs(pt.anisotropy_density(m, _unit(s), _unit(t))) <= 1e-14


def test_dmi_is_skew_and_norm():
    m = pt.DMI(0.5)
    K = m.K(_unit([1.0, 2.0, -0.5]))
    assert np.allclose(K, -K.T)
    assert np.sum(K * K) == pytest.approx(2 * 0.25)
    assert m.half_norm_sq(_unit([1, 1, 1])) == pytest.approx(0.25)


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.kind)
def test_declared_bound_holds(model):
    sup, lip = pt.check_bound(model)
    assert sup <= model.c_K * (1 + 1e-14) and lip <= model.c_K * (1 + 1e-14)


def test_custom_bound_violation():
    with pytest.raises(pt.BoundError):
        pt.Custom(lambda s: 5 * np.outer(s, s), c_K=1.0)


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.kind)
@given(vec3)
def test_dK_matches_finite_differences(model, s):
    s = _unit(s)
    e = 1e-6
    fd = np.stack([(model.K(s + e * np.eye(3)[k]) - model.K(s - e * np.eye(3)[k])) / (2 * e)
                   for k in range(3)], axis=-1)
    assert np.max(np.abs(model.dK(s) - fd)) < 1e-7


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.kind)
def test_specialised_kt_matches_generic(model, rng):
    m = rng.normal(size=(20, 3))
    t = rng.normal(size=(20, 3))
    r = rng.normal(size=(20, 3))
    generic = pt.PerturbationModel
    assert np.allclose(model.kt(m, t), generic.kt(model, m, t))
    assert np.allclose(model.kt_adjoint(m, t, r), generic.kt_adjoint(model, m, t, r))


def test_custom_fd_jacobian_matches_linear():
    lin = pt.Linear(TENSOR)
    cus = pt.Custom(lambda s: lin.K(s), c_K=lin.c_K)
    s = _unit([0.2, -0.4, 0.9])
    assert np.allclose(cus.dK(s), lin.dK(s), atol=1e-8)


def test_eval_K_requires_unit():
    with pytest.raises(NormalizationError):
        pt.eval_K(pt.DMI(1.0), [1.0, 1.0, 0.0])
    assert pt.eval_K(pt.DMI(1.0), [0.0, 0.0, 1.0]).shape == (3, 3)


@given(arrays(float, (3, 3), elements=finite), vec3)
def test_frobenius_coupling_identity(G, s):
    assert pt.frobenius_coupling_identity_check(pt.DMI(0.7), G, _unit(s)) <= 1e-12


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.kind)
@given(vec3, vec3)
def test_anisotropy_forms_agree(model, s, t):
    t, n, b = _frame(t)
    s = _unit(s)
    a = pt.anisotropy_density(model, s, t)
    assert a >= -1e-12
    assert a == pytest.approx(pt.anisotropy_density_nb(model, s, n, b), abs=1e-12)


@given(vec3, vec3)
def test_ado_anisotropy_closed_form(s, t):
    s, t = _unit(s), _unit(t)
    beta = 1.7
    p = s[0] * s[1] * s[2]
    expected = beta**2 * p**2 * (1 - np.dot(s, t) ** 2)
    assert pt.anisotropy_density(pt.Ado(beta), s, t) == pytest.approx(expected, abs=1e-14)


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.kind)
def test_anisotropy_gradient_matches_fd(model, rng):
    s = _unit(rng.normal(size=3))
    t = _unit(rng.normal(size=3))
    g = pt.anisotropy_gradient(model, s, t)
    e = 1e-6
    f = lambda x: model.K(x).T @ x  # noqa: E731
    dens = lambda x: f(x) @ f(x) - (f(x) @ t) ** 2  # noqa: E731
    fd = np.array([(dens(s + e * np.eye(3)[k]) - dens(s - e * np.eye(3)[k])) / (2 * e)
                   for k in range(3)])
    assert np.allclose(g, fd, atol=1e-7)


def test_fibonacci_sphere_unit():
    p = pt.fibonacci_sphere(100)
    assert np.allclose(np.linalg.norm(p, axis=1), 1)
    assert abs(p.mean(axis=0)).max() < 0.02


def test_tensor_json(tmp_path):
    path = tmp_path / "t.json"
    path.write_text(json.dumps(TENSOR.tolist()))
    assert np.allclose(pt.load_tensor_json(path).ravel(), TENSOR)
    path.write_text("[1, 2, 3]")
    with pytest.raises(ValueError):
        pt.load_tensor_json(path)


def test_from_spec():
    assert isinstance(pt.from_spec("dmi", kappa=0.2), pt.DMI)
    assert isinstance(pt.from_spec("ado", beta=0.2), pt.Ado)
    assert np.all(pt.from_spec("none").K(_unit([1, 0, 0])) == 0)
    with pytest.raises(ValueError):
        pt.from_spec("heisenberg")
