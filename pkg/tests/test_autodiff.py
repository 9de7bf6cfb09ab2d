import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from newton_iks import autodiff as ad
from newton_iks.errors import DimensionMismatch, NonFiniteDerivative, UnsupportedPrimitive
from newton_iks.models import REGISTERED_MODELS, ct_observation, ct_transition

from helpers import random_model

A = np.array([[1.0, 2.0], [3.0, 4.0]])


def test_jacobian_of_linear_map():
    for x in ([0.0, 0.0], [1.5, -2.0]):
        np.testing.assert_array_equal(ad.jacobian(lambda v: A @ v, np.array(x)), A)
        np.testing.assert_array_equal(ad.jacobian(lambda v: ad.matvec(A, v), np.array(x)), A)


def test_jacobian_identity():
    np.testing.assert_array_equal(ad.jacobian(lambda v: [v[0], v[1], v[2]], np.ones(3)), np.eye(3))


def test_jacobian_matches_central_differences():
    fn = lambda x: [np.sin(x[0]) * x[1], x[0] ** 2]
    x = np.array([0.5, 2.0])
    h = 1e-6
    fd = np.column_stack(
        [(ad.evaluate(fn, x + h * e) - ad.evaluate(fn, x - h * e)) / (2 * h) for e in np.eye(2)]
    )
    np.testing.assert_allclose(ad.jacobian(fn, x), fd, atol=1e-6)


def test_affine_hessian_is_exactly_zero():
    T = ad.hessian_tensor(lambda v: ad.matvec(A, v, [1.0, -1.0]), np.array([0.3, 0.7]))
    assert T.shape == (2, 2, 2)
    assert np.all(T == 0.0)


def test_separable_quadratic_hessian():
    T = ad.hessian_tensor(lambda v: [v[i] ** 2 for i in range(3)], np.array([0.1, -2.0, 5.0]))
    expected = np.zeros((3, 3, 3))
    for i in range(3):
        expected[i, i, i] = 2.0
    np.testing.assert_array_equal(T, expected)


def test_ct_transition_hessian_vs_differenced_jacobian():
    rng = np.random.default_rng(11)
    x = rng.normal(size=5)
    fn = lambda v: ct_transition(v, 0.1)
    T = ad.hessian_tensor(fn, x)
    h = 1e-5
    fd = np.stack(
        [(ad.jacobian(fn, x + h * e) - ad.jacobian(fn, x - h * e)) / (2 * h) for e in np.eye(5)],
        axis=-1,
    )
    assert np.all(np.abs(T - fd) <= np.maximum(1e-10, 1e-4 * np.abs(fd)))


def test_tensor_dot_cases():
    assert np.all(ad.tensor_dot(np.ones((2, 3, 3)), np.zeros(2)) == 0)
    np.testing.assert_array_equal(ad.tensor_dot(np.eye(3)[None], np.array([3.0])), 3 * np.eye(3))
    rng = np.random.default_rng(0)
    T, v = rng.normal(size=(2, 3, 3)), rng.normal(size=2)
    loop = np.zeros((3, 3))
    for i in range(3):
        for j in range(3):
            for k in range(2):
                loop[i, j] += T[k, i, j] * v[k]
    np.testing.assert_allclose(ad.tensor_dot(T, v), loop, rtol=1e-14)
    with pytest.raises(DimensionMismatch):
        ad.tensor_dot(T, np.ones(3))


def test_fd_check_linear_and_sine():
    rep = ad.fd_check(lambda v: ad.matvec(A, v), np.array([0.2, -0.4]))
    assert rep.max_jac_err <= 1e-9
    rep = ad.fd_check(lambda v: [np.sin(v[0])], np.array([0.3]), step=1e-6)
    assert rep.max_jac_err <= 1e-8


def test_fd_check_bearing():
    fn = lambda v: ct_observation(v, ((1.0, 1.0), (-1.5, 0.5)))
    rep = ad.fd_check(fn, np.array([2.0, -1.0, 0.3, 0.1, 0.05]))
    assert rep.max_jac_err <= 1e-5 and rep.max_hess_err <= 1e-5


def test_atan2_at_origin_is_an_error():
    with pytest.raises(NonFiniteDerivative):
        ad.jacobian(lambda v: [ad.arctan2(v[1], v[0])], np.zeros(2))


def test_unsupported_primitives():
    import math

    with pytest.raises(UnsupportedPrimitive):
        ad.jacobian(lambda v: [math.sin(v[0])], np.ones(1))
    with pytest.raises(UnsupportedPrimitive):
        ad.jacobian(lambda v: [np.arcsinh(v[0])], np.ones(1))
    with pytest.raises(UnsupportedPrimitive):
        ad.jacobian(lambda v: np.cosh(np.asarray(v)), np.ones(2))


def test_elementary_rules_against_fd():
    fn = lambda v: [
        np.exp(v[0]) / v[1],
        np.log(v[1]) * np.sqrt(v[1]),
        np.tan(v[0]) - np.tanh(v[1]),
        np.arctan(v[0] * v[1]),
        v[0] ** 2.5,
        v[1] ** v[0],
        2.0 ** v[0],
        1.0 / (1.0 + v[0] * v[0]),
        3.0 - v[1],
    ]
    rep = ad.fd_check(fn, np.array([0.7, 1.3]))
    assert rep.ok()


def test_batched_matches_pointwise():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(7, 5))
    fn = lambda v: ct_transition(v, 0.3)
    val, J, H = ad.derivatives_batch(fn, X)
    for b in range(7):
        single = ad.derivatives(fn, X[b])
        np.testing.assert_allclose(val[b], single.value, rtol=1e-15)
        np.testing.assert_allclose(J[b], single.jacobian, rtol=1e-14, atol=1e-15)
        np.testing.assert_allclose(H[b], single.hessian, rtol=1e-13, atol=1e-15)


def test_where_selects_branch_derivatives():
    fn = lambda v: [ad.where(v[0] > 0, v[0] ** 2, 3.0 * v[0])]
    assert ad.jacobian(fn, np.array([2.0]))[0, 0] == 4.0
    assert ad.jacobian(fn, np.array([-2.0]))[0, 0] == 3.0


def _model_functions():
    out = []
    for name, factory in REGISTERED_MODELS.items():
        m = factory()
        out += [(f"{name}.f", m.f, m.d), (f"{name}.h", m.h, m.d)]
    rm = random_model(np.random.default_rng(1), 3)
    out += [("random.f", rm.f, 3), ("random.h", rm.h, 3)]
    return out


@pytest.mark.parametrize("name,fn,d", _model_functions(), ids=lambda p: p if isinstance(p, str) else "")
def test_model_derivatives_vs_fd(name, fn, d):
    rng = np.random.default_rng(42)
    for _ in range(100):
        x = 2.0 * rng.normal(size=d)
        rep = ad.fd_check(fn, x)
        assert rep.ok(), (name, x, rep.max_jac_err, rep.max_hess_err)


@given(arrays(np.float64, 5, elements=st.floats(-5, 5)))
@settings(max_examples=50, deadline=None)
def test_hessian_symmetric_exactly(x):
    T = ad.hessian_tensor(lambda v: ct_transition(v, 0.1), x)
    assert np.array_equal(T, np.swapaxes(T, 1, 2))


@given(arrays(np.float64, 3, elements=st.floats(-3, 3)), arrays(np.float64, (2, 3), elements=st.floats(-3, 3)))
@settings(max_examples=50, deadline=None)
def test_affine_hessian_bit_zero(x, M):
    T = ad.hessian_tensor(lambda v: ad.matvec(M, v, [0.5, -0.5]), x)
    assert np.all(T == 0.0)
