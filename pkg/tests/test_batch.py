import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from newton_iks.batch import (
    assemble_dense,
    batch_newton_step,
    dense_from_blocks,
    newton_direction,
    quadratic_decrease_dense,
    solve_block_tridiagonal,
)
from newton_iks.errors import DimensionMismatch, HessianNotPD
from newton_iks.objective import cost
from newton_iks.core import Trajectory

from helpers import brute_cost, fd_gradient, fd_hessian, random_linear_model, random_model, rel_close, simulate_data


def test_hessian_is_block_tridiagonal_and_symmetric():
    rng = np.random.default_rng(0)
    model = random_model(rng, 2)
    _, Y, nom = simulate_data(rng, model, 6)
    H = assemble_dense(model, nom, Y).hess
    assert np.array_equal(H, H.T)
    d = 2
    for i in range(7):
        for j in range(7):
            if abs(i - j) > 1:
                assert np.all(H[i * d:(i + 1) * d, j * d:(j + 1) * d] == 0)


@pytest.mark.parametrize("seed", range(4))
def test_gradient_and_hessian_match_finite_differences(seed):
    rng = np.random.default_rng(seed)
    model = random_model(rng, 1 + seed % 3)
    _, Y, nom = simulate_data(rng, model, 4)
    system = assemble_dense(model, nom, Y)
    fun = lambda v: brute_cost(model, v.reshape(nom.states.shape), Y.values)
    x = nom.flat()
    assert rel_close(system.grad, fd_gradient(fun, x, 1e-6), 1e-6)
    assert rel_close(system.hess, fd_hessian(fun, x, 1e-4), 1e-4)


def test_quadratic_objective_solved_exactly():
    rng = np.random.default_rng(1)
    model = random_linear_model(rng, 2)
    _, Y, nom = simulate_data(rng, model, 10, jitter=3.0)
    system = assemble_dense(model, nom, Y)
    x = batch_newton_step(system, nom)
    assert np.max(np.abs(assemble_dense(model, x, Y).grad)) <= 1e-9
    actual = cost(model, nom, Y) - cost(model, x, Y)
    predicted = quadratic_decrease_dense(system, x.flat() - nom.flat(), 0.0)
    assert abs(actual - predicted) <= 1e-9 * abs(actual)


def test_large_lambda_step_bounded():
    rng = np.random.default_rng(2)
    model = random_model(rng, 3)
    _, Y, nom = simulate_data(rng, model, 8)
    system = assemble_dense(model, nom, Y)
    p = newton_direction(system, 1e12)
    assert np.linalg.norm(p) <= 1.01 * np.linalg.norm(system.grad) / 1e12


def test_indefinite_raises():
    rng = np.random.default_rng(3)
    model = random_model(rng, 2)
    _, Y, nom = simulate_data(rng, model, 5)
    system = assemble_dense(model, nom, Y)
    shift = np.linalg.eigvalsh(system.hess).min() - 1.0
    bad = type(system)(system.grad, system.diag - (shift + 2.0) * np.eye(2), system.lower, system.N, system.d)
    with pytest.raises(HessianNotPD):
        newton_direction(bad, 0.0)
    with pytest.raises(HessianNotPD):
        newton_direction(bad, 0.0, structured=True)
    with pytest.raises(ValueError):
        newton_direction(system, -1.0)


def test_dimension_mismatch():
    rng = np.random.default_rng(4)
    model = random_model(rng, 2)
    _, Y, nom = simulate_data(rng, model, 5)
    system = assemble_dense(model, nom, Y)
    with pytest.raises(DimensionMismatch):
        batch_newton_step(system, Trajectory(np.zeros((4, 2))))


@settings(max_examples=30, deadline=None)
@given(n_blk=st.integers(1, 8), d=st.integers(1, 3), seed=st.integers(0, 10_000))
def test_structured_solve_equals_dense(n_blk, d, seed):
    rng = np.random.default_rng(seed)
    diag = np.array([np.eye(d) * (3.0 * d) for _ in range(n_blk)]) + 0.1 * rng.normal(size=(n_blk, d, d))
    diag = 0.5 * (diag + np.swapaxes(diag, 1, 2))
    lower = rng.uniform(-1, 1, size=(n_blk - 1, d, d))
    A = dense_from_blocks(diag, lower)
    rhs = rng.normal(size=n_blk * d)
    x = solve_block_tridiagonal(diag, lower, rhs)
    np.testing.assert_allclose(A @ x, rhs, atol=1e-10)


def test_structured_and_dense_directions_agree():
    rng = np.random.default_rng(5)
    model = random_model(rng, 3)
    _, Y, nom = simulate_data(rng, model, 30)
    system = assemble_dense(model, nom, Y)
    a = newton_direction(system, 50.0)
    b = newton_direction(system, 50.0, structured=True)
    np.testing.assert_allclose(a, b, rtol=1e-9, atol=1e-12)
