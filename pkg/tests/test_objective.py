import numpy as np
import pytest

from newton_iks.batch import assemble_dense
from newton_iks.core import MeasurementSeq, Trajectory, make_model
from newton_iks.errors import DimensionMismatch
from newton_iks.linearize import build_modified_model
from newton_iks.objective import (
    eval_cost,
    eval_quadratic_cost,
    quadratic_decrease,
    quadratic_derivatives,
)

from helpers import brute_cost, random_linear_model, random_model, rel_close, simulate_data


def ident(x):
    return [x[0]]


def test_exact_fit_has_zero_cost():
    rng = np.random.default_rng(0)
    model = random_model(rng, 2)
    X = np.empty((6, 2))
    X[0] = model.m0
    for k in range(1, 6):
        X[k] = model.transition(X[k - 1])
    Y = model.observation(X[1:])
    c = eval_cost(model, Trajectory(X), MeasurementSeq(Y))
    assert c.total == 0.0


def test_scalar_hand_case():
    model = make_model(1, 1, ident, ident, [[1.0]], [[1.0]], [0.0], [[1.0]])
    c = eval_cost(model, Trajectory([[0.0], [1.0]]), MeasurementSeq([[0.0]]))
    assert c.total == 1.0
    assert (c.prior_term, c.transition_term, c.observation_term) == (0.0, 0.5, 0.5)


def test_cost_matches_brute_force_loop():
    rng = np.random.default_rng(1)
    model = random_model(rng, 2)
    X, Y, _ = simulate_data(rng, model, 3)
    c = eval_cost(model, X, Y)
    assert abs(c.total - brute_cost(model, X.states, Y.values)) <= 1e-12 * abs(c.total)
    assert abs(c.total - (c.prior_term + c.transition_term + c.observation_term)) <= 1e-12 * c.total
    assert min(c.prior_term, c.transition_term, c.observation_term) >= 0


def test_cost_sum_order_invariant():
    rng = np.random.default_rng(2)
    model = random_model(rng, 3)
    X, Y, _ = simulate_data(rng, model, 10)
    c = eval_cost(model, X, Y)
    reordered = c.observation_term + c.transition_term + c.prior_term
    assert abs(reordered - c.total) <= 1e-12 * c.total


def test_cost_dimension_errors():
    rng = np.random.default_rng(3)
    model = random_model(rng, 2)
    X, Y, _ = simulate_data(rng, model, 4)
    with pytest.raises(DimensionMismatch):
        eval_cost(model, X, MeasurementSeq(Y.values[:-1]))
    with pytest.raises(DimensionMismatch):
        eval_cost(model, Trajectory(np.zeros((5, 3))), Y)


def test_quadratic_model_reproduces_cost_at_nominal():
    rng = np.random.default_rng(4)
    model = random_model(rng, 2)
    _, Y, nom = simulate_data(rng, model, 6)
    aug = build_modified_model(model, nom, Y, 0.7)
    Lq = eval_quadratic_cost(aug, nom, Y)
    L = eval_cost(model, nom, Y).total
    assert abs(Lq - L) <= 1e-12 * L


def test_linear_model_quadratic_equals_cost_everywhere():
    rng = np.random.default_rng(5)
    model = random_linear_model(rng, 3, 2)
    _, Y, nom = simulate_data(rng, model, 8)
    aug = build_modified_model(model, nom, Y, 0.0)
    assert np.all(aug.Lambda == 0.0)
    for _ in range(5):
        x = Trajectory(nom.states + rng.normal(size=nom.states.shape))
        L, Lq = eval_cost(model, x, Y).total, eval_quadratic_cost(aug, x, Y)
        assert abs(L - Lq) <= 1e-10 * L


def test_quadratic_matches_dense_taylor_expansion():
    rng = np.random.default_rng(6)
    model = random_model(rng, 2)
    _, Y, nom = simulate_data(rng, model, 3)
    lam = 50.0
    aug = build_modified_model(model, nom, Y, lam)
    system = assemble_dense(model, nom, Y)
    L0 = eval_cost(model, nom, Y).total
    for _ in range(5):
        delta = 0.3 * rng.normal(size=nom.states.size)
        taylor = L0 + system.grad @ delta + 0.5 * delta @ (system.hess + lam * np.eye(delta.size)) @ delta
        Lq = eval_quadratic_cost(aug, Trajectory(nom.states + delta.reshape(nom.states.shape)), Y)
        assert abs(Lq - taylor) <= 1e-8 * abs(taylor)


def test_quadratic_decrease_matches_difference():
    rng = np.random.default_rng(7)
    model = random_model(rng, 3)
    _, Y, nom = simulate_data(rng, model, 12)
    aug = build_modified_model(model, nom, Y, 2.0)
    x = Trajectory(nom.states + 0.2 * rng.normal(size=nom.states.shape))
    direct = eval_quadratic_cost(aug, nom, Y) - eval_quadratic_cost(aug, x, Y)
    assert abs(quadratic_decrease(aug, x, Y) - direct) <= 1e-10 * eval_quadratic_cost(aug, nom, Y)
    assert quadratic_decrease(aug, nom, Y) == 0.0


@pytest.mark.parametrize("seed", range(5))
def test_quadratic_derivatives_match_objective(seed):
    rng = np.random.default_rng(100 + seed)
    model = random_model(rng, 1 + seed % 3)
    _, Y, nom = simulate_data(rng, model, 5)
    lam = 20.0 + seed
    aug = build_modified_model(model, nom, Y, lam)
    g, H = quadratic_derivatives(aug, Y)
    system = assemble_dense(model, nom, Y)
    assert rel_close(g, system.grad, 1e-8)
    assert rel_close(H, system.hess + lam * np.eye(H.shape[0]), 1e-8)
