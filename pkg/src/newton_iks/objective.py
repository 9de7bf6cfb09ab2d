"""The MAP objective L and its regularized quadratic model around a nominal."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .core import as_measurements, as_trajectory


@dataclass(frozen=True)
class CostBreakdown:
    prior_term: float
    transition_term: float
    observation_term: float
    total: float


def _half_sq(L, r):
    """0.5 * sum_k r_k^T (L L^T)^{-1} r_k for residual rows r (K, n)."""
    z = solve_triangular(L, np.atleast_2d(r).T, lower=True)
    return 0.5 * float(np.sum(z * z))


def eval_cost(model, traj, ys) -> CostBreakdown:
    X = as_trajectory(traj).states
    Y = as_measurements(ys).values
    model.check_data(X, Y)
    prior = _half_sq(model.P0_chol, X[0] - model.m0)
    trans = _half_sq(model.Q_chol, X[1:] - model.transition(X[:-1]))
    obs = _half_sq(model.R_chol, model.meas_residual(Y, model.observation(X[1:])))
    return CostBreakdown(prior, trans, obs, prior + trans + obs)


def cost(model, traj, ys) -> float:
    return eval_cost(model, traj, ys).total


def _check(aug, X, Y):
    aug.model.check_data(X, Y)
    if X.shape != aug.nominal.states.shape:
        from .errors import DimensionMismatch

        raise DimensionMismatch(f"trajectory {X.shape} vs nominal {aug.nominal.states.shape}")


def eval_quadratic_cost(aug, traj, ys) -> float:
    """Value of the regularized quadratic model at ``traj``."""
    X = as_trajectory(traj).states
    Y = as_measurements(ys).values
    _check(aug, X, Y)
    model = aug.model
    dx = aug.nominal.states - X
    prior = _half_sq(model.P0_chol, X[0] - model.m0)
    pseudo = 0.5 * float(np.einsum("ki,kij,kj->", dx, aug.Lambda, dx))
    obs = _half_sq(model.R_chol, aug.y_eff - np.einsum("kij,kj->ki", aug.H, X[1:]) - aug.c)
    trans = _half_sq(model.Q_chol, X[1:] - np.einsum("kij,kj->ki", aug.F, X[:-1]) - aug.b)
    return prior + pseudo + obs + trans


def _half_sq_decrease(L, r, u):
    """0.5||r||^2_W - 0.5||r + u||^2_W computed without cancellation."""
    a = solve_triangular(L, np.atleast_2d(r).T, lower=True)
    c = solve_triangular(L, np.atleast_2d(u).T, lower=True)
    return -float(np.sum(a * c)) - 0.5 * float(np.sum(c * c))


def quadratic_decrease(aug, traj, ys) -> float:
    """Expected reduction L~(nominal) - L~(traj), summed term by term.

    Each affine term contributes -(r^T W u + u^T W u / 2) with u the change of
    its residual, so the result keeps full relative accuracy even when both
    model values are large and nearly equal.
    """
    X = as_trajectory(traj).states
    Y = as_measurements(ys).values
    _check(aug, X, Y)
    model = aug.model
    Xh = aug.nominal.states
    D = X - Xh
    out = _half_sq_decrease(model.P0_chol, Xh[0] - model.m0, D[0])
    out -= 0.5 * float(np.einsum("ki,kij,kj->", D, aug.Lambda, D))
    r_obs = aug.y_eff - np.einsum("kij,kj->ki", aug.H, Xh[1:]) - aug.c
    out += _half_sq_decrease(model.R_chol, r_obs, -np.einsum("kij,kj->ki", aug.H, D[1:]))
    r_tr = Xh[1:] - np.einsum("kij,kj->ki", aug.F, Xh[:-1]) - aug.b
    u_tr = D[1:] - np.einsum("kij,kj->ki", aug.F, D[:-1])
    out += _half_sq_decrease(model.Q_chol, r_tr, u_tr)
    return out


def quadratic_derivatives(aug, ys):
    """Gradient and dense Hessian of the quadratic model at its nominal.

    Obtained by differentiating each quadratic term by hand; used to check
    that the model reproduces the gradient and regularized Hessian of L.
    """
    model = aug.model
    aug.model.check_data(aug.nominal, ys)
    Y = aug.y_eff
    Xh = aug.nominal.states
    N, d = aug.N, aug.d
    n = (N + 1) * d
    g = np.zeros((N + 1, d))
    Hs = np.zeros((n, n))

    def blk(i, j):
        return Hs[i * d : (i + 1) * d, j * d : (j + 1) * d]

    P0i, Qi, Ri = model.P0_inv, model.Q_inv, model.R_inv
    g[0] += P0i @ (Xh[0] - model.m0)
    blk(0, 0)[:] += P0i
    for k in range(N + 1):
        blk(k, k)[:] += aug.Lambda[k]
    for k in range(1, N + 1):
        Hk, F = aug.H[k - 1], aug.F[k - 1]
        r_obs = Y[k - 1] - Hk @ Xh[k] - aug.c[k - 1]
        g[k] -= Hk.T @ Ri @ r_obs
        blk(k, k)[:] += Hk.T @ Ri @ Hk
        r_tr = Xh[k] - F @ Xh[k - 1] - aug.b[k - 1]
        g[k] += Qi @ r_tr
        g[k - 1] -= F.T @ Qi @ r_tr
        blk(k, k)[:] += Qi
        blk(k - 1, k - 1)[:] += F.T @ Qi @ F
        blk(k, k - 1)[:] -= Qi @ F
        blk(k - 1, k)[:] -= F.T @ Qi
    return g.reshape(-1), Hs
