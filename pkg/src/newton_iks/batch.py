"""Dense batch Newton step over the stacked (N+1)*d decision vector."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .core import Trajectory, as_measurements, as_trajectory, symmetrize
from .errors import DimensionMismatch, HessianNotPD


@dataclass(frozen=True, eq=False)
class DenseSystem:
    """Gradient and Hessian of L at a nominal; ``diag``/``lower`` hold the nonzero blocks."""

    grad: np.ndarray  # ((N+1)*d,)
    diag: np.ndarray  # (N+1, d, d)
    lower: np.ndarray  # (N, d, d); lower[k] is the (k+1, k) block
    N: int
    d: int

    @property
    def hess(self):
        return dense_from_blocks(self.diag, self.lower)


def dense_from_blocks(diag, lower):
    n_blk, d = diag.shape[:2]
    H = np.zeros((n_blk, d, n_blk, d))
    idx = np.arange(n_blk)
    H[idx, :, idx, :] = diag
    H[idx[1:], :, idx[:-1], :] = lower
    H[idx[:-1], :, idx[1:], :] = np.swapaxes(lower, -1, -2)
    return H.reshape(n_blk * d, n_blk * d)


def assemble_dense(model, nominal, ys) -> DenseSystem:
    """Gradient and block-tridiagonal Hessian of L, term by term."""
    X = as_trajectory(nominal).states
    Y = as_measurements(ys).values
    model.check_data(X, Y)
    N, d = X.shape[0] - 1, X.shape[1]
    Qi, Ri, P0i = model.Q_inv, model.R_inv, model.P0_inv

    fx, F, Ft = model.transition_derivatives(X[:-1])
    hx, H, Ht = model.observation_derivatives(X[1:])
    w = (X[1:] - fx) @ Qi  # Q^-1 r_k, Q symmetric
    v = model.meas_residual(Y, hx) @ Ri

    g = np.zeros((N + 1, d))
    g[0] = P0i @ (X[0] - model.m0)
    g[1:] += w
    g[:-1] -= np.einsum("kji,kj->ki", F, w)
    g[1:] -= np.einsum("kji,kj->ki", H, v)

    D = np.zeros((N + 1, d, d))
    D[0] += P0i
    D[1:] += Qi
    D[:-1] += np.einsum("kai,ab,kbj->kij", F, Qi, F) - np.einsum("kaij,ka->kij", Ft, w)
    D[1:] += np.einsum("kai,ab,kbj->kij", H, Ri, H) - np.einsum("kaij,ka->kij", Ht, v)
    D = symmetrize(D)
    lower = -np.einsum("ab,kbj->kaj", Qi, F)
    return DenseSystem(g.reshape(-1), D, lower, N, d)


def solve_block_tridiagonal(diag, lower, rhs):
    """Solve a symmetric block-tridiagonal system by block LDL^T; raises if not SPD."""
    n_blk, d = diag.shape[:2]
    z = rhs.reshape(n_blk, d).copy()
    chols = []
    S = diag[0]
    for k in range(n_blk):
        if k > 0:
            O = lower[k - 1]
            T = scipy.linalg.cho_solve((chols[-1], True), O.T)
            S = diag[k] - O @ T
            z[k] -= O @ scipy.linalg.cho_solve((chols[-1], True), z[k - 1])
        try:
            chols.append(np.linalg.cholesky(symmetrize(S)))
        except np.linalg.LinAlgError:
            raise HessianNotPD(float("nan")) from None
    x = np.empty_like(z)
    x[-1] = scipy.linalg.cho_solve((chols[-1], True), z[-1])
    for k in range(n_blk - 2, -1, -1):
        x[k] = scipy.linalg.cho_solve((chols[k], True), z[k] - lower[k].T @ x[k + 1])
    return x.reshape(-1)


def newton_direction(system: DenseSystem, lam, structured=False):
    """-(hess + lam I)^-1 grad, via a dense Cholesky factorization by default."""
    lam = float(lam)
    if lam < 0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    if structured:
        diag = system.diag + lam * np.eye(system.d)
        try:
            return -solve_block_tridiagonal(diag, system.lower, system.grad)
        except HessianNotPD:
            raise HessianNotPD(lam) from None
    A = system.hess
    A.flat[:: A.shape[0] + 1] += lam
    try:
        cf = scipy.linalg.cho_factor(A, lower=True, overwrite_a=True, check_finite=False)
    except np.linalg.LinAlgError:
        raise HessianNotPD(lam) from None
    step = scipy.linalg.cho_solve(cf, system.grad, check_finite=False)
    if not np.all(np.isfinite(step)):
        raise HessianNotPD(lam)
    return -step


def batch_newton_step(system: DenseSystem, nominal, lam=0.0, structured=False) -> Trajectory:
    X = as_trajectory(nominal).states
    if X.shape != (system.N + 1, system.d):
        raise DimensionMismatch(f"nominal {X.shape} does not match system ({system.N + 1}, {system.d})")
    p = newton_direction(system, lam, structured)
    return Trajectory(X + p.reshape(X.shape))


def quadratic_decrease_dense(system: DenseSystem, step, lam):
    """-(g^T p + p^T (H + lam I) p / 2) for a flat step p."""
    p = np.asarray(step, dtype=float).reshape(-1)
    d, n_blk = system.d, system.N + 1
    P = p.reshape(n_blk, d)
    Hp = np.einsum("kij,kj->ki", system.diag, P)
    Hp[1:] += np.einsum("kij,kj->ki", system.lower, P[:-1])
    Hp[:-1] += np.einsum("kji,kj->ki", system.lower, P[1:])
    return -float(system.grad @ p) - 0.5 * float(p @ Hp.reshape(-1)) - 0.5 * lam * float(p @ p)
