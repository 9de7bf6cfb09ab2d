"""One regularized Newton step computed by a Kalman filter / RTS smoother sweep."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import GaussianBelief, Trajectory, as_measurements, symmetrize
from .errors import CovarianceNotPD, DimensionMismatch


@dataclass(frozen=True, eq=False)
class SmootherPass:
    """Per-step intermediates, indexed by time k = 0..N.

    Row 0 of the predicted / measurement-updated arrays and of K is NaN (no
    measurement at k = 0); row 0 of the filtered arrays is the modified prior.
    Row N of G is NaN.
    """

    xp: np.ndarray
    Pp: np.ndarray
    xy: np.ndarray
    Py: np.ndarray
    xf: np.ndarray
    Pf: np.ndarray
    xs: np.ndarray
    Ps: np.ndarray
    K: np.ndarray
    U: np.ndarray
    G: np.ndarray
    mu: np.ndarray
    Sigma: np.ndarray

    def smoothed(self, k):
        return GaussianBelief(self.xs[k], self.Ps[k])

    def filtered(self, k):
        return GaussianBelief(self.xf[k], self.Pf[k])


def _chol(A, k, stage):
    try:
        return np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        raise CovarianceNotPD(k, stage) from None


def newton_iks_iteration(aug, ys, joseph=False):
    """Forward filter with measurement and pseudo-measurement updates, then RTS smoothing.

    The pseudo update is done in information form,
    ``Pf = (Py^-1 + Lambda)^-1`` and ``xf = xy + Pf Lambda (xhat - xy)``,
    evaluated as ``Pf = L (I + L^T Lambda L)^-1 L^T`` with ``Py = L L^T`` so that
    a zero pseudo precision is a no-op rather than an infinite covariance.

    Returns the smoothed mean trajectory and the :class:`SmootherPass`.
    Raises :class:`CovarianceNotPD` at the first step whose factorization fails.
    """
    N, d = aug.N, aug.d
    m = aug.H.shape[1]
    if as_measurements(ys).values.shape != (N, m):
        raise DimensionMismatch(f"measurements do not match model ({N}, {m})")
    Y = aug.y_eff
    Q, R = aug.model.Q, aug.model.R
    F, b, H, c, Lam = aug.F, aug.b, aug.H, aug.c, aug.Lambda
    xhat = aug.nominal.states
    I_d = np.eye(d)

    nan = np.nan
    xp = np.full((N + 1, d), nan)
    Pp = np.full((N + 1, d, d), nan)
    xy = np.full((N + 1, d), nan)
    Py = np.full((N + 1, d, d), nan)
    xf = np.empty((N + 1, d))
    Pf = np.empty((N + 1, d, d))
    K = np.full((N + 1, d, m), nan)
    U = np.full((N + 1, d, d), nan)
    G = np.full((N + 1, d, d), nan)
    mu = np.full((N + 1, m), nan)
    Sig = np.full((N + 1, m, m), nan)
    Pp_chol = [None] * (N + 1)

    xf[0] = aug.tau0
    Pf[0] = aug.Omega0
    for k in range(1, N + 1):
        Fk = F[k - 1]
        xp[k] = Fk @ xf[k - 1] + b[k - 1]
        Pp[k] = symmetrize(Fk @ Pf[k - 1] @ Fk.T + Q)
        Pp_chol[k] = _chol(Pp[k], k, "prediction")

        Hk = H[k - 1]
        mu[k] = Hk @ xp[k] + c[k - 1]
        S = symmetrize(Hk @ Pp[k] @ Hk.T + R)
        Sig[k] = S
        _chol(S, k, "innovation")
        PHt = Pp[k] @ Hk.T
        Kk = np.linalg.solve(S, PHt.T).T
        K[k] = Kk
        xy[k] = xp[k] + Kk @ (Y[k - 1] - mu[k])
        if joseph:
            A = I_d - Kk @ Hk
            Py[k] = symmetrize(A @ Pp[k] @ A.T + Kk @ R @ Kk.T)
        else:
            Py[k] = symmetrize(Pp[k] - Kk @ S @ Kk.T)

        L = _chol(Py[k], k, "measurement update")
        M = symmetrize(I_d + L.T @ Lam[k] @ L)
        Mc = _chol(M, k, "pseudo update")
        W = np.linalg.solve(Mc, L.T)
        Pf[k] = symmetrize(W.T @ W)
        U[k] = Pf[k] @ Lam[k]
        xf[k] = xy[k] + U[k] @ (xhat[k] - xy[k])

    xs = np.empty((N + 1, d))
    Ps = np.empty((N + 1, d, d))
    xs[N] = xf[N]
    Ps[N] = Pf[N]
    for k in range(N - 1, -1, -1):
        Lp = Pp_chol[k + 1]
        FP = F[k] @ Pf[k]
        Gk = np.linalg.solve(Lp.T, np.linalg.solve(Lp, FP)).T
        G[k] = Gk
        xs[k] = xf[k] + Gk @ (xs[k + 1] - xp[k + 1])
        Ps[k] = symmetrize(Pf[k] + Gk @ (Ps[k + 1] - Pp[k + 1]) @ Gk.T)

    sp = SmootherPass(xp, Pp, xy, Py, xf, Pf, xs, Ps, K, U, G, mu, Sig)
    return Trajectory(xs), sp
