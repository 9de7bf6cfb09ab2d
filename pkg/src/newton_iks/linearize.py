"""Second-order expansion of the MAP objective as an affine model with pseudo measurements.

Around a nominal trajectory the transition and observation terms are replaced
by their affinizations plus quadratic penalties ``||xhat_k - x_k||^2_{Psi}``
and ``||xhat_k - x_k||^2_{Gamma}`` that carry the curvature of f and h. The
penalties are stored as precision matrices ``Lambda_k`` so that a vanishing
curvature (linear model, lambda = 0) is representable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve

from .autodiff import tensor_dot
from .core import NonlinearSSM, Trajectory, as_measurements, as_trajectory, symmetrize
from .errors import PriorNotPD


@dataclass(frozen=True)
class TransitionExpansion:
    F: np.ndarray  # (N, d, d); F[k-1] = F_x(xhat_{k-1})
    b: np.ndarray  # (N, d)
    Psi: np.ndarray  # (N, d, d); Psi[k-1] multiplies (xhat_{k-1} - x_{k-1})
    fx: np.ndarray  # (N, d); f(xhat_{k-1})


@dataclass(frozen=True)
class ObservationExpansion:
    H: np.ndarray  # (N, m, d); H[k-1] = H_x(xhat_k)
    c: np.ndarray  # (N, m)
    Gamma: np.ndarray  # (N, d, d)
    hx: np.ndarray  # (N, m)
    y_eff: np.ndarray  # (N, m); measurements expressed relative to h(xhat)


def expand_transition(model: NonlinearSSM, nominal) -> TransitionExpansion:
    X = as_trajectory(nominal).states
    fx, F, T = model.transition_derivatives(X[:-1])
    resid = X[1:] - fx
    w = cho_solve((model.Q_chol, True), resid.T).T
    Psi = symmetrize(-tensor_dot(T, w))
    b = fx - np.einsum("kij,kj->ki", F, X[:-1])
    return TransitionExpansion(F, b, Psi, fx)


def expand_observation(model: NonlinearSSM, nominal, ys) -> ObservationExpansion:
    X = as_trajectory(nominal).states
    Y = as_measurements(ys).values
    hx, H, T = model.observation_derivatives(X[1:])
    innov = model.meas_residual(Y, hx)
    # wrapped residuals shift y by a constant per step so the affine model sees y - h(xhat) = innov
    y_eff = Y if model.meas_residual_fn is None else hx + innov
    v = cho_solve((model.R_chol, True), innov.T).T
    Gamma = symmetrize(-tensor_dot(T, v))
    c = hx - np.einsum("kij,kj->ki", H, X[1:])
    return ObservationExpansion(H, c, Gamma, hx, y_eff)


@dataclass(frozen=True, eq=False)
class AffineAugmentedSSM:
    """Affine model with pseudo measurements xhat_k of precision Lambda[k], k = 0..N.

    ``tau0``/``Omega0`` form the modified prior that absorbs the k = 0 pseudo
    measurement into the original prior.
    """

    model: NonlinearSSM
    nominal: Trajectory
    F: np.ndarray
    b: np.ndarray
    H: np.ndarray
    c: np.ndarray
    Psi: np.ndarray
    Gamma: np.ndarray
    Lambda: np.ndarray  # (N+1, d, d)
    lam: float
    tau0: np.ndarray
    Omega0: np.ndarray
    y_eff: np.ndarray

    @property
    def N(self):
        return self.F.shape[0]

    @property
    def d(self):
        return self.F.shape[1]


@dataclass(frozen=True, eq=False)
class Expansion:
    """Lambda-independent part of the modified model; reused across a lambda ladder."""

    model: NonlinearSSM
    nominal: Trajectory
    trans: TransitionExpansion
    obs: ObservationExpansion

    def curvature(self):
        """Psi_k + Gamma_k per state index 0..N (no regularization)."""
        N, d = self.trans.F.shape[:2]
        C = np.zeros((N + 1, d, d))
        C[:-1] += self.trans.Psi
        C[1:] += self.obs.Gamma
        return C

    def with_lambda(self, lam) -> AffineAugmentedSSM:
        lam = float(lam)
        if lam < 0:
            raise ValueError(f"lambda must be nonnegative, got {lam}")
        model = self.model
        d = model.d
        Lam = symmetrize(self.curvature() + lam * np.eye(d))
        x0 = self.nominal.states[0]
        try:
            Lc = np.linalg.cholesky(model.P0_inv + Lam[0])
        except np.linalg.LinAlgError:
            raise PriorNotPD(f"lambda={lam:g}") from None
        Omega0 = symmetrize(cho_solve((Lc, True), np.eye(d)))
        tau0 = cho_solve((Lc, True), model.P0_inv @ model.m0 + Lam[0] @ x0)
        return AffineAugmentedSSM(
            model=model,
            nominal=self.nominal,
            F=self.trans.F,
            b=self.trans.b,
            H=self.obs.H,
            c=self.obs.c,
            Psi=self.trans.Psi,
            Gamma=self.obs.Gamma,
            Lambda=Lam,
            lam=lam,
            tau0=tau0,
            Omega0=Omega0,
            y_eff=self.obs.y_eff,
        )


def expand(model: NonlinearSSM, nominal, ys) -> Expansion:
    nominal = as_trajectory(nominal)
    model.check_data(nominal, ys)
    return Expansion(model, nominal, expand_transition(model, nominal), expand_observation(model, nominal, ys))


def build_modified_model(model: NonlinearSSM, nominal, ys, lam=0.0) -> AffineAugmentedSSM:
    return expand(model, nominal, ys).with_lambda(lam)
