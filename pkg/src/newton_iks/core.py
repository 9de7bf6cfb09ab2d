"""Domain types: models, trajectories, measurement sequences, Gaussian beliefs."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DimensionMismatch, NotPositiveDefinite

SYM_TOL = 1e-9


def symmetrize(P):
    P = np.asarray(P, dtype=float)
    return 0.5 * (P + np.swapaxes(P, -1, -2))


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def cholesky(A, name="matrix"):
    """Lower Cholesky factor of a symmetric matrix, or NotPositiveDefinite."""
    A = np.asarray(A, dtype=float)
    if not np.all(np.isfinite(A)):
        raise NotPositiveDefinite(name, "non-finite entries")
    try:
        return np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(name, str(exc)) from None


@dataclass(frozen=True)
class Trajectory:
    """States x_0..x_N stored as an (N+1, d) array."""

    states: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.states, dtype=float)
        if s.ndim != 2:
            raise DimensionMismatch(f"trajectory must be 2-D (N+1, d), got shape {s.shape}")
        if s.shape[0] < 2:
            raise DimensionMismatch("trajectory needs N >= 1 (at least two states)")
        object.__setattr__(self, "states", _frozen(s))

    @property
    def N(self):
        return self.states.shape[0] - 1

    @property
    def d(self):
        return self.states.shape[1]

    def flat(self):
        return self.states.reshape(-1).copy()

    @classmethod
    def from_flat(cls, v, d):
        return cls(np.asarray(v, dtype=float).reshape(-1, d))

    def __add__(self, other):
        return Trajectory(self.states + _states(other))

    def __sub__(self, other):
        return Trajectory(self.states - _states(other))

    def __len__(self):
        return self.states.shape[0]


@dataclass(frozen=True)
class MeasurementSeq:
    """Measurements y_1..y_N stored as an (N, m) array; row 0 holds y_1."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] < 1:
            raise DimensionMismatch(f"measurements must be (N, m) with N >= 1, got {v.shape}")
        object.__setattr__(self, "values", _frozen(v))

    @property
    def N(self):
        return self.values.shape[0]

    @property
    def m(self):
        return self.values.shape[1]


def _states(x):
    return x.states if isinstance(x, Trajectory) else np.asarray(x, dtype=float)


def as_trajectory(x):
    return x if isinstance(x, Trajectory) else Trajectory(x)


def as_measurements(y):
    return y if isinstance(y, MeasurementSeq) else MeasurementSeq(y)


@dataclass(frozen=True)
class GaussianBelief:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = symmetrize(self.cov)
        if cov.shape != (mean.shape[0], mean.shape[0]):
            raise DimensionMismatch(f"cov shape {cov.shape} does not match mean {mean.shape}")
        object.__setattr__(self, "mean", _frozen(mean))
        object.__setattr__(self, "cov", _frozen(cov))


@dataclass(frozen=True, eq=False)
class NonlinearSSM:
    """Additive-Gaussian state-space model x_k = f(x_{k-1}) + q, y_k = h(x_k) + r.

    ``f`` and ``h`` follow the component convention of :mod:`newton_iks.autodiff`:
    they receive ``x`` indexable by state component (``x[i]`` may be a float, a
    1-D batch array, or a jet) and return a sequence of output components.

    ``meas_residual_fn(y, hx)`` replaces the plain difference ``y - hx`` for
    measurement spaces that are not Euclidean (angles); it must agree with the
    difference up to a locally constant offset.

    ``f_derivatives`` / ``h_derivatives`` are optional analytic replacements for
    autodiff; each maps a (B, d) batch to ``(value, jacobian, hessian)`` with
    shapes (B, n), (B, n, d), (B, n, d, d).
    """

    d: int
    m: int
    f: Callable
    h: Callable
    Q: np.ndarray
    R: np.ndarray
    m0: np.ndarray
    P0: np.ndarray
    f_derivatives: Optional[Callable] = None
    h_derivatives: Optional[Callable] = None
    meas_residual_fn: Optional[Callable] = None
    name: str = "model"
    Q_chol: np.ndarray = field(init=False, repr=False)
    R_chol: np.ndarray = field(init=False, repr=False)
    P0_chol: np.ndarray = field(init=False, repr=False)
    Q_inv: np.ndarray = field(init=False, repr=False)
    R_inv: np.ndarray = field(init=False, repr=False)
    P0_inv: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        d, m = int(self.d), int(self.m)
        if d < 1 or m < 1:
            raise DimensionMismatch(f"state_dim and meas_dim must be positive, got d={d}, m={m}")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "m", m)
        shapes = {"Q": (d, d), "R": (m, m), "P0": (d, d), "m0": (d,)}
        for key, shape in shapes.items():
            arr = np.asarray(getattr(self, key), dtype=float)
            if arr.shape != shape:
                raise DimensionMismatch(f"{key} has shape {arr.shape}, expected {shape}")
            object.__setattr__(self, key, _frozen(arr))
        for key in ("Q", "R", "P0"):
            A = getattr(self, key)
            if np.max(np.abs(A - A.T)) > SYM_TOL * max(1.0, np.max(np.abs(A))):
                raise NotPositiveDefinite(key, "not symmetric")
            L = cholesky(A, key)
            inv = symmetrize(_chol_inverse(L))
            object.__setattr__(self, f"{key}_chol", _frozen(L))
            object.__setattr__(self, f"{key}_inv", _frozen(inv))

    def transition(self, x):
        from .autodiff import evaluate

        return evaluate(self.f, x)

    def observation(self, x):
        from .autodiff import evaluate

        return evaluate(self.h, x)

    def transition_derivatives(self, X):
        """Value, Jacobian and Hessian tensor of f at every row of X (B, d)."""
        from .autodiff import derivatives_batch

        if self.f_derivatives is not None:
            return self.f_derivatives(np.atleast_2d(X))
        return derivatives_batch(self.f, X)

    def observation_derivatives(self, X):
        from .autodiff import derivatives_batch

        if self.h_derivatives is not None:
            return self.h_derivatives(np.atleast_2d(X))
        return derivatives_batch(self.h, X)

    def meas_residual(self, y, hx):
        if self.meas_residual_fn is None:
            return y - hx
        return self.meas_residual_fn(y, hx)

    def check_data(self, traj, ys=None):
        x = _states(traj)
        if x.ndim != 2 or x.shape[1] != self.d:
            raise DimensionMismatch(f"trajectory shape {x.shape} incompatible with d={self.d}")
        if ys is not None:
            y = ys.values if isinstance(ys, MeasurementSeq) else np.asarray(ys, dtype=float)
            if y.ndim != 2 or y.shape[1] != self.m:
                raise DimensionMismatch(f"measurement shape {y.shape} incompatible with m={self.m}")
            if y.shape[0] != x.shape[0] - 1:
                raise DimensionMismatch(
                    f"{y.shape[0]} measurements for a trajectory with N={x.shape[0] - 1}"
                )


def _chol_inverse(L):
    n = L.shape[0]
    Linv = np.linalg.solve(L, np.eye(n))
    return Linv.T @ Linv


def make_model(d, m, f, h, Q, R, m0, P0, **kwargs):
    """Validate dimensions and SPD-ness of Q, R, P0 and cache their factors."""
    return NonlinearSSM(d=d, m=m, f=f, h=h, Q=Q, R=R, m0=m0, P0=P0, **kwargs)


def traj_diff_norm(a, b):
    """max_k ||a_k - b_k||_inf."""
    sa, sb = _states(a), _states(b)
    if sa.shape != sb.shape:
        raise DimensionMismatch(f"trajectory shapes differ: {sa.shape} vs {sb.shape}")
    return float(np.max(np.abs(sa - sb))) if sa.size else 0.0
