"""Benchmark models and trajectory simulation."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import partial

import numpy as np

from . import autodiff as ad
from .core import MeasurementSeq, NonlinearSSM, Trajectory, make_model
from .errors import IllPosedBearing

# below this |omega * dt| the sinc-type factors use their Taylor series
_SERIES_CUTOFF = 0.1


def _sinc_factors(a):
    """sin(a)/a and (1 - cos a)/a, smooth through a = 0.

    The series branch is evaluated on the original argument; the closed form on
    an argument replaced by 1 wherever the series is used, so no branch divides
    by zero and jets stay finite.
    """
    small = np.abs(ad.value_of(a)) < _SERIES_CUTOFF
    a2 = a * a
    s_ser = 1.0 + a2 * (-1 / 6 + a2 * (1 / 120 + a2 * (-1 / 5040 + a2 * (1 / 362880 - a2 / 39916800))))
    c_ser = a * (0.5 + a2 * (-1 / 24 + a2 * (1 / 720 + a2 * (-1 / 40320 + a2 / 3628800))))
    if np.all(small):
        return s_ser, c_ser
    safe = ad.where(small, 1.0, a)
    s_dir = ad.sin(safe) / safe
    c_dir = (1.0 - ad.cos(safe)) / safe
    return ad.where(small, s_ser, s_dir), ad.where(small, c_ser, c_dir)


def ct_transition(x, dt):
    """Constant-turn-rate motion of [px, py, vx, vy, omega] over one period dt."""
    px, py, vx, vy, w = x[0], x[1], x[2], x[3], x[4]
    a = w * dt
    s, c = _sinc_factors(a)
    sin_a, cos_a = ad.sin(a), ad.cos(a)
    return [
        px + dt * (s * vx - c * vy),
        py + dt * (c * vx + s * vy),
        cos_a * vx - sin_a * vy,
        sin_a * vx + cos_a * vy,
        w,
    ]


def ct_observation(x, sensors):
    """Bearing atan2(py - sy, px - sx) from each sensor to the target."""
    px, py = x[0], x[1]
    out = []
    for sx, sy in sensors:
        dx, dy = px - sx, py - sy
        if np.any((ad.value_of(dx) == 0) & (ad.value_of(dy) == 0)):
            raise IllPosedBearing(f"target coincides with sensor at ({sx}, {sy})")
        out.append(ad.arctan2(dy, dx))
    return out


def wrap_angle(a):
    """Map angles to [-pi, pi)."""
    return (np.asarray(a) + np.pi) % (2 * np.pi) - np.pi


def bearing_residual(y, hx):
    return wrap_angle(y - hx)


def ct_process_noise(dt, q_pos, q_omega):
    """Q for white-noise acceleration on (px, py, vx, vy) plus a random-walk turn rate."""
    Q = np.zeros((5, 5))
    blk = q_pos * np.array([[dt**3 / 3, dt**2 / 2], [dt**2 / 2, dt]])
    for i in (0, 1):
        Q[np.ix_([i, i + 2], [i, i + 2])] = blk
    Q[4, 4] = q_omega * dt
    return Q


@dataclass(frozen=True)
class CoordinatedTurnModel:
    dt: float = 0.1
    q_pos: float = 0.1
    q_omega: float = 0.01
    sensors: tuple = ((1.0, 1.0), (-1.5, 0.5))
    bearing_std: float = 0.25
    m0: tuple = (0.0, 0.0, 1.0, 0.0, 0.1)
    P0_diag: tuple = (0.5, 0.5, 0.5, 0.5, 0.05)
    wrap_bearings: bool = True
    _ssm: NonlinearSSM = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.bearing_std <= 0:
            raise ValueError("bearing_std must be positive")
        sensors = tuple((float(sx), float(sy)) for sx, sy in self.sensors)
        if not sensors:
            raise ValueError("at least one sensor is required")
        object.__setattr__(self, "sensors", sensors)
        ssm = make_model(
            d=5,
            m=len(sensors),
            f=partial(ct_transition, dt=float(self.dt)),
            h=partial(ct_observation, sensors=sensors),
            Q=ct_process_noise(self.dt, self.q_pos, self.q_omega),
            R=self.bearing_var * np.eye(len(sensors)),
            m0=np.array(self.m0, dtype=float),
            P0=np.diag(np.array(self.P0_diag, dtype=float)),
            meas_residual_fn=bearing_residual if self.wrap_bearings else None,
            name="coordinated-turn",
        )
        object.__setattr__(self, "_ssm", ssm)

    @property
    def bearing_var(self):
        return float(self.bearing_std) ** 2

    @property
    def ssm(self) -> NonlinearSSM:
        return self._ssm

    def config(self):
        return {
            "dt": self.dt,
            "q_pos": self.q_pos,
            "q_omega": self.q_omega,
            "sensors": ";".join(f"{sx:g},{sy:g}" for sx, sy in self.sensors),
            "bearing_std": self.bearing_std,
            "m0": ",".join(f"{v:g}" for v in self.m0),
            "P0_diag": ",".join(f"{v:g}" for v in self.P0_diag),
        }


def coordinated_turn(**kwargs) -> NonlinearSSM:
    return CoordinatedTurnModel(**kwargs).ssm


def _affine(A, c, x):
    return ad.matvec(A, x, c)


def _affine_derivatives(A, c, X):
    X = np.atleast_2d(X)
    B = X.shape[0]
    n, d = A.shape
    val = X @ A.T + c
    return val, np.broadcast_to(A, (B, n, d)).copy(), np.zeros((B, n, d, d))


def linear_gaussian(A, C, Q, R, m0, P0, offset=None, analytic=False) -> NonlinearSSM:
    """x_k = A x_{k-1} (+ offset) + q,  y_k = C x_k + r."""
    A = np.asarray(A, dtype=float)
    C = np.asarray(C, dtype=float)
    d, m = A.shape[0], C.shape[0]
    off = np.zeros(d) if offset is None else np.asarray(offset, dtype=float)
    zero_m = np.zeros(m)
    extra = {}
    if analytic:
        extra = dict(
            f_derivatives=partial(_affine_derivatives, A, off),
            h_derivatives=partial(_affine_derivatives, C, zero_m),
        )
    return make_model(
        d, m, partial(_affine, A, off), partial(_affine, C, zero_m), Q, R, m0, P0,
        name="linear-gaussian", **extra,
    )


def default_linear_gaussian(dt=0.1, q=0.1, r=0.05):
    """2-D constant-velocity model with position observations."""
    A = np.eye(4)
    A[0, 2] = A[1, 3] = dt
    C = np.zeros((2, 4))
    C[0, 0] = C[1, 1] = 1.0
    Q = ct_process_noise(dt, q, 1.0)[:4, :4]
    return linear_gaussian(A, C, Q, r * np.eye(2), np.zeros(4), np.eye(4))


@dataclass(frozen=True)
class SimOutput:
    true_states: Trajectory
    measurements: MeasurementSeq
    seed: int
    config: dict = field(default_factory=dict)


def simulate(model: NonlinearSSM, N, seed=0, noiseless=False, config=None) -> SimOutput:
    """Roll out the model with seeded Gaussian noise (numpy PCG64 generator)."""
    if N < 1:
        raise ValueError("N must be at least 1")
    rng = np.random.default_rng(seed)
    d, m = model.d, model.m
    X = np.empty((N + 1, d))
    Y = np.empty((N, m))
    if noiseless:
        X[0] = model.m0
    else:
        X[0] = model.m0 + model.P0_chol @ rng.standard_normal(d)
    for k in range(1, N + 1):
        X[k] = model.transition(X[k - 1])
        if not noiseless:
            X[k] += model.Q_chol @ rng.standard_normal(d)
        Y[k - 1] = model.observation(X[k])
        if not noiseless:
            Y[k - 1] += model.R_chol @ rng.standard_normal(m)
    return SimOutput(Trajectory(X), MeasurementSeq(Y), int(seed), dict(config or {}))


def prior_rollout(model: NonlinearSSM, N) -> Trajectory:
    """Noise-free rollout from the prior mean."""
    X = np.empty((N + 1, model.d))
    X[0] = model.m0
    for k in range(1, N + 1):
        X[k] = model.transition(X[k - 1])
    return Trajectory(X)


def position_rmse(traj, truth, idx=(0, 1)):
    a = traj.states if isinstance(traj, Trajectory) else np.asarray(traj)
    b = truth.states if isinstance(truth, Trajectory) else np.asarray(truth)
    diff = a[:, list(idx)] - b[:, list(idx)]
    return float(np.sqrt(np.mean(np.sum(diff**2, axis=1))))


REGISTERED_MODELS = {
    "coordinated-turn": coordinated_turn,
    "linear-gaussian": default_linear_gaussian,
}
