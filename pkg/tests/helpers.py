"""Random nonlinear test models and independent brute-force oracles."""

import numpy as np

from newton_iks import autodiff as ad
from newton_iks.core import MeasurementSeq, Trajectory, make_model
from newton_iks.models import linear_gaussian


def spd(rng, n, scale=1.0, floor=0.2):
    A = rng.normal(size=(n, n))
    return scale * (A @ A.T / n + floor * np.eye(n))


def random_model(rng, d, m=None, curvature=0.3):
    """Smooth nonlinear f, h built from products, sines and squares."""
    m = m or d
    A = 0.9 * np.linalg.qr(rng.normal(size=(d, d)))[0]
    B = rng.normal(size=(m, d))
    a = curvature * rng.uniform(0.5, 1.0, size=d)
    c = curvature * rng.uniform(0.5, 1.0, size=m)

    def f(x):
        out = []
        for i in range(d):
            acc = 0.0
            for j in range(d):
                acc = acc + A[i, j] * x[j]
            acc = acc + a[i] * np.sin(x[i]) + 0.1 * a[i] * x[i] * np.tanh(x[(i + 1) % d])
            out.append(acc)
        return out

    def h(x):
        out = []
        for i in range(m):
            acc = 0.0
            for j in range(d):
                acc = acc + B[i, j] * x[j]
            out.append(acc + c[i] * x[i % d] ** 2 + 0.2 * c[i] * np.cos(x[(i + 1) % d]))
        return out

    return make_model(d, m, f, h, spd(rng, d, 0.2), spd(rng, m, 0.3), rng.normal(size=d), spd(rng, d))


def random_linear_model(rng, d, m=None):
    m = m or d
    A = 0.95 * np.linalg.qr(rng.normal(size=(d, d)))[0]
    C = rng.normal(size=(m, d))
    return linear_gaussian(A, C, spd(rng, d, 0.2), spd(rng, m, 0.3), rng.normal(size=d), spd(rng, d),
                           offset=rng.normal(size=d) * 0.1)


def simulate_data(rng, model, N, jitter=0.3):
    """Noisy rollout (truth, measurements) and a perturbed nominal trajectory."""
    X = np.empty((N + 1, model.d))
    X[0] = model.m0 + model.P0_chol @ rng.normal(size=model.d)
    for k in range(1, N + 1):
        X[k] = model.transition(X[k - 1]) + model.Q_chol @ rng.normal(size=model.d)
    Y = model.observation(X[1:]) + rng.normal(size=(N, model.m)) @ model.R_chol.T
    nominal = X + jitter * rng.normal(size=X.shape)
    return Trajectory(X), MeasurementSeq(Y), Trajectory(nominal)


def brute_cost(model, X, Y):
    """Term-by-term loop over the MAP objective using explicit inverses."""
    X, Y = np.asarray(X), np.asarray(Y)
    P0i, Qi, Ri = (np.linalg.inv(np.asarray(M)) for M in (model.P0, model.Q, model.R))
    total = 0.5 * (X[0] - model.m0) @ P0i @ (X[0] - model.m0)
    for k in range(1, X.shape[0]):
        r = X[k] - ad.evaluate(model.f, X[k - 1])
        total += 0.5 * r @ Qi @ r
        e = model.meas_residual(Y[k - 1], ad.evaluate(model.h, X[k]))
        total += 0.5 * e @ Ri @ e
    return float(total)


def fd_gradient(fun, x, step=1e-6):
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = step
        g[i] = (fun(x + e) - fun(x - e)) / (2 * step)
    return g


def fd_hessian(fun, x, step=1e-4):
    x = np.asarray(x, dtype=float)
    n = x.size
    H = np.empty((n, n))
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = step
        H[i] = (fd_gradient(fun, x + ei, step) - fd_gradient(fun, x - ei, step)) / (2 * step)
    return 0.5 * (H + H.T)


def rel_close(a, b, rtol):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    scale = max(1.0, float(np.max(np.abs(b))))
    return float(np.max(np.abs(a - b))) <= rtol * scale
