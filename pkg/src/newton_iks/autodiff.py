"""Second-order forward-mode differentiation with truncated Taylor jets.

A :class:`Jet` carries a value together with its gradient and Hessian with
respect to ``d`` seed variables, so a single forward evaluation of a function
yields its full Jacobian and third-rank Hessian tensor. Values may carry a
leading batch shape, which lets every time step of a trajectory be
differentiated in one vectorized pass.

Functions to differentiate use the *component convention*: they receive ``x``
indexable by component (``x[i]``) and return a sequence of output components.
Inside, use arithmetic operators, ``**``, the numpy ufuncs ``np.sin``,
``np.cos``, ``np.tan``, ``np.exp``, ``np.log``, ``np.sqrt``, ``np.arctan``,
``np.tanh``, ``np.arctan2`` (or the same-named helpers in this module), and
:func:`where` for value-dependent branches.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NonFiniteDerivative, UnsupportedPrimitive


def _e1(a):
    return a if np.ndim(a) == 0 else np.asarray(a)[..., None]


def _e2(a):
    return a if np.ndim(a) == 0 else np.asarray(a)[..., None, None]


def _outer(g1, g2):
    return g1[..., :, None] * g2[..., None, :]


class Jet:
    """Value with gradient (shape S+(d,)) and Hessian (S+(d,d)) attached."""

    __slots__ = ("val", "grad", "hess")
    __array_priority__ = 1000

    def __init__(self, val, grad, hess):
        self.val = val
        self.grad = grad
        self.hess = hess

    @property
    def nvars(self):
        return self.grad.shape[-1]

    @classmethod
    def constant(cls, c, d):
        c = np.asarray(c, dtype=float)
        return cls(c, np.zeros(c.shape + (d,)), np.zeros(c.shape + (d, d)))

    def _unary(self, v, d1, d2):
        g = _e1(d1) * self.grad
        H = _e2(d1) * self.hess + _e2(d2) * _outer(self.grad, self.grad)
        return Jet(v, g, H)

    # arithmetic

    def __neg__(self):
        return Jet(-self.val, -self.grad, -self.hess)

    def __pos__(self):
        return self

    def __add__(self, other):
        if isinstance(other, Jet):
            return Jet(self.val + other.val, self.grad + other.grad, self.hess + other.hess)
        if isinstance(other, np.ndarray) and other.dtype == object:
            return NotImplemented
        v = self.val + other
        return Jet(v, _broadcast(self.grad, np.shape(v), 1), _broadcast(self.hess, np.shape(v), 2))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Jet):
            return Jet(self.val - other.val, self.grad - other.grad, self.hess - other.hess)
        if isinstance(other, np.ndarray) and other.dtype == object:
            return NotImplemented
        return self + (-np.asarray(other, dtype=float) if np.ndim(other) else -other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            a, b = self, other
            v = a.val * b.val
            g = _e1(a.val) * b.grad + _e1(b.val) * a.grad
            H = (
                _e2(a.val) * b.hess
                + _e2(b.val) * a.hess
                + _outer(a.grad, b.grad)
                + _outer(b.grad, a.grad)
            )
            return Jet(v, g, H)
        if isinstance(other, np.ndarray) and other.dtype == object:
            return NotImplemented
        return Jet(self.val * other, _e1(other) * self.grad, _e2(other) * self.hess)

    __rmul__ = __mul__

    def reciprocal(self):
        v = self.val
        if np.any(v == 0):
            raise NonFiniteDerivative("division by a jet with zero value")
        inv = 1.0 / v
        return self._unary(inv, -inv * inv, 2.0 * inv * inv * inv)

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        if isinstance(other, np.ndarray) and other.dtype == object:
            return NotImplemented
        return self * (1.0 / np.asarray(other, dtype=float) if np.ndim(other) else 1.0 / other)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, Jet):
            return (p * self.log()).exp()
        if np.ndim(p) == 0 and float(p) == int(p):
            n = int(p)
            if n == 0:
                return Jet.constant(np.ones_like(self.val), self.nvars)
            if n == 1:
                return self
            if n == 2:
                return self * self
        v = self.val
        return self._unary(v**p, p * v ** (p - 1), p * (p - 1) * v ** (p - 2))

    def __rpow__(self, base):
        return (self * np.log(base)).exp()

    # elementary functions; also reached by numpy object-array ufunc loops

    def sin(self):
        s, c = np.sin(self.val), np.cos(self.val)
        return self._unary(s, c, -s)

    def cos(self):
        s, c = np.sin(self.val), np.cos(self.val)
        return self._unary(c, -s, -c)

    def tan(self):
        t = np.tan(self.val)
        sec2 = 1.0 + t * t
        return self._unary(t, sec2, 2.0 * t * sec2)

    def exp(self):
        e = np.exp(self.val)
        return self._unary(e, e, e)

    def log(self):
        v = self.val
        if np.any(v <= 0):
            raise NonFiniteDerivative("log of a non-positive value")
        return self._unary(np.log(v), 1.0 / v, -1.0 / (v * v))

    def sqrt(self):
        v = self.val
        if np.any(v <= 0):
            raise NonFiniteDerivative("sqrt derivative at a non-positive value")
        r = np.sqrt(v)
        return self._unary(r, 0.5 / r, -0.25 / (r * v))

    def square(self):
        return self * self

    def arctan(self):
        v = self.val
        q = 1.0 / (1.0 + v * v)
        return self._unary(np.arctan(v), q, -2.0 * v * q * q)

    def tanh(self):
        t = np.tanh(self.val)
        s = 1.0 - t * t
        return self._unary(t, s, -2.0 * t * s)

    def arctan2(self, other):
        return arctan2(self, other)

    # comparisons act on values so jets can drive ordinary branches

    def __lt__(self, other):
        return self.val < value_of(other)

    def __le__(self, other):
        return self.val <= value_of(other)

    def __gt__(self, other):
        return self.val > value_of(other)

    def __ge__(self, other):
        return self.val >= value_of(other)

    def __float__(self):
        raise UnsupportedPrimitive(
            "a jet was converted to float; use numpy ufuncs or newton_iks.autodiff helpers"
        )

    def __repr__(self):
        return f"Jet(val={self.val!r}, nvars={self.nvars})"

    _UFUNCS = {
        np.add: "__add__",
        np.subtract: "__sub__",
        np.multiply: "__mul__",
        np.true_divide: "__truediv__",
        np.power: "__pow__",
    }
    _UNARY = {
        np.negative: "__neg__",
        np.positive: "__pos__",
        np.sin: "sin",
        np.cos: "cos",
        np.tan: "tan",
        np.exp: "exp",
        np.log: "log",
        np.sqrt: "sqrt",
        np.square: "square",
        np.arctan: "arctan",
        np.tanh: "tanh",
    }

    def __array_ufunc__(self, ufunc, method, *inputs, **kwargs):
        if method != "__call__" or kwargs:
            raise UnsupportedPrimitive(f"{ufunc.__name__}.{method} is not supported on jets")
        if ufunc in self._UNARY:
            return getattr(inputs[0], self._UNARY[ufunc])()
        if ufunc is np.arctan2:
            return arctan2(*inputs)
        if ufunc in self._UFUNCS:
            a, b = inputs
            if isinstance(a, Jet):
                return getattr(a, self._UFUNCS[ufunc])(b)
            return _reflected(ufunc, a, b)
        raise UnsupportedPrimitive(f"ufunc {ufunc.__name__} has no derivative rule")


def _reflected(ufunc, a, b):
    if ufunc is np.add:
        return b + a
    if ufunc is np.subtract:
        return (-b) + a
    if ufunc is np.multiply:
        return b * a
    if ufunc is np.true_divide:
        return b.__rtruediv__(a)
    return b.__rpow__(a)


def _broadcast(arr, shape, extra):
    target = tuple(shape) + arr.shape[arr.ndim - extra :]
    return arr if arr.shape == target else np.broadcast_to(arr, target)


def value_of(x):
    return x.val if isinstance(x, Jet) else x


def _as_jet(x, d):
    return x if isinstance(x, Jet) else Jet.constant(x, d)


def arctan2(y, x):
    """Two-argument arctangent; the derivative is undefined at the origin."""
    if not isinstance(y, Jet) and not isinstance(x, Jet):
        return np.arctan2(y, x)
    d = (y if isinstance(y, Jet) else x).nvars
    y, x = _as_jet(y, d), _as_jet(x, d)
    r2 = x.val * x.val + y.val * y.val
    if np.any(r2 == 0):
        raise NonFiniteDerivative("arctan2 derivative at the origin")
    v = np.arctan2(y.val, x.val)
    dy, dx = x.val / r2, -y.val / r2
    r4 = r2 * r2
    dyy = -2.0 * x.val * y.val / r4
    dxx = -dyy
    dxy = (y.val * y.val - x.val * x.val) / r4
    g = _e1(dy) * y.grad + _e1(dx) * x.grad
    H = (
        _e2(dy) * y.hess
        + _e2(dx) * x.hess
        + _e2(dyy) * _outer(y.grad, y.grad)
        + _e2(dxx) * _outer(x.grad, x.grad)
        + _e2(dxy) * (_outer(y.grad, x.grad) + _outer(x.grad, y.grad))
    )
    return Jet(v, g, H)


def where(cond, a, b):
    """Elementwise select that keeps derivative information of the chosen branch."""
    if not isinstance(a, Jet) and not isinstance(b, Jet):
        return np.where(cond, a, b)
    d = (a if isinstance(a, Jet) else b).nvars
    a, b = _as_jet(a, d), _as_jet(b, d)
    c = np.asarray(cond)
    return Jet(
        np.where(c, a.val, b.val),
        np.where(_e1(c), a.grad, b.grad),
        np.where(_e2(c), a.hess, b.hess),
    )


def _dispatch(name):
    ufunc = getattr(np, name)

    def fn(x):
        return getattr(x, name)() if isinstance(x, Jet) else ufunc(x)

    fn.__name__ = name
    return fn


sin = _dispatch("sin")
cos = _dispatch("cos")
tan = _dispatch("tan")
exp = _dispatch("exp")
log = _dispatch("log")
sqrt = _dispatch("sqrt")
arctan = _dispatch("arctan")
tanh = _dispatch("tanh")
atan2 = arctan2


def matvec(A, x, c=None):
    """Components of A @ x (+ c) for component-convention functions."""
    A = np.asarray(A, dtype=float)
    out = []
    for i in range(A.shape[0]):
        acc = 0.0 if c is None else float(c[i])
        for j in range(A.shape[1]):
            if A[i, j] != 0.0:
                acc = x[j] * A[i, j] + acc
        out.append(acc)
    return out


# drivers


@dataclass(frozen=True)
class DerivativeBundle:
    value: np.ndarray  # (n,)
    jacobian: np.ndarray  # (n, d)
    hessian: np.ndarray  # (n, d, d)


def _seed(X):
    B, d = X.shape
    eye = np.eye(d)
    zero_h = np.broadcast_to(np.zeros((d, d)), (B, d, d))
    xs = np.empty(d, dtype=object)
    for i in range(d):
        xs[i] = Jet(X[:, i].copy(), np.broadcast_to(eye[i], (B, d)), zero_h)
    return xs


def _call(fn, x):
    try:
        return fn(x)
    except UnsupportedPrimitive:
        raise
    except TypeError as exc:
        if "Jet" in str(exc):
            raise UnsupportedPrimitive(str(exc)) from exc
        raise


def derivatives_batch(fn, X):
    """Value (B, n), Jacobian (B, n, d) and Hessian tensor (B, n, d, d) of fn at each row of X."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    B, d = X.shape
    outs = _call(fn, _seed(X))
    n = len(outs)
    val = np.empty((B, n))
    jac = np.zeros((B, n, d))
    hess = np.zeros((B, n, d, d))
    for i, o in enumerate(outs):
        if isinstance(o, Jet):
            val[:, i] = o.val
            jac[:, i] = o.grad
            hess[:, i] = o.hess
        else:
            val[:, i] = np.asarray(o, dtype=float)
    hess = 0.5 * (hess + np.swapaxes(hess, -1, -2))
    if not (np.all(np.isfinite(val)) and np.all(np.isfinite(jac)) and np.all(np.isfinite(hess))):
        raise NonFiniteDerivative("non-finite value or derivative")
    return val, jac, hess


def derivatives(fn, x):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DimensionMismatch(f"expected a 1-D evaluation point, got shape {x.shape}")
    v, J, H = derivatives_batch(fn, x[None, :])
    return DerivativeBundle(v[0], J[0], H[0])


def jacobian(fn, x):
    return derivatives(fn, x).jacobian


def hessian_tensor(fn, x):
    """T[i, j, k] = d^2 fn_i / dx_j dx_k, symmetric in (j, k)."""
    return derivatives(fn, x).hessian


def evaluate(fn, x):
    """Plain evaluation; x is (d,) or a (B, d) batch, result (n,) or (B, n)."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return np.array([float(v) for v in _call(fn, x)], dtype=float)
    B = x.shape[0]
    outs = fn(x.T)
    return np.stack([np.broadcast_to(np.asarray(o, dtype=float), (B,)) for o in outs], axis=-1)


def tensor_dot(T, v):
    """Contract the output index: sum_k v[k] * T[k]. Leading batch axes allowed."""
    T = np.asarray(T, dtype=float)
    v = np.asarray(v, dtype=float)
    if T.ndim < 3 or T.shape[:-2] != v.shape or T.shape[-1] != T.shape[-2]:
        raise DimensionMismatch(f"cannot contract tensor {T.shape} with vector {v.shape}")
    return np.einsum("...kij,...k->...ij", T, v)


@dataclass(frozen=True)
class FDReport:
    jac_ad: np.ndarray
    jac_fd: np.ndarray
    hess_ad: np.ndarray
    hess_fd: np.ndarray

    @property
    def max_jac_err(self):
        return float(np.max(np.abs(self.jac_ad - self.jac_fd)))

    @property
    def max_hess_err(self):
        return float(np.max(np.abs(self.hess_ad - self.hess_fd)))

    @property
    def max_jac_rel(self):
        return float(np.max(np.abs(self.jac_ad - self.jac_fd) / np.maximum(np.abs(self.jac_fd), 1e-300)))

    @property
    def max_hess_rel(self):
        return float(
            np.max(np.abs(self.hess_ad - self.hess_fd) / np.maximum(np.abs(self.hess_fd), 1e-300))
        )

    def ok(self, jac_tol=(1e-5, 1e-4), hess_tol=(1e-4, 1e-3)):
        """Entrywise |ad - fd| <= max(atol, rtol * |fd|) for both derivative orders."""

        def within(a, b, tol):
            return bool(np.all(np.abs(a - b) <= np.maximum(tol[0], tol[1] * np.abs(b))))

        return within(self.jac_ad, self.jac_fd, jac_tol) and within(self.hess_ad, self.hess_fd, hess_tol)


def fd_check(fn, x, step=1e-6, hess_step=1e-4):
    """Compare autodiff derivatives against central finite differences of fn's values.

    The Jacobian uses first central differences with ``step``; the Hessian uses
    second central differences of the values with ``hess_step`` (larger, since
    the rounding error scales like eps / step^2).
    """
    if step <= 0 or hess_step <= 0:
        raise ValueError("finite-difference steps must be positive")
    x = np.asarray(x, dtype=float)
    d = x.size
    bundle = derivatives(fn, x)
    f = lambda z: evaluate(fn, z)
    n = bundle.value.size
    E = np.eye(d)
    jac = np.empty((n, d))
    for j in range(d):
        h = step * max(1.0, abs(x[j]))
        jac[:, j] = (f(x + h * E[j]) - f(x - h * E[j])) / (2 * h)
    hess = np.empty((n, d, d))
    hs = hess_step * np.maximum(1.0, np.abs(x))
    f0 = f(x)
    for j in range(d):
        ej = hs[j] * E[j]
        hess[:, j, j] = (f(x + ej) - 2 * f0 + f(x - ej)) / hs[j] ** 2
        for k in range(j + 1, d):
            ek = hs[k] * E[k]
            v = (f(x + ej + ek) - f(x + ej - ek) - f(x - ej + ek) + f(x - ej - ek)) / (4 * hs[j] * hs[k])
            hess[:, j, k] = hess[:, k, j] = v
    if not (np.all(np.isfinite(jac)) and np.all(np.isfinite(hess))):
        raise NonFiniteDerivative("finite differences produced non-finite values")
    return FDReport(bundle.jacobian, jac, bundle.hessian, hess)
