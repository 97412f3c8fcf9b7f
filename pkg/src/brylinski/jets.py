"""Truncated Taylor series ("jets") of fixed order.

A :class:`Jet` of order ``K`` holds the Taylor coefficients
``f(x0), f'(x0), f''(x0)/2!, ..., f^(K)(x0)/K!`` of a function about a
base point.  Arithmetic is exact modulo ``r**(K+1)``: nothing beyond index
``K`` is ever read or produced.

Coefficients may be real or complex, and may carry trailing batch axes:
``coeffs`` has shape ``(K + 1, *batch)`` and every operation broadcasts over
the batch.  This lets one jet stand for the expansions at a whole grid of
base points at once, which is how the quadrature modules use it.
"""

from __future__ import annotations

import numbers

import numpy as np

from .errors import SingularJetError, UsageError, DomainError

DEFAULT_ORDER = 12


def _as_coeffs(values) -> np.ndarray:
    arr = np.asarray(values)
    if arr.dtype.kind not in "fc":
        arr = arr.astype(float)
    if arr.ndim == 0:
        raise UsageError("a jet needs at least one coefficient")
    return arr


class Jet:
    """Truncated power series ``sum_k coeffs[k] * r**k`` modulo ``r**(order+1)``."""

    __slots__ = ("coeffs",)
    __array_priority__ = 1000

    def __init__(self, coeffs):
        self.coeffs = _as_coeffs(coeffs)

    # -- constructors -----------------------------------------------------

    @classmethod
    def constant(cls, value, order: int = DEFAULT_ORDER) -> Jet:
        value = np.asarray(value)
        dtype = np.result_type(value.dtype, float)
        out = np.zeros((order + 1,) + value.shape, dtype=dtype)
        out[0] = value
        return cls(out)

    @classmethod
    def variable(cls, order: int = DEFAULT_ORDER, base=0.0) -> Jet:
        """The identity map ``r -> base + r``."""
        out = cls.constant(base, order)
        if order >= 1:
            out.coeffs[1] = 1.0
        return out

    # -- basic properties -------------------------------------------------

    @property
    def order(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def batch_shape(self) -> tuple:
        return self.coeffs.shape[1:]

    def __len__(self) -> int:
        return self.coeffs.shape[0]

    def __getitem__(self, k):
        return self.coeffs[k]

    def __repr__(self) -> str:
        return f"Jet(order={self.order}, coeffs={self.coeffs.tolist()!r})"

    def copy(self) -> Jet:
        return Jet(self.coeffs.copy())

    def derivatives(self) -> np.ndarray:
        """Raw derivatives ``f^(k)(x0)`` (undo the ``1/k!`` normalisation)."""
        k = np.arange(self.order + 1)
        fact = np.cumprod(np.concatenate([[1.0], k[1:]]))
        return self.coeffs * fact.reshape((-1,) + (1,) * len(self.batch_shape))

    # -- arithmetic ---------------------------------------------------------

    def _coerce(self, other) -> Jet:
        if isinstance(other, Jet):
            if other.order != self.order:
                raise UsageError(
                    f"jet order mismatch: {self.order} vs {other.order}")
            return other
        if isinstance(other, (numbers.Number, np.ndarray, np.generic)):
            # Pad the batch axes so a scalar broadcasts against batched jets.
            value = np.asarray(other)
            pad = max(len(self.batch_shape) - value.ndim, 0)
            return Jet.constant(value.reshape((1,) * pad + value.shape), self.order)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return Jet(self.coeffs + other.coeffs)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.coeffs)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return Jet(self.coeffs - other.coeffs)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return Jet(other.coeffs - self.coeffs)

    def __mul__(self, other):
        if isinstance(other, (numbers.Number, np.generic, np.ndarray)):
            return Jet(self.coeffs * other)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return jet_multiply(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (numbers.Number, np.generic, np.ndarray)):
            return Jet(self.coeffs / other)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return jet_divide(self, other)

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return jet_divide(other, self)

    def __pow__(self, alpha):
        if isinstance(alpha, numbers.Integral) and alpha >= 0:
            out = Jet.constant(np.ones(self.batch_shape), self.order)
            base = self
            n = int(alpha)
            while n:
                if n & 1:
                    out = out * base
                n >>= 1
                if n:
                    base = base * base
            return out
        return jet_power(self, alpha)

    # -- calculus and reshaping ------------------------------------------------

    def truncate(self, order: int) -> Jet:
        if order > self.order:
            raise UsageError(f"cannot raise jet order {self.order} to {order}")
        return Jet(self.coeffs[: order + 1])

    def deriv(self) -> Jet:
        """Derivative; one order of information is lost."""
        if self.order == 0:
            raise UsageError("derivative of an order-0 jet is unknown")
        k = np.arange(1, self.order + 1).reshape((-1,) + (1,) * len(self.batch_shape))
        return Jet(self.coeffs[1:] * k)

    def integ(self) -> Jet:
        """Antiderivative vanishing at the base point; gains one order."""
        k = np.arange(1, self.order + 2).reshape((-1,) + (1,) * len(self.batch_shape))
        out = np.zeros((self.order + 2,) + self.batch_shape, dtype=self.coeffs.dtype)
        out[1:] = self.coeffs / k
        return Jet(out)

    def shift_down(self, m: int) -> Jet:
        """Divide by ``r**m``; the first ``m`` coefficients must already vanish.

        The caller is responsible for the vanishing; the dropped entries are
        not inspected because in practice they are only zero up to rounding.
        """
        if m > self.order:
            raise UsageError("shift exceeds jet order")
        return Jet(self.coeffs[m:])

    def reflect(self) -> Jet:
        """Expansion of ``r -> f(-r)``."""
        sign = (-1.0) ** np.arange(self.order + 1)
        return Jet(self.coeffs * sign.reshape((-1,) + (1,) * len(self.batch_shape)))

    def __call__(self, r):
        """Evaluate the truncated polynomial at ``r`` (Horner)."""
        r = np.asarray(r)
        out = np.zeros(np.broadcast_shapes(self.batch_shape, r.shape),
                       dtype=np.result_type(self.coeffs.dtype, r.dtype))
        for c in self.coeffs[::-1]:
            out = out * r + c
        return out

    def real(self) -> Jet:
        return Jet(self.coeffs.real.copy())


# -- module-level operations -------------------------------------------------


def _check_orders(a: Jet, b: Jet) -> None:
    if a.order != b.order:
        raise UsageError(f"jet order mismatch: {a.order} vs {b.order}")


def jet_add(a: Jet, b: Jet) -> Jet:
    _check_orders(a, b)
    return Jet(a.coeffs + b.coeffs)


def jet_multiply(a: Jet, b: Jet) -> Jet:
    """Cauchy product truncated at the common order."""
    _check_orders(a, b)
    K = a.order
    shape = (K + 1,) + np.broadcast_shapes(a.batch_shape, b.batch_shape)
    out = np.zeros(shape, dtype=np.result_type(a.coeffs.dtype, b.coeffs.dtype))
    for j in range(K + 1):
        out[j:] += a.coeffs[j] * b.coeffs[: K + 1 - j]
    return Jet(out)


def jet_divide(a: Jet, b: Jet) -> Jet:
    """Solve ``q * b = a`` coefficient by coefficient."""
    _check_orders(a, b)
    b0 = b.coeffs[0]
    if np.any(b0 == 0):
        raise SingularJetError("jet division by a series with zero constant term")
    K = a.order
    shape = (K + 1,) + np.broadcast_shapes(a.batch_shape, b.batch_shape)
    q = np.zeros(shape, dtype=np.result_type(a.coeffs.dtype, b.coeffs.dtype))
    for k in range(K + 1):
        acc = a.coeffs[k] - sum(q[j] * b.coeffs[k - j] for j in range(k))
        q[k] = acc / b0
    return Jet(q)


def jet_power(h: Jet, alpha) -> Jet:
    """``h**alpha`` for real or complex ``alpha``.

    Uses ``h * y' = alpha * h' * y`` which in coefficients reads
    ``k h0 y_k = sum_{j=1..k} (alpha*j - (k - j)) h_j y_{k-j}``.
    """
    h0 = h.coeffs[0]
    if np.iscomplexobj(h0):
        if np.any(np.abs(h0.imag) > 0):
            raise DomainError("jet power needs a real positive constant term")
        h0 = h0.real
    if np.any(~(h0 > 0)):
        raise DomainError("jet power needs a strictly positive constant term")
    K = h.order
    alpha_is_complex = isinstance(alpha, complex) or np.iscomplexobj(alpha)
    dtype = np.result_type(h.coeffs.dtype, complex if alpha_is_complex else float)
    y = np.zeros(h.coeffs.shape, dtype=dtype)
    y[0] = np.power(h0.astype(dtype), alpha)
    for k in range(1, K + 1):
        acc = 0
        for j in range(1, k + 1):
            acc = acc + (alpha * j - (k - j)) * h.coeffs[j] * y[k - j]
        y[k] = acc / (k * h0)
    return Jet(y)


def jet_compose(f: Jet, g: Jet) -> Jet:
    """Expansion of ``f(g(r))`` where ``g`` passes through the base point of ``f``.

    ``g.coeffs[0]`` must be zero: ``f`` is expanded about the value ``g``
    takes at ``r = 0``.
    """
    _check_orders(f, g)
    if np.any(g.coeffs[0] != 0):
        raise UsageError("composition needs g(0) = 0")
    out = Jet.constant(f.coeffs[-1], f.order)
    for c in f.coeffs[-2::-1]:
        out = out * g
        out.coeffs[0] = out.coeffs[0] + c
    return out


def jet_reversion(f: Jet) -> Jet:
    """Compositional inverse ``g`` with ``f(g(r)) = r`` to the jet order."""
    if np.any(f.coeffs[0] != 0):
        raise SingularJetError("reversion needs f(0) = 0")
    if f.order < 1 or np.any(f.coeffs[1] == 0):
        raise SingularJetError("reversion needs a nonzero linear term")
    K = f.order
    f1 = f.coeffs[1]
    g = np.zeros(f.coeffs.shape, dtype=f.coeffs.dtype)
    g[1] = 1.0 / f1
    # f(g + t r^k) = f(g) + f1 t r^k + O(r^{k+1}) fixes each new coefficient.
    for k in range(2, K + 1):
        err = jet_compose(f, Jet(g)).coeffs[k]
        g[k] = -err / f1
    return Jet(g)


# -- vector helpers (a 3-vector of jets is a plain tuple) ---------------------


def vdot(u, v) -> Jet:
    return u[0] * v[0] + u[1] * v[1] + u[2] * v[2]


def vcross(u, v) -> tuple:
    return (u[1] * v[2] - u[2] * v[1],
            u[2] * v[0] - u[0] * v[2],
            u[0] * v[1] - u[1] * v[0])


def vsub(u, v) -> tuple:
    return tuple(a - b for a, b in zip(u, v))


def vmap(fn, u) -> tuple:
    return tuple(fn(a) for a in u)
