"""Direct quadrature of the single-layer and coaxial-layer beta functions.

Valid only inside the half-planes where the double integrals converge.  The
outer and inner integrals use the periodic trapezoid rule in the curve
parameter.  On the diagonal the inner integrand behaves like
``|h|**p * phi(h)`` with ``phi`` smooth; the grid sum skips the diagonal node
and adds the generalized Euler-Maclaurin (zeta) correction

    - sum_{w=+-1} sum_k zeta(-p - k) * phi_w[k] * h**(p + k + 1),

which restores spectral accuracy for non-integer ``p``.  The Taylor
coefficients ``phi_w[k]`` come from jets in the parameter offset.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy.special import gamma, rgamma

from .curves import (TWO_PI, Curve, coaxial_derivative_estimate, mean_curvature_from_derivs,
                     require_embedded)
from .errors import HalfPlaneError, UsageError
from .jets import Jet, jet_divide, jet_power, vdot

DEFAULT_MARGIN = 0.25
SINGLE_ABSCISSA = -1.0
B2_ABSCISSA = 1.0
COAXIAL_ABSCISSA = 4.0


@dataclass(frozen=True)
class QuadratureSpec:
    nodes: int = 512
    correction_order: int = 12

    def __post_init__(self):
        if self.nodes < 64 or self.nodes % 2:
            raise UsageError("quadrature needs an even number of nodes >= 64")


@dataclass
class BetaValue:
    s: complex
    value: complex
    abs_error_estimate: float
    kind: str
    method: str = "direct"


def laplacian_factor(s, d: int = 3):
    """s (s - 2) (s - 2 + d) (s - 4 + d): Delta_u Delta_v |u - v|^s = factor * |u - v|^(s-4)."""
    return s * (s - 2) * (s - 2 + d) * (s - 4 + d)


# -- kernels -------------------------------------------------------------------------


def _as_complex(s) -> complex:
    return complex(s)


def _pow(x, p):
    """x**p for positive real x and real or complex p."""
    if isinstance(p, complex) and p.imag == 0:
        p = p.real
    return np.power(x, p)


def b2_integrand(c: Curve, x, y, s):
    """-s (H_x.H_y)|d|^(s-2) - s(s-2)(H_x.d)(H_y.d)|d|^(s-4) with d = c(y) - c(x)."""
    d = c(y) - c(x)
    Hx = mean_curvature_from_derivs(c.derivative(x, 1), c.derivative(x, 2))
    Hy = mean_curvature_from_derivs(c.derivative(y, 1), c.derivative(y, 2))
    r2 = np.sum(d * d, axis=0)
    return (-s * np.sum(Hx * Hy, axis=0) * _pow(r2, (s - 2) / 2)
            - s * (s - 2) * np.sum(Hx * d, axis=0) * np.sum(Hy * d, axis=0) * _pow(r2, (s - 4) / 2))


def eq1_integrand(c: Curve, x, y, s):
    """Laplacian term plus the mean-curvature term (cross terms dropped)."""
    d = c(y) - c(x)
    r2 = np.sum(d * d, axis=0)
    return laplacian_factor(s) * _pow(r2, (s - 4) / 2) + b2_integrand(c, x, y, s)


def _fourth_derivative_contraction(delta, P, Q, s):
    """sum P_ab Q_cd d^4 |x|^s / dx_a dx_b dx_c dx_d at x = delta."""
    r2 = float(delta @ delta)
    xPx = float(delta @ P @ delta)
    xQx = float(delta @ Q @ delta)
    xPQx = float(delta @ P @ Q @ delta)
    trP, trQ, trPQ = np.trace(P), np.trace(Q), np.trace(P @ Q)
    p = s
    return (p * (p - 2) * (trP * trQ + 2 * trPQ) * r2 ** ((p - 4) / 2)
            + p * (p - 2) * (p - 4) * (trP * xQx + trQ * xPx + 4 * xPQx) * r2 ** ((p - 6) / 2)
            + p * (p - 2) * (p - 4) * (p - 6) * xPx * xQx * r2 ** ((p - 8) / 2))


def coaxial_kernel(c: Curve, x: float, y: float, s):
    """Exact coaxial derivative in both points of |c(y) - c(x)|^s.

    Each coaxial derivative is the trace of the Hessian over the normal
    plane, so the kernel is the fourth-derivative tensor of |.|^s contracted
    with the two normal projectors.
    """
    d = c(y) - c(x)
    Tx = c.derivative(x, 1)
    Ty = c.derivative(y, 1)
    P = np.eye(3) - np.outer(Tx, Tx) / (Tx @ Tx)
    Q = np.eye(3) - np.outer(Ty, Ty) / (Ty @ Ty)
    return _fourth_derivative_contraction(d, P, Q, s)


def nested_coaxial_kernel(c: Curve, x: float, y: float, s, radii, n_angles: int = 64):
    """Coaxial derivative at ``c(x)`` of the coaxial derivative at ``c(y)`` of |v - u|^s.

    Both derivatives are normal-circle averages (see
    :func:`curves.coaxial_derivative_estimate`); a single radius gives the raw
    quotient, several radii one Richardson step in r^2.
    """
    def inner(U):
        return np.array([coaxial_derivative_estimate(
            c, y, lambda V, u=u: np.sum((V - u[:, None]) ** 2, axis=0) ** (s / 2), radii, n_angles)
            for u in U.T])

    return coaxial_derivative_estimate(c, x, inner, radii, n_angles)


# -- diagonal corrections --------------------------------------------------------------


class _ParameterJets:
    """Jets in the parameter offset rho at every grid node, both directions."""

    def __init__(self, c: Curve, t: np.ndarray, order: int):
        K = order
        g = c.eval_jet(t, K + 4)
        d1 = tuple(j.deriv() for j in g)
        d2 = tuple(j.deriv() for j in d1)
        self.order = K
        self.by_dir = {}
        Hx = mean_curvature_from_derivs(c.derivative(t, 1), c.derivative(t, 2))
        for w in (1, -1):
            gw = tuple(j if w == 1 else j.reflect() for j in g)
            d1w = tuple((j if w == 1 else -j.reflect()) for j in d1)
            d2w = tuple(j if w == 1 else j.reflect() for j in d2)
            delta = []
            for j in gw:
                dj = j.truncate(K + 2)
                dj.coeffs[0] = 0.0
                delta.append(dj)
            dr = tuple(j.shift_down(1).truncate(K) for j in delta)
            G = vdot(dr, dr)
            sp2 = vdot(d1w, d1w).truncate(K + 2)
            v1 = tuple(j.truncate(K + 2) for j in d1w)
            v2 = tuple(j.truncate(K + 2) for j in d2w)
            proj = jet_divide(vdot(v1, v2), sp2)
            Hy = tuple(jet_divide(a - proj * b, sp2) for a, b in zip(v2, v1))
            # H.d vanishes to second order; divide by rho**2 after the dot product.
            Px = sum(Hx[i] * delta[i] for i in range(3)).shift_down(2)
            Py = vdot(Hy, delta).shift_down(2)
            Hy = tuple(j.truncate(K) for j in Hy)
            self.by_dir[w] = dict(
                G=G,
                speed=jet_power(sp2.truncate(K), 0.5),
                HxHy=sum(Hx[i] * Hy[i] for i in range(3)),
                Px=Px,
                Py=Py,
            )

    def terms(self, kind: str, s):
        """List of (exponent p, coefficient jet of phi) per direction."""
        out = {}
        for w, j in self.by_dir.items():
            if kind == "single_layer":
                out[w] = [(s, jet_power(j["G"], s / 2) * j["speed"])]
            elif kind == "b2":
                out[w] = [
                    (s - 2, j["HxHy"] * jet_power(j["G"], (s - 2) / 2) * j["speed"] * (-s)),
                    (s, j["Px"] * j["Py"] * jet_power(j["G"], (s - 4) / 2) * j["speed"] * (-s * (s - 2))),
                ]
            else:
                raise UsageError(f"unknown kernel kind {kind!r}")
        return out


def _zeta_values(p, count):
    return np.array([complex(mpmath.zeta(-(mpmath.mpc(p) + k))) for k in range(count)])


def _diagonal_correction(pj: _ParameterJets, kind: str, s, h: float) -> np.ndarray:
    corr = 0
    for w, terms in pj.terms(kind, s).items():
        for p, phi in terms:
            z = _zeta_values(p, phi.order + 1)
            hk = np.array([h ** (p + k + 1) for k in range(phi.order + 1)], dtype=complex)
            zeta_h = (z * hk).reshape((-1,) + (1,) * len(phi.batch_shape))
            corr = corr - np.sum(zeta_h * phi.coeffs, axis=0)
    return corr


# -- grid sums ----------------------------------------------------------------------------


class _Grid:
    """s-independent data of the uniform N x N grid."""

    def __init__(self, c: Curve, N: int, correction_order: int):
        t = np.linspace(0.0, TWO_PI, N, endpoint=False)
        self.h = TWO_PI / N
        pts = c(t)
        d1 = c.derivative(t, 1)
        self.speed = np.sqrt(np.sum(d1 * d1, axis=0))
        diff = pts[:, None, :] - pts[:, :, None]           # [:, i, j] = c(t_j) - c(t_i)
        r2 = np.sum(diff * diff, axis=0)
        np.fill_diagonal(r2, 1.0)
        self.log_r2 = np.log(r2)
        H = mean_curvature_from_derivs(d1, c.derivative(t, 2))
        self.HH = H.T @ H
        self.PP = np.einsum("ai,aij->ij", H, diff) * np.einsum("aj,aij->ij", H, diff)
        self.jets = _ParameterJets(c, t, correction_order)

    def kernel(self, s: complex, kind: str) -> np.ndarray:
        lr = self.log_r2
        if kind == "single_layer":
            K = np.exp(0.5 * s * lr)
        else:
            K = (-s * self.HH * np.exp(0.5 * (s - 2) * lr)
                 - s * (s - 2) * self.PP * np.exp(0.5 * (s - 4) * lr))
        np.fill_diagonal(K, 0.0)
        return K

    def value(self, s: complex, kind: str) -> complex:
        # Row sums in numpy's fixed pairwise order, independent of BLAS threading.
        inner = self.h * np.sum(self.kernel(s, kind) * self.speed, axis=1)
        inner = inner + _diagonal_correction(self.jets, kind, s, self.h)
        return complex(self.h * np.sum(self.speed * inner))


@functools.lru_cache(maxsize=16)
def _grid(c: Curve, N: int, correction_order: int) -> _Grid:
    return _Grid(c, N, correction_order)


def _check_half_plane(s: complex, abscissa: float, margin: float, what: str):
    if s.real <= abscissa + margin:
        raise HalfPlaneError(
            f"{what}: Re s = {s.real:g} is outside the direct half-plane Re s > {abscissa + margin:g};"
            " use the continuation engine")


def _direct(c, s, q, kind):
    q = q or QuadratureSpec()
    v1 = _grid(c, q.nodes, q.correction_order).value(s, kind)
    v2 = _grid(c, 2 * q.nodes, q.correction_order).value(s, kind)
    return v2, abs(v2 - v1)


def beta_single_layer(c: Curve, s, q: QuadratureSpec | None = None,
                      margin: float = DEFAULT_MARGIN) -> BetaValue:
    s = _as_complex(s)
    _check_half_plane(s, SINGLE_ABSCISSA, margin, "single layer")
    require_embedded(c)
    v, err = _direct(c, s, q, "single_layer")
    return BetaValue(s, v, err, "single_layer")


def beta_b2(c: Curve, s, q: QuadratureSpec | None = None,
            margin: float = DEFAULT_MARGIN) -> BetaValue:
    s = _as_complex(s)
    _check_half_plane(s, B2_ABSCISSA, margin, "mean-curvature term")
    require_embedded(c)
    v, err = _direct(c, s, q, "b2")
    return BetaValue(s, v, err, "b2")


def beta_b1(c: Curve, s, q: QuadratureSpec | None = None) -> BetaValue:
    s = _as_complex(s)
    _check_half_plane(s, COAXIAL_ABSCISSA, 0.0, "Laplacian term")
    inner = beta_single_layer(c, s - 4, q)
    f = laplacian_factor(s)
    return BetaValue(s, f * inner.value, abs(f) * inner.abs_error_estimate, "b1")


def beta_coaxial(c: Curve, s, q: QuadratureSpec | None = None) -> BetaValue:
    s = _as_complex(s)
    _check_half_plane(s, COAXIAL_ABSCISSA, 0.0, "coaxial layer")
    b1 = beta_b1(c, s, q)
    b2 = beta_b2(c, s, q)
    return BetaValue(s, b1.value + b2.value,
                     b1.abs_error_estimate + b2.abs_error_estimate, "coaxial")


def circle_single_layer_closed_form(s, R: float = 1.0) -> complex:
    """R^(s+2) 2^(s+2) pi^(3/2) Gamma((s+1)/2) / Gamma(s/2 + 1) (entire except at odd negatives)."""
    s = complex(s)
    return complex(R ** (s + 2) * 2 ** (s + 2) * math.pi ** 1.5
                   * gamma((s + 1) / 2) * rgamma(s / 2 + 1))
