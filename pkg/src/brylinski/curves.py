"""Closed analytic space curves and their local differential geometry.

Every built-in curve is stored as a trigonometric polynomial in the
parameter ``t`` on ``[0, 2*pi)``, so Taylor coefficients of any order are
exact (no finite differences).  Unit-speed quantities come from composing
the parameter jet with the reversion of the local arclength series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import CurveValidationError, UndefinedFrameError, UsageError
from .jets import Jet, jet_compose, jet_power, jet_reversion, vcross, vdot

TWO_PI = 2.0 * math.pi
K_MAX = 40
TOL_FRAME = 1e-8
CHORD_ARC_MIN = 1e-3

# d = 3, n = 1: the normal space is a plane.
COAXIAL_NORMALIZER = 4.0


@dataclass(frozen=True)
class Curve:
    """Closed curve ``t -> sum_n A[:, n] cos(n t) + B[:, n] sin(n t)``.

    ``cos_table`` and ``sin_table`` are tuples of three tuples (x, y, z), each
    indexed by frequency ``n = 0, 1, ...``.
    """

    kind: str
    params: tuple
    cos_table: tuple
    sin_table: tuple
    _A: np.ndarray = field(init=False, repr=False, compare=False, hash=False)
    _B: np.ndarray = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        A = np.array(self.cos_table, dtype=float)
        B = np.array(self.sin_table, dtype=float)
        if A.ndim != 2 or A.shape[0] != 3 or A.shape != B.shape:
            raise CurveValidationError("fourier tables must be 3 x (nmax+1)")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(B))):
            raise CurveValidationError("fourier coefficients must be finite")
        object.__setattr__(self, "_A", A)
        object.__setattr__(self, "_B", B)
        t = np.linspace(0.0, TWO_PI, 2048, endpoint=False)
        speed = self.speed(t)
        scale = max(float(np.max(np.abs(A))), float(np.max(np.abs(B))), 1e-300)
        if not np.all(speed > 1e-10 * scale):
            raise CurveValidationError(f"{self.kind} curve is not regular")

    # -- evaluation ---------------------------------------------------------

    @property
    def nmax(self) -> int:
        return self._A.shape[1] - 1

    def derivative(self, t, k: int = 0) -> np.ndarray:
        """k-th parameter derivative, shape ``(3, *t.shape)``."""
        t = np.asarray(t, dtype=float)
        n = np.arange(self.nmax + 1, dtype=float)
        phase = np.multiply.outer(t, n) + k * math.pi / 2
        nk = n ** k
        c = np.cos(phase) * nk
        s = np.sin(phase) * nk
        return np.moveaxis(c @ self._A.T + s @ self._B.T, -1, 0)

    def __call__(self, t) -> np.ndarray:
        return self.derivative(t, 0)

    def speed(self, t) -> np.ndarray:
        d = self.derivative(t, 1)
        return np.sqrt(np.sum(d * d, axis=0))

    def eval_jet(self, t, order: int) -> tuple:
        """Taylor jets of the three coordinates about ``t`` (batched over ``t``)."""
        if order > K_MAX:
            raise UsageError(f"order {order} exceeds K_MAX={K_MAX}")
        t = np.asarray(t, dtype=float)
        coeffs = np.empty((order + 1, 3) + t.shape)
        fact = 1.0
        for k in range(order + 1):
            if k:
                fact *= k
            coeffs[k] = self.derivative(t, k) / fact
        return tuple(Jet(coeffs[:, i]) for i in range(3))

    def scaled(self, lam: float) -> Curve:
        A = tuple(tuple(lam * v for v in row) for row in self.cos_table)
        B = tuple(tuple(lam * v for v in row) for row in self.sin_table)
        return Curve(self.kind, self.params + (("scale", lam),), A, B)


def _tables(nmax: int):
    return np.zeros((3, nmax + 1)), np.zeros((3, nmax + 1))


def _freeze(A, B):
    return (tuple(tuple(float(v) for v in row) for row in A),
            tuple(tuple(float(v) for v in row) for row in B))


def circle(R: float = 1.0) -> Curve:
    A, B = _tables(1)
    A[0, 1] = R
    B[1, 1] = R
    return Curve("circle", (R,), *_freeze(A, B))


def ellipse(a: float, b: float) -> Curve:
    A, B = _tables(1)
    A[0, 1] = a
    B[1, 1] = b
    return Curve("ellipse", (a, b), *_freeze(A, B))


def torus_knot(p: int, q: int, R: float, r: float) -> Curve:
    """((R + r cos qt) cos pt, (R + r cos qt) sin pt, r sin qt)."""
    p, q = int(p), int(q)
    nmax = abs(p) + abs(q)
    A, B = _tables(nmax)

    def add_cos(comp, n, c):
        A[comp, abs(n)] += c

    def add_sin(comp, n, c):
        B[comp, abs(n)] += c if n >= 0 else -c

    add_cos(0, p, R)
    add_cos(0, p + q, r / 2)
    add_cos(0, p - q, r / 2)
    add_sin(1, p, R)
    add_sin(1, p + q, r / 2)
    add_sin(1, p - q, r / 2)
    add_sin(2, q, r)
    return Curve("torus_knot", (p, q, R, r), *_freeze(A, B))


def fourier(x: Sequence, y: Sequence, z: Sequence) -> Curve:
    """Each component is ``[[cos coefficients], [sin coefficients]]``."""
    comps = [x, y, z]
    nmax = 0
    for comp in comps:
        if len(comp) != 2:
            raise CurveValidationError("component needs [cos list, sin list]")
        nmax = max(nmax, len(comp[0]) - 1, len(comp[1]) - 1)
    A, B = _tables(nmax)
    for i, (cs, sn) in enumerate(comps):
        A[i, : len(cs)] = cs
        B[i, : len(sn)] = sn
    return Curve("fourier", (), *_freeze(A, B))


# -- arclength ---------------------------------------------------------------


def arclength(c: Curve, tol: float = 1e-14) -> float:
    """Total length by the periodic trapezoid rule, doubled until stable."""
    n = 64
    prev = None
    while n <= 1 << 16:
        t = np.linspace(0.0, TWO_PI, n, endpoint=False)
        L = float(np.sum(c.speed(t))) * TWO_PI / n
        if prev is not None and abs(L - prev) <= tol * abs(L):
            return L
        prev = L
        n *= 2
    return prev


def speed_jet(jets: tuple) -> Jet:
    d = tuple(j.deriv() for j in jets)
    return jet_power(vdot(d, d), 0.5)


def arclength_jet(c: Curve, t, order: int) -> Jet:
    """Series of ``s(t + h) - s(t)`` in ``h``."""
    return speed_jet(c.eval_jet(t, order)).integ()


def unit_speed_jets(jets: tuple) -> tuple:
    """Re-expand parameter jets in the arclength offset from the base point.

    The input order ``K`` is preserved: the speed loses one order and the
    integration gives it back.
    """
    sigma = speed_jet(jets).integ()
    h = jet_reversion(sigma)
    return tuple(jet_compose(j, h) for j in jets)


# -- Frenet invariants ---------------------------------------------------------


@dataclass
class FrenetData:
    kappa: np.ndarray
    tau: np.ndarray
    frame: np.ndarray  # rows T, N, B

    @property
    def T(self):
        return self.frame[0]

    @property
    def N(self):
        return self.frame[1]

    @property
    def B(self):
        return self.frame[2]


def frenet_from_jets(jets: tuple, m: int, tol_frame: float = TOL_FRAME) -> FrenetData:
    """kappa_0..kappa_m and tau_0..tau_m at the base point of parameter jets.

    ``jets`` must have order at least ``m + 3``.  Works batched; the frame
    then has shape ``(3, 3, *batch)``.
    """
    K = jets[0].order
    if K < m + 3:
        raise UsageError(f"need jets of order >= {m + 3} for m={m}")
    g = unit_speed_jets(tuple(j.truncate(m + 3) for j in jets))
    d1 = tuple(j.deriv() for j in g)
    d2 = tuple(j.deriv() for j in d1)
    d3 = tuple(j.deriv() for j in d2)
    d1 = tuple(j.truncate(m + 1) for j in d1)
    d2 = tuple(j.truncate(m + 1) for j in d2)
    cr = vcross(d1, d2)
    k2 = vdot(cr, cr)
    k0 = np.sqrt(k2.coeffs[0])
    if np.any(k0 <= tol_frame):
        raise UndefinedFrameError(
            f"curvature {float(np.min(k0)):.3g} below tol_frame={tol_frame}; torsion undefined")
    kappa = jet_power(k2, 0.5).truncate(m)
    det = vdot(tuple(j.truncate(m) for j in cr), d3)
    tau = det / k2.truncate(m)
    T = np.array([j.coeffs[0] for j in d1])
    acc = np.array([j.coeffs[0] for j in d2])
    N = acc / k0
    B = np.cross(T, N, axis=0)
    return FrenetData(kappa.derivatives(), tau.derivatives(), np.array([T, N, B]))


def frenet_invariants(c: Curve, t, m: int = 3) -> FrenetData:
    if m > K_MAX - 3:
        raise UsageError(f"m={m} exceeds K_MAX-3")
    return frenet_from_jets(c.eval_jet(t, m + 3), m)


def mean_curvature_vector(c: Curve, t) -> np.ndarray:
    """Second arclength derivative of the curve (kappa * N; zero on straight pieces)."""
    return mean_curvature_from_derivs(c.derivative(t, 1), c.derivative(t, 2))


def mean_curvature_from_derivs(d1: np.ndarray, d2: np.ndarray) -> np.ndarray:
    sp2 = np.sum(d1 * d1, axis=0)
    return (d2 - np.sum(d1 * d2, axis=0) / sp2 * d1) / sp2


# -- normal planes and the coaxial derivative ------------------------------------


def normal_completion(T: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal (e2, e3) with (T, e2, e3) right-handed.

    e2 is Gram-Schmidt of the lowest-index coordinate axis not parallel to T.
    """
    T = np.asarray(T, dtype=float)
    T = T / np.linalg.norm(T)
    for i in range(3):
        axis = np.zeros(3)
        axis[i] = 1.0
        v = axis - np.dot(axis, T) * T
        if np.linalg.norm(v) > 1e-6:
            e2 = v / np.linalg.norm(v)
            return e2, np.cross(T, e2)
    raise AssertionError("unreachable: some axis is not parallel to T")


def unit_tangent(c: Curve, t: float) -> np.ndarray:
    d = c.derivative(t, 1)
    return d / np.linalg.norm(d)


def coaxial_average(c: Curve, t: float, phi: Callable, r: float,
                    n_angles: int = 64, basis=None) -> float:
    """Mean of ``phi`` over the radius-``r`` circle in the normal plane at ``c(t)``.

    ``phi`` receives an array of points of shape ``(3, n)``.
    """
    u = c(t)
    if basis is None:
        basis = normal_completion(unit_tangent(c, t))
    e2, e3 = basis
    theta = np.linspace(0.0, TWO_PI, n_angles, endpoint=False)
    pts = u[:, None] + r * (np.outer(e2, np.cos(theta)) + np.outer(e3, np.sin(theta)))
    return np.mean(phi(pts), axis=-1)


def coaxial_quotients(c: Curve, t: float, phi: Callable, radii: Sequence[float],
                      n_angles: int = 64, basis=None) -> np.ndarray:
    """Raw ``4 (average - phi(u)) / r**2`` for each radius."""
    u = c(t)
    phi0 = phi(u[:, None])[..., 0]
    return np.array([COAXIAL_NORMALIZER * (coaxial_average(c, t, phi, r, n_angles, basis) - phi0) / r**2
                     for r in radii])


def richardson_r2(radii: Sequence[float], values: np.ndarray):
    """Fit ``values = D0 + C r**2`` in least squares; return ``D0``."""
    radii = np.asarray(radii, dtype=float)
    if len(radii) == 1:
        return values[0]
    V = np.stack([np.ones_like(radii), radii**2], axis=1)
    sol, *_ = np.linalg.lstsq(V, np.asarray(values).reshape(len(radii), -1), rcond=None)
    return sol[0].reshape(np.shape(values)[1:])


def coaxial_derivative_estimate(c: Curve, t: float, phi: Callable,
                                radii: Sequence[float], n_angles: int = 64,
                                basis=None):
    """Sum of second derivatives of ``phi`` over the normal plane at ``c(t)``.

    The raw quotient carries an O(r^2) error (odd moments of the circle
    vanish); one Richardson step in r^2 removes it.
    """
    if len(radii) == 0:
        raise UsageError("coaxial_derivative_estimate needs at least one radius")
    q = coaxial_quotients(c, t, phi, radii, n_angles, basis)
    return richardson_r2(radii, q)


# -- embeddedness ------------------------------------------------------------------


def validate_embedded(c: Curve, n: int = 256) -> float:
    """Minimum chord / (shorter arc) ratio over grid pairs."""
    if n < 64:
        raise UsageError("validate_embedded needs a grid of at least 64 points")
    t = np.linspace(0.0, TWO_PI, n, endpoint=False)
    pts = c(t)
    gx, gw = np.polynomial.legendre.leggauss(16)
    h = TWO_PI / n
    cell = c.speed(t[:, None] + h * (gx + 1) / 2) @ gw * h / 2
    s = np.concatenate([[0.0], np.cumsum(cell)])
    L = s[-1]
    ds = np.abs(s[:-1, None] - s[None, :-1])
    arc = np.minimum(ds, L - ds)
    chord = np.sqrt(np.sum((pts[:, :, None] - pts[:, None, :]) ** 2, axis=0))
    mask = ~np.eye(n, dtype=bool)
    return float(np.min(chord[mask] / arc[mask]))


def require_embedded(c: Curve, n: int = 256) -> float:
    ratio = validate_embedded(c, n)
    if ratio < CHORD_ARC_MIN:
        raise CurveValidationError(
            f"chord-arc ratio {ratio:.3g} below {CHORD_ARC_MIN}: curve is (nearly) self-intersecting")
    return ratio
