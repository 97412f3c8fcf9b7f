"""Meromorphic continuation of the beta functions by Taylor subtraction.

For a base point ``x`` the inner integral runs over the arclength offset
``r`` in both directions ``w = +1, -1``.  Near the diagonal each kernel term
is ``r**(s+m) * phi_w(r)`` with ``phi_w`` smooth, so

    int_0^eps r**(s+m) phi_w dr = sum_{k<=K} c_k eps**a / a  +  remainder,
    a = s + m + k + 1,

where the closed-form sum carries every pole and the remainder is analytic
in ``s``.  The remainder is split once more at ``rho = eps / 4``: below
``rho`` it is summed in closed form over orders ``K+1 .. K + tail``; above it
the integrand ``r**(s+m) (phi - T_K phi)`` is integrated by Gauss-Legendre
panels.  Beyond ``eps`` the chord is bounded below and the kernel is
integrated directly.  The outer integral is the periodic trapezoid rule.

Everything that does not depend on ``s`` (jets, quadrature nodes, chord
lengths) is computed once per curve and configuration and cached.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .beta import BetaValue, laplacian_factor
from .curves import (K_MAX, TWO_PI, Curve, arclength, mean_curvature_from_derivs,
                     require_embedded, unit_speed_jets)
from .errors import NotAPoleError, OrderBudgetError, PoleProximityError, UsageError
from .jets import Jet, jet_power, vdot

KINDS = ("single_layer", "coaxial")
REMOVABLE_RTOL = 1e-9
NUMERIC_LIMIT_STEPS = (1e-2, 5e-3, 2.5e-3)

_GAUSS = 16
_ARC_GAUSS = 16


@dataclass(frozen=True)
class EngineConfig:
    K: int = 8
    epsilon: Optional[float] = None
    N_outer: int = 256
    N_far: int = 512
    pole_guard: float = 1e-3
    tail: int = 12
    switch: float = 0.25

    def __post_init__(self):
        if not 1 <= self.K <= K_MAX - 2:
            raise UsageError(f"K must lie in 1..{K_MAX - 2}")
        if self.K + self.tail > K_MAX - 2:
            raise UsageError(f"K + tail must not exceed {K_MAX - 2}")
        if self.N_outer < 16 or self.N_outer % 2:
            raise UsageError("N_outer must be even and >= 16")
        if self.N_far < 64:
            raise UsageError("N_far must be >= 64")
        if self.epsilon is not None and not self.epsilon > 0:
            raise UsageError("epsilon must be positive")
        if not self.pole_guard > 0:
            raise UsageError("pole_guard must be positive")
        if not 0 < self.switch < 1:
            raise UsageError("switch must lie in (0, 1)")


@dataclass
class KernelTerm:
    """``r**(s+m) * jet(r)`` along direction ``w`` from a base point."""

    m: int
    w: int
    s: complex
    jet: Jet

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return r ** (self.s + self.m) * self.jet(r)


@dataclass
class ResidueReport:
    pole: int
    residue: float
    method: str
    error_estimate: float
    kind: str = "single_layer"
    removable: bool = False
    numeric_limit: Optional[float] = None
    numeric_error: Optional[float] = None


# -- local jets in the arclength offset -----------------------------------------------


def _directional(gamma: tuple, w: int) -> tuple:
    return gamma if w == 1 else tuple(j.reflect() for j in gamma)


def _offset(gamma: tuple) -> tuple:
    out = []
    for j in gamma:
        d = j.copy()
        d.coeffs[0] = 0.0
        out.append(d)
    return tuple(out)


def _unit_speed(c: Curve, x, order: int) -> tuple:
    return unit_speed_jets(c.eval_jet(x, order + 2))


def _chord_from_unit(gamma: tuple, K: int) -> Jet:
    dr = tuple(j.shift_down(1).truncate(K) for j in _offset(gamma))
    return vdot(dr, dr)


def chord_jet(c: Curve, x, w: int = 1, order: int = 8) -> Jet:
    """Jet in arclength r of ``|c(y(r)) - c(x)|**2 / r**2``, ``y(r)`` the point at arclength ``w r``."""
    if w not in (1, -1):
        raise UsageError("direction w must be +1 or -1")
    if order > K_MAX - 2:
        raise UsageError(f"order {order} exceeds {K_MAX - 2}")
    return _chord_from_unit(_directional(_unit_speed(c, x, order), w), order)


def _local_factors(c: Curve, x, order: int) -> dict:
    """Per direction: chord jet g, H_x.H_y and (H_x.d)(H_y.d)/r**4 as jets of ``order``."""
    K = order
    gamma = _unit_speed(c, x, K + 2)
    Hx = [2.0 * j.coeffs[2] for j in gamma]
    out = {}
    for w in (1, -1):
        gw = _directional(gamma, w)
        delta = tuple(j.truncate(K + 2) for j in _offset(gw))
        dr = tuple(j.shift_down(1).truncate(K) for j in delta)
        Hy = tuple(j.deriv().deriv() for j in gw)
        # H.d vanishes to second order; divide by r**2 only after the dot product.
        px = (delta[0] * Hx[0] + delta[1] * Hx[1] + delta[2] * Hx[2]).shift_down(2)
        py = vdot(Hy, delta).shift_down(2)
        Hy = tuple(j.truncate(K) for j in Hy)
        out[w] = dict(
            g=vdot(dr, dr),
            A=Hy[0] * Hx[0] + Hy[1] * Hx[1] + Hy[2] * Hx[2],
            PP=px * py,
        )
    return out


def _term_jets(factors: dict, s: complex, kind: str):
    """List of (m, jet) for one direction."""
    g = factors["g"]
    if kind == "single_layer":
        return [(0, jet_power(g, s / 2))]
    if kind == "b2":
        return [(-2, factors["A"] * jet_power(g, (s - 2) / 2) * (-s)),
                (0, factors["PP"] * jet_power(g, (s - 4) / 2) * (-s * (s - 2)))]
    raise UsageError(f"unknown kernel kind {kind!r}")


def decompose_kernel(c: Curve, x, s, kind: str = "single_layer", order: int = 8) -> list:
    """KernelTerms for both directions at the base point ``x``."""
    s = complex(s)
    if order > K_MAX - 2:
        raise UsageError(f"order {order} exceeds {K_MAX - 2}")
    factors = _local_factors(c, x, order)
    return [KernelTerm(m, w, s, jet) for w in (1, -1) for m, jet in _term_jets(factors[w], s, kind)]


# -- arclength offsets -------------------------------------------------------------------


class _ArclengthTable:
    """Cumulative arclength S(t) on a fine parameter grid, refined locally by Gauss-Legendre."""

    def __init__(self, c: Curve, n: int = 4096):
        self.c = c
        self.n = n
        self.step = TWO_PI / n
        self.gx, self.gw = np.polynomial.legendre.leggauss(_ARC_GAUSS)
        grid = np.arange(n) * self.step
        cells = self._piece(grid, np.full(n, self.step))
        self.S = np.concatenate([[0.0], np.cumsum(cells)])
        self.length = self.S[-1]
        self.grid = np.arange(n + 1) * self.step

    def _piece(self, a, width):
        u = a[..., None] + width[..., None] * (self.gx + 1) / 2
        return (self.c.speed(u) @ self.gw) * width / 2

    def __call__(self, t):
        """S(t) for any real t, extended by S(t + 2 pi) = S(t) + length."""
        t = np.asarray(t, dtype=float)
        turns = np.floor(t / TWO_PI)
        tm = t - turns * TWO_PI
        k = np.minimum((tm / self.step).astype(int), self.n - 1)
        base = k * self.step
        return turns * self.length + self.S[k] + self._piece(base, tm - base)

    def invert(self, sigma):
        """Parameter t with S(t) = sigma."""
        sigma = np.asarray(sigma, dtype=float)
        turns = np.floor(sigma / self.length)
        sm = sigma - turns * self.length
        t = np.interp(sm, self.S, self.grid) + turns * TWO_PI
        # The interpolated start is accurate to the grid spacing squared, so
        # Newton converges in two or three steps; one more polishes rounding.
        for _ in range(8):
            step = (self(t) - sigma) / self.c.speed(t)
            t = t - step
            if np.max(np.abs(step)) < 1e-12:
                break
        step = (self(t) - sigma) / self.c.speed(t)
        return t - step


def _arc_offsets(table: _ArclengthTable, x: np.ndarray, w: int, r: np.ndarray) -> np.ndarray:
    """Parameter offsets h >= 0 with arclength from x to x + w h equal to r; shape (len(x), len(r)).

    The table supplies the starting guess.  Newton then works on the arclength
    integrated from x itself, so short offsets keep full relative accuracy.
    """
    S0 = table(x)[:, None]
    h = w * (table.invert(S0 + w * r[None, :]) - x[:, None])
    gx, gw = np.polynomial.legendre.leggauss(24)
    c = table.c
    xx = x[:, None]
    for _ in range(3):
        u = xx[..., None] + w * h[..., None] * (gx + 1) / 2
        sigma = (c.speed(u) @ gw) * h / 2
        h = h - (sigma - r[None, :]) / c.speed(xx + w * h)
    return h


def _graded_panels(a: float, b: float, first: float, n_panels: int):
    """Panels on [a, b] growing geometrically from ``a`` (ratio 2, starting at ``first``)."""
    edges = [a]
    width = first
    while edges[-1] < b and len(edges) <= n_panels:
        edges.append(min(edges[-1] + width, b))
        width *= 2
    edges[-1] = b
    return np.array(edges)


def _gauss_on(edges: np.ndarray):
    gx, gw = np.polynomial.legendre.leggauss(_GAUSS)
    lo, hi = edges[:-1, None], edges[1:, None]
    nodes = (lo + (hi - lo) * (gx + 1) / 2).ravel()
    weights = ((hi - lo) / 2 * gw).ravel()
    return nodes, weights


def _far_layout(n_far: int, first: float):
    """Unit-interval panels graded toward both ends, capped in width."""
    n_panels = max(n_far // _GAUSS, 4)
    cap = 2.0 / n_panels
    left = [0.0]
    width = min(first, cap)
    while left[-1] + width < 0.5 and width < cap:
        left.append(left[-1] + width)
        width *= 2
    n_mid = max(int(math.ceil((1.0 - 2 * left[-1]) / cap)), 1)
    mid = np.linspace(left[-1], 1.0 - left[-1], n_mid + 1)
    right = [1.0 - e for e in reversed(left)]
    edges = np.concatenate([left[:-1], mid, right[1:]])
    return _gauss_on(edges)


# -- cached geometry ------------------------------------------------------------------------


class _Geometry:
    """Everything s-independent for one curve and configuration."""

    def __init__(self, c: Curve, cfg: EngineConfig):
        self.cfg = cfg
        self.length = arclength(c)
        self.chord_arc = require_embedded(c)
        eps = cfg.epsilon if cfg.epsilon is not None else default_epsilon(self.length, self.chord_arc)
        if not eps < self.length / 4:
            raise UsageError(f"epsilon={eps:g} must be below a quarter of the length {self.length:g}")
        self.eps = eps
        self.rho = eps * cfg.switch
        N = cfg.N_outer
        self.x = np.linspace(0.0, TWO_PI, N, endpoint=False)
        self.weights = c.speed(self.x) * (TWO_PI / N)
        Kt = cfg.K + cfg.tail
        self.local = _local_factors(c, self.x, Kt)

        X = c(self.x)
        Hx = mean_curvature_from_derivs(c.derivative(self.x, 1), c.derivative(self.x, 2))

        def sample(y, jac):
            d = c(y) - X[:, :, None]
            d1, d2 = c.derivative(y, 1), c.derivative(y, 2)
            Hy = mean_curvature_from_derivs(d1, d2)
            c2 = np.sum(d * d, axis=0)
            return dict(
                log_c2=np.log(c2),
                A=np.einsum("an,anj->nj", Hx, Hy),
                PP=np.einsum("an,anj->nj", Hx, d) * np.sum(Hy * d, axis=0),
                wts=jac,
            )

        # Remainder nodes on [rho, eps], panels doubling in width.
        r_nodes, r_wts = _gauss_on(_graded_panels(self.rho, eps, self.rho, 8))
        self.r_nodes = r_nodes
        self.rem = {}
        ends = {}
        table = _ArclengthTable(c)
        for w in (1, -1):
            h = _arc_offsets(table, self.x, w, np.concatenate([r_nodes, [eps]]))
            ends[w] = h[:, -1]
            self.rem[w] = sample(self.x[:, None] + w * h[:, :-1],
                                 np.broadcast_to(r_wts, (N, r_nodes.size)))
        # Far part in the parameter, away from both ends of the near zone.
        a = self.x + ends[1]
        b = self.x + TWO_PI - ends[-1]
        span = b - a
        first = float(np.min(np.minimum(ends[1], ends[-1]) / span)) / 4
        u, uw = _far_layout(cfg.N_far, first)
        y = a[:, None] + span[:, None] * u[None, :]
        self.far = sample(y, span[:, None] * uw[None, :] * c.speed(y))


@functools.lru_cache(maxsize=32)
def _geometry(c: Curve, cfg: EngineConfig) -> _Geometry:
    return _Geometry(c, cfg)


def default_epsilon(length: float, chord_arc: float) -> float:
    return min(length / 8, 0.5 * length * chord_arc)


# -- evaluation ----------------------------------------------------------------------------------


def _exact_kernel(sample: dict, s: complex, kind: str):
    lc = sample["log_c2"]
    if kind == "single_layer":
        return np.exp(0.5 * s * lc)
    return (-s * sample["A"] * np.exp(0.5 * (s - 2) * lc)
            - s * (s - 2) * sample["PP"] * np.exp(0.5 * (s - 4) * lc))


def _budget(s: complex, kind: str, K: int):
    m_min = -2 if kind == "b2" else 0
    if not s.real + m_min + K + 2 > 0:
        raise OrderBudgetError(
            f"Re s = {s.real:g} needs more subtraction orders than K={K} (Re s + {m_min} + K + 2 > 0)")


def _pole_lattice(kind: str):
    # Single layer: -1, -3, ...; coaxial: 3, 1, -1, ...
    return (-1, -2) if kind == "single_layer" else (3, -2)


def pole_lattice(kind: str, count: int = 6) -> list:
    start, step = _pole_lattice(kind)
    return [start + step * i for i in range(count)]


def is_lattice_pole(kind: str, s0) -> bool:
    if kind not in KINDS:
        raise UsageError(f"kind must be one of {KINDS}")
    s0 = complex(s0)
    if s0.imag != 0 or s0.real != round(s0.real):
        return False
    start, step = _pole_lattice(kind)
    n = int(round(s0.real))
    return n <= start and (start - n) % 2 == 0


def _integrated_coeffs(geo: _Geometry, s: complex, kind: str):
    """Per term m: (sum over x and w of c_k, scale), plus per-x/per-w jets for the remainder."""
    out = []
    for w in (1, -1):
        for i, (m, jet) in enumerate(_term_jets(geo.local[w], s, kind)):
            out.append((w, i, m, jet))
    return out


def _singular_sum(geo, terms, s, kind, K, lo, hi, radius):
    """sum over terms and lo <= k <= hi of (int_x C_k) * radius**a / a, with pole checks."""
    total = 0j
    by_m = {}
    for w, i, m, jet in terms:
        by_m.setdefault((i, m), []).append(jet)
    for (i, m), jets in by_m.items():
        C = sum(_wsum(geo.weights, j.coeffs[lo:hi + 1]) for j in jets)
        scale = sum(_wsum(geo.weights, np.abs(j.coeffs[lo:hi + 1])) for j in jets)
        for idx, k in enumerate(range(lo, hi + 1)):
            a = s + m + k + 1
            if abs(a) < geo.cfg.pole_guard:
                if abs(C[idx]) <= REMOVABLE_RTOL * scale[idx] + 1e-300:
                    continue
                pole = s - a
                raise PoleProximityError(
                    f"s = {_fmt(s)} is within {geo.cfg.pole_guard:g} of the pole at {pole.real:g};"
                    " use residue() there", pole=int(round(pole.real)))
            total += C[idx] * radius ** a / a
    return total


def _wsum(weights: np.ndarray, values: np.ndarray):
    """Weighted sum over the last axis in numpy's fixed pairwise order (no BLAS)."""
    return np.sum(weights * values, axis=-1)


def _fmt(s: complex) -> str:
    return f"{s.real:g}" if s.imag == 0 else f"{s.real:g}{s.imag:+g}i"


def _layer_value(geo: _Geometry, s: complex, kind: str) -> tuple:
    """Outer-integrated value for the single layer or the b2 term; returns (value, coarse value)."""
    K = geo.cfg.K
    Kt = K + geo.cfg.tail
    terms = _integrated_coeffs(geo, s, kind)
    near = _singular_sum(geo, terms, s, kind, K, 0, K, geo.eps)
    tail = _singular_sum(geo, terms, s, kind, K, K + 1, Kt, geo.rho)

    per_x = np.zeros(geo.x.size, dtype=complex)
    r = geo.r_nodes
    for w in (1, -1):
        rem = geo.rem[w]
        vals = _exact_kernel(rem, s, kind)
        for ww, i, m, jet in terms:
            if ww != w:
                continue
            taylor = Jet(jet.coeffs[: K + 1])
            poly = np.zeros(vals.shape, dtype=complex)
            for ck in taylor.coeffs[::-1]:
                poly = poly * r[None, :] + ck[:, None]
            vals = vals - r[None, :] ** (s + m) * poly
        per_x += np.sum(vals * rem["wts"], axis=1)
    far = geo.far
    per_x += np.sum(_exact_kernel(far, s, kind) * far["wts"], axis=1)

    regular = _wsum(geo.weights, per_x)
    coarse = 2 * _wsum(geo.weights[::2], per_x[::2])
    singular = near + tail
    # The singular sums are linear in the outer weights too; redo them on the coarse grid.
    coarse_geo = _CoarseView(geo)
    coarse_singular = (_singular_sum(coarse_geo, terms, s, kind, K, 0, K, geo.eps)
                       + _singular_sum(coarse_geo, terms, s, kind, K, K + 1, Kt, geo.rho))
    return regular + singular, coarse + coarse_singular


class _CoarseView:
    """Every other outer node, for the doubling error estimate."""

    def __init__(self, geo: _Geometry):
        self.cfg = geo.cfg
        self.weights = np.zeros_like(geo.weights)
        self.weights[::2] = 2 * geo.weights[::2]


def continue_beta(c: Curve, s, kind: str = "single_layer",
                  cfg: EngineConfig | None = None) -> BetaValue:
    """Continued single-layer or coaxial beta function at ``s``."""
    cfg = cfg or EngineConfig()
    s = complex(s)
    if kind not in KINDS:
        raise UsageError(f"kind must be one of {KINDS}")
    geo = _geometry(c, cfg)
    if kind == "single_layer":
        _budget(s, "single_layer", cfg.K)
        v, vc = _layer_value(geo, s, "single_layer")
        return BetaValue(s, v, abs(v - vc), "single_layer", method="continuation")

    _budget(s - 4, "single_layer", cfg.K)
    _budget(s, "b2", cfg.K)
    f = laplacian_factor(s)
    v1 = vc1 = 0j
    if f != 0:
        try:
            v1, vc1 = _layer_value(geo, s - 4, "single_layer")
        except PoleProximityError as exc:
            raise PoleProximityError(
                f"s = {_fmt(s)} is within {cfg.pole_guard:g} of the pole at {exc.pole + 4};"
                " use residue() there", pole=exc.pole + 4) from None
    v2, vc2 = _layer_value(geo, s, "b2")
    v = f * v1 + v2
    vc = f * vc1 + vc2
    return BetaValue(s, v, abs(v - vc), "coaxial", method="continuation")


# -- residues -----------------------------------------------------------------------------------------


def _pole_coefficient(jets_by_m, s0: int, K: int):
    """Sum of c_k with s0 + m + k + 1 = 0 over the supplied (m, jet) pairs."""
    total = 0.0
    for m, jet in jets_by_m:
        k = -s0 - m - 1
        if 0 <= k <= K:
            total = total + jet.coeffs[k]
    return total


def _layer_pole_coefficients(factors: dict, s0: int, kind: str, K: int):
    """Per-x residue density of one layer at ``s0``."""
    total = 0.0
    for w in (1, -1):
        total = total + _pole_coefficient(_term_jets(factors[w], complex(s0), kind), s0, K)
    return total


def _residue_density(factors: dict, s0: int, kind: str, K: int):
    if kind == "single_layer":
        return _layer_pole_coefficients(factors, s0, "single_layer", K)
    P = laplacian_factor(s0)
    out = _layer_pole_coefficients(factors, s0, "b2", K)
    if P != 0:
        out = out + P * _layer_pole_coefficients(factors, s0 - 4, "single_layer", K)
    return out


def pointwise_residue(c: Curve, x, s0: int, kind: str = "single_layer", order: int = 8):
    """Residue at ``s0`` of the inner integral over the whole curve at base point(s) ``x``."""
    require_pole(kind, s0)
    s0 = int(s0)
    factors = _local_factors(c, np.asarray(x, dtype=float), order)
    dens = _residue_density(factors, s0, kind, order)
    return np.real_if_close(np.asarray(dens), tol=1e6)


def require_pole(kind: str, s0):
    if not is_lattice_pole(kind, s0):
        start, step = _pole_lattice(kind)
        raise NotAPoleError(
            f"{s0} is not a pole of the {kind} beta function (poles at {start}, {start + step}, ...)")


def _neville_zero(h, f):
    """Value at h = 0 of the interpolating polynomial through (h_i, f_i)."""
    p = list(f)
    n = len(h)
    for j in range(1, n):
        for i in range(n - j):
            p[i] = (h[i + j] * p[i] - h[i] * p[i + 1]) / (h[i + j] - h[i])
    return p[0]


def numeric_limit(c: Curve, s0: int, kind: str = "single_layer", cfg: EngineConfig | None = None,
                  direction: complex = 1.0, steps=NUMERIC_LIMIT_STEPS):
    """Richardson limit of (s - s0) * B(s) along s = s0 + h * direction; returns (limit, error)."""
    direction = complex(direction) / abs(complex(direction))
    hs = [h * direction for h in steps]
    f = [h * continue_beta(c, s0 + h, kind, cfg).value for h in hs]
    full = _neville_zero(hs, f)
    lower = _neville_zero(hs[:2], f[:2])
    return full, abs(full - lower)


def residue(c: Curve, s0, kind: str = "single_layer", cfg: EngineConfig | None = None,
            numeric_check: bool = False) -> ResidueReport:
    """Residue at the lattice pole ``s0`` by analytic subtraction."""
    cfg = cfg or EngineConfig()
    if kind not in KINDS:
        raise UsageError(f"kind must be one of {KINDS}")
    require_pole(kind, s0)
    s0 = int(round(complex(s0).real))
    if kind == "single_layer":
        _budget(complex(s0), "single_layer", cfg.K)
    else:
        _budget(complex(s0 - 4), "single_layer", cfg.K)
        _budget(complex(s0), "b2", cfg.K)
    geo = _geometry(c, cfg)
    dens = np.asarray(_residue_density(geo.local, s0, kind, cfg.K), dtype=complex)
    value = _wsum(geo.weights, dens)
    coarse = 2 * _wsum(geo.weights[::2], dens[::2])
    err = abs(value - coarse)
    scale = _wsum(geo.weights, np.abs(dens))
    if abs(value.imag) > 1e-8 * abs(value) + 1e-12:
        raise AssertionError(f"residue has a spurious imaginary part {value.imag:g}")
    removable = abs(value) <= REMOVABLE_RTOL * max(scale, geo.length)
    report = ResidueReport(s0, 0.0 if removable else float(value.real),
                           "analytic_subtraction", float(err), kind, removable)
    if numeric_check:
        lim, lerr = numeric_limit(c, s0, kind, cfg)
        report.numeric_limit = float(lim.real)
        report.numeric_error = float(lerr)
    return report
