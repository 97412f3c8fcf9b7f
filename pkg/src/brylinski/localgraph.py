"""Local graph coefficients of a space curve and closed-form invariants.

About a point of the curve, in the frame (tangent, e2, e3), the curve is the
graph ``u -> (u, f1(u), f2(u))`` with

    f1(u) = a2 u^2 + a3 u^3 + ... + a8 u^8 + O(u^9)
    f2(u) = b2 u^2 + b3 u^3 + ... + b8 u^8 + O(u^9).

This module computes the a_i, b_i, and evaluates closed-form rational
expressions in them: curvature and torsion with their first three arclength
derivatives, and the pointwise residues of the single-layer and coaxial-layer
beta functions.  All expressions live in one table of terms
``(coefficient, exponent vector)`` so that the weight audit and the numeric
evaluation read the same data.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import sympy

from .curves import Curve, frenet_from_jets, normal_completion
from .errors import InflectionError, UsageError
from .jets import Jet, jet_compose, jet_reversion

GRAPH_ORDER = 8
COEFF_NAMES = tuple(f"a{i}" for i in range(2, 9)) + tuple(f"b{i}" for i in range(2, 9))
INVARIANT_NAMES = tuple(f"kappa{n}" for n in range(4)) + tuple(f"tau{n}" for n in range(4))


@dataclass(frozen=True)
class GraphCoeffs:
    a: tuple  # a2..a8
    b: tuple  # b2..b8

    def __post_init__(self):
        if len(self.a) != 7 or len(self.b) != 7:
            raise UsageError("GraphCoeffs needs a2..a8 and b2..b8")

    @classmethod
    def from_dict(cls, values: dict) -> GraphCoeffs:
        unknown = set(values) - set(COEFF_NAMES)
        if unknown:
            raise UsageError(f"unknown graph coefficients {sorted(unknown)}")
        a = tuple(values.get(f"a{i}", 0.0) for i in range(2, 9))
        b = tuple(values.get(f"b{i}", 0.0) for i in range(2, 9))
        return cls(a, b)

    def as_dict(self) -> dict:
        out = {f"a{i}": v for i, v in zip(range(2, 9), self.a)}
        out.update({f"b{i}": v for i, v in zip(range(2, 9), self.b)})
        return out

    def vector(self) -> list:
        return [*self.a, *self.b]

    def scaled(self, lam: float) -> GraphCoeffs:
        """Coefficients of the curve dilated by ``lam``."""
        return GraphCoeffs(tuple(v * lam ** (1 - i) for i, v in zip(range(2, 9), self.a)),
                           tuple(v * lam ** (1 - i) for i, v in zip(range(2, 9), self.b)))


@dataclass
class PointwiseResidues:
    single_layer: dict = field(default_factory=dict)
    coaxial: dict = field(default_factory=dict)


# -- graph coefficients ---------------------------------------------------------


def graph_coefficients(c: Curve, t0: float, frame=None, order: int = GRAPH_ORDER) -> GraphCoeffs:
    """a2..a8, b2..b8 of the curve about ``c(t0)``.

    ``frame`` is an optional orthonormal pair (e2, e3) spanning the normal
    plane; by default the deterministic completion of the tangent is used.
    """
    if order < GRAPH_ORDER:
        raise UsageError(f"graph coefficients need jet order >= {GRAPH_ORDER}")
    jets = c.eval_jet(t0, order)
    return graph_coefficients_from_jets(jets, frame)


def graph_coefficients_from_jets(jets: tuple, frame=None) -> GraphCoeffs:
    K = jets[0].order
    d1 = np.array([j.coeffs[1] for j in jets], dtype=float)
    T = d1 / np.linalg.norm(d1)
    if frame is None:
        e2, e3 = normal_completion(T)
    else:
        e2, e3 = (np.asarray(v, dtype=float) for v in frame)
    delta = []
    for j in jets:
        d = j.copy()
        d.coeffs[0] = 0.0
        delta.append(d)
    u1 = sum(Ti * d for Ti, d in zip(T, delta))
    assert abs(u1.coeffs[1]) > 0, "regular curve has a nonzero linear tangent term"
    h = jet_reversion(u1)
    f1 = jet_compose(sum(ei * d for ei, d in zip(e2, delta)), h)
    f2 = jet_compose(sum(ei * d for ei, d in zip(e3, delta)), h)
    a = tuple(float(f1.coeffs[i]) for i in range(2, min(K, GRAPH_ORDER) + 1))
    b = tuple(float(f2.coeffs[i]) for i in range(2, min(K, GRAPH_ORDER) + 1))
    a += (0.0,) * (7 - len(a))
    b += (0.0,) * (7 - len(b))
    return GraphCoeffs(a, b)


# -- formula table ----------------------------------------------------------------

# Every expression is  kappa0**root_power * (a2^2 + b2^2)**q_power * polynomial,
# with kappa0 = sqrt(4 (a2^2 + b2^2)).

_KAPPA2 = """
((12*b2**3 + 12*a2**2*b2)*b4 + 9*a2**2*b3**2 - 18*a2*a3*b2*b3 - 12*b2**6 - 36*a2**2*b2**4)
+ (12*a2*a4 + 9*a3**2 - 36*a2**4)*b2**2 + 12*a2**3*a4 - 12*a2**6
"""

_KAPPA3 = """
(60*b2**5 + 120*a2**2*b2**3 + 60*a2**4*b2)*b5
+ ((108*a2**2*b2**2 + 108*a2**4)*b3 - 108*a2*a3*b2**3 - 108*a2**3*a3*b2)*b4
- 81*a2**2*b2*b3**3 + (162*a2*a3*b2**2 - 81*a2**3*a3)*b3**2
+ (-228*b2**7 - 684*a2**2*b2**5 + (-108*a2*a4 - 81*a3**2 - 684*a2**4)*b2**3
   + (-108*a2**3*a4 + 162*a2**2*a3**2 - 228*a2**6)*b2)*b3
- 228*a2*a3*b2**6 + (60*a2*a5 + 108*a3*a4 - 684*a2**3*a3)*b2**4
+ (120*a2**3*a5 + 108*a2**2*a3*a4 - 81*a2*a3**3 - 684*a2**5*a3)*b2**2
+ 60*a2**5*a5 - 228*a2**7*a3
"""

_TAU1 = """
(12*a2*b2**2 + 12*a2**3)*b4 - 18*a2*b2*b3**2 + (18*a3*b2**2 - 18*a2**2*a3)*b3
- 12*a4*b2**3 + (18*a2*a3**2 - 12*a2**2*a4)*b2
"""

_TAU2 = """
(60*a2*b2**4 + 120*a2**3*b2**2 + 60*a2**5)*b5
+ ((-216*a2*b2**3 - 216*a2**3*b2)*b3 + 108*a3*b2**4 - 108*a2**4*a3)*b4
+ (162*a2*b2**2 - 54*a2**3)*b3**3 + (486*a2**2*a3*b2 - 162*a3*b2**3)*b3**2
+ (96*a2*b2**6 + (108*a4 + 288*a2**3)*b2**4 + (288*a2**5 - 486*a2*a3**2)*b2**2
   - 108*a2**4*a4 + 162*a2**3*a3**2 + 96*a2**7)*b3
- 96*a3*b2**7 + (-60*a5 - 288*a2**2*a3)*b2**5
+ (-120*a2**2*a5 + 216*a2*a3*a4 + 54*a3**3 - 288*a2**4*a3)*b2**3
+ (-60*a2**4*a5 + 216*a2**3*a3*a4 - 162*a2**2*a3**3 - 96*a2**6*a3)*b2
"""

_TAU3 = """
(360*a2*b2**6 + 1080*a2**3*b2**4 + 1080*a2**5*b2**2 + 360*a2**7)*b6
+ ((-1440*a2*b2**5 - 2880*a2**3*b2**3 - 1440*a2**5*b2)*b3 + 720*a3*b2**6
   + 720*a2**2*a3*b2**4 - 720*a2**4*a3*b2**2 - 720*a2**6*a3)*b5
+ (-864*a2*b2**5 - 1728*a2**3*b2**3 - 864*a2**5*b2)*b4**2
+ ((3888*a2*b2**4 + 2592*a2**3*b2**2 - 1296*a2**5)*b3**2
   + (-2592*a3*b2**5 + 5184*a2**2*a3*b2**3 + 7776*a2**4*a3*b2)*b3
   + 1104*a2*b2**8 + (864*a4 + 4416*a2**3)*b2**6
   + (864*a2**2*a4 - 3888*a2*a3**2 + 6624*a2**5)*b2**4
   + (-864*a2**4*a4 - 2592*a2**3*a3**2 + 4416*a2**7)*b2**2
   - 864*a2**6*a4 + 1296*a2**5*a3**2 + 1104*a2**9)*b4
+ (1944*a2**3*b2 - 1944*a2*b2**3)*b3**4
+ (1944*a3*b2**4 - 11664*a2**2*a3*b2**2 + 1944*a2**4*a3)*b3**3
+ (-792*a2*b2**7 + (-1296*a4 - 2376*a2**3)*b2**5
   + (2592*a2**2*a4 + 11664*a2*a3**2 - 2376*a2**5)*b2**3
   + (3888*a2**4*a4 - 11664*a2**3*a3**2 - 792*a2**7)*b2)*b3**2
+ (792*a3*b2**8 + (720*a5 + 1584*a2**2*a3)*b2**6
   + (720*a2**2*a5 - 7776*a2*a3*a4 - 1944*a3**3)*b2**4
   + (-720*a2**4*a5 - 5184*a2**3*a3*a4 + 11664*a2**2*a3**3 - 1584*a2**6*a3)*b2**2
   - 720*a2**6*a5 + 2592*a2**5*a3*a4 - 1944*a2**4*a3**3 - 792*a2**8*a3)*b3
- 1104*a4*b2**9 + (-360*a6 - 4416*a2**2*a4 + 792*a2*a3**2)*b2**7
+ (-1080*a2**2*a6 + 1440*a2*a3*a5 + 864*a2*a4**2 + (1296*a3**2 - 6624*a2**4)*a4
   + 2376*a2**3*a3**2)*b2**5
+ (-1080*a2**4*a6 + 2880*a2**3*a3*a5 + 1728*a2**3*a4**2
   + (-2592*a2**2*a3**2 - 4416*a2**6)*a4 - 1944*a2*a3**4 + 2376*a2**5*a3**2)*b2**3
+ (-360*a2**6*a6 + 1440*a2**5*a3*a5 + 864*a2**5*a4**2
   + (-3888*a2**4*a3**2 - 1104*a2**8)*a4 + 1944*a2**3*a3**4 + 792*a2**7*a3**2)*b2
"""

# name -> (root_power, q_power, polynomial source, weight of the whole expression)
_SOURCES = {
    "kappa0": (1, 0, "1", 1),
    "kappa1": (-1, 0, "(24*b2*b3 + 24*a2*a3)/2", 2),
    "kappa2": (1, -2, _KAPPA2, 3),
    "kappa3": (1, -3, _KAPPA3, 4),
    "tau0": (0, -1, "3*a2*b3 - 3*a3*b2", 1),
    "tau1": (0, -2, _TAU1, 2),
    "tau2": (0, -3, _TAU2, 3),
    "tau3": (0, -4, _TAU3, 4),
    "single_layer[-1]": (0, 0, "2", 0),
    "single_layer[-3]": (0, 0, "b2**2 + a2**2", 2),
    "single_layer[-5]": (0, 0, "(24*b2*b4 + 16*b3**2 - 21*b2**4 - 42*a2**2*b2**2"
                               " + 24*a2*a4 + 16*a3**2 - 21*a2**4)/4", 4),
    "coaxial[3]": (0, 0, "48", 0),
    "coaxial[1]": (0, 0, "-8*b2**2 - 8*a2**2", 2),
    "coaxial[-1]": (0, 0, "48*b2*b4 - 36*b2**4 - 72*a2**2*b2**2 + 48*a2*a4 - 36*a2**4", 4),
}

# The typeset tau2 and tau3 exceed the arclength derivatives of torsion by
# 8 kappa0^2 tau0 and 24 kappa0^2 tau1 + 24 kappa0 kappa1 tau0 respectively
# (found against the jet-based Frenet computation).  The corrections below are
# those amounts written over the matching denominator.
_CORRECTIONS = {
    "tau2": "96*(a2*b3 - a3*b2)*(a2**2 + b2**2)**3",
    "tau3": f"(a2**2 + b2**2)**3*(96*({_TAU1}) + 864*(a2*a3 + b2*b3)*(a2*b3 - a3*b2))",
}

RESIDUE_FORMULAS = ("single_layer[-1]", "single_layer[-3]", "single_layer[-5]",
                    "coaxial[3]", "coaxial[1]", "coaxial[-1]")

_SYMBOLS = sympy.symbols(" ".join(COEFF_NAMES))


@dataclass(frozen=True)
class Formula:
    name: str
    root_power: int
    q_power: int
    coeffs: tuple        # term coefficients (exact rationals as floats)
    exponents: tuple     # one exponent tuple over COEFF_NAMES per term
    weight: int

    def polynomial(self, x: np.ndarray) -> np.ndarray:
        """Evaluate the polynomial factor; ``x`` has shape ``(14, *batch)``."""
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[1:])
        for coef, exps in zip(self.coeffs, self.exponents):
            term = np.full(x.shape[1:], coef)
            for i, e in enumerate(exps):
                if e:
                    term = term * x[i] ** e
            out = out + term
        return out

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        q = x[0] ** 2 + x[7] ** 2
        val = self.polynomial(x)
        if self.q_power:
            val = val * q ** self.q_power
        if self.root_power:
            val = val * np.sqrt(4 * q) ** self.root_power
        return val

    def term_weights(self) -> list:
        """Weight of each term of the full expression (prefactors included)."""
        pre = self.root_power + 2 * self.q_power
        return [pre + sum(e * weight_of_symbol(n) for e, n in zip(exps, COEFF_NAMES))
                for exps in self.exponents]


def _parse(name, source, correction=None) -> Formula:
    root_power, q_power, text, weight = source
    if correction is not None:
        text = f"({text}) - ({correction})"
    expr = sympy.expand(sympy.sympify(text, locals=dict(zip(COEFF_NAMES, _SYMBOLS))))
    poly = sympy.Poly(expr, *_SYMBOLS)
    terms = poly.terms()
    return Formula(name, root_power, q_power,
                   tuple(float(c) for _, c in terms),
                   tuple(tuple(int(e) for e in m) for m, _ in terms),
                   weight)


@lru_cache(maxsize=None)
def formula_table(uncorrected: bool = False) -> dict:
    """Parsed expressions; ``uncorrected=True`` leaves out the tau2/tau3 correction terms."""
    return {name: _parse(name, src, None if uncorrected else _CORRECTIONS.get(name))
            for name, src in _SOURCES.items()}


def mutated_table(name: str = "kappa2", term: int = 0, delta: float = 1.0) -> dict:
    """Copy of the table with one term coefficient perturbed (sensitivity testing)."""
    table = dict(formula_table())
    f = table[name]
    coeffs = list(f.coeffs)
    coeffs[term] += delta
    table[name] = Formula(f.name, f.root_power, f.q_power, tuple(coeffs), f.exponents, f.weight)
    return table


def graph_jets(g, order: int = GRAPH_ORDER) -> tuple:
    """Jets at u = 0 of the curve ``u -> (u, f1(u), f2(u))`` with the given coefficients.

    ``g`` may be a :class:`GraphCoeffs` or an array of shape ``(14, *batch)``.
    """
    x = _coeff_array(g)
    batch = x.shape[1:]
    u = np.zeros((order + 1,) + batch)
    u[1] = 1.0
    f1 = np.zeros_like(u)
    f2 = np.zeros_like(u)
    top = min(order, GRAPH_ORDER)
    f1[2: top + 1] = x[0: top - 1]
    f2[2: top + 1] = x[7: 7 + top - 1]
    return Jet(u), Jet(f1), Jet(f2)


def graph_frenet(g, m: int = 3):
    """Jet-Frenet invariants of the graph curve (independent of the formula table)."""
    return frenet_from_jets(graph_jets(g, max(GRAPH_ORDER, m + 3)), m)


def _coeff_array(g) -> np.ndarray:
    if isinstance(g, GraphCoeffs):
        return np.array(g.vector(), dtype=float)
    return np.asarray(g, dtype=float)


def invariants_from_coeffs(g, table: dict | None = None) -> dict:
    """kappa0..kappa3 and tau0..tau3 from graph coefficients.

    ``g`` is a :class:`GraphCoeffs` or an array of shape ``(14, *batch)``.
    """
    table = formula_table() if table is None else table
    x = _coeff_array(g)
    if np.any(x[0] ** 2 + x[7] ** 2 == 0):
        raise InflectionError("a2^2 + b2^2 = 0: curvature vanishes, torsion undefined")
    return {name: table[name](x) for name in INVARIANT_NAMES}


def pointwise_residues(g, table: dict | None = None) -> PointwiseResidues:
    table = formula_table() if table is None else table
    x = _coeff_array(g)
    out = PointwiseResidues()
    for name in RESIDUE_FORMULAS:
        kind, pole = re.fullmatch(r"(\w+)\[(-?\d+)\]", name).groups()
        value = table[name](x)
        getattr(out, kind)[int(pole)] = value
    return out


# -- weights -------------------------------------------------------------------------

_SYMBOL_RE = re.compile(r"^(a|b|kappa|tau)(\d+)$")


def weight_of_symbol(name: str) -> int:
    m = _SYMBOL_RE.match(name)
    if not m:
        raise UsageError(f"unknown symbol {name!r}")
    head, idx = m.group(1), int(m.group(2))
    if head in "ab":
        if not 2 <= idx <= 8:
            raise UsageError(f"graph coefficient index out of range: {name}")
        return idx - 1
    return idx + 1


def weight_of(monomial) -> int:
    """Weight of a monomial given as a sympy expression or a string like 'a2*a4'."""
    expr = sympy.sympify(monomial) if isinstance(monomial, str) else monomial
    if expr.is_Add:
        raise UsageError("weight_of expects a single monomial")
    total = 0
    for base, exp in expr.as_powers_dict().items():
        if base.is_number:
            continue
        if not base.is_Symbol or not exp.is_Integer:
            raise UsageError(f"not a monomial factor: {base}**{exp}")
        total += int(exp) * weight_of_symbol(base.name)
    return total


def weight_audit(expression, expected: int) -> bool:
    """True when every term of ``expression`` has weight ``expected``.

    ``expression`` is a :class:`Formula` (prefactors included) or a
    polynomial given as a sympy expression / string.
    """
    if isinstance(expression, Formula):
        return all(w == expected for w in expression.term_weights())
    expr = sympy.expand(sympy.sympify(expression) if isinstance(expression, str) else expression)
    return all(weight_of(term) == expected for term in sympy.Add.make_args(expr))


def residue_weight(kind: str, pole: int) -> int:
    """Weight of the pointwise residue functional at ``s = pole``."""
    k = -pole
    return k - 1 if kind == "single_layer" else k + 3
