"""Built-in verification suites run by ``brylinski verify``.

Each check compares a computed value with an independent reference and
records the relative error against a tolerance.  Checks that depend on the
closed-form invariant table take the table as an argument, so a perturbed
table (see :func:`localgraph.mutated_table`) makes them fail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from . import beta, continuation, curves, localgraph
from .curves import TWO_PI


@dataclass
class Check:
    name: str
    value: complex
    reference: complex
    tolerance: float
    absolute: bool = False

    @property
    def error(self) -> float:
        diff = abs(complex(self.value) - complex(self.reference))
        if self.absolute:
            return diff
        return diff / max(abs(complex(self.reference)), 1e-300)

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.error) and self.error <= self.tolerance)


SINGLE_POLES = (-1, -3, -5)
COAXIAL_POLES = (3, 1, -1)


def _raw_circle_single_layer(s: float) -> float:
    """2 pi * int_0^{2 pi} (2 sin(theta/2))^s dtheta for the unit circle."""
    val, _ = quad(lambda th: (2 * math.sin(th / 2)) ** s, 0.0, TWO_PI, epsabs=1e-13, epsrel=1e-13)
    return TWO_PI * val


def formula_checks(table: dict, draws: int = 20, seed: int = 7, tol: float = 1e-9) -> list:
    """Closed-form invariants against jet-Frenet on random synthetic graph curves."""
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(14, draws))
    X[0] += np.where(X[0] >= 0, 0.5, -0.5)   # keep a2^2 + b2^2 away from zero
    inv = localgraph.invariants_from_coeffs(X, table)
    fr = localgraph.graph_frenet(X)
    out = []
    for n in range(4):
        for name, ref in ((f"kappa{n}", fr.kappa[n]), (f"tau{n}", fr.tau[n])):
            err = np.abs(inv[name] - ref) / np.maximum(np.abs(ref), 1e-12)
            worst = int(np.argmax(err))
            out.append(Check(f"formula {name} vs jet-Frenet (worst of {draws})",
                             inv[name][worst], ref[worst], tol))
    return out


def invariant_integrands(c: curves.Curve, t: np.ndarray, table: dict | None = None) -> dict:
    """Pointwise residue densities from the closed-form table, keyed by (kind, pole)."""
    X = np.stack([localgraph.graph_coefficients(c, float(ti)).vector() for ti in t], axis=1)
    pr = localgraph.pointwise_residues(X, table)
    out = {("single_layer", p): v for p, v in pr.single_layer.items()}
    out.update({("coaxial", p): v for p, v in pr.coaxial.items()})
    return out


def invariant_integrals(c: curves.Curve, table: dict | None = None, n: int = 256) -> dict:
    t = np.linspace(0.0, TWO_PI, n, endpoint=False)
    w = c.speed(t) * (TWO_PI / n)
    return {key: float(w @ v) for key, v in invariant_integrands(c, t, table).items()}


def residue_checks(c: curves.Curve, table: dict, cfg=None, tol: float = 1e-6,
                   pointwise_points: int = 5, pointwise_tol: float = 1e-8) -> list:
    out = []
    ref = invariant_integrals(c, table)
    for kind, poles in (("single_layer", SINGLE_POLES), ("coaxial", COAXIAL_POLES)):
        for p in poles:
            rep = continuation.residue(c, p, kind, cfg)
            out.append(Check(f"residue {kind} at {p} vs invariant integral", rep.residue,
                             ref[(kind, p)], tol))
    t = np.linspace(0.0, TWO_PI, pointwise_points, endpoint=False) + 0.37
    dens = invariant_integrands(c, t, table)
    for (kind, p), v in dens.items():
        eng = continuation.pointwise_residue(c, t, p, kind)
        err = np.abs(eng - v) / np.maximum(np.abs(v), 1e-300)
        worst = int(np.argmax(err))
        out.append(Check(f"pointwise {kind} residue at {p} (worst of {pointwise_points})",
                         eng[worst], v[worst], pointwise_tol))
    return out


def circle_suite(table: dict | None = None) -> list:
    table = localgraph.formula_table() if table is None else table
    c = curves.circle(1.0)
    pi = math.pi
    out = []
    for s in (0.0, 1.0, 2.0):
        out.append(Check(f"Gamma-form oracle vs raw quadrature at s={s:g}",
                         beta.circle_single_layer_closed_form(s), _raw_circle_single_layer(s), 1e-10))
    for s in (0, 1, 2, 3.5, 2 + 3j):
        out.append(Check(f"direct single layer at s={s}", beta.beta_single_layer(c, s).value,
                         beta.circle_single_layer_closed_form(s), 1e-8))
    for s, tol in ((-2, 1e-8), (-4, 1e-6)):
        out.append(Check(f"continued single layer at s={s} (absolute)",
                         continuation.continue_beta(c, s).value,
                         beta.circle_single_layer_closed_form(s), tol, absolute=True))
    out.append(Check("direct coaxial at s=6", beta.beta_coaxial(c, 6).value, 7296 * pi ** 2, 1e-8))
    out.append(Check("continued coaxial at s=6", continuation.continue_beta(c, 6, "coaxial").value,
                     7296 * pi ** 2, 1e-7))
    exact = {("single_layer", -1): 4 * pi, ("single_layer", -3): pi / 2,
             ("single_layer", -5): 3 * pi / 32, ("coaxial", 3): 96 * pi,
             ("coaxial", 1): -4 * pi, ("coaxial", -1): 1.5 * pi}
    for (kind, p), v in exact.items():
        out.append(Check(f"residue {kind} at {p}", continuation.residue(c, p, kind).residue, v, 1e-8))
    c2 = c.scaled(2.0)
    out.append(Check("scaling single layer s=6", beta.beta_single_layer(c2, 6).value,
                     2.0 ** 8 * beta.beta_single_layer(c, 6).value, 1e-10))
    out.append(Check("scaling coaxial s=6", beta.beta_coaxial(c2, 6).value,
                     2.0 ** 4 * beta.beta_coaxial(c, 6).value, 1e-10))
    out.extend(formula_checks(table))
    return out


def residue_identity_suite(c: curves.Curve, table: dict | None = None, cfg=None) -> list:
    table = localgraph.formula_table() if table is None else table
    return residue_checks(c, table, cfg) + formula_checks(table)


SUITES = ("circle", "paper-residues")
