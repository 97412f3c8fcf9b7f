from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.optimize import brentq

from brylinski import beta, continuation as cont, curves, localgraph
from brylinski.errors import NotAPoleError, OrderBudgetError, PoleProximityError, UsageError

PI = math.pi


def _circle_chord_series(order):
    out = np.zeros(order + 1)
    for j in range(0, order // 2 + 1):
        out[2 * j] = 2 * (-1) ** j / math.factorial(2 * j + 2)
    return out


def test_chord_jet_circle():
    for x in (0.0, 1.7):
        for w in (1, -1):
            g = cont.chord_jet(curves.circle(1.0), x, w, order=10)
            assert np.allclose(g.coeffs, _circle_chord_series(10), atol=1e-14)


def test_chord_jet_second_coefficient_is_curvature(trefoil):
    for x in (0.2, 2.9):
        k0 = curves.frenet_invariants(trefoil, x, 0).kappa[0]
        for w in (1, -1):
            g = cont.chord_jet(trefoil, x, w)
            assert abs(g.coeffs[0] - 1) < 1e-14 and abs(g.coeffs[1]) < 1e-14
            assert math.isclose(g.coeffs[2], -k0**2 / 12, rel_tol=1e-12)


def test_chord_jet_arguments():
    with pytest.raises(UsageError):
        cont.chord_jet(curves.circle(1.0), 0.0, w=0)


def _point_at_arclength(c, x, w, r):
    """Parameter y with signed arclength w*r from x (scipy root finding on quad)."""
    f = lambda y: w * quad(lambda u: float(c.speed(u)), x, y, epsabs=1e-14, epsrel=1e-14)[0] - r
    span = 2 * r / float(np.min(c.speed(np.linspace(0, 2 * PI, 256))))
    lo, hi = (x, x + span) if w == 1 else (x - span, x)
    return brentq(f, lo, hi, xtol=1e-15, rtol=1e-15)


@pytest.mark.parametrize("kind,s", [("single_layer", 2.5), ("single_layer", -3.3 + 1j), ("b2", 1.7 - 0.4j)])
def test_decomposition_reproduces_direct_integrand(trefoil, kind, s):
    x, K = 0.9, 8
    terms = cont.decompose_kernel(trefoil, x, s, kind, order=K)
    for w in (1, -1):
        errs = []
        radii = (0.2, 0.1)
        for r in radii:
            y = _point_at_arclength(trefoil, x, w, r)
            if kind == "single_layer":
                d = trefoil(y) - trefoil(x)
                exact = complex(np.sum(d * d) ** (s / 2))
            else:
                exact = complex(beta.b2_integrand(trefoil, x, y, s))
            approx = sum(t(r) for t in terms if t.w == w)
            leading = min(t.m for t in terms)
            errs.append(abs(approx - exact) / r ** (s.real + leading))
        # remainder is O(r**(K+1)) relative to the leading power
        assert errs[0] < 1e-4
        assert math.log2(errs[0] / errs[1]) > K + 1 - 0.6


def test_decomposition_examples():
    c = curves.circle(1.0)
    single = cont.decompose_kernel(c, 0.3, 2.0, "single_layer")
    assert len(single) == 2 and all(t.m == 0 for t in single)
    expected = _circle_chord_series(8)
    for t in single:
        assert np.allclose(t.jet.coeffs, expected, atol=1e-14)
    zero = cont.decompose_kernel(curves.ellipse(2, 1), 0.3, 0.0, "single_layer")
    for t in zero:
        assert np.allclose(t.jet.coeffs, np.eye(9)[0], atol=1e-14)
    s = 5.0
    b2 = cont.decompose_kernel(c, 0.3, s, "b2")
    lead = {(t.m, t.w): t.jet.coeffs[0] for t in b2}
    for w in (1, -1):
        assert math.isclose(lead[(-2, w)].real, -s, rel_tol=1e-13)             # H.H = 1
        assert math.isclose(lead[(0, w)].real, s * (s - 2) / 4, rel_tol=1e-13)  # H_x.d = -H_y.d = -r^2/2


def test_continue_beta_circle_examples(unit_circle):
    v = cont.continue_beta(unit_circle, -2.0)
    assert abs(v.value) < 1e-8
    assert v.method == "continuation" and v.kind == "single_layer"
    assert math.isclose(cont.continue_beta(unit_circle, 2.0).value.real, 8 * PI**2, rel_tol=1e-10)
    assert math.isclose(cont.continue_beta(unit_circle, 6.0, "coaxial").value.real, 7296 * PI**2,
                        rel_tol=1e-10)


@pytest.mark.parametrize("s", [-2.5, -4.5 + 0.7j, 0.5, 1.5 + 2j])
def test_continue_beta_circle_gamma_form(unit_circle, s):
    v = cont.continue_beta(unit_circle, s)
    ref = beta.circle_single_layer_closed_form(s)
    assert abs(v.value - ref) <= 1e-9 * max(abs(ref), 1)


def test_continuation_agrees_with_direct(ellipse21):
    for s in (1.0, 2.5 + 1j):
        a = cont.continue_beta(ellipse21, s).value
        b = beta.beta_single_layer(ellipse21, s).value
        assert abs(a - b) <= 1e-9 * abs(b)
    a = cont.continue_beta(ellipse21, 6.5, "coaxial").value
    b = beta.beta_coaxial(ellipse21, 6.5).value
    assert abs(a - b) <= 1e-9 * abs(b)


def test_epsilon_independence(trefoil):
    base = cont.EngineConfig()
    eps = cont._geometry(trefoil, base).eps
    half = cont.EngineConfig(epsilon=eps / 2)
    for s, kind in ((-2.5, "single_layer"), (0.5 + 1j, "coaxial")):
        a = cont.continue_beta(trefoil, s, kind, base).value
        b = cont.continue_beta(trefoil, s, kind, half).value
        assert abs(a - b) <= 1e-8 * abs(a)


def test_pole_proximity_and_budget(unit_circle):
    with pytest.raises(PoleProximityError) as info:
        cont.continue_beta(unit_circle, -1 + 1e-4)
    assert info.value.pole == -1
    with pytest.raises(PoleProximityError) as info:
        cont.continue_beta(unit_circle, 3 + 2e-4j, "coaxial")
    assert info.value.pole == 3
    with pytest.raises(PoleProximityError) as info:
        cont.continue_beta(unit_circle, 1.0, "coaxial")
    assert info.value.pole == 1
    with pytest.raises(OrderBudgetError):
        cont.continue_beta(unit_circle, -10.5)
    with pytest.raises(OrderBudgetError):
        cont.continue_beta(unit_circle, -8.5, "coaxial")
    with pytest.raises(UsageError):
        cont.continue_beta(unit_circle, 2.0, "b3")


def test_pole_lattice():
    assert cont.pole_lattice("single_layer", 3) == [-1, -3, -5]
    assert cont.pole_lattice("coaxial", 4) == [3, 1, -1, -3]
    assert cont.is_lattice_pole("coaxial", 1) and not cont.is_lattice_pole("coaxial", 2)
    assert not cont.is_lattice_pole("single_layer", 1) and not cont.is_lattice_pole("single_layer", -1.5)
    assert not cont.is_lattice_pole("single_layer", -1 + 1j)
    with pytest.raises(NotAPoleError):
        cont.residue(curves.circle(1.0), -2, "single_layer")
    with pytest.raises(NotAPoleError):
        cont.pointwise_residue(curves.circle(1.0), 0.0, 2, "coaxial")


def test_engine_config_validation():
    for bad in (dict(K=0), dict(N_outer=15), dict(N_far=10), dict(epsilon=-1.0),
                dict(pole_guard=0.0), dict(switch=1.5), dict(K=30, tail=12)):
        with pytest.raises(UsageError):
            cont.EngineConfig(**bad)


@pytest.mark.parametrize("kind,pole,expected", [
    ("single_layer", -1, 4 * PI), ("single_layer", -3, PI / 2), ("single_layer", -5, 3 * PI / 32),
    ("coaxial", 3, 96 * PI), ("coaxial", 1, -4 * PI), ("coaxial", -1, 1.5 * PI)])
def test_circle_residues(unit_circle, kind, pole, expected):
    rep = cont.residue(unit_circle, pole, kind)
    assert math.isclose(rep.residue, expected, rel_tol=1e-10)
    assert rep.method == "analytic_subtraction" and not rep.removable
    assert isinstance(rep.residue, float)


def test_numeric_limit_cross_check(ellipse21):
    for kind, pole in (("single_layer", -3), ("coaxial", 1)):
        rep = cont.residue(ellipse21, pole, kind, numeric_check=True)
        tol = rep.numeric_error + rep.error_estimate + 1e-9 * abs(rep.residue)
        assert abs(rep.numeric_limit - rep.residue) <= 10 * tol
        assert abs(rep.numeric_limit - rep.residue) <= 1e-5 * abs(rep.residue)


def test_pointwise_residue_matches_graph_polynomials(trefoil):
    x = np.array([0.1, 1.4, 3.3])
    X = np.stack([localgraph.graph_coefficients(trefoil, float(t)).vector() for t in x], axis=1)
    pr = localgraph.pointwise_residues(X)
    for kind, table in (("single_layer", pr.single_layer), ("coaxial", pr.coaxial)):
        for pole, ref in table.items():
            got = cont.pointwise_residue(trefoil, x, pole, kind)
            assert np.allclose(got, ref, rtol=1e-9, atol=0)


def test_residue_scaling(trefoil):
    lam = 2.0
    big = trefoil.scaled(lam)
    for kind, pole, power in (("single_layer", -3, -1), ("coaxial", 1, -1)):
        a = cont.residue(trefoil, pole, kind).residue
        b = cont.residue(big, pole, kind).residue
        assert math.isclose(b, lam**power * a, rel_tol=1e-8)


def test_deterministic_repeat(ellipse21):
    cfg = cont.EngineConfig(N_outer=64, N_far=128)
    a = cont.continue_beta(ellipse21, -1.5 + 0.5j, "single_layer", cfg).value
    cont._geometry.cache_clear()
    b = cont.continue_beta(ellipse21, -1.5 + 0.5j, "single_layer", cfg).value
    assert a == b
