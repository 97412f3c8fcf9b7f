from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.integrate import quad

from brylinski import curves
from brylinski.errors import CurveValidationError, UndefinedFrameError, UsageError
from brylinski.jets import Jet, vcross, vdot

from conftest import random_fourier_curve


def test_eval_jet_circle():
    x, y, z = curves.circle(1.0).eval_jet(0.0, 2)
    assert np.allclose(x.coeffs, [1, 0, -0.5])
    assert np.allclose(y.coeffs, [0, 1, 0])
    assert np.allclose(z.coeffs, [0, 0, 0])
    pos = curves.circle(1.0).eval_jet(0.3, 0)
    assert pos[0].order == 0 and np.isclose(pos[0].coeffs[0], math.cos(0.3))


def test_eval_jet_torus_knot_against_finite_differences(trefoil):
    t, h = 0.7, 1e-2
    jets = trefoil.eval_jet(t, 4)
    f = lambda u: trefoil(u)
    fd = [f(t),
          (f(t + h) - f(t - h)) / (2 * h),
          (f(t + h) - 2 * f(t) + f(t - h)) / h**2,
          (f(t + 2 * h) - 2 * f(t + h) + 2 * f(t - h) - f(t - 2 * h)) / (2 * h**3),
          (f(t + 2 * h) - 4 * f(t + h) + 6 * f(t) - 4 * f(t - h) + f(t - 2 * h)) / h**4]
    for k in range(5):
        d = np.array([j.derivatives()[k] for j in jets])
        assert np.linalg.norm(d - fd[k]) <= 1e-3 * np.linalg.norm(d) + 1e-12
    # tighter check of the first derivative with a smaller step
    h = 1e-5
    d1 = (f(t + h) - f(t - h)) / (2 * h)
    assert np.linalg.norm(np.array([j.coeffs[1] for j in jets]) - d1) < 1e-6 * np.linalg.norm(d1)


def test_eval_jet_order_limit():
    with pytest.raises(UsageError):
        curves.circle(1.0).eval_jet(0.0, curves.K_MAX + 1)


def test_arclength_examples(ellipse21):
    assert math.isclose(curves.arclength(curves.circle(2.0)), 4 * math.pi, rel_tol=1e-14)
    L = curves.arclength(ellipse21)
    ref, _ = quad(lambda t: math.hypot(2 * math.sin(t), math.cos(t)), 0, 2 * math.pi,
                  epsabs=1e-13, epsrel=1e-13, limit=200)
    assert abs(L - ref) < 1e-9 and abs(L - 9.6884482205) < 1e-9
    c = random_fourier_curve(3)
    assert math.isclose(curves.arclength(c.scaled(1.7)), 1.7 * curves.arclength(c), rel_tol=1e-13)


def test_arclength_jet_matches_quadrature(trefoil):
    t0, h = 0.4, 0.05
    jet = curves.arclength_jet(trefoil, t0, 12)
    ref, _ = quad(lambda u: float(trefoil.speed(u)), t0, t0 + h, epsabs=1e-14, epsrel=1e-14)
    assert abs(jet(h) - ref) < 1e-12


def test_frenet_circle_and_ellipse(ellipse21):
    fr = curves.frenet_invariants(curves.circle(2.0), 1.3, 3)
    assert np.allclose(fr.kappa, [0.5, 0, 0, 0], atol=1e-13)
    assert np.allclose(fr.tau, 0, atol=1e-13)
    fe = curves.frenet_invariants(ellipse21, 0.0, 2)
    assert math.isclose(fe.kappa[0], 2.0, rel_tol=1e-13)
    assert abs(fe.tau[0]) < 1e-13


def test_frenet_twisted_cubic():
    u = Jet.variable(6)
    jets = (u, u * u, u * u * u)
    fr = curves.frenet_from_jets(jets, 2)
    assert math.isclose(fr.kappa[0], 2.0, rel_tol=1e-14)
    assert math.isclose(fr.tau[0], 3.0, rel_tol=1e-14)


def test_frenet_ellipse_against_finite_difference_frame(ellipse21):
    # curvature |x' x y''| / |x'|^3 by finite differences at t = 0.9
    t, h = 0.9, 1e-4
    f = ellipse21
    d1 = (f(t + h) - f(t - h)) / (2 * h)
    d2 = (f(t + h) - 2 * f(t) + f(t - h)) / h**2
    k_fd = np.linalg.norm(np.cross(d1, d2)) / np.linalg.norm(d1) ** 3
    assert math.isclose(curves.frenet_invariants(f, t, 1).kappa[0], k_fd, rel_tol=1e-6)


def test_frenet_frame_orthonormal_right_handed(trefoil):
    fr = curves.frenet_invariants(trefoil, 2.2, 3)
    F = fr.frame
    assert np.allclose(F @ F.T, np.eye(3), atol=1e-12)
    assert math.isclose(np.linalg.det(F), 1.0, abs_tol=1e-12)
    assert fr.kappa[0] >= 0


def test_frenet_undefined_frame():
    u = Jet.variable(6)
    with pytest.raises(UndefinedFrameError):
        curves.frenet_from_jets((u, 0 * u, u * u * u), 1)


def test_mean_curvature_vector(trefoil):
    assert np.allclose(curves.mean_curvature_vector(curves.circle(1.0), 0.0), [-1, 0, 0], atol=1e-15)
    d1 = np.array([1.0, 2.0, 0.5])
    assert np.allclose(curves.mean_curvature_from_derivs(d1, 3.0 * d1), 0.0, atol=1e-15)
    fr = curves.frenet_invariants(trefoil, 1.1, 0)
    H = curves.mean_curvature_vector(trefoil, 1.1)
    assert np.allclose(H, fr.kappa[0] * fr.N, atol=1e-10)


def test_coaxial_examples():
    c = curves.circle(1.0)
    radii = [0.02, 0.01]
    square = lambda p: np.sum(p * p, axis=0)
    assert math.isclose(curves.coaxial_derivative_estimate(c, 0.0, square, radii), 4.0, rel_tol=1e-10)
    linear = lambda p: 3 * p[0] - 2 * p[1] + p[2] + 7
    assert abs(curves.coaxial_derivative_estimate(c, 0.0, linear, radii)) < 1e-9
    cube = lambda p: p[0] ** 3
    assert math.isclose(curves.coaxial_derivative_estimate(c, 0.0, cube, radii), 6.0, rel_tol=1e-9)
    with pytest.raises(UsageError):
        curves.coaxial_derivative_estimate(c, 0.0, cube, [])


def test_validate_embedded(ellipse21):
    assert math.isclose(curves.validate_embedded(curves.circle(1.0), 256), 2 / math.pi, rel_tol=1e-12)
    lo, hi = curves.validate_embedded(ellipse21, 128), curves.validate_embedded(ellipse21, 256)
    assert 0 < hi < 2 / math.pi and abs(lo - hi) < 1e-2
    # figure-eight-like curve whose two lobes nearly touch at the origin
    pinched = curves.fourier([[0, 1], [0]], [[0], [0, 0, 0.5]], [[0, 0, 1e-5], [0]])
    assert curves.validate_embedded(pinched, 256) < curves.CHORD_ARC_MIN
    with pytest.raises(CurveValidationError):
        curves.require_embedded(pinched)
    with pytest.raises(UsageError):
        curves.validate_embedded(ellipse21, 32)


def test_irregular_curve_rejected():
    with pytest.raises(CurveValidationError):
        curves.fourier([[0, 0], [0, 0]], [[0, 0], [0, 0]], [[0, 1], [0, 0]])


# -- properties ------------------------------------------------------------------


def _unit_jets(c, t, order):
    return curves.unit_speed_jets(c.eval_jet(t, order))


@pytest.mark.parametrize("seed", range(5))
def test_unit_speed_and_frenet_equations(seed):
    c = random_fourier_curve(seed)
    rng = np.random.default_rng(100 + seed)
    t = rng.uniform(0, 2 * math.pi, size=6)
    g = _unit_jets(c, t, 6)
    T = tuple(j.deriv() for j in g)
    speed = vdot(T, T).coeffs[0]
    assert np.allclose(speed, 1.0, atol=1e-12)
    acc = tuple(j.deriv() for j in T)
    kappa = curves.frenet_invariants(c, t, 1)
    k_jet = vdot(acc, acc) ** 0.5
    N = tuple(a / k_jet for a in acc)
    B = vcross(tuple(j.truncate(N[0].order) for j in T), N)
    fr_tau = kappa.tau[0]
    k0 = kappa.kappa[0]
    for i in range(3):
        dT = T[i].coeffs[1]
        dN = N[i].coeffs[1]  # order-one coefficients are d/ds at the base point
        assert np.allclose(dT, k0 * N[i].coeffs[0], atol=1e-9)
        assert np.allclose(dN, -k0 * T[i].coeffs[0] + fr_tau * B[i].coeffs[0], atol=1e-9)


def _poly(p):
    x, y, z = p
    return 0.3 * x**4 - x * y * z + 0.7 * y**3 + x * x * z - 1.5 * z**2 + 0.2 * y


def _poly_grad_lap(p):
    x, y, z = p
    grad = np.array([1.2 * x**3 - y * z + 2 * x * z, -x * z + 2.1 * y**2 + 0.2, -x * y + x * x - 3 * z])
    lap = 3.6 * x**2 + 4.2 * y + 2 * z - 3.0
    return grad, lap


def test_coaxial_identity_at_random_points(test_curves):
    rng = np.random.default_rng(11)
    names = list(test_curves) + ["fourier"]
    worst_order = np.inf
    for i in range(20):
        name = names[i % len(names)]
        c = test_curves[name] if name != "fourier" else random_fourier_curve(i)
        t = float(rng.uniform(0, 2 * math.pi))
        g = _unit_jets(c, t, 4)
        second = 2 * _poly(g).coeffs[2]
        u = c(t)
        grad, lap = _poly_grad_lap(u)
        expected = lap - second + grad @ curves.mean_curvature_vector(c, t)
        radii = [0.02, 0.01]
        est = curves.coaxial_derivative_estimate(c, t, _poly, radii)
        assert abs(est - expected) <= 1e-8 * max(1.0, abs(expected))
        raw = curves.coaxial_quotients(c, t, _poly, [0.04, 0.02, 0.01])
        err = np.abs(raw - expected)
        worst_order = min(worst_order, math.log2(err[1] / err[2]), math.log2(err[0] / err[1]))
    assert worst_order >= 1.99


def test_divergence_theorem(test_curves):
    n = 256
    t = np.linspace(0, 2 * math.pi, n, endpoint=False)
    for c in test_curves.values():
        g = _unit_jets(c, t, 4)
        second = 2 * _poly(g).coeffs[2]
        total = np.sum(second * c.speed(t)) * 2 * math.pi / n
        assert abs(total) < 1e-8


def test_invariant_scaling(trefoil):
    lam = 2.0
    a = curves.frenet_invariants(trefoil, 0.8, 3)
    b = curves.frenet_invariants(trefoil.scaled(lam), 0.8, 3)
    for n in range(4):
        f = lam ** (-1 - n)
        assert abs(b.kappa[n] - f * a.kappa[n]) <= 1e-10 * max(abs(f * a.kappa[n]), 1e-3)
        assert abs(b.tau[n] - f * a.tau[n]) <= 1e-10 * max(abs(f * a.tau[n]), 1e-3)
