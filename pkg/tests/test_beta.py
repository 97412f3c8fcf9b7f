from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.integrate import quad

from brylinski import beta, curves
from brylinski.errors import CurveValidationError, HalfPlaneError, UsageError

PI = math.pi


def _raw_circle(s):
    val, _ = quad(lambda th: (2 * math.sin(th / 2)) ** s, 0, 2 * PI, epsabs=1e-13, epsrel=1e-13)
    return 2 * PI * val


def test_closed_form_oracle_against_raw_quadrature():
    for s in (0.0, 1.0, 2.0, 3.0, 5.0):
        assert math.isclose(beta.circle_single_layer_closed_form(s).real, _raw_circle(s), rel_tol=1e-11)
    assert math.isclose(beta.circle_single_layer_closed_form(3.0).real, 128 * PI / 3, rel_tol=1e-13)
    assert math.isclose(beta.circle_single_layer_closed_form(2.0, R=2.0).real, 16 * 8 * PI**2, rel_tol=1e-13)


@pytest.mark.parametrize("s,expected", [(0, 4 * PI**2), (2, 8 * PI**2), (1, 16 * PI)])
def test_single_layer_circle_examples(unit_circle, s, expected):
    v = beta.beta_single_layer(unit_circle, s)
    assert abs(v.value - expected) <= 1e-12 * expected
    assert v.abs_error_estimate < 1e-9 * expected
    assert v.kind == "single_layer" and v.method == "direct"


def test_single_layer_complex_and_near_abscissa(unit_circle):
    for s in (2 + 3j, -0.5, 0.3 - 1.2j):
        v = beta.beta_single_layer(unit_circle, s)
        ref = beta.circle_single_layer_closed_form(s)
        assert abs(v.value - ref) <= 1e-10 * abs(ref)


def test_half_plane_gates(unit_circle):
    with pytest.raises(HalfPlaneError):
        beta.beta_single_layer(unit_circle, -0.75)
    with pytest.raises(HalfPlaneError):
        beta.beta_b2(unit_circle, 1.2)
    with pytest.raises(HalfPlaneError):
        beta.beta_coaxial(unit_circle, 4.0)
    beta.beta_single_layer(unit_circle, -0.74)


def test_quadrature_spec_validation():
    with pytest.raises(UsageError):
        beta.QuadratureSpec(nodes=63)
    with pytest.raises(UsageError):
        beta.QuadratureSpec(nodes=130 - 1)
    beta.QuadratureSpec(nodes=64)


def test_b2_circle_examples(unit_circle):
    assert math.isclose(beta.beta_b2(unit_circle, 6).value.real, 576 * PI**2, rel_tol=1e-12)
    assert math.isclose(beta.beta_b2(unit_circle, 4).value.real, 64 * PI**2, rel_tol=1e-12)


def test_b2_at_two_reduces_to_curvature_product(trefoil):
    n = 512
    t = np.linspace(0, 2 * PI, n, endpoint=False)
    H = curves.mean_curvature_vector(trefoil, t)
    w = trefoil.speed(t) * 2 * PI / n
    Hsum = H @ w
    expected = -2 * Hsum @ Hsum
    assert math.isclose(beta.beta_b2(trefoil, 2).value.real, expected, rel_tol=1e-10, abs_tol=1e-10)


def test_coaxial_circle_examples(unit_circle):
    assert math.isclose(beta.beta_coaxial(unit_circle, 6).value.real, 7296 * PI**2, rel_tol=1e-12)
    b5 = 5 * 3 * 6 * 4 * 16 * PI + 25 / 4 * (2048 * PI / 15) - 5 * (128 * PI / 3)
    assert math.isclose(beta.beta_coaxial(unit_circle, 5).value.real, b5, rel_tol=1e-11)


def test_laplacian_factor():
    assert beta.laplacian_factor(6) == 6 * 4 * 7 * 5
    assert beta.laplacian_factor(6, d=4) == 6 * 4 * 8 * 6


def test_kernel_symmetry(trefoil):
    rng = np.random.default_rng(3)
    x, y = rng.uniform(0, 2 * PI, size=(2, 8))
    for s in (6.0, 2.5 + 1j):
        assert np.allclose(beta.b2_integrand(trefoil, x, y, s), beta.b2_integrand(trefoil, y, x, s),
                           rtol=1e-13, atol=0)
    for xi, yi in zip(x, y):
        assert math.isclose(beta.coaxial_kernel(trefoil, xi, yi, 6.0),
                            beta.coaxial_kernel(trefoil, yi, xi, 6.0), rel_tol=1e-12)


def test_grid_value_invariant_under_role_swap(ellipse21):
    grid = beta._grid(ellipse21, 256, 12)
    for kind, s in (("single_layer", 1.5), ("b2", 3.0 + 0.5j)):
        K = grid.kernel(s, kind)
        assert np.allclose(K, K.T, rtol=1e-13, atol=0)
        rows = np.sum(np.sum(K * grid.speed, axis=1) * grid.speed)
        cols = np.sum(np.sum(K.T * grid.speed, axis=1) * grid.speed)
        assert abs(rows - cols) <= 1e-13 * abs(rows)


def test_bit_stable_repeat(trefoil):
    a = beta.beta_single_layer(trefoil, 1.3, beta.QuadratureSpec(128))
    beta._grid.cache_clear()
    b = beta.beta_single_layer(trefoil, 1.3, beta.QuadratureSpec(128))
    assert a.value == b.value


@pytest.mark.parametrize("s", [6.0, 5.5])
def test_scaling_laws(trefoil, s):
    lam = 2.0
    big = trefoil.scaled(lam)
    a = beta.beta_single_layer(trefoil, s).value
    assert abs(beta.beta_single_layer(big, s).value - lam ** (s + 2) * a) <= 1e-10 * abs(lam ** (s + 2) * a)
    a = beta.beta_coaxial(trefoil, s).value
    assert abs(beta.beta_coaxial(big, s).value - lam ** (s - 2) * a) <= 1e-10 * abs(lam ** (s - 2) * a)


def test_rejects_nearly_self_intersecting_curve():
    pinched = curves.fourier([[0, 1], [0]], [[0], [0, 0, 0.5]], [[0, 0, 1e-5], [0]])
    with pytest.raises(CurveValidationError):
        beta.beta_single_layer(pinched, 2.0)


def test_nested_kernel_converges_to_projector_kernel(test_curves):
    # Same pairs as the acceptance check of the additive integrand.
    rng = np.random.default_rng(6)
    items = list(test_curves.values())
    s = 6.0
    for i in range(5):
        c = items[i % 3]
        x, y = rng.uniform(0, 2 * PI, size=2)
        exact = beta.coaxial_kernel(c, x, y, s)
        nested = beta.nested_coaxial_kernel(c, x, y, s, [0.02, 0.01])
        assert abs(nested - exact) <= 1e-5 * abs(exact)
        raw = [abs(beta.nested_coaxial_kernel(c, x, y, s, [r]) - exact) for r in (0.04, 0.02)]
        assert math.log2(raw[0] / raw[1]) > 1.9


def test_projector_kernel_integrates_to_cross_term_corrected_sum(unit_circle):
    # On the circle the full coaxial kernel integrates to B1 + B2 - s(s+1)(s-2) B_M(s-2).
    n = 256
    t = np.linspace(0, 2 * PI, n, endpoint=False)
    s = 6.0
    # rotational symmetry: every outer point sees the same inner integral
    inner = sum(beta.coaxial_kernel(unit_circle, 0.0, y, s) for y in t[1:]) * 2 * PI / n
    total = 2 * PI * inner
    expected = 7296 * PI**2 - s * (s + 1) * (s - 2) * 24 * PI**2
    assert math.isclose(total, 3264 * PI**2, rel_tol=1e-10)
    assert math.isclose(total, expected, rel_tol=1e-10)
