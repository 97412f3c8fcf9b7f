from __future__ import annotations

import numpy as np
import pytest

from brylinski import curves


@pytest.fixture(scope="session")
def unit_circle():
    return curves.circle(1.0)


@pytest.fixture(scope="session")
def ellipse21():
    return curves.ellipse(2.0, 1.0)


@pytest.fixture(scope="session")
def trefoil():
    return curves.torus_knot(2, 3, 2.0, 0.5)


@pytest.fixture(scope="session")
def test_curves(unit_circle, ellipse21, trefoil):
    return {"circle": unit_circle, "ellipse": ellipse21, "torus_knot": trefoil}


def random_fourier_curve(seed: int, nmax: int = 3, wobble: float = 0.15):
    """A circle-like closed curve with small random Fourier perturbations."""
    rng = np.random.default_rng(seed)
    comps = []
    for i in range(3):
        cs = list(wobble * rng.normal(size=nmax + 1) / (1 + np.arange(nmax + 1)) ** 2)
        sn = list(wobble * rng.normal(size=nmax + 1) / (1 + np.arange(nmax + 1)) ** 2)
        if i == 0:
            cs[1] += 1.0
        if i == 1:
            sn[1] += 1.0
        comps.append([cs, sn])
    return curves.fourier(*comps)
