import math

import numpy as np
import pytest
from scipy import integrate
from scipy.special import ndtr
from scipy.stats import norm

from latent_composite.numerics.bvn import bvnu, phi2, phi2_rectangle

GRID_R = [-0.95, -0.7, -0.3, 0.0, 0.3, 0.7, 0.925, 0.95]
GRID_B = [-3.0, -1.0, 0.0, 1.5, 3.0]


def _quad_phi2(b1, b2, r):
    s = math.sqrt(1.0 - r * r)
    val, _ = integrate.quad(
        lambda x: norm.pdf(x) * ndtr((b2 - r * x) / s), -np.inf, b1, epsabs=1e-14, epsrel=1e-12, limit=200
    )
    return val


@pytest.mark.parametrize("r", GRID_R)
def test_phi2_matches_one_dimensional_quadrature(r):
    for b1 in GRID_B:
        for b2 in GRID_B:
            assert phi2(b1, b2, r) == pytest.approx(_quad_phi2(b1, b2, r), abs=1e-8)


@pytest.mark.parametrize("r", [-0.99, -0.5, 0.1, 0.8, 0.99])
def test_phi2_at_origin_has_closed_form(r):
    assert phi2(0.0, 0.0, r) == pytest.approx(0.25 + math.asin(r) / (2 * math.pi), abs=1e-12)


def test_independence_and_infinite_limits():
    assert phi2(0.3, -1.2, 0.0) == pytest.approx(ndtr(0.3) * ndtr(-1.2), abs=1e-15)
    assert phi2(np.inf, 0.7, 0.4) == pytest.approx(ndtr(0.7), abs=1e-15)
    assert phi2(-np.inf, 0.7, 0.4) == 0.0
    assert phi2(np.inf, np.inf, -0.4) == 1.0


def test_rejects_degenerate_correlation():
    with pytest.raises(ValueError):
        bvnu(0.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        phi2(0.0, 0.0, -1.0)


def test_vectorized_matches_scalar():
    b1 = np.array([-1.0, 0.2, 2.5])
    b2 = np.array([0.5, -0.3, 1.0])
    out = phi2(b1, b2, 0.6)
    assert out.shape == (3,)
    for i in range(3):
        assert out[i] == pytest.approx(phi2(b1[i], b2[i], 0.6), abs=1e-15)


def test_rectangles_partition_the_plane():
    cuts = np.array([-np.inf, -1.0, -0.1, 0.45, 1.3, np.inf])
    total = 0.0
    for lo4, hi4 in ((-np.inf, 0.0), (0.0, np.inf)):
        total += phi2_rectangle(cuts[:-1] - 0.2, cuts[1:] - 0.2, lo4 + 0.1, hi4 + 0.1, 0.3).sum()
    assert total == pytest.approx(1.0, abs=1e-12)
