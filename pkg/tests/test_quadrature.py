import math

import pytest

from qlep.quadrature import QuadratureError, integrate


def test_polynomial_exact():
    # GK15 is exact for low-degree polynomials; the driver should not even split
    assert integrate(lambda s: s * s, 0.0, 1.0) == pytest.approx(1.0 / 3.0, abs=1e-14)


def test_exponential_tail():
    val = integrate(lambda s: math.exp(-s), 0.0, 50.0, abs_tol=1e-12)
    assert val == pytest.approx(1.0, abs=1e-11)


def test_long_interval_with_mass_near_origin():
    # all the mass sits in [0, ~10]; a naive single panel would miss it
    val = integrate(lambda s: 1.0 / (1.0 + s * s), 0.0, 1e6, abs_tol=1e-10)
    assert val == pytest.approx(math.atan(1e6), abs=1e-8)


def test_interval_orientation():
    assert integrate(lambda s: s, 1.0, 0.0) == pytest.approx(-0.5, abs=1e-14)
    assert integrate(lambda s: s, 1.0, 1.0) == 0.0


def test_unreachable_tolerance_raises():
    # a discontinuous integrand with an impossible tolerance must fail loudly
    with pytest.raises(QuadratureError):
        integrate(lambda s: float(s > math.pi / 7), 0.0, 1.0, abs_tol=1e-30,
                  max_depth=10)
