import pytest

from bkdisk import EXACT, float_backend


@pytest.fixture
def exact():
    return EXACT


@pytest.fixture
def fb256():
    return float_backend(256)


def approx_equal(a, b, tol=1e-70):
    """Loose comparison across Fraction/mpfr."""
    return abs(float(a - b)) <= tol
