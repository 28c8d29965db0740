import pytest
from fractions import Fraction

from mpmath import mp

from mkcf import Params

# Test-side oracle arithmetic runs above the library's working precision so
# comparisons never round worse than the code under test.
mp.prec = 320


K_GRID = ["1", "1.1", "sqrt(2)", "2"]
K_GRID_OPEN = ["1.1", "sqrt(2)", "2"]  # k > 1: no degenerate/unbounded cells


@pytest.fixture(scope="session")
def params_m0():
    return Params(m=0, k="1")


@pytest.fixture(scope="session")
def params_m1():
    return Params(m=1, k="1")


@pytest.fixture(scope="session")
def params_m0_frac():
    return Params(m=0, k=Fraction(1))


@pytest.fixture(scope="session")
def params_m1_frac():
    return Params(m=1, k=Fraction(1))


def make_params(m, k, precision_bits=256, max_depth=40):
    return Params(m=m, k=k, precision_bits=precision_bits, max_depth=max_depth)
