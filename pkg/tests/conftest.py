import math

import numpy as np
import pytest

from univalent import Polynomial, RationalFunction


def rat(*coef):
    return RationalFunction.from_polynomial(Polynomial(list(coef)))


def exp_taylor(d):
    return RationalFunction.from_polynomial(Polynomial([1 / math.factorial(k) for k in range(d + 1)]))


@pytest.fixture
def rng():
    return np.random.default_rng(20261018)
