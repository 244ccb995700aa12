from fractions import Fraction

import numpy as np
import pytest

from utils.krawtchouk import kappa_from_p


def uniform_kappa(n):
    return kappa_from_p([Fraction(1, n + 1)] * (n + 1))


@pytest.fixture
def kappa_half():
    return uniform_kappa(1)


@pytest.fixture
def kappa_third():
    return uniform_kappa(2)


@pytest.fixture
def kappa_skewed():
    return kappa_from_p([Fraction(1, 2), Fraction(1, 4), Fraction(1, 4)])


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
