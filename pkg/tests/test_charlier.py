import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis.strategies import integers, sampled_from

from utils.charlier import (charlier, charlier_table, check_charlier_orthogonality, check_raising_lowering,
                            poisson_tail_cutoff, poisson_weight, product_kernel)
from utils.errors import CharlierError


def test_low_degrees():
    lam = Fraction(3, 2)
    assert charlier(0, 5, lam) == 1
    assert charlier(1, 3, lam) == 1 - Fraction(3) / lam
    assert charlier(2, 2, Fraction(1)) == -1


@given(integers(0, 8), integers(0, 8))
def test_duality_in_argument_and_degree(m, z):
    # C_m(z) = C_z(m) for integer arguments
    assert charlier(m, z, Fraction(2)) == charlier(z, m, Fraction(2))


def test_float_matches_exact():
    assert charlier(6, 9, 0.5) == pytest.approx(float(charlier(6, 9, Fraction(1, 2))), rel=1e-12)


def test_table_read_only():
    table = charlier_table(3, 4, 1.0)
    assert table.shape == (4, 5)
    with pytest.raises(ValueError):
        table[0, 0] = 2.0


def test_weights():
    assert poisson_weight((0,), 1.0) == pytest.approx(math.exp(-1))
    assert poisson_weight((2, 1), 2.0) == pytest.approx(math.exp(-2) * 2 * math.exp(-2) * 2)
    assert product_kernel((0, 0), (3, 1), 0.7) == pytest.approx(math.exp(1.4))


@pytest.mark.parametrize('lam', [0.5, 1.0, 2.0, 5.0])
def test_orthogonality(lam):
    record = check_charlier_orthogonality(lam)
    assert record.passed, record.residual


@given(sampled_from([0.3, 1.0, 2.5, Fraction(7, 3)]))
def test_raising_lowering(lam):
    record = check_raising_lowering(lam)
    assert record.passed, record.details


def test_tail_cutoff_grows_with_degree():
    assert poisson_tail_cutoff(1.0, 12) >= poisson_tail_cutoff(1.0, 2) > 1


@pytest.mark.parametrize('bad', [0, -1.0, True])
def test_lambda_validation(bad):
    with pytest.raises(CharlierError):
        charlier(1, 1, bad)


def test_negative_arguments():
    with pytest.raises(CharlierError):
        charlier(-1, 0, 1.0)
    with pytest.raises(CharlierError):
        poisson_weight((-1,), 1.0)
    with pytest.raises(CharlierError):
        product_kernel((1,), (1, 2), 1.0)
