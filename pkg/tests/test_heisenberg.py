import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from utils.errors import OperatorError, WindowExhaustedError
from utils.generators import irw_generator
from utils.heisenberg import (HeisenbergOp, WindowFunction, bracket, check_commutation, check_heisenberg_generator,
                              check_intertwiner_irw, check_kernel_relations, heisenberg_apply,
                              irw_generator_from_algebra, pullback)
from utils.statespace import cycle_graph, enumerate_irw_sector, enumerate_sep, path_graph


def test_star_swaps_letters():
    assert HeisenbergOp.P(1).star() == HeisenbergOp.Q(1).simplified()
    word = HeisenbergOp.word(('P', 1), ('Q', 2), coef=3.0)
    assert word.star().terms == (((('P', 2), ('Q', 1)), 3.0),)


def test_theta_of_generators():
    expected = (HeisenbergOp.Z() - HeisenbergOp.P(1)).terms
    assert HeisenbergOp.P(1).theta().terms == expected
    assert HeisenbergOp.Z().theta() == HeisenbergOp.Z().simplified()


def test_pullback():
    assert pullback((('Q', 1),), (0,), 1.0) is None
    assert pullback((('P', 1), ('Q', 1)), (2,), 2.0) == (6.0, (2,))
    assert pullback((('Z', 0), ('Q', 2)), (1, 3), 0.5) == (1.5, (1, 2))
    with pytest.raises(OperatorError):
        pullback((('X', 1),), (0,), 1.0)


def test_apply_shrinks_window():
    f = WindowFunction.from_callable(lambda point: float(point[0]), 1, 4)
    out = heisenberg_apply(HeisenbergOp.P(1) * HeisenbergOp.P(1), f, 2.0)
    assert out.M == 2
    # lam^2 * (xi + 2)
    assert_allclose(out.values, [8.0, 12.0, 16.0])


def test_window_errors():
    f = WindowFunction(np.zeros((3,)))
    with pytest.raises(WindowExhaustedError):
        heisenberg_apply(HeisenbergOp.P(1) * HeisenbergOp.P(1) * HeisenbergOp.P(1), f, 1.0)
    with pytest.raises(OperatorError):
        heisenberg_apply(HeisenbergOp.Q(2), f, 1.0)


def test_canonical_commutation():
    rng = np.random.default_rng(3)
    f = WindowFunction(rng.standard_normal((6,)))
    comm = heisenberg_apply(bracket(HeisenbergOp.P(1), HeisenbergOp.Q(1)), f, 1.5)
    assert_allclose(comm.values, 1.5 * f.values[:5], atol=1e-12)


@pytest.mark.parametrize('lam', [0.5, 1.0, 2.0])
def test_commutation_check(lam):
    assert check_commutation(lam).passed


@pytest.mark.parametrize('graph, n, totals', [
    (path_graph(2), 1, (2,)),
    (path_graph(3), 2, (1, 1)),
    (cycle_graph(3), 1, (3,)),
])
@pytest.mark.parametrize('lam', [0.5, 2.0])
def test_generator_from_algebra(graph, n, totals, lam):
    space = enumerate_irw_sector(graph, n, totals)
    assert_allclose(irw_generator_from_algebra(space, lam).toarray(), irw_generator(space).toarray(), atol=1e-12)
    assert_allclose(irw_generator_from_algebra(space, lam, use_theta=True).toarray(),
                    irw_generator(space).toarray(), atol=1e-12)
    assert check_heisenberg_generator(lam, space).passed


def test_algebra_needs_irw_space():
    with pytest.raises(OperatorError):
        irw_generator_from_algebra(enumerate_sep(path_graph(2), 1, 1), 1.0)


@pytest.mark.parametrize('lam', [0.5, 1.0, 3.0])
def test_kernel_identity(lam):
    record = check_kernel_relations(lam)
    assert record.passed, record.residual


def test_kernel_identity_two_species():
    assert check_kernel_relations(1.0, n=2, M=4).passed


@pytest.mark.parametrize('lam', [0.5, 1.0, 2.0])
def test_irw_intertwiner_norm_factor(lam):
    record = check_intertwiner_irw(lam)
    assert record.passed, record.residual
    assert record.details['norm_factor'] == pytest.approx(math.exp(lam), rel=1e-8)


def test_irw_intertwiner_two_species():
    record = check_intertwiner_irw(1.0, n=2, M=3)
    assert record.passed
    assert record.details['expected_factor'] == pytest.approx(math.exp(2.0))
