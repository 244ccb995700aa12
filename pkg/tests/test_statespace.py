import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis.strategies import integers, lists

from utils.errors import GraphError, StateSpaceError, StateSpaceTooLarge
from utils.statespace import (IRW, SEP, build_graph, compositions, cycle_graph, enumerate_irw_sector,
                              enumerate_sep, local_states, path_graph, preset_graph)


def test_presets():
    assert preset_graph('edge').edges == ((1, 2),)
    assert preset_graph('triangle').edges == ((1, 2), (2, 3), (1, 3))
    assert preset_graph('path3') == preset_graph('path-3') == path_graph(3)
    assert preset_graph('complete-4').num_sites == 4
    assert len(preset_graph('complete-4').edges) == 6
    assert preset_graph('cycle-5').neighbors(1) == [2, 5]


@pytest.mark.parametrize('L, edges', [
    (0, []),
    (2, [(1, 3)]),
    (2, [(1, 1)]),
    (3, [(1, 2), (2, 1)]),
    (3, [(1, 2, 3)]),
])
def test_bad_graphs(L, edges):
    with pytest.raises(GraphError):
        build_graph(L, edges)


def test_unknown_preset():
    with pytest.raises(GraphError):
        preset_graph('star-4')
    with pytest.raises(GraphError):
        cycle_graph(2)


def test_local_states_order():
    assert local_states(1, 2) == ((2, 0), (1, 1), (0, 2))
    assert local_states(2, 1) == ((1, 0, 0), (0, 1, 0), (0, 0, 1))


@given(integers(0, 6), integers(1, 4))
def test_compositions_count_and_order(total, parts):
    listed = list(compositions(total, parts))
    assert len(listed) == math.comb(total + parts - 1, parts - 1)
    assert listed == sorted(listed, reverse=True)
    assert all(sum(c) == total for c in listed)


def test_sep_sizes():
    space = enumerate_sep(path_graph(3), 2, 2)
    assert space.mode == SEP
    assert space.size == 6 ** 3
    assert space.width == 3


def test_sep_rank_matches_kron_order():
    space = enumerate_sep(path_graph(2), 1, 1)
    # site 1 most significant; hole state (1, 0) first
    assert space.unrank(0).tolist() == [[1, 0], [1, 0]]
    assert space.unrank(1).tolist() == [[1, 0], [0, 1]]
    assert space.unrank(2).tolist() == [[0, 1], [1, 0]]


@settings(max_examples=30)
@given(integers(0, 215))
def test_rank_roundtrip(r):
    space = enumerate_sep(path_graph(3), 2, 2)
    assert space.rank(space.unrank(r)) == r


def test_irw_sector():
    space = enumerate_irw_sector(path_graph(3), 2, (2, 1))
    assert space.mode == IRW
    assert space.size == math.comb(4, 2) * 3
    for config in space.configs():
        assert config.sum(axis=0).tolist() == [2, 1]
    assert len(space.local_alphabet) == 3 * 2
    assert space.local_alphabet[0] == (2, 1)


def test_local_index_consistent():
    space = enumerate_irw_sector(path_graph(2), 1, (2,))
    for r, config in enumerate(space.configs()):
        for x in range(space.L):
            assert space.local_alphabet[space.local_index[r, x]] == tuple(config[x])


def test_contains_and_errors():
    space = enumerate_sep(path_graph(2), 1, 1)
    assert not space.contains(np.array([[2, 0], [1, 0]]))
    with pytest.raises(StateSpaceError):
        space.rank(np.zeros((3, 2), dtype=int))
    with pytest.raises(StateSpaceError):
        space.unrank(space.size)


def test_invalid_parameters():
    with pytest.raises(StateSpaceError):
        enumerate_sep(path_graph(2), 0, 1)
    with pytest.raises(StateSpaceError):
        enumerate_sep(path_graph(2), 1, 0)
    with pytest.raises(StateSpaceError):
        enumerate_irw_sector(path_graph(2), 2, (1,))
    with pytest.raises(StateSpaceError):
        enumerate_irw_sector(path_graph(2), 1, (0,))
    assert enumerate_irw_sector(path_graph(2), 1, (0,), allow_empty=True).size == 1


def test_cap():
    with pytest.raises(StateSpaceTooLarge):
        enumerate_sep(path_graph(4), 2, 2, max_size=100)


def test_cap_from_environment(monkeypatch):
    monkeypatch.setenv('DUALITY_LAB_MAX_STATES', '10')
    with pytest.raises(StateSpaceTooLarge):
        enumerate_sep(path_graph(3), 1, 1)


@given(lists(integers(0, 3), min_size=1, max_size=2))
def test_irw_size_formula(totals):
    if not any(totals):
        totals = [1] + totals[1:]
    space = enumerate_irw_sector(path_graph(3), len(totals), totals)
    assert space.size == math.prod(math.comb(t + 2, 2) for t in totals)
