import math

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from utils.errors import OperatorError, StateSpaceError
from utils.generators import irw_generator, sep_generator, sep_weight
from utils.simulate import (BLOCK_SIZE, DUAL, FORWARD, TV_GATE, TV_GATE_SAMPLES, JumpTable, block_rng, final_states,
                            gillespie_run, holding_time_ks, holding_times, marginal_tv_check, mc_duality_record,
                            mc_duality_test, reversibility_in_law)
from utils.statespace import cycle_graph, enumerate_irw_sector, enumerate_sep, path_graph
from utils.verify import build_irw_duality, build_sep_duality


@pytest.fixture
def edge_gen():
    return sep_generator(enumerate_sep(path_graph(2), 1, 1))


def test_jump_table(edge_gen):
    table = JumpTable.from_generator(edge_gen)
    assert table.exit_rates.tolist() == [0.0, 1.0, 1.0, 0.0]
    assert table.jump(1, np.random.default_rng(0)) == 2
    assert table.jump(2, np.random.default_rng(0)) == 1


def test_streams_are_independent():
    a = block_rng(5, FORWARD, 0).random(4)
    b = block_rng(5, DUAL, 0).random(4)
    c = block_rng(5, FORWARD, 1).random(4)
    assert not np.allclose(a, b)
    assert not np.allclose(a, c)
    assert_array_equal(a, block_rng(5, FORWARD, 0).random(4))


def test_single_particle_alternates(edge_gen):
    traj = gillespie_run(edge_gen, 1, 20.0, seed=3)
    assert traj.initial == 1
    assert all(t2 > t1 for t1, t2 in zip(traj.times, traj.times[1:]))
    assert all(t <= 20.0 for t in traj.times)
    assert traj.ranks[::2] == [1] * len(traj.ranks[::2])
    assert traj.ranks[1::2] == [2] * len(traj.ranks[1::2])
    assert traj.state_at(20.0) == traj.final


def test_absorbing_state_holds(edge_gen):
    traj = gillespie_run(edge_gen, np.array([[0, 1], [0, 1]]), 5.0)
    assert traj.times == []
    assert traj.final == 3


def test_seeded_runs_repeat(edge_gen):
    assert gillespie_run(edge_gen, 1, 10.0, seed=11) == gillespie_run(edge_gen, 1, 10.0, seed=11)


def test_bad_inputs(edge_gen):
    with pytest.raises(OperatorError):
        gillespie_run(edge_gen, 1, -1.0)
    with pytest.raises(StateSpaceError):
        gillespie_run(edge_gen, 4, 1.0)
    with pytest.raises(OperatorError):
        final_states(edge_gen, 1, 1.0, 0)
    with pytest.raises(OperatorError):
        holding_times(edge_gen, 0, 10)


def test_final_states_block_layout():
    gen = sep_generator(enumerate_sep(path_graph(3), 1, 1))
    samples = 2 * BLOCK_SIZE + 17
    finals = final_states(gen, np.array([[0, 1], [1, 0], [1, 0]]), 0.7, samples, seed=9)
    assert finals.shape == (samples,)
    assert_array_equal(finals, final_states(gen, np.array([[0, 1], [1, 0], [1, 0]]), 0.7, samples, seed=9))
    assert_array_equal(finals, final_states(gen, np.array([[0, 1], [1, 0], [1, 0]]), 0.7, samples, seed=9,
                                            workers=2))
    # one particle on three sites: only the three one-particle states are reachable
    assert set(np.unique(finals)) <= {1, 2, 4}


def test_zero_horizon_is_exact(kappa_half):
    space = enumerate_sep(path_graph(3), 1, 1)
    gen = sep_generator(space)
    D = build_sep_duality(space, kappa_half)
    result = mc_duality_test(gen, gen, D, 5, 3, 0.0, 200)
    assert result.mean_forward == result.mean_dual == D.entry(5, 3)
    assert result.exact == pytest.approx(D.entry(5, 3))
    assert result.max_z == 0.0


def test_sep_mc_duality(kappa_skewed):
    space = enumerate_sep(path_graph(2), 2, 2)
    gen = sep_generator(space)
    xi0 = np.array([[0, 2, 0], [2, 0, 0]])
    eta0 = np.array([[2, 0, 0], [0, 0, 2]])
    result = mc_duality_test(gen, gen, build_sep_duality(space, kappa_skewed), xi0, eta0, 0.5, 8000, seed=1)
    assert result.exact is not None
    record = mc_duality_record(result, space.parameters())
    assert record.check == 'mc-duality'
    assert record.passed, record.details
    assert record.parameters['samples'] == 8000


def test_irw_mc_duality():
    space_a = enumerate_irw_sector(cycle_graph(3), 1, (2,))
    space_b = enumerate_irw_sector(cycle_graph(3), 1, (1,))
    result = mc_duality_test(irw_generator(space_a), irw_generator(space_b), build_irw_duality(space_a, space_b, 1.0),
                             np.array([[2], [0], [0]]), np.array([[0], [0], [1]]), 0.4, 8000, seed=2)
    assert mc_duality_record(result, space_a.parameters()).passed


def test_marginal_law():
    gen = sep_generator(enumerate_sep(path_graph(3), 1, 1))
    record = marginal_tv_check(gen, np.array([[0, 1], [1, 0], [1, 0]]), 0.5, 20000, seed=4)
    assert record.check == 'sep-marginal-tv'
    assert record.passed, record.residual


def test_holding_time_law():
    gen = sep_generator(enumerate_sep(path_graph(2), 1, 2))
    start = np.array([[1, 1], [2, 0]])
    waits = holding_times(gen, start, 500, seed=8)
    assert (waits > 0).all()
    # exit rate 2: the mean wait is near 1/2
    assert abs(waits.mean() - 0.5) < 0.1
    record = holding_time_ks(gen, start, samples=5000, seed=8, alpha=1e-4)
    assert record.parameters['rate'] == 2.0
    assert record.passed, record.details


def test_reversibility_in_law(kappa_third):
    space = enumerate_sep(path_graph(2), 2, 1)
    gen = sep_generator(space)
    record = reversibility_in_law(gen, sep_weight(space, kappa_third.p), 0.5, samples=20000, seed=5, alpha=1e-5)
    assert record.passed, record.details
    assert 0.0 <= record.residual <= 1.0
    assert math.isclose(record.residual, 1.0 - record.details['pvalue'])


def test_small_runs_get_a_wider_tv_gate():
    gen = sep_generator(enumerate_sep(path_graph(2), 1, 1))
    record = marginal_tv_check(gen, np.array([[0, 1], [1, 0]]), 0.5, 2000, seed=4)
    assert record.tolerance > TV_GATE
    assert marginal_tv_check(gen, np.array([[0, 1], [1, 0]]), 0.5, 2000, seed=4, tolerance=0.5).tolerance == 0.5


@pytest.mark.slow
def test_sep_edge_at_full_sample_count(kappa_half):
    space = enumerate_sep(path_graph(2), 1, 1)
    gen = sep_generator(space)
    xi0, eta0 = np.array([[0, 1], [1, 0]]), np.array([[1, 0], [0, 1]])
    result = mc_duality_test(gen, gen, build_sep_duality(space, kappa_half), xi0, eta0, 0.5, TV_GATE_SAMPLES, seed=3)
    record = mc_duality_record(result, space.parameters())
    assert record.passed, record.details
    assert record.parameters['samples'] == 100_000
    tv = marginal_tv_check(gen, xi0, 0.5, TV_GATE_SAMPLES, seed=3)
    assert tv.tolerance == TV_GATE == 0.01
    assert tv.passed, tv.residual


@pytest.mark.slow
def test_irw_edge_at_full_sample_count():
    space = enumerate_irw_sector(path_graph(2), 1, (1,))
    gen = irw_generator(space)
    result = mc_duality_test(gen, gen, build_irw_duality(space, space, 1.0), np.array([[1], [0]]),
                             np.array([[0], [1]]), 1.0, 100_000, seed=3)
    assert result.exact is not None
    assert mc_duality_record(result, space.parameters()).passed, result
