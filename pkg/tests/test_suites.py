from dataclasses import replace
from fractions import Fraction

import pytest

from models import RunConfig
from utils.errors import ConfigError, DualityLabError, GraphError
from utils.serialization import write_graph, write_kappa
from utils.statespace import enumerate_irw_sector, enumerate_sep, path_graph
from utils.suites import ACCEPTANCE, _corner, resolve, run, skewed_family


def test_defaults():
    setup = resolve(RunConfig('verify-sep'))
    assert setup.n == 1
    assert setup.kappa.p == (Fraction(1, 2), Fraction(1, 2))
    assert setup.totals == setup.totals_b == (1,)
    assert setup.graph == path_graph(2)


def test_n_without_p_gives_uniform_family():
    setup = resolve(RunConfig('verify-sep', n=3))
    assert setup.kappa.p == (Fraction(1, 4),) * 4
    assert setup.totals == (1, 1, 1)


@pytest.mark.parametrize('overrides', [
    {'command': 'nope'},
    {'tolerance': 0.0},
    {'two_j': 0},
    {'workers': 0},
    {'samples': 0},
    {'horizon': -1.0},
    {'lam': 0},
    {'n': 2, 'from_p': (Fraction(1, 2), Fraction(1, 2))},
    {'totals': (1, 2)},
    {'from_p': (Fraction(1, 2), Fraction(1, 2)), 'kappa_file': 'k.json'},
    {'criteria': (1,)},
])
def test_config_errors(overrides):
    with pytest.raises(ConfigError):
        resolve(replace(RunConfig('verify-sep'), **overrides))


def test_bad_preset_and_family():
    with pytest.raises(GraphError):
        resolve(RunConfig('verify-sep', graph='wheel-5'))
    with pytest.raises(DualityLabError):
        resolve(RunConfig('verify-sep', from_p=(Fraction(1, 2), Fraction(1, 3))))


def test_files(tmp_path, kappa_skewed):
    graph_path, kappa_path = tmp_path / 'g.txt', tmp_path / 'k.json'
    write_graph(path_graph(3), graph_path)
    write_kappa(kappa_skewed, kappa_path)
    setup = resolve(RunConfig('verify-sep', graph_file=str(graph_path), kappa_file=str(kappa_path)))
    assert setup.graph == path_graph(3)
    assert setup.kappa == kappa_skewed
    assert setup.graph_name == str(graph_path)


def test_skewed_family():
    kappa = skewed_family(2)
    assert kappa.p == (Fraction(1, 6), Fraction(1, 3), Fraction(1, 2))


def test_corner_states():
    sep = enumerate_sep(path_graph(3), 2, 2)
    assert _corner(sep, 1, 1).tolist() == [[0, 2, 0], [2, 0, 0], [2, 0, 0]]
    assert sep.contains(_corner(sep, 3, 2))
    irw = enumerate_irw_sector(path_graph(3), 2, (2, 1))
    assert _corner(irw, 3, 1).tolist() == [[0, 0], [0, 0], [2, 1]]


def test_sep_suite_records():
    setup = resolve(RunConfig('verify-sep', graph='path-3', two_j=2, from_p=(Fraction(1, 2), Fraction(1, 4),
                                                                            Fraction(1, 4))))
    records = run(setup)
    checks = [r.check for r in records]
    assert checks == ['sep-rate-matrix', 'sep-rate-symmetry', 'sep-detailed-balance', 'sep-self-duality',
                      'cheap-self-duality', 'sep-negative-control']
    assert all(r.passed for r in records if not r.informational)
    assert all(r.parameters['graph'] == 'path-3' for r in records)


def test_single_species_suite():
    records = run(resolve(RunConfig('verify-sep', graph='triangle', two_j=2)))
    assert records[-1].check == 'sep-single-species'
    assert all(r.passed for r in records if not r.informational)


def test_irw_suite():
    records = run(resolve(RunConfig('verify-irw', graph='path-3', n=2, totals=(2, 1), totals_b=(1, 1), lam=0.5)))
    assert [r.check for r in records] == ['irw-rate-matrix', 'irw-sector-invariance', 'irw-detailed-balance',
                                          'irw-self-duality', 'heisenberg-generator']
    assert all(r.passed for r in records)


def test_orthogonality_suite():
    records = run(resolve(RunConfig('orthogonality', two_j=3, from_p=(Fraction(1, 3),) * 3)))
    assert all(r.passed for r in records if not r.informational)
    assert records[3].informational


def test_lie_suite():
    records = run(resolve(RunConfig('lie-checks', two_j=2, n=2, trials=3)))
    blocking = [r for r in records if not r.informational]
    assert all(r.passed for r in blocking), [r.check for r in blocking if not r.passed]
    assert 'casimir-generator' in {r.check for r in records}


@pytest.mark.slow
def test_simulation_suite():
    records = run(resolve(RunConfig('simulate', graph='path-3', samples=4000, horizon=0.4, seed=3)))
    assert [r.check for r in records] == ['mc-duality', 'mc-duality', 'sep-marginal-tv', 'sep-holding-time-ks',
                                          'sep-reversibility-in-law']


def test_acceptance_registry():
    assert [c.number for c in ACCEPTANCE] == list(range(1, 11))
    assert ACCEPTANCE[4].label == '5 sep-self-duality'
    with pytest.raises(ConfigError):
        resolve(RunConfig('all', criteria=(11,)))
    assert resolve(RunConfig('all', criteria=(1, 10))).config.criteria == (1, 10)


def test_selected_criteria():
    records = run(resolve(RunConfig('all', criteria=(1, 4, 8, 10), samples=1500, seed=5)))
    labels = [r.criterion for r in records]
    assert labels.count('1 kappa-validity') == 50
    assert labels.count('4 reversibility') == 12
    assert labels.count('8 charlier') == 6
    assert labels[-1] == '10 determinism'
    assert sorted(set(labels), key=labels.index) == ['1 kappa-validity', '4 reversibility', '8 charlier',
                                                     '10 determinism']
    assert all(r.passed for r in records if not r.informational)
    assert {r.parameters['n'] for r in records if r.check == 'kappa-definition'} == {1, 2, 3}


def test_irw_criterion_covers_every_sector_pair():
    records = run(resolve(RunConfig('all', criteria=(6,))))
    assert len(records) == 2 * 3 * 16 * 3
    assert all(r.passed for r in records)
    pairs = {(r.parameters['totals'][0], r.parameters['totals_b'][0]) for r in records}
    assert pairs == {(a, b) for a in range(1, 5) for b in range(1, 5)}


@pytest.mark.slow
def test_sep_criterion():
    records = run(resolve(RunConfig('all', criteria=(5,))))
    assert len(records) == 3 * 3 * 3 * 20 + 4
    assert all(r.passed for r in records)
    controls = [r for r in records if r.check == 'sep-negative-control']
    assert all(r.residual > 1e-6 for r in controls)


@pytest.mark.slow
def test_monte_carlo_criterion():
    records = run(resolve(RunConfig('all', criteria=(9,), samples=100_000, seed=2)))
    assert [r.check for r in records] == ['mc-duality', 'sep-marginal-tv'] * 2 + ['mc-duality'] * 2
    assert all(r.passed for r in records), [(r.check, r.residual, r.details) for r in records if not r.passed]
    assert {r.tolerance for r in records if r.check == 'sep-marginal-tv'} == {0.01}
