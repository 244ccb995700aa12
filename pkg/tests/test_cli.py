import json

import pytest

import cli
from cli import EXIT_CONFIG, EXIT_FAILED, EXIT_OK, build_config, main
from utils.errors import ConfigError, RouteMismatchError, StateSpaceTooLarge, UnitarityError
from utils.serialization import write_kappa


def test_two_species_verification(capsys):
    code = main(['verify-sep', '--graph', 'path3', '--n', '2', '--two-j', '2', '--from-p', '1/3,1/3,1/3'])
    out, err = capsys.readouterr()
    assert code == EXIT_OK
    assert 'sep-self-duality' in out
    assert 'sep-negative-control' in out
    assert 'checks passed' in err


def test_orthogonality_command(capsys):
    assert main(['orthogonality', '--n', '1', '--two-j', '1', '--from-p', '1/2,1/2']) == EXIT_OK
    assert 'charlier-orthogonality' in capsys.readouterr().out


def test_irw_command(capsys):
    argv = ['verify-irw', '--graph', 'path-3', '--n', '2', '--totals', '2,1', '--totals-b', '1,1', '--lambda', '1/2']
    assert main(argv) == EXIT_OK
    assert 'irw-self-duality' in capsys.readouterr().out


def test_lie_command():
    assert main(['lie-checks', '--two-j', '2', '--trials', '2']) == EXIT_OK


@pytest.mark.parametrize('argv', [
    ['verify-sep', '--from-p', '1/2,1/3'],
    ['verify-sep', '--n', '2', '--from-p', '1/2,1/2'],
    ['verify-sep', '--two-j', '0'],
    ['verify-sep', '--lambda', '0'],
    ['verify-sep', '--graph', 'wheel-5'],
    ['verify-sep', '--graph-file', '/nonexistent/graph.txt'],
    ['verify-irw', '--totals', '1,1'],
    ['frobnicate'],
    ['verify-sep', '--graph', 'edge', '--graph-file', 'g.txt'],
    ['verify-sep', '--from-p', '1/0,1'],
])
def test_configuration_errors(argv, capsys):
    assert main(argv) == EXIT_CONFIG
    assert capsys.readouterr().out == ''


def test_help_exits_cleanly(capsys):
    assert main(['--help']) == EXIT_OK
    assert 'verify-sep' in capsys.readouterr().out


def test_kappa_file_and_jsonl_output(tmp_path, kappa_skewed, capsys):
    kappa_path, report_path = tmp_path / 'kappa.json', tmp_path / 'report.jsonl'
    write_kappa(kappa_skewed, kappa_path)
    code = main(['verify-sep', '--graph', 'triangle', '--two-j', '2', '--kappa-file', str(kappa_path),
                 '--format', 'json-lines', '--output', str(report_path), '--timings'])
    assert code == EXIT_OK
    assert capsys.readouterr().out == ''
    rows = [json.loads(line) for line in report_path.read_text().splitlines()]
    assert {row['check'] for row in rows} >= {'sep-self-duality', 'cheap-self-duality'}
    assert all('seconds' in row for row in rows)


def test_failure_exit_code(capsys):
    # a tolerance below round-off makes the float families fail
    code = main(['verify-sep', '--graph', 'path-3', '--n', '2', '--two-j', '3', '--from-p', '0.2,0.3,0.5',
                 '--tolerance', '1e-30'])
    assert code == EXIT_FAILED
    assert 'failed: sep-self-duality' in capsys.readouterr().err


def test_seeded_simulation_repeats(capsys):
    argv = ['simulate', '--samples', '1500', '--horizon', '0.3', '--seed', '42', '--format', 'csv']
    main(argv)
    first = capsys.readouterr().out
    main(argv)
    assert capsys.readouterr().out == first
    assert first.splitlines()[0] == 'check,parameters,residual,tolerance,passed'


def test_workers_from_environment(monkeypatch):
    monkeypatch.setenv('DUALITY_LAB_WORKERS', '3')
    assert build_config(['verify-sep']).workers == 3
    assert build_config(['verify-sep', '--workers', '2']).workers == 2
    monkeypatch.setenv('DUALITY_LAB_WORKERS', 'many')
    assert build_config(['verify-sep']).workers == 1


@pytest.mark.parametrize('error, code', [
    (RouteMismatchError('gf and bilinear routes disagree', 1e-3), EXIT_FAILED),
    (UnitarityError('intertwiner fails unitarity', 1e-2), EXIT_FAILED),
    (StateSpaceTooLarge(10 ** 8, 10 ** 7), EXIT_CONFIG),
    (ConfigError('bad input file'), EXIT_CONFIG),
])
def test_errors_raised_mid_run(monkeypatch, capsys, error, code):
    def broken(setup):
        raise error

    monkeypatch.setattr(cli, 'run', broken)
    assert main(['verify-sep']) == code
    assert capsys.readouterr().out == ''


def test_acceptance_subset(capsys):
    assert main(['all', '--criteria', '1,8', '--format', 'csv']) == EXIT_OK
    out, err = capsys.readouterr()
    assert out.splitlines()[0] == 'criterion,check,parameters,residual,tolerance,passed'
    lines = err.strip().splitlines()
    assert lines[-3:] == ['criterion 1 kappa-validity: 50/50 checks passed',
                          'criterion 8 charlier: 6/6 checks passed', '56/56 checks passed']


def test_acceptance_sample_default():
    assert build_config(['all']).samples == 100_000
    assert build_config(['simulate']).samples == 10_000
    assert build_config(['all', '--samples', '500', '--criteria', '9']).criteria == (9,)


@pytest.mark.parametrize('argv', [['verify-sep', '--criteria', '1'], ['all', '--criteria', '12']])
def test_bad_criteria(argv, capsys):
    assert main(argv) == EXIT_CONFIG
    assert capsys.readouterr().out == ''


@pytest.mark.slow
def test_all_summarizes_every_criterion(capsys):
    assert main(['all', '--format', 'jsonl']) == EXIT_OK
    err = capsys.readouterr().err
    criteria = [line.split(':')[0] for line in err.splitlines() if line.startswith('criterion ')]
    assert [int(c.split()[1]) for c in criteria] == list(range(1, 11))
