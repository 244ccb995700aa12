import json
from fractions import Fraction
from io import StringIO

import pandas as pd
import pytest
from numpy.testing import assert_allclose

from models import CheckRecord, Trajectory
from utils.errors import ConfigError, GraphError, KappaError
from utils.generators import sep_generator
from utils.krawtchouk import random_kappa
from utils.serialization import (KAPPA_SCHEMA, dumps_kappa, format_graph, kappa_to_dict, loads_kappa, parse_graph,
                                 parse_triplets, read_graph, read_kappa, read_trajectory, read_triplets,
                                 render_report, write_graph, write_kappa, write_report, write_trajectory,
                                 write_triplets)
from utils.statespace import cycle_graph, enumerate_sep, path_graph


def test_graph_with_comments():
    text = """
    # a triangle
    3
    1 2   # first edge
    2 3
    1 3
    """
    assert parse_graph(text) == cycle_graph(3)


@pytest.mark.parametrize('text, error', [
    ('', ConfigError),
    ('# nothing\n', ConfigError),
    ('three\n1 2\n', ConfigError),
    ('2\n1 3\n', GraphError),
    ('2\n1 2\n2 1\n', GraphError),
])
def test_bad_graph_files(text, error):
    with pytest.raises(error):
        parse_graph(text)


def test_graph_file_round_trip(tmp_path):
    path = tmp_path / 'graph.txt'
    write_graph(path_graph(4), path)
    assert path.read_text() == '4\n1 2\n2 3\n3 4\n'
    assert read_graph(path) == path_graph(4)
    assert format_graph(cycle_graph(3)).splitlines()[0] == '3'


def test_exact_kappa_document(kappa_skewed, tmp_path):
    doc = kappa_to_dict(kappa_skewed)
    assert doc['schema'] == KAPPA_SCHEMA
    assert doc['n'] == 2
    assert doc['p'] == ['1/2', '1/4', '1/4']
    path = tmp_path / 'kappa.json'
    write_kappa(kappa_skewed, path)
    loaded = read_kappa(path)
    assert loaded == kappa_skewed
    assert loaded.exact
    assert isinstance(loaded.p[1], Fraction)


def test_float_kappa_document(rng):
    kappa = random_kappa(2, rng)
    loaded = loads_kappa(dumps_kappa(kappa))
    assert not loaded.exact
    assert loaded.p == kappa.p
    assert_allclose(loaded.U, kappa.U, rtol=0, atol=0)


def test_kappa_document_errors(kappa_half):
    doc = kappa_to_dict(kappa_half)
    with pytest.raises(ConfigError):
        loads_kappa('{not json')
    with pytest.raises(ConfigError):
        loads_kappa(json.dumps({**doc, 'schema': 'other/1'}))
    with pytest.raises(ConfigError):
        loads_kappa(json.dumps({k: v for k, v in doc.items() if k != 'u'}))
    with pytest.raises(ConfigError):
        loads_kappa(json.dumps({**doc, 'n': 3}))
    with pytest.raises(KappaError):
        loads_kappa(json.dumps({**doc, 'u': [['1', '1'], ['1', '1']]}))


def test_triplets(tmp_path):
    gen = sep_generator(enumerate_sep(path_graph(2), 1, 1))
    path = tmp_path / 'gen.txt'
    write_triplets(gen, path)
    lines = path.read_text().splitlines()
    assert lines[0] == '# mode=SEP n=1 two_j=1 L=2 size=4'
    assert lines[1] == '# label=sep shape=4x4'
    assert lines[2:] == ['1 1 -1.0', '1 2 1.0', '2 1 1.0', '2 2 -1.0']
    header, matrix = read_triplets(path)
    assert header['size'] == '4'
    assert header['label'] == 'sep'
    assert_allclose(matrix.toarray(), gen.toarray())


def test_triplets_need_shape():
    with pytest.raises(ConfigError):
        parse_triplets('0 0 1.0\n')
    header, matrix = parse_triplets('# size=2\n0 1 0.5\n')
    assert matrix.shape == (2, 2)
    assert matrix[0, 1] == 0.5


@pytest.mark.parametrize('text', [
    '# size=2\n0 1\n',
    '# size=2\n0 one 0.5\n',
    '# size=2\n0 1 0.5 extra\n',
    '# size=two\n0 1 0.5\n',
    '# size=2\n0 5 0.5\n',
])
def test_malformed_triplets(text, tmp_path):
    with pytest.raises(ConfigError):
        parse_triplets(text)
    path = tmp_path / 'bad.txt'
    path.write_text(text)
    with pytest.raises(ConfigError):
        read_triplets(path)


def test_trajectory_csv(tmp_path):
    traj = Trajectory(initial=1, times=[0.1, 1 / 3], targets=[2, 1], horizon=2.0)
    path = tmp_path / 'traj.csv'
    write_trajectory(traj, path)
    frame = pd.read_csv(path)
    assert list(frame.columns) == ['time', 'state_rank']
    assert frame['state_rank'].tolist() == [1, 2, 1]
    assert read_trajectory(path, 2.0) == traj


def test_trajectory_rejects_other_csv(tmp_path):
    path = tmp_path / 'other.csv'
    path.write_text('a,b\n1,2\n')
    with pytest.raises(ConfigError):
        read_trajectory(path, 1.0)


@pytest.fixture
def records():
    return [
        CheckRecord('sep-self-duality', {'n': 2, 'two_j': 2}, 3.2e-15, 1e-10, True, seconds=0.25),
        CheckRecord('sep-rate-symmetry', {'n': 2}, 1.0, 1e-12, False, informational=True),
    ]


def test_table_report(records):
    text = render_report(records)
    assert 'sep-self-duality' in text
    assert 'PASS' in text
    assert 'info' in text
    assert '3.200e-15' in text


def test_csv_report(records):
    frame = pd.read_csv(StringIO(render_report(records, 'csv', timings=True)))
    assert list(frame.columns) == ['check', 'parameters', 'residual', 'tolerance', 'passed', 'seconds']
    assert frame['check'].tolist() == ['sep-self-duality', 'sep-rate-symmetry (info)']
    assert frame['parameters'][0] == 'n=2 two_j=2'
    assert frame['seconds'][0] == 0.25


def test_jsonl_report(records, tmp_path):
    path = tmp_path / 'report.jsonl'
    text = write_report(records, 'jsonl', path)
    assert path.read_text() == text
    assert text.endswith('}\n') and not text.endswith('\n\n')
    rows = [json.loads(line) for line in text.splitlines()]
    assert [r['passed'] for r in rows] == [True, False]
    assert 'seconds' not in rows[0]


def test_unknown_format(records):
    with pytest.raises(ConfigError):
        render_report(records, 'xml')


def test_empty_reports():
    assert render_report([], 'table') == 'no checks run\n'
    assert render_report([], 'jsonl') == ''
