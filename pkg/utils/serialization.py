"""
Plain-text formats: graph edge lists, Kappa documents, operator triplets,
trajectories and check reports.
"""

import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import pandas as pd
import scipy.sparse as sp

from models import CheckRecord, Reports, Trajectory
from utils import format_number, parse_number
from utils.errors import ConfigError, DualityLabError
from utils.generators import SparseOperator
from utils.krawtchouk import Kappa, validate_kappa
from utils.statespace import Graph, build_graph

logger = logging.getLogger(__name__)

KAPPA_SCHEMA = 'duality-lab/kappa/1'
FORMATS = ('table', 'csv', 'jsonl')

PathLike = Union[str, Path]


def _content_lines(text: str) -> List[str]:
    lines = []
    for raw in text.splitlines():
        line = raw.split('#', 1)[0].strip()
        if line:
            lines.append(line)
    return lines


def parse_graph(text: str) -> Graph:
    """``L`` on the first content line, then one ``x y`` pair per line (1-based)."""
    lines = _content_lines(text)
    if not lines:
        raise ConfigError("graph file is empty")
    try:
        L = int(lines[0])
        edges = [tuple(int(v) for v in line.split()) for line in lines[1:]]
    except ValueError as exc:
        raise ConfigError(f"malformed graph file: {exc}") from None
    return build_graph(L, edges)


def _read(path: PathLike, what: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"could not read {what} file {path}: {exc.strerror or exc}") from None


def read_graph(path: PathLike) -> Graph:
    return parse_graph(_read(path, 'graph'))


def format_graph(graph: Graph) -> str:
    return '\n'.join([str(graph.num_sites)] + [f"{x} {y}" for x, y in graph.edges]) + '\n'


def write_graph(graph: Graph, path: PathLike):
    Path(path).write_text(format_graph(graph))


def kappa_to_dict(kappa: Kappa) -> Dict[str, object]:
    return {
        'schema': KAPPA_SCHEMA,
        'n': kappa.n,
        'nu': format_number(kappa.nu),
        'p': [format_number(x) for x in kappa.p],
        'p_hat': [format_number(x) for x in kappa.p_hat],
        'u': [[format_number(x) for x in row] for row in kappa.u],
    }


def kappa_from_dict(doc: Dict[str, object]) -> Kappa:
    if doc.get('schema') != KAPPA_SCHEMA:
        raise ConfigError(f"unsupported kappa schema {doc.get('schema')!r}, expected {KAPPA_SCHEMA!r}")
    try:
        nu = parse_number(doc['nu'])
        p = [parse_number(x) for x in doc['p']]
        p_hat = [parse_number(x) for x in doc['p_hat']]
        u = [[parse_number(x) for x in row] for row in doc['u']]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed kappa document: {exc!r}") from None
    if 'n' in doc and doc['n'] != len(p) - 1:
        raise ConfigError(f"kappa document declares n={doc['n']} but p has {len(p)} entries")
    return validate_kappa(nu, p, p_hat, u)


def dumps_kappa(kappa: Kappa) -> str:
    return json.dumps(kappa_to_dict(kappa), indent=2) + '\n'


def loads_kappa(text: str) -> Kappa:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"kappa document is not valid JSON: {exc}") from None
    return kappa_from_dict(doc)


def write_kappa(kappa: Kappa, path: PathLike):
    Path(path).write_text(dumps_kappa(kappa))


def read_kappa(path: PathLike) -> Kappa:
    return loads_kappa(_read(path, 'kappa'))


def format_triplets(op: SparseOperator) -> str:
    coo = op.matrix.tocoo()
    order = sorted(zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()))
    header = [f"# {op.space_row.describe()}", f"# label={op.label or 'operator'} shape={op.shape[0]}x{op.shape[1]}"]
    return '\n'.join(header + [f"{r} {c} {v!r}" for r, c, v in order]) + '\n'


def write_triplets(op: SparseOperator, path: PathLike):
    Path(path).write_text(format_triplets(op))


def parse_triplets(text: str) -> Tuple[Dict[str, str], sp.csr_matrix]:
    """Header ``key=value`` pairs and the matrix rebuilt from ``row col value`` lines."""
    header: Dict[str, str] = {}
    rows, cols, vals = [], [], []
    for number, line in enumerate(text.splitlines(), 1):
        if line.startswith('#'):
            for token in line[1:].split():
                if '=' in token:
                    key, value = token.split('=', 1)
                    header[key] = value
        elif line.strip():
            try:
                r, c, v = line.split()
                rows.append(int(r))
                cols.append(int(c))
                vals.append(float(v))
            except ValueError:
                raise ConfigError(f"malformed triplet on line {number}: {line.strip()!r}") from None
    if 'shape' not in header and 'size' not in header:
        raise ConfigError("triplet file has no size or shape header")
    try:
        if 'shape' in header:
            shape = tuple(int(s) for s in header['shape'].split('x'))
        else:
            shape = (int(header['size']),) * 2
        return header, sp.csr_matrix((vals, (rows, cols)), shape=shape)
    except ValueError as exc:
        raise ConfigError(f"malformed triplet file: {exc}") from None


def read_triplets(path: PathLike) -> Tuple[Dict[str, str], sp.csr_matrix]:
    return parse_triplets(_read(path, 'triplet'))


def trajectory_frame(trajectory: Trajectory) -> pd.DataFrame:
    return pd.DataFrame({'time': [0.0] + list(trajectory.times), 'state_rank': trajectory.ranks})


def write_trajectory(trajectory: Trajectory, path: PathLike):
    trajectory_frame(trajectory).to_csv(path, index=False, float_format='%.17g')


def read_trajectory(path: PathLike, horizon: float) -> Trajectory:
    frame = pd.read_csv(path)
    if list(frame.columns) != ['time', 'state_rank'] or frame.empty:
        raise ConfigError(f"{path} is not a trajectory file")
    ranks = frame['state_rank'].astype(int).tolist()
    return Trajectory(initial=ranks[0], times=frame['time'].tolist()[1:], targets=ranks[1:], horizon=horizon)


def render_report(records: List[CheckRecord], fmt: str = 'table', timings: bool = False) -> str:
    if fmt == 'table':
        return Reports.render_table(records, timings)
    frame = Reports.to_frame(records, timings)
    if fmt == 'csv':
        return frame.to_csv(index=False)
    if fmt == 'jsonl':
        text = frame.to_json(orient='records', lines=True).rstrip('\n')
        return text + '\n' if text else ''
    raise ConfigError(f"unknown report format {fmt!r}; choose one of {', '.join(FORMATS)}")


def write_report(records: List[CheckRecord], fmt: str = 'table', path: Optional[PathLike] = None,
                 timings: bool = False) -> str:
    text = render_report(records, fmt, timings)
    if path is not None:
        try:
            Path(path).write_text(text)
        except OSError as exc:
            raise DualityLabError(f"could not write report to {path}: {exc}") from None
        logger.info("wrote %d records to %s", len(records), path)
    return text
