"""
Product duality matrices and the generator-level duality residual.

Two processes with generators ``L_left`` and ``L_right`` are dual with respect
to ``D`` when ``L_left D = D L_right^T``. Every ``D`` here is a product over
sites of a single-site table, so it is stored as that table plus the per-site
local indices of both spaces, and columns are generated on demand.
"""

import itertools
import logging
import string
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from models import CheckRecord, DualityReport
from utils import DENSE_LIMIT, TOL_EXACT, TOL_FLOAT, TOL_LARGE, max_abs
from utils.charlier import product_kernel
from utils.errors import KappaError, OperatorError
from utils.generators import (SparseOperator, cheap_duality_matrix, irw_generator, irw_weight, sep_generator,
                              sep_weight, check_detailed_balance)
from utils.krawtchouk import Kappa, kappa_from_p, krawtchouk_table, perturb_u, random_kappa
from utils.statespace import IRW, SEP, ConfigSpace, enumerate_irw_sector, enumerate_sep, path_graph, preset_graph

logger = logging.getLogger(__name__)

BLOCK = 256
CHUNK = 1 << 22


@dataclass(frozen=True)
class DualityMatrix:
    """``D[a, b] = prod_x table[alpha(a, x), beta(b, x)]``."""

    space_a: ConfigSpace
    space_b: ConfigSpace
    table: np.ndarray
    provenance: Dict[str, object] = field(default_factory=dict)

    @property
    def shape(self):
        return self.space_a.size, self.space_b.size

    @property
    def is_dense_friendly(self) -> bool:
        return max(self.shape) <= DENSE_LIMIT

    def columns(self, cols: Sequence[int]) -> np.ndarray:
        idx_a = self.space_a.local_index
        idx_b = self.space_b.local_index[np.asarray(cols, dtype=np.int64)]
        block = np.ones((self.space_a.size, len(idx_b)))
        for x in range(self.space_a.L):
            block *= self.table[idx_a[:, x][:, None], idx_b[:, x][None, :]]
        return block

    def dense(self) -> np.ndarray:
        return self.columns(np.arange(self.space_b.size))

    def entry(self, a: int, b: int) -> float:
        return float(self.columns([b])[a, 0])

    def _grid(self, space: ConfigSpace, width: int) -> np.ndarray:
        radix = width ** np.arange(space.L - 1, -1, -1)
        return space.local_index @ radix

    def matmul(self, M: np.ndarray) -> np.ndarray:
        """``D @ M`` through mode products on the full per-site product grid."""
        M = np.asarray(M, dtype=float)
        d_a, d_b = self.table.shape
        L = self.space_a.L
        full = np.zeros((d_b ** L, M.shape[1]))
        full[self._grid(self.space_b, d_b)] = M
        tensor = full.reshape((d_b,) * L + (M.shape[1],))
        for x in range(L):
            tensor = np.moveaxis(np.tensordot(self.table, tensor, axes=([1], [x])), 0, x)
        return tensor.reshape(d_a ** L, M.shape[1])[self._grid(self.space_a, d_a)]

    def max_abs_bound(self) -> float:
        return float(np.max(np.abs(self.table))) ** self.space_a.L


def build_sep_duality(space: ConfigSpace, kappa: Kappa) -> DualityMatrix:
    if space.mode != SEP:
        raise OperatorError(f"expected a SEP space, got {space.mode}")
    if kappa.n != space.n:
        raise KappaError(f"family has n={kappa.n} but the space has n={space.n}", 'dimension')
    table = krawtchouk_table(kappa, space.two_j)
    return DualityMatrix(space, space, table, {'kernel': 'krawtchouk', **kappa.parameters()})


def build_irw_duality(space_a: ConfigSpace, space_b: ConfigSpace, lam) -> DualityMatrix:
    for space in (space_a, space_b):
        if space.mode != IRW:
            raise OperatorError(f"expected IRW sectors, got {space.mode}")
    if space_a.graph != space_b.graph or space_a.n != space_b.n:
        raise OperatorError("IRW sectors must share the graph and the species count")
    table = np.array([[product_kernel(xi, eta, lam) for eta in space_b.local_alphabet]
                      for xi in space_a.local_alphabet])
    return DualityMatrix(space_a, space_b, table, {'kernel': 'charlier', 'lambda': lam})


def default_tolerance(space: ConfigSpace) -> float:
    if space.mode == SEP and space.two_j >= 3:
        return TOL_LARGE
    return TOL_FLOAT


def _block_residual(L_left: sp.csr_matrix, L_right: sp.csr_matrix, D: DualityMatrix, cols: np.ndarray) -> float:
    left = L_left @ D.columns(cols)
    right = D.matmul(L_right[cols, :].T.toarray())
    return float(np.max(np.abs(left - right))) if left.size else 0.0


def duality_residual(L_left: SparseOperator, L_right: SparseOperator, D, tolerance: Optional[float] = None,
                     workers: int = 1, check: str = 'duality', parameters: Optional[dict] = None) -> DualityReport:
    """Max entry of ``L_left D - D L_right^T``.

    ``D`` is a ``DualityMatrix`` or any dense/sparse array. The pass threshold is
    ``tolerance * max(1, max|D|) * max(1, max|L_left|)``.
    """
    started = time.perf_counter()
    rows, cols = (D.shape if isinstance(D, DualityMatrix) else np.shape(D))
    if L_left.shape != (rows, rows) or L_right.shape != (cols, cols):
        raise OperatorError(f"generators {L_left.shape} and {L_right.shape} do not fit a {rows}x{cols} kernel")
    if tolerance is None:
        tolerance = default_tolerance(L_left.space_row)

    if isinstance(D, DualityMatrix) and not D.is_dense_friendly:
        blocks = [np.arange(s, min(s + BLOCK, cols)) for s in range(0, cols, BLOCK)]
        job = lambda block: _block_residual(L_left.matrix, L_right.matrix, D, block)  # noqa: E731
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                parts = list(pool.map(job, blocks))
        else:
            parts = [job(block) for block in blocks]
        residual = max(parts, default=0.0)
        d_scale = D.max_abs_bound()
    else:
        dense = D.dense() if isinstance(D, DualityMatrix) else D
        if sp.issparse(dense):
            diff = L_left.matrix @ dense - (L_right.matrix @ dense.T).T
        else:
            dense = np.asarray(dense, dtype=float)
            diff = L_left.matrix @ dense - (L_right.matrix @ dense.T).T
        residual = max_abs(diff)
        d_scale = max_abs(dense)
    scale = max(1.0, d_scale) * max(1.0, max_abs(L_left.matrix))
    seconds = time.perf_counter() - started
    passed = residual <= tolerance * scale
    logger.debug("%s residual %.3e (threshold %.3e) on %dx%d", check, residual, tolerance * scale, rows, cols)
    params = dict(parameters or L_left.space_row.parameters())
    return DualityReport(check=check, parameters=params, residual=residual, tolerance=tolerance * scale,
                         passed=passed, seconds=seconds, rows=rows, cols=cols, scale=scale)


def bond_generator(space: ConfigSpace) -> SparseOperator:
    """SEP generator of a single edge, on the pair of local alphabets of ``space``."""
    return sep_generator(enumerate_sep(path_graph(2), space.n, space.two_j))


def embed_bond(space: ConfigSpace, bond: sp.csr_matrix) -> sp.csr_matrix:
    """Sum over the edges of ``space.graph`` of ``bond`` acting on the two endpoint digits.

    SEP ranks are plain mixed-radix codes, so replacing the digits of sites
    ``x`` and ``y`` shifts the rank by ``(c_x - a_x) d^(L-x) + (c_y - a_y) d^(L-y)``.
    """
    d, L, size = len(space.local_alphabet), space.L, space.size
    idx = space.local_index
    radix = d ** np.arange(L - 1, -1, -1)
    per_row = np.diff(bond.indptr)
    rows, cols, vals = [], [], []
    for x, y in space.graph.edges:
        a_x, a_y = idx[:, x - 1], idx[:, y - 1]
        pair = a_x * d + a_y
        counts = per_row[pair]
        source = np.repeat(np.arange(size), counts)
        offset = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
        pos = np.repeat(bond.indptr[pair], counts) + offset
        c_x, c_y = np.divmod(bond.indices[pos], d)
        rows.append(source)
        cols.append(source + (c_x - a_x[source]) * radix[x - 1] + (c_y - a_y[source]) * radix[y - 1])
        vals.append(bond.data[pos])
    if not rows:
        return sp.csr_matrix((size, size))
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(size, size))


def _chunk_max(edges, L: int, M: np.ndarray, T: np.ndarray, head: Sequence[int]) -> float:
    """Max of the residual tensor with the first ``len(head)`` row digits fixed to ``head``."""
    fixed = len(head)
    a, b = string.ascii_lowercase[:L], string.ascii_uppercase[:L]
    out = a[fixed:] + b
    total = np.zeros((len(T),) * len(out))
    for x, y in edges:
        x, y = x - 1, y - 1
        key = tuple(head[s] if s < fixed else slice(None) for s in (x, y))
        operands = [M[key]]
        subs = [''.join(a[s] for s in (x, y) if s >= fixed) + b[x] + b[y]]
        for z in range(L):
            if z in (x, y):
                continue
            operands.append(T[head[z]] if z < fixed else T)
            subs.append((a[z] if z >= fixed else '') + b[z])
        total += np.einsum(','.join(subs) + '->' + out, *operands)
    return float(np.max(np.abs(total))) if total.size else 0.0


def bond_residual(gen: SparseOperator, D: DualityMatrix, bond: Optional[SparseOperator] = None,
                  tolerance: Optional[float] = None, workers: int = 1, check: str = 'sep-self-duality',
                  parameters: Optional[dict] = None) -> DualityReport:
    """``max |L D - D L^T|`` on a SEP space, evaluated one bond at a time.

    With ``L = sum_e bond_e`` and ``D = T (x) ... (x) T`` every bond contributes
    ``M (x) T^(L-2)`` with ``M = B (T (x) T) - (T (x) T) B^T``, so the residual
    tensor is summed from one ``d^2 x d^2`` matrix in chunks of at most ``CHUNK``
    entries. ``gen`` must equal the bond embedding; the gap is reported and
    fails the check when it exceeds round-off.
    """
    started = time.perf_counter()
    space = gen.space_row
    if space.mode != SEP or D.space_a != space:
        raise OperatorError("bond route needs a SEP generator and its own duality matrix")
    if tolerance is None:
        tolerance = default_tolerance(space)
    bond = bond if bond is not None else bond_generator(space)
    gap = max_abs(gen.matrix - embed_bond(space, bond.matrix))

    T = np.asarray(D.table, dtype=float)
    d, L = T.shape[0], space.L
    T2 = np.kron(T, T)
    B = bond.toarray()
    M = (B @ T2 - T2 @ B.T).reshape(d, d, d, d)
    fixed = 0
    while fixed < L and d ** (2 * L - fixed) > CHUNK:
        fixed += 1
    heads = list(itertools.product(range(d), repeat=fixed))
    job = lambda head: _chunk_max(space.graph.edges, L, M, T, head)  # noqa: E731
    if workers > 1 and len(heads) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, heads))
    else:
        parts = [job(head) for head in heads]
    residual = max(parts, default=0.0)

    scale = max(1.0, D.max_abs_bound()) * max(1.0, max_abs(gen.matrix))
    passed = residual <= tolerance * scale and gap <= TOL_EXACT
    logger.debug("%s bond residual %.3e (threshold %.3e), embedding gap %.1e over %d chunks",
                 check, residual, tolerance * scale, gap, len(heads))
    params = dict(parameters or space.parameters())
    return DualityReport(check=check, parameters=params, residual=residual, tolerance=tolerance * scale,
                         passed=passed, seconds=time.perf_counter() - started, rows=space.size, cols=space.size,
                         scale=scale, details={'route': 'bond', 'embedding_gap': gap})


def verify_sep(space: ConfigSpace, kappa: Kappa, tolerance: Optional[float] = None, workers: int = 1,
               check: str = 'sep-self-duality', gen: Optional[SparseOperator] = None,
               bond: Optional[SparseOperator] = None) -> DualityReport:
    """Dense residual for small spaces, the bond route above ``DENSE_LIMIT``.

    ``gen`` and ``bond`` may be passed in when several families share a space.
    """
    gen = gen if gen is not None else sep_generator(space)
    params = {**space.parameters(), **kappa.parameters()}
    D = build_sep_duality(space, kappa)
    if D.is_dense_friendly:
        return duality_residual(gen, gen, D, tolerance, workers, check, params)
    return bond_residual(gen, D, bond, tolerance, workers, check, params)


def verify_irw(space_a: ConfigSpace, space_b: ConfigSpace, lam, tolerance: Optional[float] = None,
               workers: int = 1) -> DualityReport:
    params = {**space_a.parameters(), 'totals_b': list(space_b.totals), 'lambda': lam}
    return duality_residual(irw_generator(space_a), irw_generator(space_b), build_irw_duality(space_a, space_b, lam),
                            tolerance, workers, 'irw-self-duality', params)


def verify_cheap(space: ConfigSpace, weight: np.ndarray, tolerance: float = 1e-12) -> DualityReport:
    gen = sep_generator(space) if space.mode == SEP else irw_generator(space)
    return duality_residual(gen, gen, cheap_duality_matrix(weight), tolerance, check='cheap-self-duality')


def negative_control(space: ConfigSpace, kappa: Kappa, delta: float = 1e-3, threshold: float = 1e-6) -> CheckRecord:
    """Perturb one entry of ``U`` and require the residual to blow up past ``threshold``."""
    report = verify_sep(space, perturb_u(kappa, 1, 1, delta), check='sep-negative-control')
    params = {**report.parameters, 'delta': delta}
    return CheckRecord('sep-negative-control', params, report.residual, threshold, report.residual > threshold)


def grid_kappas(n: int, count: int, rng: np.random.Generator) -> List[Kappa]:
    """Uniform rational family first, then Dirichlet draws."""
    kappas = [kappa_from_p([Fraction(1, n + 1)] * (n + 1))]
    while len(kappas) < count:
        kappas.append(random_kappa(n, rng))
    return kappas


def run_sep_grid(ns: Iterable[int], two_js: Iterable[int], graphs: Iterable[str], kappas: int,
                 seed: int = 0, workers: int = 1) -> List[CheckRecord]:
    rng = np.random.default_rng(seed)
    records = []
    two_js = list(two_js)
    graphs = list(graphs)
    for n in ns:
        family = grid_kappas(n, kappas, rng)
        for two_j in two_js:
            for name in graphs:
                space = enumerate_sep(preset_graph(name), n, two_j)
                gen, bond = sep_generator(space), bond_generator(space)
                for kappa in family:
                    report = verify_sep(space, kappa, workers=workers, gen=gen, bond=bond)
                    report.parameters['graph'] = name
                    records.append(report)
    return records


def run_irw_grid(ns: Iterable[int], max_particles: int, lams: Iterable, graphs: Iterable[str],
                 workers: int = 1) -> List[CheckRecord]:
    """Every pair of sectors with ``1..max_particles`` particles of each species."""
    records = []
    lams, graphs = list(lams), list(graphs)
    totals = range(1, max_particles + 1)
    for n in ns:
        for name in graphs:
            graph = preset_graph(name)
            sectors = {total: enumerate_irw_sector(graph, n, [total] * n) for total in totals}
            for total_a, total_b in itertools.product(totals, repeat=2):
                for lam in lams:
                    report = verify_irw(sectors[total_a], sectors[total_b], lam, workers=workers)
                    report.parameters['graph'] = name
                    records.append(report)
    return records


def run_reversibility(graphs: Iterable[str], n: int = 2, two_j: int = 2, lam=1.0) -> List[CheckRecord]:
    records = []
    for name in graphs:
        graph = preset_graph(name)
        sep_space = enumerate_sep(graph, n, two_j)
        p = [1 / (n + 1)] * (n + 1)
        sep_report = check_detailed_balance(sep_generator(sep_space), sep_weight(sep_space, p), measure='w_p')
        irw_space = enumerate_irw_sector(graph, n, [2] * n)
        irw_report = check_detailed_balance(irw_generator(irw_space), irw_weight(irw_space, lam), measure='mu_lambda')
        for label, space, report in (('sep', sep_space, sep_report), ('irw', irw_space, irw_report)):
            params = {**space.parameters(), 'graph': name}
            records.append(CheckRecord(f'{label}-detailed-balance', params, report.violation, report.tolerance,
                                       report.passed))
    return records
