"""
Sparse Markov generators for multi-species SEP(2j) and multi-species IRW.

Both are assembled state by state from their move lists (row = current state,
column = target, diagonal closes the row), then checked against the product
measures they are reversible for.
"""

import itertools
import logging
from dataclasses import dataclass
from typing import Callable, Iterator, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp

from models import CheckRecord, ReversibilityReport
from utils import TOL_EXACT, max_abs
from utils.charlier import poisson_weight
from utils.errors import OperatorError
from utils.krawtchouk import multinomial_weight
from utils.statespace import IRW, SEP, ConfigSpace, Graph

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SparseOperator:
    """Real CSR matrix between two rank-indexed spaces."""

    matrix: sp.csr_matrix
    space_row: ConfigSpace
    space_col: ConfigSpace
    label: str = ''

    @property
    def shape(self) -> Tuple[int, int]:
        return self.matrix.shape

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


def sep_moves(config: np.ndarray, graph: Graph) -> Iterator[Tuple[np.ndarray, int]]:
    """Yield ``(target, rate)`` for every SEP move out of ``config``.

    A species-``l`` particle at ``x`` trades places with a species-``k`` particle
    at ``y`` (``k < l``, species 0 being holes) at rate ``xi_l^x * xi_k^y``, and
    symmetrically with ``x`` and ``y`` exchanged.
    """
    width = config.shape[1]
    for x, y in graph.edges:
        for a, b in ((x - 1, y - 1), (y - 1, x - 1)):
            for k, l in itertools.combinations(range(width), 2):
                rate = int(config[a, l]) * int(config[b, k])
                if rate == 0:
                    continue
                target = config.copy()
                target[a, l] -= 1
                target[a, k] += 1
                target[b, k] -= 1
                target[b, l] += 1
                assert target.min() >= 0
                yield target, rate


def irw_moves(config: np.ndarray, graph: Graph) -> Iterator[Tuple[np.ndarray, int]]:
    """Yield ``(target, rate)``: a species-``i`` particle hops ``x -> y`` at rate ``xi_i^x``."""
    for x, y in graph.edges:
        for a, b in ((x - 1, y - 1), (y - 1, x - 1)):
            for i in range(config.shape[1]):
                rate = int(config[a, i])
                if rate == 0:
                    continue
                target = config.copy()
                target[a, i] -= 1
                target[b, i] += 1
                yield target, rate


def _assemble(space: ConfigSpace, moves, label: str) -> SparseOperator:
    rows, cols, vals = [], [], []
    for state in range(space.size):
        config = space.unrank(state)
        row_sum = 0
        for target, rate in moves(config, space.graph):
            rows.append(state)
            cols.append(space.rank(target))
            vals.append(rate)
            row_sum += rate
        rows.append(state)
        cols.append(state)
        vals.append(-row_sum)
    # Integer rates are exact in float64; duplicate targets are summed by the CSR build.
    matrix = sp.csr_matrix((vals, (rows, cols)), shape=(space.size, space.size), dtype=float)
    matrix.eliminate_zeros()
    logger.debug("assembled %s generator on %s with nnz=%d", label, space.describe(), matrix.nnz)
    return SparseOperator(matrix=matrix, space_row=space, space_col=space, label=label)


def _require(space: ConfigSpace, graph: Optional[Graph], mode: str):
    if space.mode != mode:
        raise OperatorError(f"expected a {mode} space, got {space.mode}")
    if graph is not None and graph != space.graph:
        raise OperatorError(f"space was enumerated on {space.graph.describe()}, not {graph.describe()}")


def sep_generator(space: ConfigSpace, graph: Optional[Graph] = None) -> SparseOperator:
    _require(space, graph, SEP)
    return _assemble(space, sep_moves, 'sep')


def irw_generator(space: ConfigSpace, graph: Optional[Graph] = None) -> SparseOperator:
    _require(space, graph, IRW)
    return _assemble(space, irw_moves, 'irw')


def single_species_sep_generator(space: ConfigSpace) -> SparseOperator:
    """Classical SEP(2j) built from occupation numbers ``eta_x = xi_1^x`` alone.

    With ``n = 1`` the rank order of the two-column space coincides with the
    mixed-radix order of occupation numbers, so the matrices are comparable.
    """
    _require(space, None, SEP)
    if space.n != 1:
        raise OperatorError("single-species reduction needs n = 1")
    cap, L = space.two_j, space.L
    radix = [(cap + 1) ** (L - 1 - x) for x in range(L)]
    rows, cols, vals = [], [], []
    for state, occupation in enumerate(itertools.product(range(cap + 1), repeat=L)):
        row_sum = 0
        for x, y in space.graph.edges:
            for a, b in ((x - 1, y - 1), (y - 1, x - 1)):
                rate = occupation[a] * (cap - occupation[b])
                if rate:
                    rows.append(state)
                    cols.append(state - radix[a] + radix[b])
                    vals.append(rate)
                    row_sum += rate
        rows.append(state)
        cols.append(state)
        vals.append(-row_sum)
    matrix = sp.csr_matrix((vals, (rows, cols)), shape=(space.size, space.size), dtype=float)
    return SparseOperator(matrix=matrix, space_row=space, space_col=space, label='sep-single-species')


def site_weight_vector(space: ConfigSpace, site_weight: Callable[[Tuple[int, ...], int], float]) -> np.ndarray:
    """Product weight ``prod_x site_weight(xi^x, x)`` as a vector over ranks."""
    weights = np.ones(space.size)
    for x in range(space.L):
        table = np.array([float(site_weight(state, x)) for state in space.local_alphabet])
        weights *= table[space.local_index[:, x]]
    return weights


def sep_weight(space: ConfigSpace, p: Union[Sequence, Sequence[Sequence]]) -> np.ndarray:
    """``prod_x w_p(xi^x)``; ``p`` may also be one probability vector per site."""
    per_site = np.ndim(np.asarray(p, dtype=object)) == 2
    return site_weight_vector(space, lambda state, x: multinomial_weight(state, p[x] if per_site else p,
                                                                         space.two_j))


def irw_weight(space: ConfigSpace, lam) -> np.ndarray:
    """``prod_x mu_lambda(xi^x)`` restricted to the sector."""
    return site_weight_vector(space, lambda state, x: poisson_weight(state, lam))


def check_detailed_balance(gen: SparseOperator, weight, tolerance: float = TOL_EXACT,
                           measure: str = 'product measure') -> ReversibilityReport:
    """Max of ``|w(a) L(a, b) - w(b) L(b, a)|`` over all pairs.

    ``weight`` is a vector over ranks or a callable taking a configuration.
    The pass threshold scales with the largest weighted rate.
    """
    if callable(weight):
        weight = np.array([float(weight(c)) for c in gen.space_row.configs()])
    weight = np.asarray(weight, dtype=float)
    flux = sp.diags(weight) @ gen.matrix
    violation = max_abs(flux - flux.T)
    scale = max(1.0, max_abs(flux))
    rate_scale = max_abs(gen.matrix - sp.diags(gen.matrix.diagonal()))
    passed = violation <= tolerance * scale
    logger.debug("detailed balance on %s: violation %.3e (scale %.3e)", gen.label, violation, scale)
    return ReversibilityReport(violation=violation, measure=measure, tolerance=tolerance * scale, passed=passed,
                               rate_scale=rate_scale)


def check_generator(gen: SparseOperator, tolerance: float = TOL_EXACT) -> CheckRecord:
    """Rows sum to zero and off-diagonal rates are non-negative."""
    matrix = gen.matrix
    row_sums = np.abs(np.asarray(matrix.sum(axis=1)).ravel())
    off = (matrix - sp.diags(matrix.diagonal())).tocoo()
    negative = float(max(0.0, -off.data.min())) if off.nnz else 0.0
    residual = max(float(row_sums.max()) if row_sums.size else 0.0, negative)
    return CheckRecord(f'{gen.label}-rate-matrix', gen.space_row.parameters(), residual, tolerance,
                       residual <= tolerance)


def check_rate_symmetry(gen: SparseOperator, tolerance: float = TOL_EXACT) -> CheckRecord:
    """``L(a, b) == L(b, a)``; blocking only for one particle per site."""
    residual = max_abs(gen.matrix - gen.matrix.T)
    space = gen.space_row
    informational = not (space.mode == SEP and space.two_j == 1)
    return CheckRecord(f'{gen.label}-rate-symmetry', space.parameters(), residual, tolerance,
                       residual <= tolerance, informational=informational)


def check_sector_invariance(gen: SparseOperator) -> CheckRecord:
    """Every move out of a sector state lands in the same sector."""
    space = gen.space_row
    escaped = 0
    for config in space.configs():
        for target, _ in irw_moves(config, space.graph):
            if not space.contains(target):
                escaped += 1
    return CheckRecord('irw-sector-invariance', space.parameters(), float(escaped), 0.0, escaped == 0)


def cheap_duality_matrix(weight: np.ndarray) -> sp.csr_matrix:
    """``D(a, b) = delta_ab / w(a)`` for a reversible weight."""
    return sp.diags(1.0 / np.asarray(weight, dtype=float)).tocsr()
