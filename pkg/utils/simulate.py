"""
Continuous-time Monte Carlo for SEP and IRW generators.

Paths are drawn with the direct Gillespie method on a precomputed jump table.
Samples are grouped in blocks of ``BLOCK_SIZE``; block ``b`` of stream ``s``
draws from ``Philox(SeedSequence(seed, spawn_key=(s, b)))``, so every sample
is reproducible no matter how blocks are spread over workers.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp
from scipy import stats
from scipy.sparse.linalg import expm_multiply

from models import CheckRecord, McDualityResult, Trajectory
from utils import DENSE_LIMIT
from utils.errors import OperatorError, StateSpaceError
from utils.generators import SparseOperator

logger = logging.getLogger(__name__)

BLOCK_SIZE = 1024
TV_GATE = 0.01
TV_GATE_SAMPLES = 100_000
FORWARD, DUAL = 0, 1

State = Union[int, np.integer, np.ndarray, Sequence[Sequence[int]]]


@dataclass(frozen=True)
class JumpTable:
    """Off-diagonal rates of a generator in CSR layout with per-row cumulative sums."""

    indptr: np.ndarray
    targets: np.ndarray
    cumulative: np.ndarray
    exit_rates: np.ndarray

    @classmethod
    def from_generator(cls, gen: SparseOperator) -> 'JumpTable':
        off = (gen.matrix - sp.diags(gen.matrix.diagonal())).tocsr()
        off.eliminate_zeros()
        off.sort_indices()
        if off.nnz and off.data.min() < 0:
            raise OperatorError(f"{gen.label} generator has negative off-diagonal rates")
        cumulative = np.empty_like(off.data)
        exit_rates = np.zeros(gen.shape[0])
        for row in range(gen.shape[0]):
            start, stop = off.indptr[row], off.indptr[row + 1]
            if stop > start:
                cumulative[start:stop] = np.cumsum(off.data[start:stop])
                exit_rates[row] = cumulative[stop - 1]
        return cls(off.indptr.copy(), off.indices.copy(), cumulative, exit_rates)

    def jump(self, state: int, rng: np.random.Generator) -> int:
        start, stop = self.indptr[state], self.indptr[state + 1]
        u = rng.random() * self.exit_rates[state]
        k = int(np.searchsorted(self.cumulative[start:stop], u, side='right'))
        return int(self.targets[start + min(k, stop - start - 1)])


def block_rng(seed: int, stream: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(stream, block))))


def as_rank(gen: SparseOperator, state: State) -> int:
    space = gen.space_row
    if isinstance(state, (int, np.integer)):
        if not 0 <= int(state) < space.size:
            raise StateSpaceError(f"rank {state} outside 0..{space.size - 1}")
        return int(state)
    return space.rank(np.asarray(state))


def _path(table: JumpTable, initial: int, horizon: float, rng: np.random.Generator,
          record: bool = True, max_jumps: Optional[int] = None) -> Tuple[int, List[float], List[int]]:
    state, t = initial, 0.0
    times, targets = [], []
    while max_jumps is None or len(times) < max_jumps:
        rate = table.exit_rates[state]
        if rate <= 0:
            break
        t += rng.exponential(1.0 / rate)
        if t > horizon:
            break
        state = table.jump(state, rng)
        if record:
            times.append(t)
            targets.append(state)
    return state, times, targets


def gillespie_run(gen: SparseOperator, initial: State, horizon: float, seed: int = 0,
                  stream: int = FORWARD) -> Trajectory:
    """One exact path on ``[0, horizon]``; absorbing states simply hold."""
    if horizon < 0:
        raise OperatorError(f"horizon must be non-negative, got {horizon}")
    start = as_rank(gen, initial)
    _, times, targets = _path(JumpTable.from_generator(gen), start, horizon, block_rng(seed, stream, 0))
    return Trajectory(initial=start, times=times, targets=targets, horizon=horizon)


def _run_block(table: JumpTable, initials: np.ndarray, horizon: float, seed: int, stream: int,
               block: int) -> np.ndarray:
    rng = block_rng(seed, stream, block)
    return np.array([_path(table, int(s), horizon, rng, record=False)[0] for s in initials], dtype=np.int64)


def final_states(gen: SparseOperator, initials: Union[State, np.ndarray], horizon: float, samples: int,
                 seed: int = 0, stream: int = FORWARD, workers: int = 1) -> np.ndarray:
    """Ranks at ``horizon`` for ``samples`` independent paths.

    ``initials`` is one state shared by all paths or an array of ranks, one per path.
    """
    if samples <= 0:
        raise OperatorError(f"need at least one sample, got {samples}")
    table = JumpTable.from_generator(gen)
    if isinstance(initials, np.ndarray) and initials.ndim == 1:
        starts = initials.astype(np.int64)
    else:
        starts = np.full(samples, as_rank(gen, initials), dtype=np.int64)
    blocks = [(b, starts[s:s + BLOCK_SIZE]) for b, s in enumerate(range(0, samples, BLOCK_SIZE))]
    if workers > 1 and len(blocks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_block, table, chunk, horizon, seed, stream, b) for b, chunk in blocks]
            parts = [f.result() for f in futures]
    else:
        parts = [_run_block(table, chunk, horizon, seed, stream, b) for b, chunk in blocks]
    return np.concatenate(parts)


def _mean_stderr(values: np.ndarray) -> Tuple[float, float]:
    mean = math.fsum(values) / len(values)
    if len(values) < 2:
        return mean, 0.0
    return mean, float(np.std(values, ddof=1)) / math.sqrt(len(values))


def _z(diff: float, stderr: float, scale: float = 1.0) -> float:
    if stderr == 0:
        return 0.0 if abs(diff) <= 1e-9 * max(1.0, abs(scale)) else math.inf
    return round(abs(diff) / stderr, 3)


def exact_expectation(gen: SparseOperator, column: np.ndarray, horizon: float, start: int) -> float:
    """``(exp(T L) d)[start]`` by the scaled Taylor action."""
    return float(expm_multiply(horizon * gen.matrix, column)[start])


def mc_duality_test(gen_a: SparseOperator, gen_b: SparseOperator, D, xi0: State, eta0: State, horizon: float,
                    samples: int, seed: int = 0, workers: int = 1) -> McDualityResult:
    """Compare ``E_xi0 D(xi_T, eta0)`` with ``E_eta0 D(xi0, eta_T)``.

    Forward paths run ``gen_a`` from ``xi0`` on stream 0, dual paths run ``gen_b``
    from ``eta0`` on stream 1. When ``gen_a`` is small enough the exact value is
    attached along with the z-scores of both means against it.
    """
    if samples <= 0:
        raise OperatorError(f"need at least one sample, got {samples}")
    a, b = as_rank(gen_a, xi0), as_rank(gen_b, eta0)
    forward = final_states(gen_a, a, horizon, samples, seed, FORWARD, workers)
    dual = final_states(gen_b, b, horizon, samples, seed, DUAL, workers)

    column = D.columns([b])[:, 0]
    forward_values = column[forward]
    unique, inverse = np.unique(dual, return_inverse=True)
    dual_values = D.columns(unique)[a][inverse]

    mf, sf = _mean_stderr(forward_values)
    md, sd = _mean_stderr(dual_values)
    result = McDualityResult(mean_forward=mf, mean_dual=md, stderr_forward=sf, stderr_dual=sd, samples=samples,
                             z=_z(mf - md, math.hypot(sf, sd), mf))
    if gen_a.shape[0] <= DENSE_LIMIT:
        exact = exact_expectation(gen_a, column, horizon, a)
        result.exact = exact
        result.z_forward_exact = _z(mf - exact, sf, exact)
        result.z_dual_exact = _z(md - exact, sd, exact)
    else:
        logger.warning("no matrix-exponential reference above %d states; comparing forward and dual only",
                       DENSE_LIMIT)
    logger.debug("mc duality T=%s samples=%d: forward %.6f dual %.6f z=%.3f", horizon, samples, mf, md, result.z)
    return result


def mc_duality_record(result: McDualityResult, parameters: dict, gate: float = 4.0) -> CheckRecord:
    details = {'mean_forward': result.mean_forward, 'mean_dual': result.mean_dual, 'exact': result.exact,
               'z': result.z, 'z_forward_exact': result.z_forward_exact, 'z_dual_exact': result.z_dual_exact}
    return CheckRecord('mc-duality', {**parameters, 'samples': result.samples}, result.max_z, gate,
                       result.max_z <= gate, details=details)


def empirical_distribution(finals: np.ndarray, size: int) -> np.ndarray:
    return np.bincount(finals, minlength=size) / len(finals)


def marginal_tv_check(gen: SparseOperator, initial: State, horizon: float, samples: int, seed: int = 0,
                      tolerance: Optional[float] = None, workers: int = 1) -> CheckRecord:
    """Total-variation distance between simulated ``xi_T`` and the row of ``exp(T L)``.

    Without an explicit ``tolerance`` the gate is 0.01 from ``TV_GATE_SAMPLES``
    runs on; smaller runs get ``max(0.01, 2 sqrt(k / samples))`` with ``k`` the
    number of states the exact law charges.
    """
    start = as_rank(gen, initial)
    point = np.zeros(gen.shape[0])
    point[start] = 1.0
    exact = expm_multiply(horizon * gen.matrix.T.tocsr(), point)
    if tolerance is None and samples >= TV_GATE_SAMPLES:
        tolerance = TV_GATE
    elif tolerance is None:
        support = int(np.count_nonzero(exact > 1e-12))
        tolerance = max(TV_GATE, 2.0 * math.sqrt(support / samples))
    empirical = empirical_distribution(final_states(gen, start, horizon, samples, seed, workers=workers),
                                       gen.shape[0])
    tv = 0.5 * float(np.abs(empirical - exact).sum())
    params = {**gen.space_row.parameters(), 'start': start, 'T': horizon, 'samples': samples}
    return CheckRecord(f'{gen.label}-marginal-tv', params, tv, tolerance, tv <= tolerance)


def holding_times(gen: SparseOperator, initial: State, samples: int, seed: int = 0) -> np.ndarray:
    start = as_rank(gen, initial)
    table = JumpTable.from_generator(gen)
    if table.exit_rates[start] <= 0:
        raise OperatorError(f"state {start} is absorbing; it has no holding-time law")
    out = np.empty(samples)
    for i in range(samples):
        if i % BLOCK_SIZE == 0:
            rng = block_rng(seed, FORWARD, i // BLOCK_SIZE)
        out[i] = _path(table, start, math.inf, rng, max_jumps=1)[1][0]
    return out


def holding_time_ks(gen: SparseOperator, initial: State, samples: int = 10_000, seed: int = 0,
                    alpha: float = 0.01) -> CheckRecord:
    """Kolmogorov-Smirnov test of the first holding time against ``Exp(exit rate)``."""
    start = as_rank(gen, initial)
    rate = JumpTable.from_generator(gen).exit_rates[start]
    waits = holding_times(gen, start, samples, seed)
    result = stats.kstest(waits, 'expon', args=(0, 1.0 / rate))
    params = {**gen.space_row.parameters(), 'start': start, 'rate': float(rate), 'samples': samples}
    return CheckRecord(f'{gen.label}-holding-time-ks', params, float(result.statistic), alpha,
                       result.pvalue > alpha, details={'pvalue': float(result.pvalue)})


def reversibility_in_law(gen: SparseOperator, weight: np.ndarray, horizon: float, samples: int = 20_000,
                         seed: int = 0, alpha: float = 1e-3, workers: int = 1) -> CheckRecord:
    """Start from the reversible measure and chi-square the per-site histogram at ``horizon``.

    The smallest p-value over sites is reported; bins with zero expected mass are dropped.
    """
    space = gen.space_row
    law = np.asarray(weight, dtype=float)
    law = law / law.sum()
    rng = block_rng(seed, DUAL + 1, 0)
    starts = rng.choice(space.size, size=samples, p=law)
    finals = final_states(gen, starts, horizon, samples, seed, FORWARD, workers)
    width = len(space.local_alphabet)
    pvalue = 1.0
    for x in range(space.L):
        expected = np.bincount(space.local_index[:, x], weights=law, minlength=width) * samples
        observed = np.bincount(space.local_index[finals, x], minlength=width).astype(float)
        keep = expected > 0
        if keep.sum() < 2:
            continue
        f_exp = expected[keep] * observed[keep].sum() / expected[keep].sum()
        pvalue = min(pvalue, float(stats.chisquare(observed[keep], f_exp).pvalue))
    params = {**space.parameters(), 'T': horizon, 'samples': samples}
    return CheckRecord(f'{gen.label}-reversibility-in-law', params, 1.0 - pvalue, 1.0 - alpha, pvalue > alpha,
                       details={'pvalue': pvalue})
