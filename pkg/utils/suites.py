"""
Verification pipelines behind each command.

``resolve`` turns a ``RunConfig`` into engine inputs and raises ``ConfigError``
(or another ``DualityLabError``) for anything inconsistent; the ``*_suite``
functions never raise on a failed identity and return check records instead.
``all`` runs the numbered acceptance criteria in ``ACCEPTANCE`` and tags every
record with the criterion it belongs to.
"""

import logging
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Tuple

import numpy as np

from models import CheckRecord, ReversibilityReport, RunConfig
from utils import TOL_EXACT, max_abs
from utils.charlier import check_charlier_orthogonality, check_raising_lowering
from utils.errors import ConfigError
from utils.generators import (check_detailed_balance, check_generator, check_rate_symmetry, check_sector_invariance,
                              irw_generator, irw_weight, sep_generator, sep_weight, single_species_sep_generator)
from utils.heisenberg import (check_commutation, check_heisenberg_generator, check_intertwiner_irw,
                              check_kernel_relations)
from utils.krawtchouk import (Kappa, check_kappa, check_role_swap, check_routes, kappa_from_p, orthogonality_sums,
                              random_kappa)
from utils.liealg import (check_ad_r_bracket, check_antiautomorphism_adjoint, check_casimir_generator,
                          check_casimir_invariance, check_homomorphism, check_intertwiner, check_omega_star,
                          check_sigma_routes, check_star_not_preserved, check_star_representation)
from utils.serialization import read_graph, read_kappa, render_report
from utils.simulate import (BLOCK_SIZE, holding_time_ks, marginal_tv_check, mc_duality_record, mc_duality_test,
                            reversibility_in_law)
from utils.statespace import ConfigSpace, Graph, enumerate_irw_sector, enumerate_sep, preset_graph
from utils.verify import (build_irw_duality, build_sep_duality, grid_kappas, negative_control, run_irw_grid,
                          run_reversibility, run_sep_grid, verify_cheap, verify_irw, verify_sep)

logger = logging.getLogger(__name__)

COMMANDS = ('verify-sep', 'verify-irw', 'orthogonality', 'lie-checks', 'simulate', 'all')
MARGINAL_LIMIT = 50
ACCEPTANCE_SAMPLES = 100_000
GRAPHS = ('edge', 'path-3', 'triangle')


@dataclass(frozen=True)
class Setup:
    graph: Graph
    graph_name: str
    kappa: Kappa
    two_j: int
    lam: object
    totals: Tuple[int, ...]
    totals_b: Tuple[int, ...]
    config: RunConfig

    @property
    def n(self) -> int:
        return self.kappa.n


def resolve(config: RunConfig) -> Setup:
    if config.command not in COMMANDS:
        raise ConfigError(f"unknown command {config.command!r}")
    if config.tolerance is not None and not config.tolerance > 0:
        raise ConfigError(f"tolerance must be positive, got {config.tolerance}")
    if config.two_j < 1:
        raise ConfigError(f"--two-j must be at least 1, got {config.two_j}")
    if config.workers < 1:
        raise ConfigError(f"--workers must be at least 1, got {config.workers}")
    if config.samples < 1:
        raise ConfigError(f"--samples must be at least 1, got {config.samples}")
    if config.horizon < 0:
        raise ConfigError(f"--horizon must be non-negative, got {config.horizon}")
    if not config.lam > 0:
        raise ConfigError(f"--lambda must be positive, got {config.lam}")
    if config.criteria and config.command != 'all':
        raise ConfigError("--criteria only applies to the 'all' command")
    unknown = sorted(set(config.criteria) - {c.number for c in ACCEPTANCE})
    if unknown:
        raise ConfigError(f"no acceptance criterion numbered {unknown[0]}; choose from 1..{len(ACCEPTANCE)}")

    if config.graph_file:
        graph, graph_name = read_graph(config.graph_file), str(config.graph_file)
    else:
        graph, graph_name = preset_graph(config.graph), config.graph

    if config.kappa_file and config.from_p:
        raise ConfigError("give either --kappa-file or --from-p, not both")
    if config.kappa_file:
        kappa = read_kappa(config.kappa_file)
    elif config.from_p:
        kappa = kappa_from_p(config.from_p)
    else:
        n = config.n or 1
        kappa = kappa_from_p([Fraction(1, n + 1)] * (n + 1))
    if config.n is not None and config.n != kappa.n:
        raise ConfigError(f"--n {config.n} disagrees with the {kappa.n}-species family")

    totals = tuple(config.totals) or (1,) * kappa.n
    totals_b = tuple(config.totals_b) or totals
    for name, values in (('--totals', totals), ('--totals-b', totals_b)):
        if len(values) != kappa.n:
            raise ConfigError(f"{name} needs {kappa.n} entries, got {len(values)}")
    return Setup(graph, graph_name, kappa, config.two_j, config.lam, totals, totals_b, config)


def _tag(record: CheckRecord, setup: Setup) -> CheckRecord:
    record.parameters.setdefault('graph', setup.graph_name)
    return record


def reversibility_record(check: str, space: ConfigSpace, report: ReversibilityReport) -> CheckRecord:
    params = {**space.parameters(), 'measure': report.measure}
    return CheckRecord(check, params, report.violation, report.tolerance, report.passed,
                       details={'rate_scale': report.rate_scale})


def check_single_species(space: ConfigSpace) -> CheckRecord:
    """The multi-species generator with ``n = 1`` is classical SEP(2j)."""
    gap = max_abs(sep_generator(space).matrix - single_species_sep_generator(space).matrix)
    return CheckRecord('sep-single-species', space.parameters(), gap, TOL_EXACT, gap <= TOL_EXACT)


def sep_suite(setup: Setup) -> List[CheckRecord]:
    cfg = setup.config
    space = enumerate_sep(setup.graph, setup.n, setup.two_j)
    logger.info("verifying SEP self-duality on %s", space.describe())
    gen = sep_generator(space)
    weight = sep_weight(space, setup.kappa.p)
    records = [
        check_generator(gen),
        check_rate_symmetry(gen),
        reversibility_record('sep-detailed-balance', space, check_detailed_balance(gen, weight, measure='w_p')),
        verify_sep(space, setup.kappa, cfg.tolerance, cfg.workers),
        verify_cheap(space, weight),
    ]
    if setup.n == 1:
        records.append(check_single_species(space))
    if setup.n >= 2 and setup.two_j >= 2:
        records.append(negative_control(space, setup.kappa))
    return [_tag(r, setup) for r in records]


def irw_suite(setup: Setup) -> List[CheckRecord]:
    cfg = setup.config
    lam = float(setup.lam)
    space_a = enumerate_irw_sector(setup.graph, setup.n, setup.totals)
    space_b = enumerate_irw_sector(setup.graph, setup.n, setup.totals_b)
    logger.info("verifying IRW self-duality between %s and %s", space_a.describe(), space_b.describe())
    gen = irw_generator(space_a)
    records = [
        check_generator(gen),
        check_sector_invariance(gen),
        reversibility_record('irw-detailed-balance', space_a,
                             check_detailed_balance(gen, irw_weight(space_a, lam), measure='mu_lambda')),
        verify_irw(space_a, space_b, lam, cfg.tolerance, cfg.workers),
        check_heisenberg_generator(lam, space_a),
    ]
    return [_tag(r, setup) for r in records]


def orthogonality_suite(setup: Setup) -> List[CheckRecord]:
    kappa, two_j = setup.kappa, setup.two_j
    logger.info("orthogonality checks for n=%d two_j=%d", kappa.n, two_j)
    return [
        check_kappa(kappa),
        check_routes(kappa, two_j),
        orthogonality_sums(kappa, two_j),
        check_role_swap(kappa, two_j),
        check_charlier_orthogonality(setup.lam),
        check_raising_lowering(setup.lam),
    ]


def skewed_family(n: int) -> Kappa:
    """``p`` proportional to ``(1, 2, ..., n + 1)``; never uniform."""
    total = (n + 1) * (n + 2) // 2
    return kappa_from_p([Fraction(k + 1, total) for k in range(n + 1)])


def lie_suite(setup: Setup) -> List[CheckRecord]:
    cfg = setup.config
    kappa, two_j, n = setup.kappa, setup.two_j, setup.n
    lam = float(setup.lam)
    rng = np.random.default_rng(cfg.seed)
    logger.info("Lie-algebra checks for n=%d two_j=%d", n, two_j)
    records = [
        check_omega_star(n),
        check_casimir_invariance(kappa),
        check_ad_r_bracket(kappa, rng, cfg.trials),
        check_star_not_preserved(skewed_family(n)),
        check_star_representation(kappa, two_j),
        *check_homomorphism(kappa.p, n, two_j, rng, cfg.trials),
        *check_sigma_routes(kappa, two_j),
        check_antiautomorphism_adjoint(kappa, two_j),
        check_casimir_generator(kappa, two_j)[1],
        *check_intertwiner(kappa, two_j),
    ]
    space = enumerate_irw_sector(setup.graph, n, setup.totals)
    records += [
        check_heisenberg_generator(lam, space),
        check_kernel_relations(lam, n=1),
        check_commutation(lam, n=min(n, 2), seed=cfg.seed),
        check_intertwiner_irw(lam, n=1),
    ]
    return [_tag(r, setup) for r in records]


def _corner(space: ConfigSpace, site: int, species: int) -> np.ndarray:
    """Everything on ``site`` (1-based) as species ``species``; holes elsewhere for SEP."""
    config = np.zeros((space.L, space.width), dtype=np.int64)
    if space.totals is None:
        config[:, 0] = space.two_j
        config[site - 1, 0] = 0
        config[site - 1, species] = space.two_j
    else:
        config[site - 1, :] = space.totals
    return config


def simulation_suite(setup: Setup) -> List[CheckRecord]:
    cfg = setup.config
    lam = float(setup.lam)
    n, L = setup.n, setup.graph.num_sites
    records = []

    sep_space = enumerate_sep(setup.graph, n, setup.two_j)
    sep_gen = sep_generator(sep_space)
    xi0, eta0 = _corner(sep_space, 1, 1), _corner(sep_space, L, n)
    logger.info("Monte Carlo duality on %s with %d samples", sep_space.describe(), cfg.samples)
    result = mc_duality_test(sep_gen, sep_gen, build_sep_duality(sep_space, setup.kappa), xi0, eta0, cfg.horizon,
                             cfg.samples, cfg.seed, cfg.workers)
    records.append(mc_duality_record(result, {**sep_space.parameters(), 'T': cfg.horizon, 'seed': cfg.seed}))

    space_a = enumerate_irw_sector(setup.graph, n, setup.totals)
    space_b = enumerate_irw_sector(setup.graph, n, setup.totals_b)
    irw_gen_a, irw_gen_b = irw_generator(space_a), irw_generator(space_b)
    result = mc_duality_test(irw_gen_a, irw_gen_b, build_irw_duality(space_a, space_b, lam),
                             _corner(space_a, 1, 1), _corner(space_b, L, 1), cfg.horizon, cfg.samples, cfg.seed,
                             cfg.workers)
    records.append(mc_duality_record(result, {**space_a.parameters(), 'lambda': lam, 'T': cfg.horizon,
                                              'seed': cfg.seed}))

    if sep_space.size <= MARGINAL_LIMIT:
        records.append(marginal_tv_check(sep_gen, xi0, cfg.horizon, cfg.samples, cfg.seed, workers=cfg.workers))
    else:
        logger.warning("skipping marginal check: %d states exceed %d", sep_space.size, MARGINAL_LIMIT)
    if setup.graph.edges:
        records.append(holding_time_ks(sep_gen, xi0, min(cfg.samples, 10_000), cfg.seed))
    records.append(reversibility_in_law(sep_gen, sep_weight(sep_space, setup.kappa.p), cfg.horizon, cfg.samples,
                                        cfg.seed, workers=cfg.workers))
    return [_tag(r, setup) for r in records]


SUITES: Dict[str, Callable[[Setup], List[CheckRecord]]] = {
    'verify-sep': sep_suite,
    'verify-irw': irw_suite,
    'orthogonality': orthogonality_suite,
    'lie-checks': lie_suite,
    'simulate': simulation_suite,
}


def run(setup: Setup) -> List[CheckRecord]:
    if setup.config.command == 'all':
        return run_acceptance(setup)
    return SUITES[setup.config.command](setup)


def kappa_validity(setup: Setup) -> List[CheckRecord]:
    rng = np.random.default_rng(setup.config.seed)
    return [check_kappa(random_kappa(1 + i % 3, rng)) for i in range(50)]


def _family_grid(seed: int):
    rng = np.random.default_rng(seed)
    for n in (1, 2, 3):
        for kappa in grid_kappas(n, 2, rng):
            for two_j in (1, 2, 3, 4):
                yield kappa, two_j


def route_equivalence(setup: Setup) -> List[CheckRecord]:
    return [check_routes(kappa, two_j) for kappa, two_j in _family_grid(setup.config.seed)]


def orthogonality_grid(setup: Setup) -> List[CheckRecord]:
    return [orthogonality_sums(kappa, two_j) for kappa, two_j in _family_grid(setup.config.seed)]


def reversibility_grid(setup: Setup) -> List[CheckRecord]:
    return run_reversibility(GRAPHS, n=1, two_j=1) + run_reversibility(GRAPHS, n=2, two_j=2)


def sep_grid(setup: Setup) -> List[CheckRecord]:
    cfg = setup.config
    records = run_sep_grid((1, 2, 3), (1, 2, 3), GRAPHS, 20, cfg.seed, cfg.workers)
    for n, two_j in ((2, 2), (2, 3), (3, 2), (3, 3)):
        record = negative_control(enumerate_sep(preset_graph('path-3'), n, two_j), skewed_family(n))
        record.parameters['graph'] = 'path-3'
        records.append(record)
    return records


def irw_grid(setup: Setup) -> List[CheckRecord]:
    return run_irw_grid((1, 2), 4, (0.5, 1.0, 2.0), GRAPHS, setup.config.workers)


def lie_grid(setup: Setup) -> List[CheckRecord]:
    cfg = setup.config
    rng = np.random.default_rng(cfg.seed)
    records = []
    for n, two_j in ((1, 1), (1, 2), (2, 1), (2, 2)):
        local = Setup(preset_graph('edge'), 'edge', skewed_family(n), two_j, setup.lam, (1,) * n, (1,) * n, cfg)
        records += lie_suite(local)
        records += [check_star_representation(random_kappa(n, rng), two_j) for _ in range(20)]
    return records


def charlier_grid(setup: Setup) -> List[CheckRecord]:
    records = []
    for lam in (0.5, 1.0, 2.0):
        records += [check_charlier_orthogonality(lam, m_max=8), check_raising_lowering(lam, m_max=8, z_max=20)]
    return records


def small_configurations(setup: Setup) -> List[CheckRecord]:
    """Forward and dual estimates on the four smallest configurations of the edge."""
    cfg = setup.config
    edge = preset_graph('edge')
    records = []
    for two_j in (1, 2):
        space = enumerate_sep(edge, 1, two_j)
        gen = sep_generator(space)
        xi0, eta0 = _corner(space, 1, 1), _corner(space, 2, 1)
        result = mc_duality_test(gen, gen, build_sep_duality(space, skewed_family(1)), xi0, eta0, 0.5,
                                 cfg.samples, cfg.seed, cfg.workers)
        params = {**space.parameters(), 'T': 0.5, 'seed': cfg.seed}
        records.append(mc_duality_record(result, params))
        records.append(marginal_tv_check(gen, xi0, 0.5, cfg.samples, cfg.seed, workers=cfg.workers))
    for total in (1, 2):
        space_a, space_b = enumerate_irw_sector(edge, 1, (total,)), enumerate_irw_sector(edge, 1, (1,))
        gen_a, gen_b = irw_generator(space_a), irw_generator(space_b)
        result = mc_duality_test(gen_a, gen_b, build_irw_duality(space_a, space_b, 1.0), _corner(space_a, 1, 1),
                                 _corner(space_b, 2, 1), 1.0, cfg.samples, cfg.seed, cfg.workers)
        params = {**space_a.parameters(), 'totals_b': [1], 'lambda': 1.0, 'T': 1.0, 'seed': cfg.seed}
        records.append(mc_duality_record(result, params))
    return records


def _seeded_report(seed: int, samples: int, workers: int) -> str:
    space = enumerate_sep(preset_graph('path-3'), 2, 2)
    gen = sep_generator(space)
    kappa = skewed_family(2)
    result = mc_duality_test(gen, gen, build_sep_duality(space, kappa), _corner(space, 1, 1), _corner(space, 3, 2),
                             0.5, samples, seed, workers)
    records = [verify_sep(space, kappa), mc_duality_record(result, {**space.parameters(), 'seed': seed})]
    return render_report(records, 'jsonl')


def determinism(setup: Setup) -> List[CheckRecord]:
    """Seeded reruns, serial and spread over workers, must render byte for byte the same."""
    cfg = setup.config
    samples = min(cfg.samples, 2 * BLOCK_SIZE + 1)
    first = _seeded_report(cfg.seed, samples, 1)
    reruns = [_seeded_report(cfg.seed, samples, 1), _seeded_report(cfg.seed, samples, max(2, cfg.workers))]
    mismatches = sum(text != first for text in reruns)
    params = {'seed': cfg.seed, 'samples': samples, 'reruns': len(reruns)}
    return [CheckRecord('seeded-report-repeat', params, float(mismatches), 0.0, mismatches == 0)]


@dataclass(frozen=True)
class Criterion:
    number: int
    name: str
    runner: Callable[[Setup], List[CheckRecord]]

    @property
    def label(self) -> str:
        return f"{self.number} {self.name}"


ACCEPTANCE = (
    Criterion(1, 'kappa-validity', kappa_validity),
    Criterion(2, 'krawtchouk-routes', route_equivalence),
    Criterion(3, 'orthogonality', orthogonality_grid),
    Criterion(4, 'reversibility', reversibility_grid),
    Criterion(5, 'sep-self-duality', sep_grid),
    Criterion(6, 'irw-self-duality', irw_grid),
    Criterion(7, 'lie-algebra', lie_grid),
    Criterion(8, 'charlier', charlier_grid),
    Criterion(9, 'monte-carlo', small_configurations),
    Criterion(10, 'determinism', determinism),
)


def run_acceptance(setup: Setup) -> List[CheckRecord]:
    """Run the selected acceptance criteria (all of them by default), tagging each record."""
    wanted = set(setup.config.criteria) or {c.number for c in ACCEPTANCE}
    records: List[CheckRecord] = []
    for criterion in ACCEPTANCE:
        if criterion.number not in wanted:
            continue
        started = time.perf_counter()
        batch = criterion.runner(setup)
        for record in batch:
            record.criterion = criterion.label
        logger.info("criterion %s: %d records in %.1f s", criterion.label, len(batch), time.perf_counter() - started)
        records += batch
    return records
