"""
Command-line entry point: ``duality-lab <command> [options]``.

Exit status is 0 when every blocking check passes, 1 when any fails or a
construction route breaks down mid-run, and 2 for configuration errors
(including state spaces over the size cap).
"""

import argparse
import logging
import sys
from typing import List, Optional, Sequence

from models import Reports, RunConfig
from utils import configure_logging, default_workers, parse_number
from utils.errors import ConfigError, DualityLabError, StateSpaceTooLarge
from utils.serialization import write_report
from utils.suites import ACCEPTANCE_SAMPLES, COMMANDS, resolve, run

logger = logging.getLogger('duality_lab')

EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2
FORMAT_ALIASES = {'table': 'table', 'csv': 'csv', 'jsonl': 'jsonl', 'json-lines': 'jsonl'}


def _number(text: str):
    try:
        return parse_number(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def _numbers(text: str) -> tuple:
    return tuple(_number(part) for part in text.split(',') if part.strip())


def _counts(text: str) -> tuple:
    try:
        return tuple(int(part) for part in text.split(',') if part.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog='duality-lab',
                                 description="Verify SEP(2j) and IRW self-duality by enumeration and simulation.")
    ap.add_argument('command', choices=COMMANDS)
    graph = ap.add_mutually_exclusive_group()
    graph.add_argument('--graph', default='edge', help="Preset: edge, triangle, path-k, cycle-k, complete-k.")
    graph.add_argument('--graph-file', help="Edge-list file: L, then one 'x y' pair per line.")
    ap.add_argument('--n', type=int, default=None, help="Number of species (inferred from p when omitted).")
    ap.add_argument('--two-j', type=int, default=1, help="Site capacity 2j for SEP.")
    ap.add_argument('--totals', type=_counts, default=(), help="IRW particles per species, e.g. 2,1.")
    ap.add_argument('--totals-b', type=_counts, default=(), help="Dual IRW sector (defaults to --totals).")
    ap.add_argument('--from-p', type=_numbers, default=(), help="Probability vector, e.g. 1/3,1/3,1/3.")
    ap.add_argument('--kappa-file', help="Kappa JSON document.")
    ap.add_argument('--lambda', dest='lam', type=_number, default=1.0, help="IRW intensity.")
    ap.add_argument('--tolerance', type=float, default=None, help="Override the duality residual tolerance.")
    ap.add_argument('--seed', type=int, default=0)
    ap.add_argument('--samples', type=int, default=None,
                    help=f"Monte Carlo paths (default 10000, or {ACCEPTANCE_SAMPLES} for 'all').")
    ap.add_argument('--horizon', type=float, default=0.5, help="Simulation time T.")
    ap.add_argument('--trials', type=int, default=5, help="Random draws per Lie-algebra check.")
    ap.add_argument('--workers', type=int, default=None, help="Worker count (env DUALITY_LAB_WORKERS).")
    ap.add_argument('--output', help="Write the report here instead of only printing it.")
    ap.add_argument('--format', dest='fmt', choices=sorted(FORMAT_ALIASES), default='table')
    ap.add_argument('--timings', action='store_true', help="Add a seconds column.")
    ap.add_argument('--criteria', type=_counts, default=(), help="With 'all': acceptance criteria to run, e.g. 1,8,10.")
    ap.add_argument('--verbose', '-v', action='store_true')
    return ap


def build_config(argv: Optional[Sequence[str]] = None) -> RunConfig:
    args = build_parser().parse_args(argv)
    samples = args.samples
    if samples is None:
        samples = ACCEPTANCE_SAMPLES if args.command == 'all' else 10_000
    return RunConfig(
        command=args.command,
        graph=args.graph,
        graph_file=args.graph_file,
        n=args.n,
        two_j=args.two_j,
        totals=args.totals,
        totals_b=args.totals_b,
        from_p=args.from_p,
        kappa_file=args.kappa_file,
        lam=args.lam,
        tolerance=args.tolerance,
        seed=args.seed,
        samples=samples,
        horizon=args.horizon,
        trials=args.trials,
        workers=args.workers if args.workers is not None else default_workers(),
        output=args.output,
        fmt=FORMAT_ALIASES[args.fmt],
        timings=args.timings,
        verbose=args.verbose,
        criteria=args.criteria,
    )


def main(argv: Optional[List[str]] = None) -> int:
    try:
        config = build_config(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    configure_logging(logging.DEBUG if config.verbose else logging.WARNING)

    try:
        setup = resolve(config)
    except DualityLabError as exc:
        logger.error("configuration error: %s", exc)
        return EXIT_CONFIG
    try:
        records = run(setup)
    except (ConfigError, StateSpaceTooLarge) as exc:
        logger.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except DualityLabError as exc:
        # route mismatch or unitarity breakdown
        logger.error("check aborted: %s: %s", type(exc).__name__, exc)
        return EXIT_FAILED

    try:
        text = write_report(records, config.fmt, config.output, config.timings)
    except DualityLabError as exc:
        logger.error("%s", exc)
        return EXIT_CONFIG
    if config.output is None:
        sys.stdout.write(text)
    print(Reports.summary(records), file=sys.stderr)
    return EXIT_OK if Reports.all_passed(records) else EXIT_FAILED


if __name__ == '__main__':
    sys.exit(main())
