from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import pandas as pd

from utils import format_residual, format_status

REPORT_COLUMNS = ['check', 'parameters', 'residual', 'tolerance', 'passed', 'seconds']


def _echo(parameters: Dict[str, Any]) -> str:
    return ' '.join(f"{key}={value}" for key, value in parameters.items())


@dataclass
class CheckRecord:
    """One verified identity: what was checked, with which inputs, and how closely it held."""

    check: str
    parameters: Dict[str, Any]
    residual: float
    tolerance: float
    passed: bool
    seconds: Optional[float] = None
    details: Dict[str, Any] = field(default_factory=dict)
    informational: bool = False
    criterion: Optional[str] = None

    def as_row(self, timings=False):
        row = {} if self.criterion is None else {'criterion': self.criterion}
        row.update({
            'check': self.check,
            'parameters': _echo(self.parameters),
            'residual': float(self.residual),
            'tolerance': float(self.tolerance),
            'passed': bool(self.passed),
        })
        if timings:
            row['seconds'] = None if self.seconds is None else round(self.seconds, 6)
        if self.informational:
            row['check'] = f"{self.check} (info)"
        return row

    @property
    def status(self):
        return format_status(self.passed, self.informational)


@dataclass
class DualityReport(CheckRecord):
    """Generator-level duality check ``max |L_left D - D L_right^T|``."""

    rows: int = 0
    cols: int = 0
    scale: float = 1.0


@dataclass
class ReversibilityReport:
    violation: float
    measure: str
    tolerance: float
    passed: bool
    rate_scale: float = 1.0


@dataclass
class Trajectory:
    """Piecewise-constant path: state ``ranks[i]`` is held on ``[times[i], times[i + 1])``."""

    initial: int
    times: List[float]
    targets: List[int]
    horizon: float

    @property
    def ranks(self) -> List[int]:
        return [self.initial] + list(self.targets)

    def state_at(self, t: float) -> int:
        state = self.initial
        for time, target in zip(self.times, self.targets):
            if time > t:
                break
            state = target
        return state

    @property
    def final(self) -> int:
        return self.targets[-1] if self.targets else self.initial


@dataclass
class McDualityResult:
    mean_forward: float
    mean_dual: float
    stderr_forward: float
    stderr_dual: float
    samples: int
    z: float
    exact: Optional[float] = None
    z_forward_exact: Optional[float] = None
    z_dual_exact: Optional[float] = None

    @property
    def max_z(self) -> float:
        values = [self.z, self.z_forward_exact, self.z_dual_exact]
        return max(v for v in values if v is not None)


@dataclass(frozen=True)
class RunConfig:
    command: str
    graph: str = 'edge'
    graph_file: Optional[str] = None
    n: Optional[int] = None
    two_j: int = 1
    totals: Tuple[int, ...] = ()
    totals_b: Tuple[int, ...] = ()
    from_p: Tuple[Any, ...] = ()
    kappa_file: Optional[str] = None
    lam: Any = 1.0
    tolerance: Optional[float] = None
    seed: int = 0
    samples: int = 10_000
    horizon: float = 0.5
    trials: int = 5
    workers: int = 1
    output: Optional[str] = None
    fmt: str = 'table'
    timings: bool = False
    verbose: bool = False
    criteria: Tuple[int, ...] = ()


class Reports:
    @staticmethod
    def to_frame(records: List[CheckRecord], timings=False) -> pd.DataFrame:
        columns = REPORT_COLUMNS if timings else REPORT_COLUMNS[:-1]
        if any(r.criterion is not None for r in records):
            columns = ['criterion'] + columns
        return pd.DataFrame([r.as_row(timings) for r in records], columns=columns)

    @staticmethod
    def all_passed(records: List[CheckRecord]) -> bool:
        return all(r.passed for r in records if not r.informational)

    @staticmethod
    def render_table(records: List[CheckRecord], timings=False) -> str:
        frame = Reports.to_frame(records, timings)
        if frame.empty:
            return "no checks run\n"
        frame['residual'] = frame['residual'].map(format_residual)
        frame['tolerance'] = frame['tolerance'].map(format_residual)
        frame['passed'] = [r.status for r in records]
        return frame.to_string(index=False) + '\n'

    @staticmethod
    def _tally(records: List[CheckRecord]) -> str:
        blocking = [r for r in records if not r.informational]
        failed = [r.check for r in blocking if not r.passed]
        line = f"{len(blocking) - len(failed)}/{len(blocking)} checks passed"
        if failed:
            line += '; failed: ' + ', '.join(sorted(set(failed)))
        return line

    @staticmethod
    def summary(records: List[CheckRecord]) -> str:
        """One line overall, preceded by one line per acceptance criterion when records carry one."""
        groups: Dict[str, List[CheckRecord]] = {}
        for record in records:
            if record.criterion is not None:
                groups.setdefault(record.criterion, []).append(record)
        lines = [f"criterion {name}: {Reports._tally(group)}" for name, group in groups.items()]
        return '\n'.join(lines + [Reports._tally(records)])
