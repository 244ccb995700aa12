"""
Finite graphs and exact enumeration of particle configuration spaces.

Configurations are stored as integer arrays of shape ``(L, m)``: row ``x`` is
site ``x + 1`` and column ``i`` is the species count. SEP spaces carry
``m = n + 1`` columns with column 0 the holes; IRW sectors carry ``m = n``.

Ordering convention (fixed so that every operator is reproducible):

- SEP: the single-site states Omega_{2j} are listed in reverse-lexicographic
  order of ``(xi_0, ..., xi_n)``, so ``(2j, 0, ..., 0)`` comes first. Sites are
  combined by mixed radix with site 1 the most significant digit, which makes
  the rank order agree with ``numpy.kron(site_1, site_2, ...)``.
- IRW: for each species the placements of its ``N_i`` particles over the sites
  are listed in reverse-lexicographic order of ``(xi_i^1, ..., xi_i^L)``;
  species are combined by mixed radix with species 1 the most significant.
"""

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from utils import max_states
from utils.errors import GraphError, StateSpaceError, StateSpaceTooLarge

logger = logging.getLogger(__name__)

SEP = 'SEP'
IRW = 'IRW'


@dataclass(frozen=True)
class Graph:
    """Finite undirected simple graph on sites ``1..num_sites``."""

    num_sites: int
    edges: Tuple[Tuple[int, int], ...]

    @property
    def L(self) -> int:
        return self.num_sites

    def neighbors(self, x: int) -> List[int]:
        return sorted({b if a == x else a for a, b in self.edges if x in (a, b)})

    def describe(self) -> str:
        pairs = ' '.join(f"{a}-{b}" for a, b in self.edges)
        return f"L={self.num_sites} edges=[{pairs}]"


def build_graph(L: int, edges: Sequence[Sequence[int]]) -> Graph:
    if not isinstance(L, (int, np.integer)) or isinstance(L, bool) or L < 1:
        raise GraphError(f"number of sites must be a positive integer, got {L!r}")
    seen = set()
    normalized = []
    for pair in edges:
        if len(pair) != 2:
            raise GraphError(f"edge {tuple(pair)!r} is not a pair of sites")
        x, y = int(pair[0]), int(pair[1])
        for site in (x, y):
            if not 1 <= site <= L:
                raise GraphError(f"edge ({x}, {y}) has endpoint {site} outside 1..{L}")
        if x == y:
            raise GraphError(f"self-loop at site {x}")
        key = (min(x, y), max(x, y))
        if key in seen:
            raise GraphError(f"duplicate edge {{{key[0]}, {key[1]}}}")
        seen.add(key)
        normalized.append(key)
    return Graph(num_sites=int(L), edges=tuple(normalized))


def path_graph(k: int) -> Graph:
    return build_graph(k, [(x, x + 1) for x in range(1, k)])


def cycle_graph(k: int) -> Graph:
    if k < 3:
        raise GraphError(f"a cycle needs at least 3 sites, got {k}")
    return build_graph(k, [(x, x + 1) for x in range(1, k)] + [(1, k)])


def complete_graph(k: int) -> Graph:
    return build_graph(k, [(x, y) for x in range(1, k + 1) for y in range(x + 1, k + 1)])


def preset_graph(name: str) -> Graph:
    """Resolve ``edge``, ``triangle``, ``path-k``, ``cycle-k`` or ``complete-k``."""
    name = name.strip().lower()
    if name == 'edge':
        return path_graph(2)
    if name == 'triangle':
        return cycle_graph(3)
    if name.startswith('path') and name[4:].lstrip('-').isdigit():
        return path_graph(int(name[4:].lstrip('-')))
    kind, _, size = name.partition('-')
    if not size.isdigit():
        raise GraphError(f"unknown graph preset {name!r}")
    builders = {'path': path_graph, 'cycle': cycle_graph, 'complete': complete_graph}
    if kind not in builders:
        raise GraphError(f"unknown graph preset {name!r}")
    return builders[kind](int(size))


def compositions(total: int, parts: int) -> Iterator[Tuple[int, ...]]:
    """Compositions of ``total`` into ``parts`` non-negative parts, reverse-lexicographic."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in compositions(total - first, parts - 1):
            yield (first,) + rest


def local_states(n: int, two_j: int) -> Tuple[Tuple[int, ...], ...]:
    """Omega_{2j}: single-site SEP states ``(xi_0, ..., xi_n)`` in rank order."""
    return tuple(compositions(two_j, n + 1))


@dataclass(frozen=True)
class ConfigSpace:
    """Exactly enumerated, rank-indexed configuration space.

    ``digits`` holds the alphabet of each mixed-radix digit: one digit per site
    for SEP, one per species for IRW sectors.
    """

    mode: str
    graph: Graph
    n: int
    two_j: Optional[int]
    totals: Optional[Tuple[int, ...]]
    digits: Tuple[Tuple[Tuple[int, ...], ...], ...]

    @property
    def L(self) -> int:
        return self.graph.num_sites

    @property
    def width(self) -> int:
        """Number of species columns in a configuration array."""
        return self.n + 1 if self.mode == SEP else self.n

    @cached_property
    def size(self) -> int:
        return math.prod(len(alphabet) for alphabet in self.digits)

    @cached_property
    def _strides(self) -> Tuple[int, ...]:
        strides = []
        acc = 1
        for alphabet in reversed(self.digits):
            strides.append(acc)
            acc *= len(alphabet)
        return tuple(reversed(strides))

    @cached_property
    def _lookup(self) -> Tuple[Dict[Tuple[int, ...], int], ...]:
        return tuple({value: idx for idx, value in enumerate(alphabet)} for alphabet in self.digits)

    def _digit_values(self, config: np.ndarray) -> List[Tuple[int, ...]]:
        if self.mode == SEP:
            return [tuple(int(v) for v in config[x]) for x in range(self.L)]
        return [tuple(int(v) for v in config[:, i]) for i in range(self.n)]

    def rank(self, config) -> int:
        config = np.asarray(config)
        if config.shape != (self.L, self.width):
            raise StateSpaceError(f"configuration shape {config.shape} does not match ({self.L}, {self.width})")
        r = 0
        for value, lookup, stride in zip(self._digit_values(config), self._lookup, self._strides):
            try:
                r += lookup[value] * stride
            except KeyError:
                raise StateSpaceError(f"configuration {config.tolist()} is not in {self.describe()}") from None
        return r

    def unrank(self, r: int) -> np.ndarray:
        if not 0 <= r < self.size:
            raise StateSpaceError(f"rank {r} outside 0..{self.size - 1}")
        config = np.zeros((self.L, self.width), dtype=np.int64)
        for k, (alphabet, stride) in enumerate(zip(self.digits, self._strides)):
            idx, r = divmod(r, stride)
            if self.mode == SEP:
                config[k] = alphabet[idx]
            else:
                config[:, k] = alphabet[idx]
        return config

    def configs(self) -> Iterator[np.ndarray]:
        for r in range(self.size):
            yield self.unrank(r)

    def contains(self, config) -> bool:
        try:
            self.rank(config)
        except StateSpaceError:
            return False
        return True

    @cached_property
    def local_alphabet(self) -> Tuple[Tuple[int, ...], ...]:
        """Every single-site configuration that can occur in this space."""
        if self.mode == SEP:
            return self.digits[0]
        ranges = [range(total, -1, -1) for total in self.totals]
        grid = np.array(np.meshgrid(*ranges, indexing='ij')).reshape(self.n, -1).T
        return tuple(tuple(int(v) for v in row) for row in grid)

    @cached_property
    def local_index(self) -> np.ndarray:
        """Array of shape ``(size, L)``: index of each site's state in ``local_alphabet``."""
        lookup = {value: idx for idx, value in enumerate(self.local_alphabet)}
        out = np.empty((self.size, self.L), dtype=np.int64)
        for r in range(self.size):
            config = self.unrank(r)
            for x in range(self.L):
                out[r, x] = lookup[tuple(int(v) for v in config[x])]
        return out

    def describe(self) -> str:
        if self.mode == SEP:
            return f"mode=SEP n={self.n} two_j={self.two_j} L={self.L} size={self.size}"
        totals = ','.join(str(t) for t in self.totals)
        return f"mode=IRW n={self.n} totals={totals} L={self.L} size={self.size}"

    def parameters(self) -> dict:
        params = {'mode': self.mode, 'n': self.n, 'L': self.L, 'edges': [list(e) for e in self.graph.edges]}
        if self.mode == SEP:
            params['two_j'] = self.two_j
        else:
            params['totals'] = list(self.totals)
        return params


def _check_cap(size: int, cap: Optional[int]):
    cap = max_states() if cap is None else cap
    if size > cap:
        raise StateSpaceTooLarge(size, cap)


def enumerate_sep(graph: Graph, n: int, two_j: int, max_size: Optional[int] = None) -> ConfigSpace:
    if n < 1:
        raise StateSpaceError(f"species count n must be at least 1, got {n}")
    if two_j < 1:
        raise StateSpaceError(f"site capacity 2j must be at least 1, got {two_j}")
    per_site = math.comb(two_j + n, n)
    _check_cap(per_site ** graph.num_sites, max_size)
    alphabet = local_states(n, two_j)
    space = ConfigSpace(mode=SEP, graph=graph, n=n, two_j=two_j, totals=None,
                        digits=(alphabet,) * graph.num_sites)
    logger.debug("enumerated %s", space.describe())
    return space


def enumerate_irw_sector(graph: Graph, n: int, totals: Sequence[int], max_size: Optional[int] = None,
                         allow_empty: bool = False) -> ConfigSpace:
    totals = tuple(int(t) for t in totals)
    if n < 1 or len(totals) != n:
        raise StateSpaceError(f"expected {n} species totals, got {len(totals)}")
    if any(t < 0 for t in totals):
        raise StateSpaceError(f"species totals must be non-negative, got {totals}")
    if not allow_empty and not any(totals):
        raise StateSpaceError("at least one species total must be positive")
    L = graph.num_sites
    _check_cap(math.prod(math.comb(t + L - 1, L - 1) for t in totals), max_size)
    digits = tuple(tuple(compositions(t, L)) for t in totals)
    space = ConfigSpace(mode=IRW, graph=graph, n=n, two_j=None, totals=totals, digits=digits)
    logger.debug("enumerated %s", space.describe())
    return space
