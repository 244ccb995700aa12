"""
Heisenberg algebra h_n acting on functions of IRW site configurations.

Words are tuples of letters ``('P', i)``, ``('Q', i)`` and ``('Z', 0)`` with
species ``1 <= i <= n``. The representation is

    rho(Q_i) f(xi) = xi_i f(xi - e_i)
    rho(P_i) f(xi) = lam f(xi + e_i)
    rho(Z)   f(xi) = lam f(xi)

and a word acts by composition, so evaluating ``rho(w) f`` at a point pulls the
point through the letters left to right. Raising letters (``P``) push the
argument up, so on a finite window ``{0..M}^n`` a word of raising degree ``r``
only produces values on ``{0..M-r}^n``.
"""

import itertools
import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from models import CheckRecord
from utils import TOL_EXACT, max_abs
from utils.charlier import charlier_table, poisson_tail_cutoff, poisson_weight
from utils.errors import OperatorError, WindowExhaustedError
from utils.generators import SparseOperator, irw_generator
from utils.statespace import IRW, ConfigSpace

logger = logging.getLogger(__name__)

Letter = Tuple[str, int]
Word = Tuple[Letter, ...]

KERNEL_TOL = 1e-9


@dataclass(frozen=True)
class HeisenbergOp:
    """Linear combination of words, kept without normal ordering."""

    terms: Tuple[Tuple[Word, float], ...]

    @classmethod
    def word(cls, *letters: Letter, coef: float = 1.0) -> 'HeisenbergOp':
        return cls(((tuple(letters), coef),))

    @classmethod
    def P(cls, i: int) -> 'HeisenbergOp':
        return cls.word(('P', i))

    @classmethod
    def Q(cls, i: int) -> 'HeisenbergOp':
        return cls.word(('Q', i))

    @classmethod
    def Z(cls) -> 'HeisenbergOp':
        return cls.word(('Z', 0))

    @classmethod
    def one(cls) -> 'HeisenbergOp':
        return cls.word()

    def simplified(self) -> 'HeisenbergOp':
        merged: Dict[Word, float] = defaultdict(float)
        for w, c in self.terms:
            merged[w] += c
        return HeisenbergOp(tuple(sorted((w, c) for w, c in merged.items() if c != 0)))

    def __add__(self, other: 'HeisenbergOp') -> 'HeisenbergOp':
        return HeisenbergOp(self.terms + other.terms).simplified()

    def __neg__(self) -> 'HeisenbergOp':
        return HeisenbergOp(tuple((w, -c) for w, c in self.terms))

    def __sub__(self, other: 'HeisenbergOp') -> 'HeisenbergOp':
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, HeisenbergOp):
            return HeisenbergOp(tuple((a + b, ca * cb) for a, ca in self.terms for b, cb in other.terms)).simplified()
        return HeisenbergOp(tuple((w, c * other) for w, c in self.terms))

    __rmul__ = __mul__

    def star(self) -> 'HeisenbergOp':
        """``P_i^* = Q_i``, ``Z^* = Z``; products reverse."""
        swap = {'P': 'Q', 'Q': 'P', 'Z': 'Z'}
        return HeisenbergOp(tuple((tuple((swap[k], i) for k, i in reversed(w)), c)
                                  for w, c in self.terms)).simplified()

    def theta(self) -> 'HeisenbergOp':
        """``P_i -> Z - P_i``, ``Q_i -> Z - Q_i``, ``Z -> Z`` extended multiplicatively."""
        total = HeisenbergOp(())
        for w, c in self.terms:
            image = HeisenbergOp.one() * c
            for kind, i in w:
                image = image * (HeisenbergOp.Z() if kind == 'Z' else HeisenbergOp.Z() - HeisenbergOp.word((kind, i)))
            total = total + image
        return total

    @property
    def raising_degree(self) -> int:
        return max((sum(1 for kind, _ in w if kind == 'P') for w, _ in self.terms), default=0)


def bracket(a: HeisenbergOp, b: HeisenbergOp) -> HeisenbergOp:
    return a * b - b * a


def pullback(word: Word, point: Sequence[int], lam) -> Optional[Tuple[float, Tuple[int, ...]]]:
    """``(coef, end)`` with ``rho(word) f(point) = coef * f(end)``, or ``None`` when a ``Q`` hits zero."""
    coef = 1.0
    point = list(point)
    lam = float(lam)
    for kind, i in word:
        if kind == 'Z':
            coef *= lam
        elif kind == 'P':
            coef *= lam
            point[i - 1] += 1
        elif kind == 'Q':
            if point[i - 1] == 0:
                return None
            coef *= point[i - 1]
            point[i - 1] -= 1
        else:
            raise OperatorError(f"unknown Heisenberg letter {kind!r}")
    return coef, tuple(point)


@dataclass(frozen=True)
class WindowFunction:
    """Values of ``f`` on the cube ``{0..M}^n``, stored as an n-dimensional array."""

    values: np.ndarray

    @property
    def n(self) -> int:
        return self.values.ndim

    @property
    def M(self) -> int:
        return self.values.shape[0] - 1

    @classmethod
    def from_callable(cls, f: Callable[[Tuple[int, ...]], float], n: int, M: int) -> 'WindowFunction':
        values = np.empty((M + 1,) * n)
        for point in itertools.product(range(M + 1), repeat=n):
            values[point] = f(point)
        return cls(values)

    def points(self) -> Iterator[Tuple[int, ...]]:
        return itertools.product(range(self.M + 1), repeat=self.n)


def heisenberg_apply(op: HeisenbergOp, f: WindowFunction, lam) -> WindowFunction:
    """``rho(op) f`` on the sub-window ``{0..M-r}^n`` with ``r`` the raising degree of ``op``."""
    slack = op.raising_degree
    if slack > f.M:
        raise WindowExhaustedError(f"raising degree {slack} exceeds window size {f.M}")
    for w, _ in op.terms:
        for kind, i in w:
            if kind != 'Z' and not 1 <= i <= f.n:
                raise OperatorError(f"letter {kind}{i} does not act on {f.n} species")
    out = np.zeros((f.M - slack + 1,) * f.n)
    for point in itertools.product(range(f.M - slack + 1), repeat=f.n):
        total = 0.0
        for w, c in op.terms:
            pulled = pullback(w, point, lam)
            if pulled is not None:
                total += c * pulled[0] * f.values[pulled[1]]
        out[point] = total
    return WindowFunction(out)


@dataclass(frozen=True)
class HeisenbergTensor:
    """``sum coef * A (x) B`` with words ``A`` acting on site x and ``B`` on site y."""

    terms: Tuple[Tuple[float, Word, Word], ...]

    @classmethod
    def left(cls, op: HeisenbergOp) -> 'HeisenbergTensor':
        return cls(tuple((c, w, ()) for w, c in op.terms))

    @classmethod
    def right(cls, op: HeisenbergOp) -> 'HeisenbergTensor':
        return cls(tuple((c, (), w) for w, c in op.terms))

    def __add__(self, other: 'HeisenbergTensor') -> 'HeisenbergTensor':
        return HeisenbergTensor(self.terms + other.terms)

    def __sub__(self, other: 'HeisenbergTensor') -> 'HeisenbergTensor':
        return HeisenbergTensor(self.terms + tuple((-c, a, b) for c, a, b in other.terms))

    def __mul__(self, other: 'HeisenbergTensor') -> 'HeisenbergTensor':
        return HeisenbergTensor(tuple((c1 * c2, a1 + a2, b1 + b2)
                                      for c1, a1, b1 in self.terms for c2, a2, b2 in other.terms))

    def mapped(self, f: Callable[[HeisenbergOp], HeisenbergOp]) -> 'HeisenbergTensor':
        terms = []
        for c, a, b in self.terms:
            for wa, ca in f(HeisenbergOp.word(*a)).terms:
                for wb, cb in f(HeisenbergOp.word(*b)).terms:
                    terms.append((c * ca * cb, wa, wb))
        return HeisenbergTensor(tuple(terms))


def irw_Y(n: int) -> HeisenbergTensor:
    """``Y = sum_i (1 (x) Q_i - Q_i (x) 1)(P_i (x) 1 - 1 (x) P_i)``."""
    total = HeisenbergTensor(())
    for i in range(1, n + 1):
        left = HeisenbergTensor.right(HeisenbergOp.Q(i)) - HeisenbergTensor.left(HeisenbergOp.Q(i))
        right = HeisenbergTensor.left(HeisenbergOp.P(i)) - HeisenbergTensor.right(HeisenbergOp.P(i))
        total = total + left * right
    return total


def edge_operator(Y: HeisenbergTensor, space: ConfigSpace, edge: Tuple[int, int], lam) -> sp.csr_matrix:
    """``(rho (x) rho)(Y_xy)`` on an IRW sector, row ``a`` holding the coefficients of ``f(b)``."""
    x, y = edge[0] - 1, edge[1] - 1
    rows, cols, vals = [], [], []
    for a, config in enumerate(space.configs()):
        # Single terms may leave the sector; only their sum per target has to stay inside.
        landed: Dict[Tuple[Tuple[int, ...], Tuple[int, ...]], float] = defaultdict(float)
        scale = 0.0
        for c, word_x, word_y in Y.terms:
            px = pullback(word_x, config[x], lam)
            py = pullback(word_y, config[y], lam)
            if px is None or py is None:
                continue
            value = c * px[0] * py[0]
            landed[px[1], py[1]] += value
            scale = max(scale, abs(value))
        for (end_x, end_y), value in landed.items():
            target = config.copy()
            target[x], target[y] = end_x, end_y
            if not space.contains(target):
                if abs(value) > TOL_EXACT * max(1.0, scale):
                    raise OperatorError(f"edge operator moves {config.tolist()} out of the sector")
                continue
            rows.append(a)
            cols.append(space.rank(target))
            vals.append(value)
    return sp.csr_matrix((vals, (rows, cols)), shape=(space.size, space.size))


def irw_generator_from_algebra(space: ConfigSpace, lam, use_theta: bool = False) -> SparseOperator:
    """``lam^{-1} sum_edges (rho (x) rho)(Y_xy)``, optionally with ``theta`` applied to both factors."""
    if space.mode != IRW:
        raise OperatorError(f"expected an IRW sector, got {space.mode}")
    Y = irw_Y(space.n)
    if use_theta:
        Y = Y.mapped(HeisenbergOp.theta)
    total = sp.csr_matrix((space.size, space.size))
    for edge in space.graph.edges:
        total = total + edge_operator(Y, space, edge, lam)
    label = 'irw-algebra-theta' if use_theta else 'irw-algebra'
    return SparseOperator(matrix=(total / float(lam)).tocsr(), space_row=space, space_col=space, label=label)


def check_heisenberg_generator(lam, space: ConfigSpace, tolerance: float = TOL_EXACT) -> CheckRecord:
    """Both algebraic constructions of the IRW generator against the move-by-move assembly."""
    generator = irw_generator(space).matrix
    plain = irw_generator_from_algebra(space, lam).matrix
    rotated = irw_generator_from_algebra(space, lam, use_theta=True).matrix
    scale = max(1.0, max_abs(generator))
    plain_gap = max_abs(plain - generator) / scale
    theta_gap = max_abs(rotated - generator) / scale
    residual = max(plain_gap, theta_gap)
    params = {**space.parameters(), 'lambda': lam}
    return CheckRecord('heisenberg-generator', params, residual, tolerance, residual <= tolerance,
                       details={'rho': plain_gap, 'theta': theta_gap})


def kernel_grid(n: int, M: int, lam) -> np.ndarray:
    """``G[xi..., eta...] = prod_i e^lam C_{xi_i}(eta_i, lam)`` on ``{0..M}^n x {0..M}^n``."""
    single = math.exp(float(lam)) * np.asarray(charlier_table(M, M, lam))
    grid = np.ones(())
    for _ in range(n):
        grid = np.multiply.outer(grid, single)
    # axes come out as (xi_1, eta_1, xi_2, eta_2, ...); reorder to (xi..., eta...)
    order = [2 * i for i in range(n)] + [2 * i + 1 for i in range(n)]
    return np.transpose(grid, order)


def check_kernel_relations(lam, n: int = 1, M: int = 6, tolerance: float = KERNEL_TOL) -> CheckRecord:
    """``rho(X^*) C(., eta)(xi) = rho(theta X) C(xi, .)(eta)`` for ``X`` in ``{P_i, Q_i, Z}``.

    Both sides are computed with ``heisenberg_apply`` on window functions and
    compared on the interior ``{0..M-1}^n`` of both arguments.
    """
    grid = kernel_grid(n, M, lam)
    generators = [HeisenbergOp.P(i) for i in range(1, n + 1)] + [HeisenbergOp.Q(i) for i in range(1, n + 1)]
    generators.append(HeisenbergOp.Z())
    scale = max(1.0, float(np.max(np.abs(grid))))
    inner = M - 1
    residual = 0.0
    for X in generators:
        lhs_op, rhs_op = X.star(), X.theta()
        window = list(itertools.product(range(inner + 1), repeat=n))
        in_xi = {eta: heisenberg_apply(lhs_op, WindowFunction(grid[(Ellipsis,) + eta]), lam) for eta in window}
        in_eta = {xi: heisenberg_apply(rhs_op, WindowFunction(grid[xi]), lam) for xi in window}
        for eta in window:
            for xi in window:
                residual = max(residual, abs(in_xi[eta].values[xi] - in_eta[xi].values[eta]) / scale)
    params = {'lambda': lam, 'n': n, 'M': M}
    return CheckRecord('heisenberg-kernel', params, residual, tolerance, residual <= tolerance)


def check_commutation(lam, n: int = 2, M: int = 5, seed: int = 0, tolerance: float = TOL_EXACT) -> CheckRecord:
    """``[P_i, Q_l] = delta_il Z`` in the representation, and ``theta`` keeps brackets and the star."""
    rng = np.random.default_rng(seed)
    f = WindowFunction(rng.standard_normal((M + 1,) * n))
    z_f = heisenberg_apply(HeisenbergOp.Z(), f, lam)
    residual = 0.0
    for i in range(1, n + 1):
        for l in range(1, n + 1):
            comm = heisenberg_apply(bracket(HeisenbergOp.P(i), HeisenbergOp.Q(l)), f, lam)
            expected = z_f.values[(slice(0, comm.M + 1),) * n] if i == l else 0.0
            residual = max(residual, float(np.max(np.abs(comm.values - expected))))
            theta_comm = heisenberg_apply(bracket(HeisenbergOp.P(i).theta(), HeisenbergOp.Q(l).theta()), f, lam)
            residual = max(residual, float(np.max(np.abs(theta_comm.values - expected))))
    for X in [HeisenbergOp.P(1), HeisenbergOp.Q(1), HeisenbergOp.Z()]:
        if X.star().theta() != X.theta().star():
            residual = max(residual, 1.0)
    params = {'lambda': lam, 'n': n, 'M': M}
    return CheckRecord('heisenberg-commutation', params, residual, tolerance, residual <= tolerance)


def check_intertwiner_irw(lam, n: int = 1, M: int = 4, tolerance: float = 1e-9) -> CheckRecord:
    """Norms and orthogonality of ``Lambda delta_zeta = C(zeta, .)`` in ``l^2(mu_lambda)``.

    The squared norm times ``mu(zeta)`` comes out as ``e^{n lam}`` for every
    ``zeta`` rather than 1, so ``Lambda`` is unitary up to that constant. The
    residual measures how far the normalized Gram matrix is from ``e^{n lam} I``;
    the measured constant is reported in the details.
    """
    cutoff = poisson_tail_cutoff(lam, 2 * M, tol=1e-12)
    table = math.exp(float(lam)) * np.asarray(charlier_table(M, cutoff, lam))
    mass = np.array([poisson_weight((z,), lam) for z in range(cutoff + 1)])
    gram_1d = table @ (mass[:, None] * table.T)
    mu_1d = np.array([poisson_weight((m,), lam) for m in range(M + 1)])
    gram = np.ones((1, 1))
    mu = np.ones(1)
    for _ in range(n):
        gram = np.kron(gram, gram_1d)
        mu = np.kron(mu, mu_1d)
    normalized = np.sqrt(np.outer(mu, mu)) * gram
    factor = float(np.mean(np.diag(normalized)))
    expected = math.exp(n * float(lam))
    residual = float(np.max(np.abs(normalized / expected - np.eye(len(mu)))))
    params = {'lambda': lam, 'n': n, 'M': M, 'cutoff': cutoff}
    return CheckRecord('intertwiner-irw', params, residual, tolerance, residual <= tolerance,
                       details={'norm_factor': factor, 'expected_factor': expected})
