"""
Multivariate Krawtchouk polynomials of Griffiths type.

A family is fixed by a 4-tuple ``(nu, p, p_hat, U)`` with

1. ``p_0 = p_hat_0 = 1 / nu``
2. ``U[k, 0] = U[0, k] = 1`` for every ``k``
3. ``nu * P @ U @ P_hat @ U.T == I``

Everything here works on a single site; products over a graph live in
``utils.verify``. When ``p`` is rational the tuple is kept in ``Fraction``s and
polynomial coefficients are extracted exactly, rounding once at the end.
"""

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import lru_cache
from numbers import Number
from typing import Dict, Sequence, Tuple

import numpy as np

from models import CheckRecord
from utils import TOL_EXACT, TOL_FLOAT
from utils.errors import KappaError
from utils.statespace import local_states

logger = logging.getLogger(__name__)

# Above this capacity rational expansions get slow; fall back to doubles.
EXACT_DEGREE = 8


@dataclass(frozen=True)
class Kappa:
    nu: Number
    p: Tuple[Number, ...]
    p_hat: Tuple[Number, ...]
    u: Tuple[Tuple[Number, ...], ...]

    @property
    def n(self) -> int:
        return len(self.p) - 1

    @property
    def exact(self) -> bool:
        values = (self.nu,) + self.p + self.p_hat + tuple(x for row in self.u for x in row)
        return all(isinstance(v, (int, Fraction)) for v in values)

    @property
    def U(self) -> np.ndarray:
        return np.array(self.u, dtype=float)

    @property
    def p_array(self) -> np.ndarray:
        return np.array(self.p, dtype=float)

    @property
    def p_hat_array(self) -> np.ndarray:
        return np.array(self.p_hat, dtype=float)

    def parameters(self) -> dict:
        return {'p': '(' + ','.join(_short(x) for x in self.p) + ')'}


def _short(value) -> str:
    if isinstance(value, Fraction):
        return str(value)
    return f"{float(value):.6g}"


@dataclass(frozen=True)
class RMatrix:
    R: np.ndarray
    Q: np.ndarray


def _as_real(value, name):
    if isinstance(value, complex) or np.iscomplexobj(value):
        if complex(value).imag != 0:
            raise KappaError(f"{name} has a complex entry {value!r}; only real families are supported", 'complex')
        value = complex(value).real
    if isinstance(value, (int, Fraction)) and not isinstance(value, bool):
        return Fraction(value)
    return float(value)


def _matrix(rows, exact):
    return np.array(rows, dtype=object if exact else float)


def check_definition(nu, p, p_hat, u) -> Dict[str, float]:
    """Residuals of the three defining conditions (max-entry norms)."""
    exact = all(isinstance(v, Fraction) for v in (nu,) + tuple(p) + tuple(p_hat))
    exact = exact and all(isinstance(v, Fraction) for row in u for v in row)
    size = len(p)
    cond1 = max(abs(p[0] - 1 / nu), abs(p_hat[0] - 1 / nu))
    cond2 = max(max(abs(u[k][0] - 1), abs(u[0][k] - 1)) for k in range(size))
    P = _matrix([[p[k] if k == m else 0 for m in range(size)] for k in range(size)], exact)
    P_hat = _matrix([[p_hat[k] if k == m else 0 for m in range(size)] for k in range(size)], exact)
    U = _matrix([list(row) for row in u], exact)
    product = nu * (P @ U @ P_hat @ U.T)
    cond3 = max(abs(product[k, m] - (1 if k == m else 0)) for k in range(size) for m in range(size))
    return {'condition_1': float(cond1), 'condition_2': float(cond2), 'condition_3': float(cond3)}


def validate_kappa(nu, p, p_hat, u, tolerance: float = TOL_EXACT) -> Kappa:
    """Check a candidate tuple against the family definition and freeze it.

    Raises ``KappaError`` whose ``condition`` names the first failed requirement.
    """
    p = tuple(_as_real(x, 'p') for x in p)
    p_hat = tuple(_as_real(x, 'p_hat') for x in p_hat)
    size = len(p)
    if size < 2 or len(p_hat) != size:
        raise KappaError(f"p and p_hat must have equal length at least 2, got {len(p)} and {len(p_hat)}",
                         'dimension')
    u = tuple(tuple(_as_real(x, 'U') for x in row) for row in u)
    if len(u) != size or any(len(row) != size for row in u):
        raise KappaError(f"U must be {size}x{size}", 'dimension')
    nu = _as_real(nu, 'nu')
    if nu == 0:
        raise KappaError("nu must be nonzero", 1)
    for name, vector in (('p', p), ('p_hat', p_hat)):
        if any(x <= 0 for x in vector):
            raise KappaError(f"{name} must be strictly positive, got {vector}", 'probability')
        if abs(sum(vector) - 1) > tolerance:
            raise KappaError(f"{name} must sum to 1, got {float(sum(vector))!r}", 'probability')

    residuals = check_definition(nu, p, p_hat, u)
    if residuals['condition_1'] > tolerance:
        raise KappaError(f"p_0 and p_hat_0 must equal 1/nu (off by {residuals['condition_1']:.3e})", 1)
    if residuals['condition_2'] > tolerance:
        raise KappaError("the first row and column of U must be all ones", 2)
    if residuals['condition_3'] > tolerance:
        raise KappaError(f"nu P U P_hat U^T differs from I by {residuals['condition_3']:.3e}", 3)
    return Kappa(nu=nu, p=p, p_hat=p_hat, u=u)


def kappa_from_p(p: Sequence) -> Kappa:
    """Build a family from ``p`` by Gram-Schmidt.

    The seed vectors ``(1, ..., 1), e_1, ..., e_n`` are orthogonalized in this
    order under ``<a, b> = nu * sum_k p_k a_k b_k``; each result is rescaled to
    have first entry 1 and becomes a column of ``U``. Then
    ``p_hat_l = 1 / (nu * sum_k p_k u_kl^2)``.
    """
    p = tuple(_as_real(x, 'p') for x in p)
    if len(p) < 2:
        raise KappaError("p needs at least two entries", 'dimension')
    if any(x <= 0 for x in p) or abs(sum(p) - 1) > TOL_EXACT:
        raise KappaError(f"p must be a strictly positive probability vector, got {p}", 'probability')
    size = len(p)
    nu = 1 / p[0]
    one, zero = p[0] / p[0], p[0] - p[0]

    def inner(a, b):
        return nu * sum(pk * ak * bk for pk, ak, bk in zip(p, a, b))

    columns = []
    for l in range(size):
        v = [one] * size if l == 0 else [one if k == l else zero for k in range(size)]
        for c in columns:
            coef = inner(v, c) / inner(c, c)
            v = [vk - coef * ck for vk, ck in zip(v, c)]
        if abs(inner(v, v)) <= TOL_EXACT:
            raise KappaError(f"Gram-Schmidt lost rank at column {l}", 'degenerate')
        if v[0] == 0 or abs(v[0]) <= TOL_EXACT * max(abs(x) for x in v):
            raise KappaError(f"column {l} has vanishing first entry and cannot be rescaled", 'degenerate')
        columns.append([vk / v[0] for vk in v])

    u = tuple(tuple(columns[l][k] for l in range(size)) for k in range(size))
    p_hat = tuple(1 / (nu * sum(p[k] * u[k][l] ** 2 for k in range(size))) for l in range(size))
    return validate_kappa(nu, p, p_hat, u)


def random_kappa(n: int, rng: np.random.Generator, floor: float = 0.02) -> Kappa:
    """Family built from a Dirichlet draw of ``p`` whose entries all exceed ``floor``."""
    while True:
        p = rng.dirichlet(np.full(n + 1, 2.0))
        if p.min() > floor:
            return kappa_from_p(p / p.sum())


def swap_roles(kappa: Kappa) -> Kappa:
    """The dual tuple ``(nu, p_hat, p, U^T)``; it satisfies the same definition."""
    u_t = tuple(tuple(kappa.u[k][l] for k in range(kappa.n + 1)) for l in range(kappa.n + 1))
    return validate_kappa(kappa.nu, kappa.p_hat, kappa.p, u_t, tolerance=TOL_EXACT if kappa.exact else TOL_FLOAT)


def r_matrix(kappa: Kappa) -> RMatrix:
    """``R = P_hat U^T`` and its inverse ``Q = nu P U`` (the free scalar set to 1)."""
    U = kappa.U
    R = np.diag(kappa.p_hat_array) @ U.T
    Q = float(kappa.nu) * np.diag(kappa.p_array) @ U
    return RMatrix(R=R, Q=Q)


def multinomial_coefficient(xi: Sequence[int]) -> int:
    total = math.factorial(sum(xi))
    for x in xi:
        total //= math.factorial(x)
    return total


def multinomial_weight(xi: Sequence[int], p: Sequence, two_j: int):
    xi = tuple(int(x) for x in xi)
    if sum(xi) != two_j or len(xi) != len(p) or min(xi) < 0:
        raise KappaError(f"site state {xi} is not a composition of {two_j} into {len(p)} parts", 'dimension')
    weight = multinomial_coefficient(xi)
    for pi, x in zip(p, xi):
        weight *= pi ** x
    return weight


def _expand(forms, powers):
    """Coefficients of ``prod_m (sum_k forms[m][k] z_k) ** powers[m]`` keyed by exponent tuple."""
    width = len(forms[0])
    poly = {(0,) * width: 1}
    for form, power in zip(forms, powers):
        for _ in range(power):
            grown = defaultdict(int)
            for exponent, coef in poly.items():
                for k, a in enumerate(form):
                    if a == 0:
                        continue
                    bumped = exponent[:k] + (exponent[k] + 1,) + exponent[k + 1:]
                    grown[bumped] += coef * a
            poly = grown
    return poly


def _check_pair(xi, eta, kappa, two_j):
    for name, state in (('xi', xi), ('eta', eta)):
        if len(state) != kappa.n + 1 or sum(state) != two_j or min(state) < 0:
            raise KappaError(f"{name}={tuple(state)} is not in Omega_{two_j} for n={kappa.n}", 'dimension')


def _entries(kappa, two_j):
    """Kappa entries as exact Fractions when allowed, else floats."""
    if kappa.exact and two_j <= EXACT_DEGREE:
        return kappa.u, kappa.p_hat
    return (tuple(tuple(float(x) for x in row) for row in kappa.u),
            tuple(float(x) for x in kappa.p_hat))


def _gf_row(eta, kappa, two_j):
    u, _ = _entries(kappa, two_j)
    # Homogenized: z_0 stands in for the constant 1 because u_k0 = 1.
    return _expand(u, eta)


def krawtchouk_gf(xi, eta, kappa: Kappa, two_j: int) -> float:
    """K(xi, eta) as the xi-coefficient of prod_k (1 + sum_l u_kl z_l)^eta_k over C(2j, xi)."""
    xi, eta = tuple(xi), tuple(eta)
    _check_pair(xi, eta, kappa, two_j)
    coef = _gf_row(eta, kappa, two_j).get(xi, 0)
    return float(coef / multinomial_coefficient(xi)) if coef else 0.0


def _bilinear_raw(xi, eta, kappa, two_j):
    u, p_hat = _entries(kappa, two_j)
    size = kappa.n + 1
    # z_hat = z R with R = P_hat U^T, so z_hat_m = sum_k z_k p_hat_k u_mk
    forms = [[p_hat[k] * u[m][k] for k in range(size)] for m in range(size)]
    coef = _expand(forms, eta).get(xi, 0)
    scale = math.prod(math.factorial(x) for x in xi)
    for ph, x in zip(p_hat, xi):
        scale /= ph ** x
    return coef * scale


def krawtchouk_bilinear(xi, eta, kappa: Kappa, two_j: int) -> float:
    """K(xi, eta) through the bilinear form, normalized so the all-holes pair gives 1."""
    xi, eta = tuple(xi), tuple(eta)
    _check_pair(xi, eta, kappa, two_j)
    anchor_state = (two_j,) + (0,) * kappa.n
    anchor = _bilinear_raw(anchor_state, anchor_state, kappa, two_j)
    return float(_bilinear_raw(xi, eta, kappa, two_j) / anchor)


@lru_cache(maxsize=256)
def krawtchouk_table(kappa: Kappa, two_j: int) -> np.ndarray:
    """``T[a, b] = K(omega[a], omega[b])`` over ``local_states(n, two_j)`` (generating-function route)."""
    omega = local_states(kappa.n, two_j)
    table = np.empty((len(omega), len(omega)))
    for b, eta in enumerate(omega):
        row = _gf_row(eta, kappa, two_j)
        for a, xi in enumerate(omega):
            coef = row.get(xi, 0)
            table[a, b] = float(coef / multinomial_coefficient(xi)) if coef else 0.0
    table.setflags(write=False)
    return table


def bilinear_table(kappa: Kappa, two_j: int) -> np.ndarray:
    omega = local_states(kappa.n, two_j)
    return np.array([[krawtchouk_bilinear(xi, eta, kappa, two_j) for eta in omega] for xi in omega])


def weight_vector(p: Sequence, n: int, two_j: int) -> np.ndarray:
    return np.array([float(multinomial_weight(xi, p, two_j)) for xi in local_states(n, two_j)])


def check_routes(kappa: Kappa, two_j: int, tolerance: float = TOL_FLOAT) -> CheckRecord:
    """Max gap between the two tables relative to ``max(1, max |K|)``."""
    table = krawtchouk_table(kappa, two_j)
    gap = float(np.max(np.abs(table - bilinear_table(kappa, two_j)))) / max(1.0, float(np.max(np.abs(table))))
    params = {'n': kappa.n, 'two_j': two_j, **kappa.parameters()}
    return CheckRecord('krawtchouk-routes', params, gap, tolerance, gap <= tolerance)


def orthogonality_sums(kappa: Kappa, two_j: int, tolerance: float = TOL_FLOAT) -> CheckRecord:
    """Both orthogonality relations, as relative residuals.

    With ``S1 = K^T W_hat K`` and ``S2 = K W K^T`` the expected values are
    ``p_0^{2j} / w_p`` and ``p_0^{2j} / w_p_hat`` on the diagonal. The residual
    is the max entry of ``W^{1/2} S1 W^{1/2} / p_0^{2j} - I`` (and likewise for
    ``S2``), which is scale free in the capacity.
    """
    K = krawtchouk_table(kappa, two_j)
    w = weight_vector(kappa.p, kappa.n, two_j)
    w_hat = weight_vector(kappa.p_hat, kappa.n, two_j)
    norm = float(kappa.p[0]) ** two_j
    eye = np.eye(len(w))

    first = K.T @ (w_hat[:, None] * K)
    second = K @ (w[:, None] * K.T)
    first_residual = float(np.max(np.abs(np.sqrt(np.outer(w, w)) * first / norm - eye)))
    second_residual = float(np.max(np.abs(np.sqrt(np.outer(w_hat, w_hat)) * second / norm - eye)))
    residual = max(first_residual, second_residual)
    logger.debug("orthogonality n=%d two_j=%d residuals %.3e %.3e", kappa.n, two_j, first_residual, second_residual)
    params = {'n': kappa.n, 'two_j': two_j, **kappa.parameters()}
    return CheckRecord('orthogonality', params, residual, tolerance, residual <= tolerance,
                       details={'first_sum': first_residual, 'second_sum': second_residual})


def check_role_swap(kappa: Kappa, two_j: int, tolerance: float = TOL_FLOAT) -> CheckRecord:
    """Compare ``K_swapped(eta, xi)`` with ``K(xi, eta)``; reported, never blocking."""
    gap = float(np.max(np.abs(krawtchouk_table(swap_roles(kappa), two_j).T - krawtchouk_table(kappa, two_j))))
    params = {'n': kappa.n, 'two_j': two_j, **kappa.parameters()}
    return CheckRecord('krawtchouk-role-swap', params, gap, tolerance, gap <= tolerance, informational=True)


def check_kappa(kappa: Kappa, tolerance: float = TOL_EXACT) -> CheckRecord:
    residuals = check_definition(kappa.nu, kappa.p, kappa.p_hat, kappa.u)
    sum_gap = float(abs(sum(kappa.p_hat) - 1))
    residual = max(max(residuals.values()), sum_gap)
    return CheckRecord('kappa-definition', {'n': kappa.n, **kappa.parameters()}, residual, tolerance,
                       residual <= tolerance, details={**residuals, 'p_hat_sum': sum_gap})


def perturb_u(kappa: Kappa, row: int = 1, col: int = 1, delta: float = 1e-3) -> Kappa:
    """Copy of ``kappa`` with one entry of ``U`` shifted, skipping validation."""
    u = [[float(x) for x in r] for r in kappa.u]
    u[row][col] += delta
    return replace(kappa, u=tuple(tuple(r) for r in u))


