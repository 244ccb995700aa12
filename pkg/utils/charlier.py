"""
Charlier polynomials, Poisson weights and the per-site IRW duality kernel.

``C_m(z, lam) = sum_k (-m)_k (-z)_k / k! * (-1/lam)^k`` is evaluated from the
finite sum directly. Each term is ``(-1)^k * binom(m, k) * z(z-1)..(z-k+1) / lam^k``
so the numerator is an exact integer and every term costs one division. A
``Fraction`` lambda keeps the whole sum exact.
"""

import logging
import math
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from models import CheckRecord
from utils import TOL_EXACT
from utils.errors import CharlierError

logger = logging.getLogger(__name__)

ORTHOGONALITY_TOL = 1e-8
TAIL_TOL = 1e-10


def _check_lambda(lam):
    if isinstance(lam, bool) or not lam > 0:
        raise CharlierError(f"lambda must be positive, got {lam!r}")


def _falling(z: int, k: int) -> int:
    return math.perm(z, k)


def _terms(m: int, z: int, lam):
    if m < 0 or z < 0:
        raise CharlierError(f"degree and argument must be non-negative, got m={m}, z={z}")
    _check_lambda(lam)
    for k in range(min(m, z) + 1):
        numerator = math.comb(m, k) * _falling(z, k)
        term = numerator / lam ** k
        yield -term if k % 2 else term


def charlier(m: int, z: int, lam):
    terms = list(_terms(int(m), int(z), lam))
    if isinstance(lam, Fraction):
        return sum(terms, Fraction(0))
    return math.fsum(terms)


def charlier_magnitude(m: int, z: int, lam) -> float:
    """Sum of absolute terms, the natural scale for relative residuals."""
    return math.fsum(abs(float(t)) for t in _terms(int(m), int(z), lam))


def poisson_weight(xi: Sequence[int], lam) -> float:
    _check_lambda(lam)
    if any(x < 0 for x in xi):
        raise CharlierError(f"particle counts must be non-negative, got {tuple(xi)}")
    lam = float(lam)
    log_mass = sum(x * math.log(lam) - math.lgamma(x + 1) - lam for x in xi)
    return math.exp(log_mass)


def product_kernel(xi: Sequence[int], eta: Sequence[int], lam) -> float:
    """``prod_i e^lam * C_{xi_i}(eta_i, lam)``."""
    if len(xi) != len(eta):
        raise CharlierError(f"species mismatch: xi has {len(xi)} entries, eta has {len(eta)}")
    value = 1.0
    for m, z in zip(xi, eta):
        value *= math.exp(float(lam)) * float(charlier(m, z, lam))
    return value


@lru_cache(maxsize=64)
def charlier_table(m_max: int, z_max: int, lam) -> np.ndarray:
    """``T[m, z] = C_m(z, lam)`` for ``0 <= m <= m_max`` and ``0 <= z <= z_max``."""
    table = np.array([[float(charlier(m, z, lam)) for z in range(z_max + 1)] for m in range(m_max + 1)])
    table.setflags(write=False)
    return table


def poisson_tail_cutoff(lam, degree: int, tol: float = TAIL_TOL) -> int:
    """Smallest ``Z`` with ``sum_{z > Z} (1 + z/lam)^degree * Poisson(lam)(z) < tol``.

    ``(1 + z/lam)^m`` bounds ``|C_m(z, lam)|`` termwise, so truncating an
    orthogonality sum of ``C_m C_m'`` at ``Z`` with ``degree = m + m'`` loses
    less than ``tol``. The tail is summed in log space until the terms fall
    off geometrically.
    """
    _check_lambda(lam)
    lam = float(lam)

    def log_term(z):
        return degree * math.log1p(z / lam) + z * math.log(lam) - lam - math.lgamma(z + 1)

    cutoff = max(1, math.ceil(lam))
    while True:
        first = log_term(cutoff + 1)
        ratio = math.exp(log_term(cutoff + 2) - first)
        if ratio < 0.5 and math.exp(first) / (1 - ratio) < tol:
            return cutoff
        cutoff += 1


def check_charlier_orthogonality(lam, m_max: int = 6, tolerance: float = ORTHOGONALITY_TOL) -> CheckRecord:
    """Truncated Poisson sums of ``C_m C_m'`` against ``delta * m! / lam^m``.

    Sums are accumulated exactly (lambda as a ``Fraction``) and compared after
    normalizing by ``sqrt(h_m h_m')`` with ``h_m = m! / lam^m``.
    """
    _check_lambda(lam)
    exact = Fraction(lam)
    cutoff = poisson_tail_cutoff(lam, 2 * m_max)
    poly = [[charlier(m, z, exact) for z in range(cutoff + 1)] for m in range(m_max + 1)]
    mass = [exact ** z / math.factorial(z) for z in range(cutoff + 1)]
    scale = math.exp(-float(lam))
    norms = [math.factorial(m) / float(exact) ** m for m in range(m_max + 1)]
    residual = 0.0
    for m in range(m_max + 1):
        for mm in range(m, m_max + 1):
            total = float(sum(a * b * w for a, b, w in zip(poly[m], poly[mm], mass))) * scale
            expected = norms[m] if m == mm else 0.0
            residual = max(residual, abs(total - expected) / math.sqrt(norms[m] * norms[mm]))
    logger.debug("charlier orthogonality lam=%s cutoff=%d residual=%.3e", lam, cutoff, residual)
    params = {'lambda': lam, 'm_max': m_max, 'cutoff': cutoff}
    return CheckRecord('charlier-orthogonality', params, residual, tolerance, residual <= tolerance)


def check_raising_lowering(lam, m_max: int = 8, z_max: int = 20, tolerance: float = TOL_EXACT) -> CheckRecord:
    """Raising ``m C_{m-1}(z) = lam C_m(z) - lam C_m(z+1)`` and lowering
    ``lam C_{m+1}(z) = lam C_m(z) - z C_m(z-1)`` as relative residuals.

    At ``z = 0`` the lowering identity's last term has prefactor 0 and
    ``C_m(-1)`` is never evaluated.
    """
    _check_lambda(lam)
    raising = lowering = 0.0
    lf = float(lam)
    for z in range(z_max + 1):
        for m in range(1, m_max + 1):
            lhs = m * float(charlier(m - 1, z, lam))
            rhs = lf * float(charlier(m, z, lam)) - lf * float(charlier(m, z + 1, lam))
            scale = max(1.0, m * charlier_magnitude(m - 1, z, lam)
                        + lf * (charlier_magnitude(m, z, lam) + charlier_magnitude(m, z + 1, lam)))
            raising = max(raising, abs(lhs - rhs) / scale)
        for m in range(m_max + 1):
            lhs = lf * float(charlier(m + 1, z, lam))
            rhs = lf * float(charlier(m, z, lam))
            scale = lf * (charlier_magnitude(m + 1, z, lam) + charlier_magnitude(m, z, lam))
            if z:
                rhs -= z * float(charlier(m, z - 1, lam))
                scale += z * charlier_magnitude(m, z - 1, lam)
            lowering = max(lowering, abs(lhs - rhs) / max(1.0, scale))
    residual = max(raising, lowering)
    params = {'lambda': lam, 'm_max': m_max, 'z_max': z_max}
    return CheckRecord('charlier-raising-lowering', params, residual, tolerance, residual <= tolerance,
                       details={'raising': raising, 'lowering': lowering})
