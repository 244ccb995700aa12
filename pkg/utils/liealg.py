"""
Matrix realizations of sl(n+1) acting on single-site SEP states.

An sl element is a real trace-zero ``(n+1) x (n+1)`` array; ``e(k, l, n)`` is
the matrix unit and ``h(l, n) = e_ll - I/(n+1)``. On functions of
``xi in Omega_{2j}`` a matrix ``A`` acts through

    E(A) f(xi) = sum_{k != l} A_kl xi_l f(xi - e_l + e_k) + sum_k A_kk xi_k f(xi)

(the diagonal action being multiplication by ``xi_k``). Every representation
below is ``E`` of a conjugated matrix:

    rho_p(X)   = E(P^{1/2} X P^{-1/2})
    sigma_p(X) = E(R^{-1} P_hat^{1/2} X P_hat^{-1/2} R)

``E`` is the transpose of the polynomial action ``z_k d/dz_l``, so it reverses
brackets: ``E([A, B]) = [E(B), E(A)]``.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from models import CheckRecord
from utils import TOL_EXACT, TOL_FLOAT, max_abs
from utils.errors import OperatorError, RouteMismatchError, UnitarityError
from utils.generators import SparseOperator, sep_generator
from utils.krawtchouk import Kappa, krawtchouk_table, multinomial_coefficient, r_matrix, weight_vector
from utils.statespace import ConfigSpace, enumerate_sep, local_states, path_graph

logger = logging.getLogger(__name__)

SlElement = np.ndarray


def e(k: int, l: int, n: int) -> SlElement:
    unit = np.zeros((n + 1, n + 1))
    unit[k, l] = 1.0
    return unit


def h(l: int, n: int) -> SlElement:
    return e(l, l, n) - np.eye(n + 1) / (n + 1)


def h_star(l: int, n: int) -> SlElement:
    """``h_l + sum_k h_k``, which equals ``e_ll - e_00``."""
    return h(l, n) + sum(h(k, n) for k in range(1, n + 1))


def star(X: SlElement) -> SlElement:
    return np.asarray(X).T.copy()


def bracket(X: SlElement, Y: SlElement) -> SlElement:
    return X @ Y - Y @ X


def basis(n: int) -> Dict[str, SlElement]:
    """Spanning set: ``e_kl`` for ``k != l`` and ``h_l`` for ``1 <= l <= n``."""
    elements = {f"e{k}{l}": e(k, l, n) for k in range(n + 1) for l in range(n + 1) if k != l}
    elements.update({f"h{l}": h(l, n) for l in range(1, n + 1)})
    return elements


def random_element(n: int, rng: np.random.Generator) -> SlElement:
    X = rng.standard_normal((n + 1, n + 1))
    return X - np.trace(X) / (n + 1) * np.eye(n + 1)


@lru_cache(maxsize=64)
def site_space(n: int, two_j: int) -> ConfigSpace:
    return enumerate_sep(path_graph(1), n, two_j)


@lru_cache(maxsize=64)
def _unit_actions(n: int, two_j: int) -> Tuple[Tuple[sp.csr_matrix, ...], ...]:
    """``E(e_kl)`` for every matrix unit, indexed ``[k][l]``."""
    omega = local_states(n, two_j)
    index = {state: i for i, state in enumerate(omega)}
    size = len(omega)
    units = []
    for k in range(n + 1):
        row = []
        for l in range(n + 1):
            rows, cols, vals = [], [], []
            for i, xi in enumerate(omega):
                if xi[l] == 0:
                    continue
                if k == l:
                    rows.append(i)
                    cols.append(i)
                else:
                    shifted = list(xi)
                    shifted[l] -= 1
                    shifted[k] += 1
                    rows.append(i)
                    cols.append(index[tuple(shifted)])
                vals.append(float(xi[l]))
            row.append(sp.csr_matrix((vals, (rows, cols)), shape=(size, size)))
        units.append(tuple(row))
    return tuple(units)


def plain_action(A: np.ndarray, n: int, two_j: int) -> sp.csr_matrix:
    A = np.asarray(A, dtype=float)
    if A.shape != (n + 1, n + 1):
        raise OperatorError(f"expected a {n + 1}x{n + 1} matrix, got shape {A.shape}")
    units = _unit_actions(n, two_j)
    size = units[0][0].shape[0]
    out = sp.csr_matrix((size, size))
    for k, l in zip(*np.nonzero(A)):
        out = out + A[k, l] * units[k][l]
    return out.tocsr()


def _half_powers(p) -> Tuple[np.ndarray, np.ndarray]:
    root = np.sqrt(np.asarray(p, dtype=float))
    if np.any(root <= 0):
        raise OperatorError(f"probability vector must be strictly positive, got {p}")
    return np.diag(root), np.diag(1.0 / root)


def _operator(matrix: sp.csr_matrix, n: int, two_j: int, label: str) -> SparseOperator:
    space = site_space(n, two_j)
    return SparseOperator(matrix=matrix.tocsr(), space_row=space, space_col=space, label=label)


def rho_p_matrix(X: SlElement, p: Sequence, n: int, two_j: int) -> SparseOperator:
    root, inv_root = _half_powers(p)
    if len(p) != n + 1:
        raise OperatorError(f"p has {len(p)} entries, expected {n + 1}")
    return _operator(plain_action(root @ X @ inv_root, n, two_j), n, two_j, 'rho')


def ad_R(X: SlElement, kappa: Kappa) -> SlElement:
    """``R^{-1} X R``; independent of the free scalar in ``R``."""
    rq = r_matrix(kappa)
    return rq.Q @ X @ rq.R


def ad_R_weighted(X: SlElement, kappa: Kappa) -> SlElement:
    """``Ad`` of ``P_hat^{-1/2} R P_hat^{1/2}``, i.e. ``Ad_R`` in the orthonormal frame of ``l^2(w_p_hat)``."""
    root, inv_root = _half_powers(kappa.p_hat)
    rq = r_matrix(kappa)
    return (inv_root @ rq.Q @ root) @ X @ (inv_root @ rq.R @ root)


def sigma_p_matrix(X: SlElement, kappa: Kappa, two_j: int, tolerance: float = TOL_EXACT) -> SparseOperator:
    """``sigma_p(X)`` from the explicit entry formula, cross-checked against ``rho_p_hat o Ad``.

    Raises ``RouteMismatchError`` if the two constructions disagree.
    """
    n = kappa.n
    root, inv_root = _half_powers(kappa.p_hat)
    rq = r_matrix(kappa)
    direct = plain_action(rq.Q @ root @ X @ inv_root @ rq.R, n, two_j)
    composed = rho_p_matrix(ad_R_weighted(X, kappa), kappa.p_hat, n, two_j).matrix
    gap = max_abs(direct - composed)
    if gap > tolerance * max(1.0, max_abs(direct)):
        raise RouteMismatchError(f"sigma_p routes disagree by {gap:.3e}", gap)
    return _operator(direct, n, two_j, 'sigma')


def sigma_literal_matrix(X: SlElement, kappa: Kappa, two_j: int) -> SparseOperator:
    """``rho_p_hat(Ad_R(X))`` with ``Ad_R`` taken in the unweighted basis."""
    return rho_p_matrix(ad_R(X, kappa), kappa.p_hat, kappa.n, two_j)


def antiautomorphism(X: SlElement, p_hat: Sequence) -> SlElement:
    """``P_hat X^T P_hat^{-1}``."""
    P_hat = np.diag(np.asarray(p_hat, dtype=float))
    return P_hat @ np.asarray(X).T @ np.linalg.inv(P_hat)


@dataclass(frozen=True)
class TensorElement:
    """Formal sum ``sum coef * A (x) B``; as an element of U(sl) the same terms read ``sum coef * A B``."""

    terms: Tuple[Tuple[float, np.ndarray, np.ndarray], ...]

    def tensor(self) -> np.ndarray:
        return sum(c * np.einsum('ab,cd->abcd', A, B) for c, A, B in self.terms)

    def star(self) -> 'TensorElement':
        """Componentwise star on a tensor product."""
        return TensorElement(tuple((c, star(A), star(B)) for c, A, B in self.terms))

    def star_product(self) -> 'TensorElement':
        """Star in U(sl), which reverses each product."""
        return TensorElement(tuple((c, star(B), star(A)) for c, A, B in self.terms))

    def mapped(self, f: Callable[[np.ndarray], np.ndarray]) -> 'TensorElement':
        return TensorElement(tuple((c, f(A), f(B)) for c, A, B in self.terms))

    def symmetrized(self) -> 'TensorElement':
        """``sum coef (A (x) B + B (x) A)``: the coproduct part of a quadratic element."""
        return TensorElement(tuple(t for c, A, B in self.terms for t in ((c, A, B), (c, B, A))))


def casimir_omega(n: int) -> TensorElement:
    """``Omega = sum_{k != l} e_kl e_lk + sum_l h_l h_l^*``."""
    terms = [(1.0, e(k, l, n), e(l, k, n)) for k in range(n + 1) for l in range(n + 1) if k != l]
    terms += [(1.0, h(l, n), h_star(l, n)) for l in range(1, n + 1)]
    return TensorElement(tuple(terms))


def casimir_Y(n: int) -> TensorElement:
    """``Y = 2 sum_{k<l} (e_lk (x) e_kl + e_kl (x) e_lk) + sum_l (h_l (x) h_l^* + h_l^* (x) h_l)``."""
    if n < 1:
        raise OperatorError(f"n must be at least 1, got {n}")
    terms = []
    for k in range(n + 1):
        for l in range(k + 1, n + 1):
            terms.append((2.0, e(l, k, n), e(k, l, n)))
            terms.append((2.0, e(k, l, n), e(l, k, n)))
    for l in range(1, n + 1):
        terms.append((1.0, h(l, n), h_star(l, n)))
        terms.append((1.0, h_star(l, n), h(l, n)))
    return TensorElement(tuple(terms))


def two_site_operator(Y: TensorElement, rep: Callable[[np.ndarray], sp.spmatrix]) -> sp.csr_matrix:
    """``(rep (x) rep)(Y)`` on the two-site product space (site 1 most significant)."""
    total = None
    for c, A, B in Y.terms:
        term = c * sp.kron(rep(A), rep(B))
        total = term if total is None else total + term
    return total.tocsr()


def _params(kappa: Kappa, two_j: int) -> dict:
    return {'n': kappa.n, 'two_j': two_j, **kappa.parameters()}


def check_omega_star(n: int) -> CheckRecord:
    omega = casimir_omega(n)
    residual = float(np.max(np.abs(omega.star_product().tensor() - omega.tensor())))
    y = casimir_Y(n)
    residual = max(residual, float(np.max(np.abs(y.star().tensor() - y.tensor()))))
    residual = max(residual, float(np.max(np.abs(omega.symmetrized().tensor() - y.tensor()))))
    return CheckRecord('casimir-star', {'n': n}, residual, TOL_EXACT, residual <= TOL_EXACT)


def check_casimir_invariance(kappa: Kappa, tolerance: float = TOL_FLOAT) -> CheckRecord:
    """``Ad_R(Omega) = Omega`` and ``(Ad_R (x) Ad_R)(Y) = Y``."""
    conj = lambda X: ad_R(X, kappa)  # noqa: E731
    omega, y = casimir_omega(kappa.n), casimir_Y(kappa.n)
    omega_gap = float(np.max(np.abs(omega.mapped(conj).tensor() - omega.tensor())))
    y_gap = float(np.max(np.abs(y.mapped(conj).tensor() - y.tensor())))
    residual = max(omega_gap, y_gap)
    return CheckRecord('casimir-ad-invariance', {'n': kappa.n, **kappa.parameters()}, residual, tolerance,
                       residual <= tolerance, details={'omega': omega_gap, 'Y': y_gap})


def check_ad_r_bracket(kappa: Kappa, rng: np.random.Generator, trials: int = 10,
                       tolerance: float = TOL_FLOAT) -> CheckRecord:
    residual = 0.0
    for _ in range(trials):
        X, Y = random_element(kappa.n, rng), random_element(kappa.n, rng)
        lhs = ad_R(bracket(X, Y), kappa)
        rhs = bracket(ad_R(X, kappa), ad_R(Y, kappa))
        residual = max(residual, float(np.max(np.abs(lhs - rhs))) / max(1.0, float(np.max(np.abs(lhs)))))
        residual = max(residual, abs(float(np.trace(ad_R(X, kappa)))))
    return CheckRecord('ad-r-bracket', {'n': kappa.n, 'trials': trials, **kappa.parameters()}, residual,
                       tolerance, residual <= tolerance)


def check_star_not_preserved(kappa: Kappa, threshold: float = 1e-8) -> CheckRecord:
    """Positive test: some basis ``X`` has ``Ad_R(X^*) != Ad_R(X)^*``.

    Passes when the largest gap over the basis exceeds ``threshold``.
    """
    gap = max(float(np.max(np.abs(ad_R(star(X), kappa) - star(ad_R(X, kappa))))) for X in basis(kappa.n).values())
    return CheckRecord('ad-r-breaks-star', {'n': kappa.n, **kappa.parameters()}, gap, threshold, gap > threshold)


def _adjoint_gap(M: np.ndarray, M_star: np.ndarray, w: np.ndarray) -> float:
    """Max entry of ``M_star - W^{-1} M^T W`` relative to the operator scale."""
    expected = (M.T * w[None, :]) / w[:, None]
    return float(np.max(np.abs(M_star - expected))) / max(1.0, float(np.max(np.abs(M))))


def check_star_representation(kappa: Kappa, two_j: int, tolerance: float = TOL_EXACT) -> CheckRecord:
    """``M(X^*) = W^{-1} M(X)^T W`` on ``l^2(w_p)`` for both ``rho_p`` and ``sigma_p``."""
    n = kappa.n
    w = weight_vector(kappa.p, n, two_j)
    rho_gap = sigma_gap = 0.0
    for X in basis(n).values():
        rho_gap = max(rho_gap, _adjoint_gap(rho_p_matrix(X, kappa.p, n, two_j).toarray(),
                                            rho_p_matrix(star(X), kappa.p, n, two_j).toarray(), w))
        sigma_gap = max(sigma_gap, _adjoint_gap(sigma_p_matrix(X, kappa, two_j).toarray(),
                                                sigma_p_matrix(star(X), kappa, two_j).toarray(), w))
    residual = max(rho_gap, sigma_gap)
    return CheckRecord('star-representation', _params(kappa, two_j), residual, tolerance, residual <= tolerance,
                       details={'rho': rho_gap, 'sigma': sigma_gap})


def check_homomorphism(p: Sequence, n: int, two_j: int, rng: np.random.Generator, trials: int = 10,
                       tolerance: float = TOL_FLOAT) -> List[CheckRecord]:
    """Bracket behaviour of ``rho_p`` on random pairs.

    The realized identity ``rho([X, Y]) = [rho(Y), rho(X)]`` is the blocking
    check; the unreversed form is reported alongside for information.
    """
    reversed_gap = literal_gap = 0.0
    for _ in range(trials):
        X, Y = random_element(n, rng), random_element(n, rng)
        rx = rho_p_matrix(X, p, n, two_j).toarray()
        ry = rho_p_matrix(Y, p, n, two_j).toarray()
        rxy = rho_p_matrix(bracket(X, Y), p, n, two_j).toarray()
        scale = max(1.0, float(np.max(np.abs(rxy))))
        reversed_gap = max(reversed_gap, float(np.max(np.abs(rxy - (ry @ rx - rx @ ry)))) / scale)
        literal_gap = max(literal_gap, float(np.max(np.abs(rxy - (rx @ ry - ry @ rx)))) / scale)
    params = {'n': n, 'two_j': two_j, 'trials': trials}
    return [
        CheckRecord('rho-bracket-reversed', params, reversed_gap, tolerance, reversed_gap <= tolerance),
        CheckRecord('rho-bracket-literal', params, literal_gap, tolerance, literal_gap <= tolerance,
                    informational=True),
    ]


def check_sigma_routes(kappa: Kappa, two_j: int, tolerance: float = TOL_EXACT) -> List[CheckRecord]:
    """Entry formula vs weighted-frame composition (blocking) and vs the literal composition (info)."""
    n = kappa.n
    root, inv_root = _half_powers(kappa.p_hat)
    rq = r_matrix(kappa)
    routes_gap = literal_gap = 0.0
    for X in basis(n).values():
        direct = plain_action(rq.Q @ root @ X @ inv_root @ rq.R, n, two_j)
        scale = max(1.0, max_abs(direct))
        composed = rho_p_matrix(ad_R_weighted(X, kappa), kappa.p_hat, n, two_j).matrix
        routes_gap = max(routes_gap, max_abs(direct - composed) / scale)
        literal_gap = max(literal_gap, max_abs(direct - sigma_literal_matrix(X, kappa, two_j).matrix) / scale)
    params = _params(kappa, two_j)
    return [
        CheckRecord('sigma-routes', params, routes_gap, tolerance, routes_gap <= tolerance),
        CheckRecord('sigma-literal-composition', params, literal_gap, tolerance, literal_gap <= tolerance,
                    informational=True),
    ]


def check_antiautomorphism_adjoint(kappa: Kappa, two_j: int, tolerance: float = TOL_FLOAT) -> CheckRecord:
    """The polynomial action is adjoint to its image under ``P_hat X^T P_hat^{-1}``.

    On monomials the bilinear form is ``<z^xi, z^eta> = delta * xi! / p_hat^xi``
    and the polynomial action of ``X`` is ``E(X)^T``.
    """
    n = kappa.n
    omega = local_states(n, two_j)
    p_hat = kappa.p_hat_array
    gram = np.array([float(multinomial_coefficient(xi)) ** -1 * np.prod(p_hat ** -np.array(xi))
                     for xi in omega])
    gram *= float(np.prod(np.arange(1, two_j + 1)))
    residual = 0.0
    for X in basis(n).values():
        lhs = plain_action(X, n, two_j).toarray() * gram[None, :]
        rhs = gram[:, None] * plain_action(antiautomorphism(X, kappa.p_hat), n, two_j).toarray().T
        residual = max(residual, float(np.max(np.abs(lhs - rhs))) / max(1.0, float(np.max(np.abs(lhs)))))
    return CheckRecord('antiautomorphism-adjoint', _params(kappa, two_j), residual, tolerance,
                       residual <= tolerance)


def expected_c(n: int, two_j: int) -> float:
    return two_j ** 2 * n / (n + 1)


def check_casimir_generator(kappa: Kappa, two_j: int, edge: Tuple[int, int] = (1, 2),
              tolerance: float = TOL_FLOAT) -> Tuple[float, CheckRecord]:
    """Measure ``c`` in ``L_xy = 1/2 (rep (x) rep)(Y) - c`` for ``rep = rho_p_hat`` and ``rep = sigma_p``.

    Returns the measured constant and a record whose residual is the largest
    off-``c I`` entry over both routes; the route-to-route spread of ``c`` and
    its distance to ``(2j)^2 n / (n+1)`` are folded into the residual.
    """
    n = kappa.n
    pair = enumerate_sep(path_graph(2), n, two_j)
    generator = sep_generator(pair).matrix
    Y = casimir_Y(n)
    routes = {
        'rho': lambda X: rho_p_matrix(X, kappa.p_hat, n, two_j).matrix,
        'sigma': lambda X: sigma_p_matrix(X, kappa, two_j).matrix,
    }
    constants, residuals = {}, {}
    for name, rep in routes.items():
        diff = (0.5 * two_site_operator(Y, rep) - generator).toarray()
        c = float(np.mean(np.diag(diff)))
        constants[name] = c
        residuals[name] = float(np.max(np.abs(diff - c * np.eye(diff.shape[0]))))
    c = constants['rho']
    spread = abs(constants['rho'] - constants['sigma'])
    closed_form_gap = abs(c - expected_c(n, two_j))
    residual = max(max(residuals.values()), spread, closed_form_gap)
    logger.debug("casimir generator n=%d two_j=%d c=%.12g residuals=%s", n, two_j, c, residuals)
    params = {**_params(kappa, two_j), 'edge': f"{edge[0]}-{edge[1]}"}
    record = CheckRecord('casimir-generator', params, residual, tolerance, residual <= tolerance,
                         details={'c': c, 'c_sigma': constants['sigma'], 'closed_form': expected_c(n, two_j),
                                  **{f"residual_{k}": v for k, v in residuals.items()}})
    return c, record


def intertwiner_sep(kappa: Kappa, two_j: int, tolerance: float = TOL_FLOAT) -> SparseOperator:
    """``Lambda[eta, xi] = p_0^{-j} w_p_hat(xi) K(xi, eta)`` from ``l^2(w_p_hat)`` to ``l^2(w_p)``."""
    K = krawtchouk_table(kappa, two_j)
    w_hat = weight_vector(kappa.p_hat, kappa.n, two_j)
    lam = float(kappa.p[0]) ** (-two_j / 2) * (K.T * w_hat[None, :])
    op = _operator(sp.csr_matrix(lam), kappa.n, two_j, 'lambda-sep')
    defect = unitarity_defect(op, kappa, two_j)
    if defect > tolerance:
        raise UnitarityError(f"intertwiner fails unitarity by {defect:.3e}", defect)
    return op


def unitarity_defect(op: SparseOperator, kappa: Kappa, two_j: int) -> float:
    """Max entry of ``W_hat^{-1/2} Lambda^T W Lambda W_hat^{-1/2} - I``."""
    w = weight_vector(kappa.p, kappa.n, two_j)
    w_hat = weight_vector(kappa.p_hat, kappa.n, two_j)
    lam = op.toarray()
    gram = lam.T @ (w[:, None] * lam)
    scaled = gram / np.sqrt(np.outer(w_hat, w_hat))
    return float(np.max(np.abs(scaled - np.eye(len(w_hat)))))


def check_intertwiner(kappa: Kappa, two_j: int, tolerance: float = TOL_FLOAT) -> List[CheckRecord]:
    """Unitarity of ``Lambda``, ``Lambda rho_p_hat(X) = sigma_p(X) Lambda`` and the kernel identity
    ``rho_p_hat(X^*) K = K sigma_p(X)^T`` over the spanning set."""
    n = kappa.n
    K = krawtchouk_table(kappa, two_j)
    w_hat = weight_vector(kappa.p_hat, n, two_j)
    lam = float(kappa.p[0]) ** (-two_j / 2) * (K.T * w_hat[None, :])
    op = _operator(sp.csr_matrix(lam), n, two_j, 'lambda-sep')
    defect = unitarity_defect(op, kappa, two_j)
    intertwine = kernel = 0.0
    for X in basis(n).values():
        rho = rho_p_matrix(X, kappa.p_hat, n, two_j).toarray()
        sigma = sigma_p_matrix(X, kappa, two_j).toarray()
        scale = max(1.0, float(np.max(np.abs(lam))) * max(float(np.max(np.abs(rho))), float(np.max(np.abs(sigma)))))
        intertwine = max(intertwine, float(np.max(np.abs(lam @ rho - sigma @ lam))) / scale)
        rho_star = rho_p_matrix(star(X), kappa.p_hat, n, two_j).toarray()
        kscale = max(1.0, float(np.max(np.abs(K))) * float(np.max(np.abs(sigma))))
        kernel = max(kernel, float(np.max(np.abs(rho_star @ K - K @ sigma.T))) / kscale)
    params = _params(kappa, two_j)
    return [
        CheckRecord('intertwiner-unitarity', params, defect, tolerance, defect <= tolerance),
        CheckRecord('intertwiner-sep', params, intertwine, tolerance, intertwine <= tolerance),
        CheckRecord('kernel-intertwining', params, kernel, tolerance, kernel <= tolerance),
    ]
