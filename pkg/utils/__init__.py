import logging
import os
from fractions import Fraction

import numpy as np
import scipy.sparse as sp

LOG_FORMAT = '%(asctime)s [%(name)s] %(levelname)s %(message)s'

# Tolerance ladder: exact-backed, floating, and large-capacity floating.
TOL_EXACT = 1e-12
TOL_FLOAT = 1e-10
TOL_LARGE = 1e-8

DEFAULT_MAX_STATES = 10 ** 7
DENSE_LIMIT = 5000


def configure_logging(level=logging.INFO):
    logging.basicConfig(format=LOG_FORMAT, datefmt='%Y-%m-%d %H:%M:%S', level=level)


def max_states():
    """State-space cap, overridable through ``DUALITY_LAB_MAX_STATES``."""
    value = os.getenv('DUALITY_LAB_MAX_STATES')
    return int(value) if value else DEFAULT_MAX_STATES


def default_workers():
    value = os.getenv('DUALITY_LAB_WORKERS')
    try:
        return max(1, int(value)) if value else 1
    except ValueError:
        return 1


def max_abs(matrix):
    """Max-entry norm of a dense array or scipy sparse matrix."""
    if sp.issparse(matrix):
        return float(abs(matrix).max()) if matrix.nnz else 0.0
    matrix = np.asarray(matrix)
    return float(np.max(np.abs(matrix))) if matrix.size else 0.0


def parse_number(text):
    """Parse ``"1/3"``, ``"2"`` or ``"0.25"``; rationals stay exact."""
    text = str(text).strip()
    if '/' in text or text.lstrip('-').isdigit():
        return Fraction(text)
    return float(text)


def format_number(value):
    """Render an exact or floating number the way reports print it."""
    if isinstance(value, Fraction):
        return str(value.numerator) if value.denominator == 1 else f"{value.numerator}/{value.denominator}"
    return repr(float(value))


def format_residual(value):
    try:
        value = float(value)
    except (TypeError, ValueError):
        return "n/a"
    return "0" if value == 0 else f"{value:.3e}"


def format_status(passed, informational=False):
    if informational:
        return "info"
    return "PASS" if passed else "FAIL"
