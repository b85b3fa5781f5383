"""Input validation helpers.

Everything here raises :class:`InvalidInputError` so the CLI can map bad
input to exit code 2 uniformly.
"""

import numpy as np

from .exceptions import InvalidInputError


def as_matrix(x, name, allow_empty=False, n_features=None):
    """Coerce to a C-contiguous float64 matrix of shape (n, d).

    1-d input is treated as n points in one dimension.
    """
    a = np.asarray(x, dtype=np.float64)
    if a.ndim == 1:
        a = a.reshape(-1, 1)
    if a.ndim != 2:
        raise InvalidInputError(f"{name}: expected a 2-d array, got ndim={a.ndim}")
    if a.shape[0] == 0 and not allow_empty:
        raise InvalidInputError(f"{name}: must contain at least one row")
    if a.size and not np.isfinite(a).all():
        raise InvalidInputError(f"{name}: contains non-finite values")
    if n_features is not None and a.shape[1] != n_features:
        raise InvalidInputError(
            f"{name}: expected {n_features} columns, got {a.shape[1]}"
        )
    return np.ascontiguousarray(a)


def as_scores(x, name, allow_empty=False, allow_inf=False):
    """Coerce to a 1-d float64 score vector."""
    a = np.asarray(x, dtype=np.float64).reshape(-1)
    if a.size == 0 and not allow_empty:
        raise InvalidInputError(f"{name}: must contain at least one score")
    if a.size:
        bad = np.isnan(a).any() if allow_inf else not np.isfinite(a).all()
        if bad:
            raise InvalidInputError(f"{name}: contains non-finite values")
    return a


def as_pvalues(x, name="pvalues"):
    a = np.asarray(x, dtype=np.float64).reshape(-1)
    if a.size == 0:
        raise InvalidInputError(f"{name}: empty p-value vector")
    if not np.isfinite(a).all() or (a < 0).any() or (a > 1).any():
        raise InvalidInputError(f"{name}: entries must lie in [0, 1]")
    return a


def check_level(alpha, name="alpha", allow_one=False):
    alpha = float(alpha)
    hi_ok = alpha <= 1.0 if allow_one else alpha < 1.0
    if not (0.0 < alpha and hi_ok):
        hi = "1]" if allow_one else "1)"
        raise InvalidInputError(f"{name}: must lie in (0, {hi}, got {alpha}")
    return alpha


def check_open_unit(value, name):
    value = float(value)
    if not (0.0 < value < 1.0):
        raise InvalidInputError(f"{name}: must lie in (0, 1), got {value}")
    return value


def check_int_range(value, name, low, high=None):
    value = int(value)
    if value < low or (high is not None and value > high):
        hi = f", {high}]" if high is not None else ", inf)"
        raise InvalidInputError(f"{name}: must lie in [{low}{hi}, got {value}")
    return value
