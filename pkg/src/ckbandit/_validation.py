"""Input validation helpers in the style of ``sklearn.utils.validation``."""

import numbers

import numpy as np

from .exceptions import InvalidInputError


def check_points(X, name="X", allow_empty=False):
    """Return ``X`` as a 2-D float array of shape (n_points, n_features).

    A 1-D input is read as a list of scalar points.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 0:
        X = X.reshape(1, 1)
    elif X.ndim == 1:
        X = X.reshape(-1, 1)
    elif X.ndim != 2:
        raise InvalidInputError(f"{name} must be 1-D or 2-D, got shape {X.shape}")
    if X.shape[0] == 0 and not allow_empty:
        raise InvalidInputError(f"{name} must contain at least one point")
    if not np.all(np.isfinite(X)):
        raise InvalidInputError(f"{name} contains non-finite values")
    return X


def check_point(x, n_features=None, name="x"):
    """Return a single point as a 1-D float array."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1:
        raise InvalidInputError(f"{name} must be a vector, got shape {x.shape}")
    if n_features is not None and x.shape[0] != n_features:
        raise InvalidInputError(
            f"{name} has dimension {x.shape[0]}, expected {n_features}"
        )
    return x


def check_vector(v, name="values", allow_empty=False):
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        v = v.ravel()
    if v.size == 0 and not allow_empty:
        raise InvalidInputError(f"{name} must be non-empty")
    return v


def check_positive(value, name):
    if not isinstance(value, numbers.Real) or not np.isfinite(value) or value <= 0:
        raise InvalidInputError(f"{name} must be a positive real, got {value!r}")
    return float(value)


def check_non_negative(value, name):
    if not isinstance(value, numbers.Real) or not np.isfinite(value) or value < 0:
        raise InvalidInputError(f"{name} must be a non-negative real, got {value!r}")
    return float(value)


def check_generator(seed):
    """Turn ``None``, an int, a SeedSequence or a Generator into a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
