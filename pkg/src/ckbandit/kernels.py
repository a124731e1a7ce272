"""Positive-definite kernels, Gram matrices and information gain.

All kernels follow the unit-diagonal convention ``k(x, x) <= 1``. Stationary
families (squared exponential, Matern) have ``k(x, x) == 1`` exactly; the linear
kernel requires points inside the unit ball.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from ._validation import check_point, check_points, check_positive
from .exceptions import InvalidInputError

__all__ = [
    "KernelSpec",
    "Domain",
    "evaluate",
    "gram",
    "information_gain",
]

_FAMILIES = ("se", "matern", "linear", "precomputed")
_MATERN_NU = (0.5, 1.5, 2.5)
_ALIASES = {
    "se": "se",
    "squared_exponential": "se",
    "squaredexponential": "se",
    "rbf": "se",
    "matern": "matern",
    "linear": "linear",
    "precomputed": "precomputed",
}
_UNIT_BALL_TOL = 1e-9


@dataclass(frozen=True)
class KernelSpec:
    """A kernel family together with its hyperparameters.

    Parameters
    ----------
    family : {"se", "matern", "linear", "precomputed"}
        ``"precomputed"`` looks entries up in ``matrix``; points are then
        1-D integer indices into it. It is used by dataset environments whose
        kernel is an empirical covariance.
    lengthscale : float
        Used by ``"se"`` and ``"matern"``.
    smoothness : float
        Matern ``nu``; one of 0.5, 1.5, 2.5.
    matrix : ndarray, optional
        Symmetric PSD matrix with diagonal at most one (``"precomputed"`` only).
    """

    family: str = "se"
    lengthscale: float = 1.0
    smoothness: float = 2.5
    matrix: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        family = _ALIASES.get(str(self.family).lower().replace("-", "_"))
        if family is None:
            raise InvalidInputError(
                f"unknown kernel family {self.family!r}; expected one of {_FAMILIES}"
            )
        object.__setattr__(self, "family", family)
        if family in ("se", "matern"):
            check_positive(self.lengthscale, "lengthscale")
        if family == "matern" and float(self.smoothness) not in _MATERN_NU:
            raise InvalidInputError(
                f"Matern smoothness must be one of {_MATERN_NU}, got {self.smoothness}"
            )
        if family == "precomputed":
            if self.matrix is None:
                raise InvalidInputError("precomputed kernel requires a matrix")
            M = np.array(self.matrix, dtype=float)
            if M.ndim != 2 or M.shape[0] != M.shape[1]:
                raise InvalidInputError("precomputed kernel matrix must be square")
            M.setflags(write=False)
            object.__setattr__(self, "matrix", M)

    @classmethod
    def from_config(cls, family, params=None):
        """Build a spec from a family name and a hyperparameter mapping."""
        params = dict(params or {})
        kwargs = {}
        if "lengthscale" in params:
            kwargs["lengthscale"] = float(params.pop("lengthscale"))
        for key in ("smoothness", "nu"):
            if key in params:
                kwargs["smoothness"] = float(params.pop(key))
        if params:
            raise InvalidInputError(f"unknown kernel parameters: {sorted(params)}")
        return cls(family=family, **kwargs)

    @classmethod
    def from_matrix(cls, matrix):
        return cls(family="precomputed", matrix=matrix)

    def __call__(self, X, Y=None):
        """Cross-kernel matrix between the rows of ``X`` and ``Y``."""
        X = check_points(X, "X", allow_empty=True)
        Y = X if Y is None else check_points(Y, "Y", allow_empty=True)
        if X.shape[1] != Y.shape[1]:
            raise InvalidInputError(
                f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}"
            )
        if self.family == "se":
            d2 = cdist(X, Y, "sqeuclidean")
            return np.exp(-d2 / (2.0 * self.lengthscale**2))
        if self.family == "matern":
            r = cdist(X, Y, "euclidean") / self.lengthscale
            if self.smoothness == 0.5:
                return np.exp(-r)
            if self.smoothness == 1.5:
                s = np.sqrt(3.0) * r
                return (1.0 + s) * np.exp(-s)
            s = np.sqrt(5.0) * r
            return (1.0 + s + s**2 / 3.0) * np.exp(-s)
        if self.family == "linear":
            _check_unit_ball(X)
            if Y is not X:
                _check_unit_ball(Y)
            return X @ Y.T
        return self.matrix[np.ix_(self._indices(X), self._indices(Y))]

    def diag(self, X):
        """``k(x, x)`` for every row of ``X``."""
        X = check_points(X, "X", allow_empty=True)
        if self.family in ("se", "matern"):
            return np.ones(X.shape[0])
        if self.family == "linear":
            _check_unit_ball(X)
            return np.einsum("ij,ij->i", X, X)
        return np.diag(self.matrix)[self._indices(X)]

    def _indices(self, X):
        if X.shape[1] != 1:
            raise InvalidInputError("precomputed kernel expects 1-D index points")
        idx = np.rint(X[:, 0]).astype(int)
        n = self.matrix.shape[0]
        if np.any(np.abs(X[:, 0] - idx) > 1e-9) or np.any((idx < 0) | (idx >= n)):
            raise InvalidInputError(f"precomputed kernel indices must be integers in [0, {n})")
        return idx


def _check_unit_ball(X):
    sq = np.einsum("ij,ij->i", X, X)
    if np.any(sq > 1.0 + _UNIT_BALL_TOL):
        raise InvalidInputError(
            "linear kernel requires points normalized to the unit ball "
            f"(max squared norm {sq.max():.6g})"
        )


class Domain:
    """Finite ordered set of points in R^d; actions are row indices.

    Parameters
    ----------
    points : array-like of shape (n_points, n_features)
    """

    def __init__(self, points):
        self.points = check_points(points, "points")
        self.points.setflags(write=False)

    @classmethod
    def grid(cls, n_points, low=0.0, high=1.0):
        """Uniform 1-D grid of ``n_points`` on ``[low, high]``."""
        if n_points < 1:
            raise InvalidInputError("grid needs at least one point")
        return cls(np.linspace(low, high, int(n_points)).reshape(-1, 1))

    @classmethod
    def indices(cls, n_points):
        """Index domain ``0, 1, ..., n_points - 1`` for precomputed kernels."""
        return cls(np.arange(int(n_points), dtype=float).reshape(-1, 1))

    @property
    def n_points(self):
        return self.points.shape[0]

    @property
    def n_features(self):
        return self.points.shape[1]

    def __len__(self):
        return self.n_points

    def __getitem__(self, index):
        return self.points[index]

    def __repr__(self):
        return f"Domain(n_points={self.n_points}, n_features={self.n_features})"


def evaluate(spec, x, y):
    """Kernel value ``k(x, y)`` for two vectors of equal dimension."""
    x = check_point(x, name="x")
    y = check_point(y, name="y")
    if x.shape != y.shape:
        raise InvalidInputError(f"dimension mismatch: {x.shape[0]} vs {y.shape[0]}")
    return float(spec(x[None, :], y[None, :])[0, 0])


def gram(spec, points):
    """Symmetric Gram matrix ``[k(x_u, x_v)]`` of a non-empty point list."""
    X = check_points(points, "points")
    K = spec(X)
    return 0.5 * (K + K.T)


def information_gain(spec, points, lam):
    """``0.5 * log det(I + K_A / lam)`` for the given point set ``A``.

    This is the gain of one concrete set, not the maximum over all sets of
    the same size.
    """
    lam = check_positive(lam, "lambda")
    X = check_points(points, "points", allow_empty=True)
    if X.shape[0] == 0:
        return 0.0
    M = np.eye(X.shape[0]) + gram(spec, X) / lam
    L = np.linalg.cholesky(M)
    return float(np.sum(np.log(np.diag(L))))
