"""Incremental Gaussian-process posterior.

The regularized Gram matrix ``K_t + lam * I`` is kept as a lower Cholesky
factor that grows by one row per observation. When the model is anchored to a
finite domain it also maintains the whitened cross-covariances
``L^{-1} k_t(D)`` so that posterior moments over the whole domain cost
``O(t * n)`` per round instead of ``O(t^2 * n)``.
"""

import numpy as np
from scipy.linalg import solve_triangular
from sklearn.base import BaseEstimator, RegressorMixin

from ._validation import check_generator, check_point, check_points, check_positive
from .exceptions import InvalidInputError, NumericalDegeneracyError
from .kernels import KernelSpec

__all__ = ["GPPosterior", "JITTER", "VARIANCE_CLAMP_TOL"]

JITTER = 1e-8
VARIANCE_CLAMP_TOL = 1e-10


def _clamp_variance(var):
    var = np.asarray(var, dtype=float)
    worst = var.min() if var.size else 0.0
    if worst < -VARIANCE_CLAMP_TOL:
        raise NumericalDegeneracyError(
            f"posterior variance {worst:.3e} is below the clamp window", value=float(worst)
        )
    return np.maximum(var, 0.0)


class GPPosterior(BaseEstimator, RegressorMixin):
    """GP regression with a zero-mean prior and Gaussian likelihood ``N(0, noise)``.

    Parameters
    ----------
    kernel : KernelSpec, default=None
        Prior covariance. ``None`` means ``KernelSpec("se", lengthscale=1.0)``.
    noise : float, default=1.0
        Regularizer ``lam`` added to the Gram diagonal.
    domain : array-like of shape (n_points, n_features), default=None
        Optional finite query set whose posterior moments are cached and
        updated incrementally. Enables :meth:`predict_domain`.

    Attributes
    ----------
    X_train_ : ndarray of shape (n_observed, n_features)
    y_train_ : ndarray of shape (n_observed,)
    running_gain_ : float
        ``0.5 * log det(I + K_t / noise)`` of the observed sequence.
    """

    def __init__(self, kernel=None, noise=1.0, domain=None):
        self.kernel = kernel
        self.noise = noise
        self.domain = domain
        self._reset()

    # -- state -----------------------------------------------------------

    def _reset(self):
        self.kernel_ = self.kernel if self.kernel is not None else KernelSpec("se", 1.0)
        self.noise_ = check_positive(self.noise, "noise")
        if self.domain is not None:
            D = self.domain.points if hasattr(self.domain, "points") else self.domain
            self._D = check_points(D, "domain")
            self._kdd_diag = self.kernel_.diag(self._D)
            self._n_features = self._D.shape[1]
        else:
            self._D = None
            self._kdd_diag = None
            self._n_features = None
        self._Kdd = None
        self._t = 0
        self._cap = 0
        self._L = np.zeros((0, 0))
        self._X = np.zeros((0, self._n_features or 0))
        self._y = np.zeros(0)
        self._alpha = np.zeros(0)
        self._V = None
        self.running_gain_ = 0.0
        return self

    def _grow(self):
        cap = max(16, 2 * self._cap)
        L = np.zeros((cap, cap))
        L[: self._t, : self._t] = self._L[: self._t, : self._t]
        X = np.zeros((cap, self._n_features))
        X[: self._t] = self._X[: self._t]
        y = np.zeros(cap)
        y[: self._t] = self._y[: self._t]
        a = np.zeros(cap)
        a[: self._t] = self._alpha[: self._t]
        if self._D is not None:
            V = np.zeros((cap, self._D.shape[0]))
            if self._V is not None:
                V[: self._t] = self._V[: self._t]
            self._V = V
        self._L, self._X, self._y, self._alpha = L, X, y, a
        self._cap = cap

    @property
    def n_observed(self):
        return self._t

    @property
    def X_train_(self):
        return self._X[: self._t].copy()

    @property
    def y_train_(self):
        return self._y[: self._t].copy()

    @property
    def cholesky_(self):
        """Lower factor of ``K_t + noise * I``."""
        return self._L[: self._t, : self._t].copy()

    # -- updates ---------------------------------------------------------

    def observe(self, x, y, domain_index=None):
        """Append one observation with a rank-one extension of the factor.

        ``domain_index`` names the anchored domain point equal to ``x``; the
        new factor row is then read from the cache instead of solved for.
        Returns ``self``.
        """
        if domain_index is not None:
            if self._D is None:
                raise InvalidInputError("domain_index given but model has no domain")
            x = self._D[int(domain_index)]
        x = check_point(x, self._n_features)
        if self._n_features is None:
            self._n_features = x.shape[0]
            self._X = np.zeros((0, self._n_features))
        y = float(y)
        if not np.isfinite(y):
            raise InvalidInputError(f"target must be finite, got {y}")
        t = self._t
        if t == self._cap:
            self._grow()
        kxx = float(self.kernel_.diag(x[None, :])[0])
        if t and domain_index is not None:
            l = self._V[:t, int(domain_index)].copy()
            ll = float(l @ l)
        elif t:
            L = self._L[:t, :t]
            kx = self.kernel_(self._X[:t], x[None, :])[:, 0]
            l = solve_triangular(L, kx, lower=True, check_finite=False)
            ll = float(l @ l)
        else:
            l = np.zeros(0)
            ll = 0.0
        pivot_sq = kxx + self.noise_ - ll
        if not pivot_sq > 0.0:
            raise NumericalDegeneracyError(
                f"non-positive Cholesky pivot {pivot_sq:.3e} at observation {t + 1}",
                value=float(pivot_sq),
            )
        pivot = np.sqrt(pivot_sq)
        self._L[t, :t] = l
        self._L[t, t] = pivot
        self._X[t] = x
        self._y[t] = y
        self._alpha[t] = (y - l @ self._alpha[:t]) / pivot
        if self._D is not None:
            if self._Kdd is None:
                self._Kdd = self.kernel_(self._D)
            kxd = (
                self._Kdd[int(domain_index)]
                if domain_index is not None
                else self.kernel_(x[None, :], self._D)[0]
            )
            self._V[t] = (kxd - l @ self._V[:t]) / pivot
        # log det(K + lam I) grows by log(pivot^2); pivot^2 = sigma_prev^2 + lam
        self.running_gain_ += 0.5 * np.log(pivot_sq / self.noise_)
        self._t = t + 1
        return self

    def partial_fit(self, X, y):
        X = check_points(X, "X")
        y = np.atleast_1d(np.asarray(y, dtype=float))
        if X.shape[0] != y.shape[0]:
            raise InvalidInputError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
        for xi, yi in zip(X, y):
            self.observe(xi, yi)
        return self

    def fit(self, X, y):
        """Discard previous observations and condition on ``(X, y)``."""
        self._reset()
        return self.partial_fit(X, y)

    # -- queries ---------------------------------------------------------

    def _whiten(self, X):
        t = self._t
        Kx = self.kernel_(self._X[:t], X)
        return solve_triangular(self._L[:t, :t], Kx, lower=True, check_finite=False)

    def predict(self, X, return_std=False):
        """Posterior mean (and optionally std) at the rows of ``X``."""
        X = check_points(X, "X")
        if self._n_features is not None and X.shape[1] != self._n_features:
            raise InvalidInputError(
                f"X has dimension {X.shape[1]}, expected {self._n_features}"
            )
        prior = self.kernel_.diag(X)
        if self._t == 0:
            mean = np.zeros(X.shape[0])
            var = prior
        else:
            W = self._whiten(X)
            mean = W.T @ self._alpha[: self._t]
            var = _clamp_variance(prior - np.einsum("ij,ij->j", W, W))
        if return_std:
            return mean, np.sqrt(var)
        return mean

    def posterior_mean(self, x):
        return float(self.predict(check_point(x, self._n_features)[None, :])[0])

    def posterior_std(self, x):
        _, std = self.predict(check_point(x, self._n_features)[None, :], return_std=True)
        return float(std[0])

    def predict_domain(self):
        """Posterior mean and std over the anchored domain, from the cache."""
        if self._D is None:
            raise InvalidInputError("model was built without a domain")
        t = self._t
        if t == 0:
            return np.zeros(self._D.shape[0]), np.sqrt(self._kdd_diag)
        V = self._V[:t]
        mean = V.T @ self._alpha[:t]
        var = _clamp_variance(self._kdd_diag - np.einsum("ij,ij->j", V, V))
        return mean, np.sqrt(var)

    def posterior_cov(self, X=None):
        """Posterior covariance matrix over ``X`` (the domain when ``None``)."""
        if X is None:
            if self._D is None:
                raise InvalidInputError("model was built without a domain")
            if self._Kdd is None:
                self._Kdd = self.kernel_(self._D)
            cov = self._Kdd.copy()
            if self._t:
                V = self._V[: self._t]
                cov -= V.T @ V
        else:
            X = check_points(X, "X")
            cov = self.kernel_(X)
            if self._t:
                W = self._whiten(X)
                cov -= W.T @ W
        return 0.5 * (cov + cov.T)

    def sample_y(self, X=None, scale=1.0, random_state=None):
        """One joint draw from ``N(mean, scale^2 * cov)`` over ``X``.

        Identical query points receive identical values. ``JITTER`` is added
        to the unscaled covariance diagonal before factorization.
        """
        scale = check_positive(scale, "scale")
        rng = check_generator(random_state)
        if X is None:
            if self._D is None:
                raise InvalidInputError("model was built without a domain")
            mean, _ = self.predict_domain()
            cov = self.posterior_cov()
            inverse = None
        else:
            X = check_points(X, "X")
            X, inverse = np.unique(X, axis=0, return_inverse=True)
            inverse = inverse.ravel()
            mean = self.predict(X)
            cov = self.posterior_cov(X)
        cov[np.diag_indices_from(cov)] += JITTER
        try:
            C = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise NumericalDegeneracyError(
                "posterior covariance is not positive definite after jitter",
                value=float(np.linalg.eigvalsh(cov).min()),
            ) from exc
        draw = mean + scale * (C @ rng.standard_normal(mean.shape[0]))
        return draw if inverse is None else draw[inverse]
