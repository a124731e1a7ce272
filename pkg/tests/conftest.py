import numpy as np
import pytest

from ckbandit import KernelSpec


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def se():
    return KernelSpec("se", lengthscale=0.2)


def dense_posterior(spec, X, y, lam, Q):
    """Posterior mean/std at Q by explicit inversion of K + lam I."""
    X = np.asarray(X, dtype=float).reshape(len(X), -1)
    Q = np.asarray(Q, dtype=float).reshape(len(Q), -1)
    if len(X) == 0:
        return np.zeros(len(Q)), np.sqrt(spec.diag(Q))
    K = spec(X, X)
    inv = np.linalg.inv(K + lam * np.eye(len(X)))
    kq = spec(X, Q)
    mean = kq.T @ inv @ np.asarray(y, dtype=float)
    var = spec.diag(Q) - np.einsum("ij,ik,kj->j", kq, inv, kq)
    return mean, np.sqrt(np.maximum(var, 0.0))
