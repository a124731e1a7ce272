"""Virtual-queue (Lyapunov drift) variant of the constrained learner.

The multiplier is an uncapped queue ``Q(t)`` entering the acquisition as
``Q(t) / V`` and updated by ``Q(t+1) = [Q(t) + g_bar(x_t) + eps]_+``.
"""

import numpy as np

from ._validation import check_vector
from .exceptions import InvalidInputError
from .primal_dual import CKB, select_action

__all__ = ["LyapunovCKB", "queue_update", "lyap_select_action", "drift_check", "drift_bound"]

DRIFT_TOL = 1e-9


def queue_update(q, g_bar_at_action, epsilon=0.0):
    """``max(0, q + g_bar + epsilon)``."""
    if q < 0:
        raise InvalidInputError(f"queue length must be non-negative, got {q}")
    return float(max(0.0, q + g_bar_at_action + epsilon))


def lyap_select_action(f_bar, g_bar, q, V):
    """Index maximizing ``f_bar - (q / V) * g_bar``, lowest index on ties."""
    if V <= 0:
        raise InvalidInputError(f"V must be positive, got {V}")
    return select_action(f_bar, g_bar, q / V)


def drift_bound(q_before, f_bar, g_bar, action, pi, V, epsilon, G):
    """Right-hand side of the one-step drift inequality for comparison policy ``pi``.

    ``pi`` may be one distribution over the domain or a 2-D array holding one
    distribution per row, in which case one bound per row is returned.
    """
    f_bar = check_vector(f_bar, "f_bar")
    g_bar = check_vector(g_bar, "g_bar")
    pi = np.asarray(pi, dtype=float)
    if pi.ndim not in (1, 2) or pi.shape[-1] != f_bar.shape[0] or f_bar.shape != g_bar.shape:
        raise InvalidInputError("pi, f_bar and g_bar must have equal length")
    if np.any(pi < -1e-12) or np.any(np.abs(pi.sum(axis=-1) - 1.0) > 1e-9):
        raise InvalidInputError("pi must be a probability distribution over the domain")
    return (
        -V * (pi @ f_bar - f_bar[action])
        + 0.5 * (G + epsilon) ** 2
        + q_before * (pi @ g_bar + epsilon)
    )


def drift_check(q_before, q_after, f_bar, g_bar, action, pi, V, epsilon, G, tol=DRIFT_TOL):
    """Whether ``0.5 q_after^2 - 0.5 q_before^2`` stays below :func:`drift_bound`.

    With a 2-D ``pi`` the result is True only if every row passes.
    """
    drift = 0.5 * q_after**2 - 0.5 * q_before**2
    bound = drift_bound(q_before, f_bar, g_bar, action, pi, V, epsilon, G)
    return bool(np.all(drift <= bound + tol))


class LyapunovCKB(CKB):
    """Queue-based learner; shares parameters with :class:`~ckbandit.primal_dual.CKB`.

    ``rho`` only enters through the default ``V = G sqrt(T) / rho``; the
    queue itself is never capped. ``slack`` defaults to
    ``"zero-violation"``.
    """

    def __init__(
        self,
        horizon=1000,
        exploration="ucb",
        cost_exploration=None,
        rho=None,
        V=None,
        slack="zero-violation",
        noise=None,
        cost_noise=None,
        alpha=0.05,
        R=None,
        R_cost=None,
        B=None,
        G=None,
        keep_estimates=False,
    ):
        super().__init__(
            horizon=horizon,
            exploration=exploration,
            cost_exploration=cost_exploration,
            rho=rho,
            V=V,
            slack=slack,
            noise=noise,
            cost_noise=cost_noise,
            alpha=alpha,
            R=R,
            R_cost=R_cost,
            B=B,
            G=G,
            keep_estimates=keep_estimates,
        )

    def multiplier(self, state, config):
        return state.phi / config.V

    def update_multiplier(self, state, config, g_bar_at_action):
        return queue_update(state.phi, g_bar_at_action, config.epsilon)

    @property
    def unanalyzed(self):
        # the drift analysis covers UCB exploration only
        strategies = {self.exploration, self.cost_exploration or self.exploration}
        return strategies != {"ucb"}
