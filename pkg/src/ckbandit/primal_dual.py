"""Constrained kernelized bandits via primal-dual optimization.

Each round the learner builds optimistic (or randomized) estimates of the
reward and cost functions, truncates them to their known ranges, plays the
maximizer of ``f_bar - phi * g_bar`` and takes a projected dual step on
``phi`` using the truncated cost estimate at the chosen action.
"""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, clone

from ._validation import check_non_negative, check_positive, check_vector
from .exceptions import InvalidInputError
from .exploration import BetaSchedule, parse_strategy, truncate
from .gp import GPPosterior
from .metrics import RunRecord

__all__ = [
    "CKBConfig",
    "CKBState",
    "CKB",
    "GPUCB",
    "default_params",
    "select_action",
    "dual_update",
    "run_doubling",
    "DEFAULT_ALPHA",
]

DEFAULT_ALPHA = 0.05


def default_params(B, G, delta, T):
    """``rho = 4 B / delta`` and ``V = G sqrt(T) / rho``."""
    B = check_positive(B, "B")
    G = check_positive(G, "G")
    if not (isinstance(delta, (int, float)) and 0.0 < delta <= 1.0):
        raise InvalidInputError(f"delta must lie in (0, 1], got {delta!r}")
    if T < 1:
        raise InvalidInputError(f"T must be a positive integer, got {T!r}")
    rho = 4.0 * B / delta
    return rho, G * np.sqrt(T) / rho


def select_action(f_bar, g_bar, phi):
    """Index maximizing ``f_bar - phi * g_bar``; ties go to the lowest index."""
    f_bar = check_vector(f_bar, "f_bar")
    g_bar = check_vector(g_bar, "g_bar")
    if f_bar.shape != g_bar.shape:
        raise InvalidInputError("f_bar and g_bar must have equal length")
    if phi < 0:
        raise InvalidInputError(f"multiplier must be non-negative, got {phi}")
    return int(np.argmax(f_bar - phi * g_bar))


def dual_update(phi, g_bar_at_action, rho, V, epsilon=0.0):
    """``Proj_[0, rho](phi + (g_bar + epsilon) / V)``."""
    return float(min(max(phi + (g_bar_at_action + epsilon) / V, 0.0), rho))


@dataclass
class CKBConfig:
    """Resolved run parameters for one environment."""

    horizon: int
    rho: float
    V: float
    epsilon: float
    B: float
    G: float
    delta: float
    reward_strategy: object = None
    cost_strategy: object = None

    def __post_init__(self):
        if self.horizon < 0:
            raise InvalidInputError("horizon must be non-negative")
        check_positive(self.rho, "rho")
        check_positive(self.V, "V")
        check_non_negative(self.epsilon, "epsilon")
        if self.epsilon > self.delta / 2.0 + 1e-12:
            raise InvalidInputError(
                f"slack {self.epsilon:.6g} exceeds half the Slater margin {self.delta / 2:.6g}"
            )


@dataclass
class CKBState:
    """Mutable learner state; ``phi`` doubles as ``Q(t)`` in the queue variant."""

    phi: float
    reward_model: GPPosterior
    cost_model: GPPosterior
    round: int
    noise_rng: np.random.Generator
    reward_rng: np.random.Generator
    cost_rng: np.random.Generator


def _resolve_slack(slack, env, horizon):
    if slack is None or slack == "off":
        return 0.0
    if slack == "zero-violation":
        return env.default_slack(horizon)
    if isinstance(slack, str):
        try:
            return check_non_negative(float(slack), "slack")
        except ValueError:
            raise InvalidInputError(f"unknown slack mode {slack!r}") from None
    return check_non_negative(slack, "slack")


class CKB(BaseEstimator):
    """Primal-dual constrained kernelized bandit learner.

    Parameters
    ----------
    horizon : int
        Number of rounds ``T``.
    exploration : str, default="ucb"
        Reward exploration: ``"ucb"``, ``"ts"``, ``"rand-gauss"`` or
        ``"rand-uniform:<n>"``.
    cost_exploration : str, optional
        Cost exploration; defaults to ``exploration``. For ``"ucb"`` the
        cost estimate is the lower confidence bound.
    rho, V : float, optional
        Dual cap and inverse step size. Missing values follow
        ``rho = 4 B / delta`` and ``V = G sqrt(T) / rho``.
    slack : float or {"off", "zero-violation"}, default="off"
        Constant added to the cost in the dual update. ``"zero-violation"``
        uses ``min(delta / 2, 2 G / sqrt(T))``.
    noise, cost_noise : float, optional
        GP regularizers; default ``1 + 2 / T``.
    alpha : float, default=0.05
        Confidence level inside the width schedule.
    R, R_cost : float, optional
        Noise scales in the width schedule; default to the environment's.
    B, G : float, optional
        Truncation caps; default to the environment's realized sup norms.
    keep_estimates : bool, default=False
        Store the full truncated estimate vectors in each record.

    Attributes
    ----------
    records_ : list of RunRecord
    config_ : CKBConfig
    """

    def __init__(
        self,
        horizon=1000,
        exploration="ucb",
        cost_exploration=None,
        rho=None,
        V=None,
        slack="off",
        noise=None,
        cost_noise=None,
        alpha=DEFAULT_ALPHA,
        R=None,
        R_cost=None,
        B=None,
        G=None,
        keep_estimates=False,
    ):
        self.horizon = horizon
        self.exploration = exploration
        self.cost_exploration = cost_exploration
        self.rho = rho
        self.V = V
        self.slack = slack
        self.noise = noise
        self.cost_noise = cost_noise
        self.alpha = alpha
        self.R = R
        self.R_cost = R_cost
        self.B = B
        self.G = G
        self.keep_estimates = keep_estimates

    # -- setup -----------------------------------------------------------

    def _default_slack(self):
        return self.slack

    def resolve(self, env):
        """Fill in every unset parameter from ``env``; returns a :class:`CKBConfig`."""
        T = int(self.horizon)
        B = float(self.B if self.B is not None else env.B)
        G = float(self.G if self.G is not None else env.G)
        delta = env.slater_margin()
        rho_d, V_d = default_params(B, G, delta, max(T, 1))
        rho = float(self.rho) if self.rho is not None else rho_d
        if self.V is not None:
            V = float(self.V)
        elif self.rho is not None:
            V = G * np.sqrt(max(T, 1)) / rho
        else:
            V = V_d
        eps = _resolve_slack(self._default_slack(), env, max(T, 1))
        return CKBConfig(T, rho, V, eps, B, G, delta)

    def init_state(self, env, config, seed=None):
        T = max(config.horizon, 1)
        lam = float(self.noise) if self.noise is not None else 1.0 + 2.0 / T
        lam_c = float(self.cost_noise) if self.cost_noise is not None else lam
        reward_model = GPPosterior(env.f_kernel, lam, domain=env.domain)
        cost_model = GPPosterior(env.g_kernel, lam_c, domain=env.domain)
        R = float(self.R) if self.R is not None else env.R
        R_c = float(self.R_cost) if self.R_cost is not None else env.R_cost
        config.reward_strategy = parse_strategy(
            self.exploration, BetaSchedule(config.B, R, self.alpha, reward_model), "reward"
        )
        config.cost_strategy = parse_strategy(
            self.cost_exploration or self.exploration,
            BetaSchedule(config.G, R_c, self.alpha, cost_model),
            "cost",
        )
        root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        noise_ss, reward_ss, cost_ss = root.spawn(3)
        return CKBState(
            0.0,
            reward_model,
            cost_model,
            0,
            np.random.default_rng(noise_ss),
            np.random.default_rng(reward_ss),
            np.random.default_rng(cost_ss),
        )

    # -- per-round pieces ------------------------------------------------

    def multiplier(self, state, config):
        """Weight on ``g_bar`` in the acquisition."""
        return state.phi

    def update_multiplier(self, state, config, g_bar_at_action):
        return dual_update(state.phi, g_bar_at_action, config.rho, config.V, config.epsilon)

    def step(self, state, config, env):
        """Play one round and return its :class:`RunRecord`."""
        if state.round >= config.horizon:
            raise InvalidInputError("horizon exhausted")
        t = state.round + 1
        f_t = config.reward_strategy.generate_estimate(state.reward_model, t, state.reward_rng)
        g_t = config.cost_strategy.generate_estimate(state.cost_model, t, state.cost_rng)
        f_bar = truncate(f_t, config.B)
        g_bar = truncate(g_t, config.G)
        action = select_action(f_bar, g_bar, self.multiplier(state, config))
        r, c = env.sample_feedback(action, state.noise_rng)
        dual = state.phi
        state.phi = self.update_multiplier(state, config, float(g_bar[action]))
        state.reward_model.observe(None, r, domain_index=action)
        state.cost_model.observe(None, c, domain_index=action)
        state.round = t
        return RunRecord(
            t=t,
            action=action,
            reward=r,
            cost=c,
            f_true=float(env.f_values[action]),
            g_true=float(env.g_values[action]),
            dual=dual,
            dual_next=state.phi,
            f_bar=float(f_bar[action]),
            g_bar=float(g_bar[action]),
            f_bar_all=f_bar if self.keep_estimates else None,
            g_bar_all=g_bar if self.keep_estimates else None,
        )

    # -- driver ----------------------------------------------------------

    def run(self, env, seed=None):
        """Run ``horizon`` rounds; deterministic given ``(params, env, seed)``."""
        config = self.resolve(env)
        state = self.init_state(env, config, seed)
        records = [self.step(state, config, env) for _ in range(config.horizon)]
        self.config_ = config
        self.state_ = state
        self.records_ = records
        return records

    def fit(self, env, seed=None):
        self.run(env, seed)
        return self

    @property
    def unanalyzed(self):
        """True when this learner/strategy pairing lacks a matching guarantee."""
        return False


class GPUCB(CKB):
    """Unconstrained GP-UCB on the truncated reward estimate (cost ignored)."""

    def multiplier(self, state, config):
        return 0.0

    def update_multiplier(self, state, config, g_bar_at_action):
        return 0.0


def run_doubling(learner, env, horizon, seed=None, initial=1):
    """Anytime wrapper: epochs of length ``initial, 2 initial, ...`` up to ``horizon`` rounds.

    Each epoch restarts a fresh clone of ``learner`` with its horizon set to
    the epoch length; no GP state or multiplier carries over. Round indices in
    the returned records are global.
    """
    if initial < 1:
        raise InvalidInputError("initial epoch length must be >= 1")
    seeds = np.random.SeedSequence(seed)
    records = []
    length = int(initial)
    while len(records) < horizon:
        epoch = clone(learner).set_params(horizon=length)
        epoch_records = epoch.run(env, seeds.spawn(1)[0])
        for rec in epoch_records[: horizon - len(records)]:
            rec.t = len(records) + 1
            records.append(rec)
        length *= 2
    return records
