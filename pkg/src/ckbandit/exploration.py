"""Exploration strategies producing per-round function estimates.

Each strategy maps a GP posterior to a vector of estimates over a finite
domain. ``UCB`` adds a deterministic confidence bonus, ``TS`` draws a joint
posterior sample, and ``RandUCB`` scales the posterior std by one random
scalar shared by every point.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import check_generator, check_non_negative, check_positive, check_vector
from .exceptions import InvalidInputError

__all__ = [
    "BetaSchedule",
    "RandomizerDist",
    "UCB",
    "TS",
    "RandUCB",
    "parse_strategy",
    "truncate",
    "check_anticoncentration",
    "ANTICONCENTRATION_BOUND",
]

# 1 / (4 e sqrt(pi)): Gaussian anti-concentration probability lower bound
ANTICONCENTRATION_BOUND = 1.0 / (4.0 * np.e * np.sqrt(np.pi))


@dataclass
class BetaSchedule:
    """Confidence width ``norm_bound + noise_scale * sqrt(2 (gain + 1 + ln(2/confidence)))``.

    ``gain_source`` is any object exposing ``running_gain_`` (normally the
    :class:`~ckbandit.gp.GPPosterior` being explored). At round ``t`` the
    source holds ``t - 1`` observations, so its gain is the plug-in value
    for ``gamma_{t-1}``. With no source the gain is taken as zero.
    """

    norm_bound: float
    noise_scale: float = 0.0
    confidence: float = 0.05
    gain_source: object = None

    def __post_init__(self):
        check_non_negative(self.norm_bound, "norm_bound")
        check_non_negative(self.noise_scale, "noise_scale")
        if not 0.0 < self.confidence < 1.0:
            raise InvalidInputError(f"confidence must lie in (0, 1), got {self.confidence}")

    def gain(self):
        if self.gain_source is None:
            return 0.0
        return max(0.0, float(self.gain_source.running_gain_))

    def beta_at(self, t, gain=None):
        if t < 1:
            raise InvalidInputError(f"round index must be >= 1, got {t}")
        g = self.gain() if gain is None else float(gain)
        return self.norm_bound + self.noise_scale * np.sqrt(
            2.0 * (g + 1.0 + np.log(2.0 / self.confidence))
        )

    __call__ = beta_at


@dataclass(frozen=True)
class RandomizerDist:
    """Distribution of the shared scalar in RandUCB, scaled by ``beta_t``.

    ``"gaussian"`` draws ``N(0, beta^2)``; ``"uniform"`` draws uniformly from
    ``n_points`` equally spaced values on ``[0, 2 * beta]``.
    """

    kind: str = "gaussian"
    n_points: int = 10

    def __post_init__(self):
        if self.kind not in ("gaussian", "uniform"):
            raise InvalidInputError(f"unknown randomizer {self.kind!r}")
        if self.kind == "uniform" and int(self.n_points) < 2:
            raise InvalidInputError("uniform randomizer needs n_points >= 2")

    def draw(self, beta, rng, size=None):
        if self.kind == "gaussian":
            return beta * rng.standard_normal(size)
        grid = np.linspace(0.0, 2.0 * beta, int(self.n_points))
        return grid[rng.integers(0, len(grid), size=size)]


class _Strategy:
    name = None
    randomized = False

    def __init__(self, schedule):
        self.schedule = schedule

    def beta(self, t):
        return self.schedule.beta_at(t)

    def generate_estimate(self, model, t, rng=None):
        """Estimates over ``model``'s anchored domain at round ``t``."""
        raise NotImplementedError

    def deviation_scale(self, t, n_domain):
        """Per-round bound ``c`` with ``|estimate - mean| <= c * std``."""
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}({self.name!r})"


class UCB(_Strategy):
    """``mean + sign * beta_t * std``; ``sign=-1`` is the cost-optimistic form."""

    def __init__(self, schedule, sign=1):
        if sign not in (1, -1):
            raise InvalidInputError(f"sign must be +1 or -1, got {sign}")
        super().__init__(schedule)
        self.sign = sign
        self.name = "ucb"

    def generate_estimate(self, model, t, rng=None):
        mean, std = model.predict_domain()
        return mean + self.sign * self.beta(t) * std

    def deviation_scale(self, t, n_domain):
        return self.beta(t)


class TS(_Strategy):
    """One joint posterior sample over the domain with covariance scaled by ``beta_t^2``."""

    name = "ts"
    randomized = True

    def generate_estimate(self, model, t, rng=None):
        rng = check_generator(rng)
        return model.sample_y(scale=self.beta(t), random_state=rng)

    def deviation_scale(self, t, n_domain):
        # two-sided union bound over the domain; holds w.p. >= 1 - 2/t^2
        return 4.0 * self.beta(t) * np.sqrt(np.log(max(n_domain * t, 2)))

    def draw_deviation(self, t, rng, size=None):
        """Standardized deviation ``beta_t * N(0, 1)`` at one fixed point."""
        return self.beta(t) * rng.standard_normal(size)


class RandUCB(_Strategy):
    """``mean + Z_t * std`` with a single ``Z_t`` drawn from ``dist`` per round."""

    randomized = True

    def __init__(self, schedule, dist=None):
        super().__init__(schedule)
        self.dist = dist or RandomizerDist("gaussian")
        self.name = (
            "rand-gauss" if self.dist.kind == "gaussian" else f"rand-uniform:{self.dist.n_points}"
        )
        self.last_draw = None

    def draw(self, t, rng, size=None):
        return self.dist.draw(self.beta(t), rng, size=size)

    def generate_estimate(self, model, t, rng=None):
        rng = check_generator(rng)
        mean, std = model.predict_domain()
        z = float(self.draw(t, rng))
        self.last_draw = z
        return mean + z * std

    def deviation_scale(self, t, n_domain):
        return abs(self.last_draw) if self.last_draw is not None else np.inf

    draw_deviation = draw


def parse_strategy(text, schedule, role="reward"):
    """Build a strategy from ``"ucb"``, ``"ts"``, ``"rand-gauss"`` or ``"rand-uniform:<n>"``.

    ``role="cost"`` flips the UCB sign so the cost estimate is optimistic
    (a lower confidence bound).
    """
    key = str(text).strip().lower()
    if role not in ("reward", "cost"):
        raise InvalidInputError(f"role must be 'reward' or 'cost', got {role!r}")
    if key == "ucb":
        return UCB(schedule, sign=1 if role == "reward" else -1)
    if key == "ts":
        return TS(schedule)
    if key == "rand-gauss":
        return RandUCB(schedule, RandomizerDist("gaussian"))
    if key.startswith("rand-uniform"):
        _, _, n = key.partition(":")
        try:
            n_points = int(n) if n else 10
        except ValueError:
            raise InvalidInputError(f"bad randomizer grid size in {text!r}") from None
        return RandUCB(schedule, RandomizerDist("uniform", n_points))
    raise InvalidInputError(
        f"unknown exploration {text!r}; expected ucb, ts, rand-gauss or rand-uniform:<n>"
    )


def truncate(values, bound):
    """Clamp every value to ``[-bound, bound]``."""
    bound = check_positive(bound, "bound")
    return np.clip(check_vector(values, allow_empty=True), -bound, bound)


def check_anticoncentration(strategy, n_trials, rng=None, t=1):
    """Empirical frequency with which the exploration draw reaches ``beta_t``.

    At a fixed query point with unit posterior std the deterministic UCB
    value sits at ``mean + beta_t``; this counts how often the randomized
    deviation meets or exceeds it.
    """
    if not getattr(strategy, "randomized", False):
        raise InvalidInputError("anti-concentration is only defined for TS and RandUCB")
    rng = check_generator(rng)
    beta = strategy.beta(t)
    draws = strategy.draw_deviation(t, rng, size=int(n_trials))
    return float(np.mean(draws >= beta))
