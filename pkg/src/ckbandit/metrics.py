"""Per-round traces and the regret / constraint-violation series built from them."""

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "RunRecord",
    "MetricSeries",
    "regret_plus",
    "violation_metrics",
    "trace_arrays",
    "aggregate",
]


@dataclass
class RunRecord:
    """Everything observed and decided in one round.

    ``dual`` is the multiplier in force during the round (``phi_t`` for the
    primal-dual learner, ``Q(t)`` for the queue-based one) and ``dual_next``
    the value after this round's update. ``f_bar`` / ``g_bar`` are the
    truncated estimates at the chosen action; the full vectors are kept only
    when the learner runs with ``keep_estimates=True``.
    """

    t: int
    action: int
    reward: float
    cost: float
    f_true: float
    g_true: float
    dual: float
    dual_next: float = float("nan")
    f_bar: float = float("nan")
    g_bar: float = float("nan")
    f_bar_all: np.ndarray = field(default=None, repr=False)
    g_bar_all: np.ndarray = field(default=None, repr=False)


def trace_arrays(records):
    """Column arrays ``{"t", "action", "r", "c", "f_true", "g_true", "dual"}``."""
    return {
        "t": np.array([r.t for r in records], dtype=int),
        "action": np.array([r.action for r in records], dtype=int),
        "r": np.array([r.reward for r in records], dtype=float),
        "c": np.array([r.cost for r in records], dtype=float),
        "f_true": np.array([r.f_true for r in records], dtype=float),
        "g_true": np.array([r.g_true for r in records], dtype=float),
        "dual": np.array([r.dual for r in records], dtype=float),
    }


def _values(records_or_values, attr):
    arr = list(records_or_values)
    if arr and isinstance(arr[0], RunRecord):
        return np.array([getattr(r, attr) for r in arr], dtype=float)
    return np.asarray(arr, dtype=float)


def regret_plus(records, opt_value):
    """Cumulative ``t * opt_value - sum_{s<=t} f(x_s)`` using true rewards.

    ``records`` may be a list of :class:`RunRecord` or the raw true-reward values.
    """
    f = _values(records, "f_true")
    t = np.arange(1, f.shape[0] + 1)
    return t * float(opt_value) - np.cumsum(f)


def violation_metrics(records):
    """Cumulative violation, strong violation and violated-round count.

    Returns ``(V, strong, N)`` with ``V_t = [sum g]_+``,
    ``strong_t = sum [g]_+`` and ``N_t = #{s <= t : g(x_s) > 0}``.
    """
    g = _values(records, "g_true")
    V = np.maximum(np.cumsum(g), 0.0)
    strong = np.cumsum(np.maximum(g, 0.0))
    N = np.cumsum(g > 0.0).astype(float)
    return V, strong, N


@dataclass
class MetricSeries:
    """Per-round mean and standard error across trials for each metric."""

    regret_plus_mean: np.ndarray
    regret_plus_se: np.ndarray
    violation_mean: np.ndarray
    violation_se: np.ndarray
    strong_violation_mean: np.ndarray
    strong_violation_se: np.ndarray
    n_violated_mean: np.ndarray
    n_trials: int = 1

    @property
    def horizon(self):
        return self.regret_plus_mean.shape[0]

    COLUMNS = (
        "regret_plus_mean",
        "regret_plus_se",
        "violation_mean",
        "violation_se",
        "strong_violation_mean",
        "strong_violation_se",
        "n_violated_mean",
    )


def _mean_se(stack):
    stack = np.asarray(stack, dtype=float)
    mean = stack.mean(axis=0)
    if stack.shape[0] < 2:
        return mean, np.zeros_like(mean)
    return mean, stack.std(axis=0, ddof=1) / np.sqrt(stack.shape[0])


def aggregate(per_trial):
    """Combine per-trial ``(regret, V, strong, N)`` tuples, in trial order."""
    regret, V, strong, N = (np.array(x) for x in zip(*per_trial))
    rm, rs = _mean_se(regret)
    vm, vs = _mean_se(V)
    sm, ss = _mean_se(strong)
    nm, _ = _mean_se(N)
    return MetricSeries(rm, rs, vm, vs, sm, ss, nm, n_trials=len(per_trial))
