"""Multi-trial experiment runner, INI configuration and CSV output."""

import configparser
import csv
import json
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from .environment import NoiseSpec, generate_synthetic, load_dataset
from .exceptions import CKBError, ConfigError, InvalidInputError
from .kernels import KernelSpec
from .lyapunov import LyapunovCKB
from .metrics import aggregate, regret_plus, trace_arrays, violation_metrics
from .primal_dual import CKB, DEFAULT_ALPHA

__all__ = [
    "ExperimentConfig",
    "ExperimentResult",
    "build_env",
    "make_learner",
    "run_experiment",
    "emit_csv",
    "read_metrics_csv",
    "METRICS_HEADER",
    "TRACE_HEADER",
]

METRICS_HEADER = (
    "t",
    "regret_plus_mean",
    "regret_plus_se",
    "violation_mean",
    "violation_se",
    "strong_violation_mean",
    "strong_violation_se",
    "n_violated_mean",
)
TRACE_HEADER = ("t", "action", "r", "c", "f_true", "g_true", "dual")

_STRATEGIES = ("ucb", "ts", "rand-gauss")


def _check_strategy(name):
    key = str(name).strip().lower()
    if key in _STRATEGIES or key.startswith("rand-uniform"):
        return key
    raise ConfigError(f"unknown exploration {name!r}")


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce one experiment.

    ``env_seed`` fixes the synthetic instance; when ``None`` the base seed is
    used, so every trial of one config faces the same functions and differs
    only in noise and exploration randomness.
    """

    algorithm: str = "ckb"
    exploration: str = "ucb"
    cost_exploration: str = None
    kernel: str = "se"
    lengthscale: float = 0.2
    smoothness: float = 2.5
    cost_kernel: str = None
    cost_lengthscale: float = None
    env_kind: str = "synthetic"
    n_domain: int = 100
    p: int = 100
    env_seed: int = None
    noise: str = "gaussian"
    noise_scale: float = 0.1
    noise_dof: float = 3.0
    dataset_path: str = None
    dataset_columns: tuple = None
    threshold: str = "half-B"
    horizon: int = 1000
    n_trials: int = 1
    seed: int = 0
    slack: str = "off"
    rho: float = None
    V: float = None
    lam: float = None
    lam_cost: float = None
    R: float = None
    R_cost: float = None
    alpha: float = DEFAULT_ALPHA
    B: float = None
    G: float = None
    output: str = None
    traces: bool = True

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.algorithm not in ("ckb", "lyapunov"):
            raise ConfigError(f"algorithm must be 'ckb' or 'lyapunov', got {self.algorithm!r}")
        self.exploration = _check_strategy(self.exploration)
        if self.cost_exploration is not None:
            self.cost_exploration = _check_strategy(self.cost_exploration)
        if int(self.n_trials) < 1:
            raise ConfigError("n_trials must be >= 1")
        if int(self.horizon) < 1:
            raise ConfigError("horizon must be >= 1")
        if self.env_kind not in ("synthetic", "dataset"):
            raise ConfigError(f"environment kind must be synthetic or dataset, got {self.env_kind!r}")
        if self.env_kind == "dataset" and not self.dataset_path:
            raise ConfigError("dataset environment needs a path")
        if isinstance(self.slack, str):
            s = self.slack.strip().lower()
            if s not in ("off", "zero-violation"):
                try:
                    float(s)
                except ValueError:
                    raise ConfigError(f"slack must be off, zero-violation or a number, got {self.slack!r}") from None
            self.slack = s
        return self

    # -- file format -----------------------------------------------------

    @classmethod
    def from_file(cls, path):
        """Read an INI file with sections experiment, exploration, kernel,
        cost_kernel, environment and parameters."""
        parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        try:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except configparser.Error as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from exc
        return cls.from_sections({s: dict(parser[s]) for s in parser.sections()}, base=Path(path).parent)

    @classmethod
    def from_sections(cls, sections, base=None):
        known = {"experiment", "exploration", "kernel", "cost_kernel", "environment", "parameters"}
        unknown = set(sections) - known
        if unknown:
            raise ConfigError(f"unknown config sections: {sorted(unknown)}")
        sec = {name: dict(sections.get(name, {})) for name in known}
        kw = {}

        def take(section, key, dest=None, conv=str):
            if key in sec[section]:
                raw = sec[section].pop(key)
                try:
                    kw[dest or key] = conv(raw)
                except (TypeError, ValueError):
                    raise ConfigError(f"[{section}] {key}: bad value {raw!r}") from None

        def as_bool(raw):
            v = str(raw).strip().lower()
            if v in ("1", "true", "yes", "on"):
                return True
            if v in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)

        take("experiment", "algorithm")
        take("experiment", "trials", "n_trials", int)
        take("experiment", "horizon", conv=int)
        take("experiment", "seed", conv=int)
        take("experiment", "output")
        take("experiment", "traces", conv=as_bool)
        take("exploration", "reward", "exploration")
        take("exploration", "cost", "cost_exploration")
        take("kernel", "family", "kernel")
        take("kernel", "lengthscale", conv=float)
        take("kernel", "smoothness", conv=float)
        take("cost_kernel", "family", "cost_kernel")
        take("cost_kernel", "lengthscale", "cost_lengthscale", float)
        take("environment", "kind", "env_kind")
        take("environment", "n_domain", conv=int)
        take("environment", "p", conv=int)
        take("environment", "seed", "env_seed", int)
        take("environment", "noise")
        take("environment", "noise_scale", conv=float)
        take("environment", "noise_dof", conv=float)
        take("environment", "path", "dataset_path")
        take("environment", "columns", "dataset_columns",
             lambda s: tuple(c.strip() for c in s.split(",") if c.strip()))
        take("environment", "threshold")
        take("parameters", "slack")
        for key in ("rho", "V", "R", "R_cost", "alpha", "B", "G"):
            take("parameters", key, conv=float)
            take("parameters", key.lower(), key, float)
        take("parameters", "lambda", "lam", float)
        take("parameters", "lambda_cost", "lam_cost", float)
        leftovers = {f"[{s}] {k}" for s, d in sec.items() for k in d}
        if leftovers:
            raise ConfigError(f"unknown config keys: {sorted(leftovers)}")
        if base is not None and kw.get("dataset_path") and not Path(kw["dataset_path"]).is_absolute():
            kw["dataset_path"] = str(Path(base) / kw["dataset_path"])
        return cls(**kw)

    def with_overrides(self, **overrides):
        """Copy with the given non-``None`` fields replaced and re-validated."""
        clean = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **clean)

    def to_dict(self):
        d = asdict(self)
        d.pop("output")
        return d


def build_env(config):
    """Environment described by ``config``."""
    if config.env_kind == "dataset":
        return load_dataset(config.dataset_path, config.dataset_columns, config.threshold)
    spec_f = KernelSpec(config.kernel, config.lengthscale, config.smoothness)
    spec_g = KernelSpec(
        config.cost_kernel or config.kernel,
        config.cost_lengthscale if config.cost_lengthscale is not None else config.lengthscale,
        config.smoothness,
    )
    noise = NoiseSpec(config.noise, config.noise_scale, config.noise_dof)
    seed = config.seed if config.env_seed is None else config.env_seed
    return generate_synthetic(spec_f, spec_g, config.n_domain, config.p, seed, noise, noise)


def make_learner(config):
    cls = CKB if config.algorithm == "ckb" else LyapunovCKB
    params = dict(
        horizon=int(config.horizon),
        exploration=config.exploration,
        cost_exploration=config.cost_exploration,
        rho=config.rho,
        V=config.V,
        noise=config.lam,
        cost_noise=config.lam_cost,
        alpha=config.alpha,
        R=config.R,
        R_cost=config.R_cost,
        B=config.B,
        G=config.G,
    )
    if config.slack is not None:
        slack = config.slack
        if isinstance(slack, str) and slack not in ("off", "zero-violation"):
            slack = float(slack)
        params["slack"] = slack
    return cls(**params)


@dataclass
class ExperimentResult:
    series: object
    traces: list
    opt_value: float
    delta: float
    configs: list
    env: object
    metadata: dict


def _run_trial(config, env, opt_value, index):
    learner = make_learner(config)
    try:
        records = learner.run(env, seed=int(config.seed) + index)
    except CKBError as exc:
        exc.trial = index
        exc.args = (f"trial {index}: {exc}",) + exc.args[1:]
        raise
    regret = regret_plus(records, opt_value)
    V, strong, N = violation_metrics(records)
    return records, (regret, V, strong, N), learner.config_


def run_experiment(config, n_jobs=None):
    """Run ``n_trials`` seeded trials and aggregate their metric series.

    Trial ``i`` uses seed ``config.seed + i``. Results are merged in trial
    order, so the output does not depend on ``n_jobs``.
    """
    env = build_env(config)
    opt = env.oracle_optimum(0.0)
    indices = range(int(config.n_trials))
    if n_jobs not in (None, 1):
        from joblib import Parallel, delayed

        results = Parallel(n_jobs=n_jobs)(
            delayed(_run_trial)(config, env, opt.value, i) for i in indices
        )
    else:
        results = [_run_trial(config, env, opt.value, i) for i in indices]
    traces = [r[0] for r in results]
    series = aggregate([r[1] for r in results])
    cfg0 = results[0][2]
    learner = make_learner(config)
    metadata = {
        "algorithm": config.algorithm,
        "exploration": config.exploration,
        "cost_exploration": config.cost_exploration or config.exploration,
        "error_bars": "standard error of the mean across trials (sample std, ddof=1, / sqrt(n_trials))",
        "opt_value": opt.value,
        "opt_support": list(opt.support),
        "opt_weights": list(opt.weights),
        "slater_margin": env.slater_margin(),
        "rho": cfg0.rho,
        "V": cfg0.V,
        "epsilon": cfg0.epsilon,
        "B": cfg0.B,
        "G": cfg0.G,
        "sub_gaussian_noise": bool(env.metadata.get("sub_gaussian", True)),
        "unanalyzed_combination": bool(learner.unanalyzed),
        "config": config.to_dict(),
    }
    return ExperimentResult(
        series, traces, opt.value, env.slater_margin(), [r[2] for r in results], env, metadata
    )


def _fmt(x):
    return format(float(x), ".17g")


def emit_csv(series, path, traces=None, metadata=None):
    """Write ``metrics.csv`` (and ``trace_<i>.csv`` per trial) under ``path``.

    Returns the list of written files.
    """
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
        written = []
        metrics_path = out / "metrics.csv"
        with open(metrics_path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(METRICS_HEADER)
            cols = [getattr(series, c) for c in METRICS_HEADER[1:]]
            for t in range(series.horizon):
                w.writerow([t + 1] + [_fmt(c[t]) for c in cols])
        written.append(metrics_path)
        for i, records in enumerate(traces or []):
            arr = trace_arrays(records)
            trace_path = out / f"trace_{i:03d}.csv"
            with open(trace_path, "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(TRACE_HEADER)
                for k in range(len(records)):
                    w.writerow(
                        [int(arr["t"][k]), int(arr["action"][k])]
                        + [_fmt(arr[c][k]) for c in TRACE_HEADER[2:]]
                    )
            written.append(trace_path)
        if metadata is not None:
            meta_path = out / "metadata.json"
            with open(meta_path, "w", encoding="utf-8") as fh:
                json.dump(metadata, fh, indent=2, sort_keys=True, default=_json_default)
                fh.write("\n")
            written.append(meta_path)
    except OSError as exc:
        raise OSError(f"cannot write results to {out}: {exc}") from exc
    return written


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, (tuple, set)):
        return list(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def read_metrics_csv(path):
    """Parse a metrics file back into ``{column: ndarray}``."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    if tuple(header) != METRICS_HEADER:
        raise InvalidInputError(f"unexpected metrics header {header}")
    data = np.array(rows).reshape(-1, len(header))
    return {name: data[:, j] for j, name in enumerate(header)}
