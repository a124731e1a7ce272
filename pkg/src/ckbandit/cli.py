"""Command line entry point: ``ckbandit run`` and ``ckbandit oracle``."""

import argparse
import sys

from .exceptions import (
    CKBError,
    ConfigError,
    DatasetParseError,
    InvalidInputError,
    NumericalDegeneracyError,
)
from .harness import ExperimentConfig, build_env, emit_csv, run_experiment

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_OTHER = 1


def _slack(text):
    key = text.strip().lower()
    if key in ("off", "zero-violation"):
        return key
    try:
        value = float(key)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected zero-violation, off or a number, got {text!r}"
        ) from None
    if value < 0:
        raise argparse.ArgumentTypeError("slack must be non-negative")
    return key


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ckbandit", description="Constrained kernelized bandit experiments."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a multi-trial experiment and write CSV files")
    run.add_argument("--config", required=True)
    run.add_argument("--out", help="output directory (overrides [experiment] output)")
    run.add_argument("--trials", type=int)
    run.add_argument("--horizon", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--algorithm", choices=("ckb", "lyapunov"))
    run.add_argument("--exploration", help="ucb | ts | rand-gauss | rand-uniform:<n>")
    run.add_argument("--slack", type=_slack, help="zero-violation | off | <float>")
    run.add_argument("--jobs", type=int, default=1, help="parallel trials")
    run.add_argument("--no-traces", action="store_true", help="skip per-trial trace files")

    oracle = sub.add_parser("oracle", help="print the baseline optimum and Slater margin")
    oracle.add_argument("--config", required=True)
    oracle.add_argument("--epsilon", type=float, default=0.0)
    return parser


def _cmd_run(args):
    config = ExperimentConfig.from_file(args.config).with_overrides(
        n_trials=args.trials,
        horizon=args.horizon,
        seed=args.seed,
        algorithm=args.algorithm,
        exploration=args.exploration,
        slack=args.slack,
        output=args.out,
    )
    if not config.output:
        raise ConfigError("no output directory: pass --out or set [experiment] output")
    result = run_experiment(config, n_jobs=args.jobs)
    traces = None if (args.no_traces or not config.traces) else result.traces
    files = emit_csv(result.series, config.output, traces, result.metadata)
    s = result.series
    print(
        f"T={s.horizon} trials={s.n_trials} "
        f"regret_plus={s.regret_plus_mean[-1]:.6g} violation={s.violation_mean[-1]:.6g} "
        f"strong_violation={s.strong_violation_mean[-1]:.6g} n_violated={s.n_violated_mean[-1]:.6g}"
    )
    print(f"wrote {len(files)} files to {config.output}")


def _cmd_oracle(args):
    config = ExperimentConfig.from_file(args.config)
    env = build_env(config)
    sol = env.oracle_optimum(args.epsilon)
    print(f"opt_value={sol.value:.17g}")
    print("support=" + ",".join(str(i) for i in sol.support))
    print("weights=" + ",".join(format(w, ".17g") for w in sol.weights))
    print(f"slater_margin={env.slater_margin():.17g}")
    print(f"B={env.B:.17g} G={env.G:.17g}")


def main(argv=None):
    args = build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "oracle": _cmd_oracle}[args.command]
    try:
        handler(args)
    except NumericalDegeneracyError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, DatasetParseError, InvalidInputError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CKBError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OTHER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
