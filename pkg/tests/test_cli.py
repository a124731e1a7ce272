import subprocess
import sys

import pytest

from ckbandit.cli import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, main

CONFIG = """[experiment]
trials = 2
horizon = 25
seed = 3
[kernel]
family = se
lengthscale = 0.2
[environment]
n_domain = 20
p = 20
"""


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "exp.ini"
    path.write_text(CONFIG)
    return path


def _cli(*args):
    return subprocess.run(
        [sys.executable, "-m", "ckbandit", *map(str, args)],
        capture_output=True,
        text=True,
        check=False,
    )


def test_run_writes_files(config, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "--config", str(config), "--out", str(out)]) == EXIT_OK
    assert sorted(p.name for p in out.iterdir()) == [
        "metadata.json",
        "metrics.csv",
        "trace_000.csv",
        "trace_001.csv",
    ]
    assert "regret_plus=" in capsys.readouterr().out


def test_overrides(config, tmp_path):
    out = tmp_path / "out"
    argv = ["run", "--config", str(config), "--out", str(out), "--trials", "1", "--horizon", "4"]
    argv += ["--algorithm", "lyapunov", "--exploration", "rand-gauss", "--slack", "zero-violation"]
    argv += ["--no-traces"]
    assert main(argv) == EXIT_OK
    assert len((out / "metrics.csv").read_text().splitlines()) == 5
    assert not (out / "trace_000.csv").exists()


def test_byte_identical_across_processes(config, tmp_path):
    outputs = []
    for name in ("a", "b"):
        out = tmp_path / name
        proc = _cli("run", "--config", config, "--out", out)
        assert proc.returncode == 0, proc.stderr
        outputs.append((out / "metrics.csv").read_bytes())
    assert outputs[0] == outputs[1]


def test_oracle_command(config, capsys):
    assert main(["oracle", "--config", str(config)]) == EXIT_OK
    text = capsys.readouterr().out
    assert "opt_value=" in text and "slater_margin=" in text


def test_config_error_exit_code(tmp_path):
    bad = tmp_path / "bad.ini"
    bad.write_text("[experiment]\nalgorithm = nope\n")
    assert main(["run", "--config", str(bad), "--out", str(tmp_path)]) == EXIT_CONFIG
    assert main(["oracle", "--config", str(tmp_path / "missing.ini")]) == EXIT_CONFIG


def test_missing_output_is_config_error(config):
    assert main(["run", "--config", str(config)]) == EXIT_CONFIG


def test_bad_slack_argument(config, tmp_path):
    proc = _cli("run", "--config", config, "--out", tmp_path, "--slack", "-1")
    assert proc.returncode == 2


def test_numerical_error_exit_code(config, tmp_path, monkeypatch):
    from ckbandit import NumericalDegeneracyError
    from ckbandit import cli

    def boom(*a, **k):
        raise NumericalDegeneracyError("non-positive pivot", value=-1.0)

    monkeypatch.setattr(cli, "run_experiment", boom)
    assert main(["run", "--config", str(config), "--out", str(tmp_path)]) == EXIT_NUMERICAL


def test_oracle_infeasible_epsilon(config):
    assert main(["oracle", "--config", str(config), "--epsilon", "100"]) == 1
