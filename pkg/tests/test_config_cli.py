import csv
import json
from pathlib import Path

import numpy as np
import pytest

from drasym.cli import main
from drasym.config import ConfigError, ExperimentConfig, dump_config, parse_config
from drasym.experiments import (
    CSV_HEADER,
    ResultRow,
    TrialError,
    rows_to_csv,
    run_empirical,
    run_prediction,
    sweep_gamma,
    tune_lambda,
)
from drasym.model import SystemConfig

SMALL = """\
# tiny run
n = 60
m = 42
noise_var = 0.001
prior = bernoulli_gaussian
p0 = 0.9
lambda = 0.03
gamma = 10
rho = 1
iterations = 12
seed = 42
mc_particles = 20000
trials = 3
mode = both
"""


def test_parse_and_roundtrip():
    cfg = parse_config(SMALL)
    assert cfg.system.n == 60 and cfg.system.lam == 0.03 and cfg.mode == "both"
    text = dump_config(cfg)
    assert parse_config(text) == cfg
    assert dump_config(parse_config(text)) == text


def test_sweep_alias_and_lists():
    cfg = parse_config(SMALL + "gamma_grid = 2, 6,10\nsnapshot_iterations = 5, 12\n".replace("mode = both\n", ""))
    cfg = parse_config(SMALL.replace("mode = both", "mode = sweep") + "gamma_grid = 2, 6,10\nsnapshot_iterations = 5, 12\n")
    assert cfg.mode == "sweep_gamma"
    assert cfg.gamma_grid == (2.0, 6.0, 10.0) and cfg.snapshot_iterations == (5, 12)


@pytest.mark.parametrize(
    "bad",
    [
        "n = 10\nbogus = 1\n",
        "n = 10\nn = 11\n",
        "just words\n",
        "p0 = 1.5\n",
        "mode = sweep\n",
        "mode = sweep\ngamma_grid = 1\nsnapshot_iterations = 500\n",
        "prior = laplace\n",
        "rho = 2\n",
    ],
)
def test_bad_configs(bad):
    with pytest.raises(ConfigError):
        parse_config(bad)


def test_result_row_needs_a_value():
    with pytest.raises(ValueError):
        ResultRow(k=1, gamma=1.0)


def test_csv_schema_and_sorting():
    rows = [
        ResultRow(k=2, gamma=5.0, mse_predicted=0.1, alpha_star=0.3, beta_star=0.1),
        ResultRow(k=1, gamma=5.0, mse_empirical_mean=0.2),
        ResultRow(k=1, gamma=1.0, mse_predicted=0.4),
    ]
    text = rows_to_csv(rows)
    lines = text.splitlines()
    assert lines[0] == "k,gamma,mse_empirical_mean,mse_empirical_stderr,mse_predicted,alpha_star,beta_star"
    assert lines[1] == "1,1.0,,,0.4,,"
    assert lines[2] == "1,5.0,0.2,,,,"
    assert lines[3].startswith("2,5.0,,,0.1,")


def test_single_trial_has_no_stderr():
    cfg = parse_config(SMALL.replace("trials = 3", "trials = 1"))
    rows = run_empirical(cfg)
    assert len(rows) == 12 and all(r.mse_empirical_stderr is None for r in rows)


def test_prediction_rows():
    cfg = parse_config(SMALL).with_overrides(iterations=1)
    rows = run_prediction(cfg)
    assert len(rows) == 1 and rows[0].k == 1 and rows[0].alpha_star > 0


@pytest.mark.xfail(strict=True, reason="10^4 particles: seed-to-seed spread of the early curve is ~14% (1 sd)")
def test_prediction_particle_counts_agree_single_seed():
    base = ExperimentConfig(system=SystemConfig(iterations=30))
    lo = run_prediction(base.with_overrides(mc_particles=10_000))
    hi = run_prediction(base.with_overrides(mc_particles=300_000))
    for a, b in zip(lo, hi):
        assert abs(a.mse_predicted / b.mse_predicted - 1) <= 0.05


def test_prediction_converges_in_particle_count():
    ref = np.array([r.mse_predicted for r in run_prediction(ExperimentConfig(system=SystemConfig(iterations=30)))])

    def curves(count):
        return np.array([
            [r.mse_predicted for r in run_prediction(
                ExperimentConfig(system=SystemConfig(iterations=30, mc_particles=count, seed=s)))]
            for s in range(1, 13)
        ])

    small, mid = curves(10_000), curves(100_000)
    assert np.max(np.abs(small.mean(axis=0) / ref - 1)) <= 0.05
    ratio = np.max(small.std(axis=0) / ref) / np.max(mid.std(axis=0) / ref)
    assert 2.0 <= ratio <= 5.0  # ~sqrt(10) for Monte Carlo error


def test_single_point_sweep_equals_prediction():
    cfg = parse_config(SMALL).with_overrides(mode="sweep_gamma", gamma_grid=(10.0,), snapshot_iterations=(4, 12))
    res = sweep_gamma(cfg)
    pred = {r.k: r for r in run_prediction(cfg.with_overrides(mode="predict", snapshot_iterations=()))}
    assert [r.k for r in res.rows] == [4, 12]
    for r in res.rows:
        assert r == pred[r.k]
    assert res.argmin_gamma == {4: 10.0, 12: 10.0}


def test_sweep_with_empirical_overlay():
    cfg = parse_config(SMALL).with_overrides(mode="sweep_gamma", gamma_grid=(5.0, 10.0), snapshot_iterations=(6,))
    res = sweep_gamma(cfg, empirical=True)
    assert len(res.rows) == 2
    assert all(r.mse_empirical_mean is not None and r.mse_predicted is not None for r in res.rows)


def test_trial_failure_carries_index(monkeypatch):
    import drasym.experiments as ex

    def boom(inst, system, iterations):
        raise FloatingPointError("nan")

    monkeypatch.setattr(ex, "dr_run", boom)
    with pytest.raises(TrialError) as info:
        run_empirical(parse_config(SMALL))
    assert info.value.trial == 1


def test_tune_lambda_picks_grid_minimum():
    sysc = SystemConfig(mc_particles=50_000)
    best, table = tune_lambda(sysc, [0.01, 0.023, 0.05], iterations=40)
    assert best == 0.023
    assert [t[0] for t in table] == [0.01, 0.023, 0.05]


def run_cli(tmp_path, name, *extra):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(SMALL)
    out = tmp_path / f"{name}.csv"
    code = main(["--config", str(cfg), "--out", str(out), "--quiet", *extra])
    return code, out


def test_cli_writes_csv_and_meta(tmp_path):
    code, out = run_cli(tmp_path, "a")
    assert code == 0
    with open(out) as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == CSV_HEADER and len(rows) == 13
    meta = json.loads(out.with_suffix(".meta").read_text())
    assert len(meta["config_hash"]) == 64 and meta["overdetermined"] is False
    assert meta["versions"]["kernels"] in ("numba", "numpy")


def test_cli_flags_override_config(tmp_path):
    code, out = run_cli(tmp_path, "p", "--mode", "predict", "--particles", "5000", "--seed", "3")
    assert code == 0
    meta = json.loads(out.with_suffix(".meta").read_text())
    assert "mc_particles = 5000" in meta["config"] and "seed = 3" in meta["config"]
    lines = out.read_text().splitlines()
    assert all(line.split(",")[2] == "" for line in lines[1:])


def test_cli_sweep(tmp_path):
    cfg = tmp_path / "s.cfg"
    cfg.write_text(SMALL.replace("mode = both", "mode = sweep") + "gamma_grid = 4, 10\nsnapshot_iterations = 12\n")
    out = tmp_path / "s.csv"
    assert main(["--config", str(cfg), "--out", str(out), "--quiet"]) == 0
    meta = json.loads(out.with_suffix(".meta").read_text())
    assert set(meta["argmin_gamma"]) == {"12"}


def test_cli_deterministic_across_workers(tmp_path):
    _, a = run_cli(tmp_path, "w1", "--workers", "1")
    _, b = run_cli(tmp_path, "w1b", "--workers", "1")
    _, c = run_cli(tmp_path, "w8", "--workers", "8")
    assert a.read_bytes() == b.read_bytes() == c.read_bytes()


def test_cli_error_line(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("n = -3\n")
    assert main(["--config", str(bad), "--quiet"]) != 0
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["error"] == "ConfigError"


def test_cli_overdetermined_flag(tmp_path):
    cfg = tmp_path / "o.cfg"
    cfg.write_text(SMALL.replace("m = 42", "m = 80").replace("mode = both", "mode = empirical"))
    out = tmp_path / "o.csv"
    assert main(["--config", str(cfg), "--out", str(out), "--quiet"]) == 0
    assert json.loads(out.with_suffix(".meta").read_text())["overdetermined"] is True
