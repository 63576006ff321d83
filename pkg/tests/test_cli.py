import csv

import pytest

from slicetuner.cli import main

GOOD_CONFIG = """
schema_version = 1
name = cli-check
trials = 2
seed = 3
budget = 60
lambda = 1.0
methods = original, uniform, moderate
curve.num_subsets = 5
curve.num_repeats = 2
curve.min_fraction = 0.2
iterative.min_slice_size = 10
slices = s0, s1
slice.s0.size = 40
slice.s1.size = 60
oracle.kind = synthetic
oracle.noise_sigma = 0.01
oracle.s0.a = 0.6
oracle.s0.b = 4.0
oracle.s1.a = 1.0
oracle.s1.b = 2.0
"""


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "cfg.txt"
    path.write_text(GOOD_CONFIG)
    return path


def test_run_writes_reports(config_file, tmp_path, capsys):
    out = tmp_path / "results"
    code = main(["run", "--config", str(config_file), "--out", str(out)])
    assert code == 0
    assert (out / "raw.csv").exists()
    assert (out / "summary.csv").exists()
    assert "moderate" in capsys.readouterr().out


def test_run_trials_and_seed_overrides(config_file, tmp_path):
    out = tmp_path / "results"
    code = main(["run", "--config", str(config_file), "--out", str(out),
                 "--trials", "1", "--seed", "99"])
    assert code == 0
    with open(out / "raw.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert {r["trial"] for r in rows} == {"0"}


def test_missing_config_is_exit_2(tmp_path):
    assert main(["run", "--config", str(tmp_path / "nope.txt")]) == 2


def test_invalid_config_is_exit_2(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("schema_version = 1\nmethods = original\n")  # no slices
    assert main(["run", "--config", str(bad)]) == 2


def test_trainer_failure_is_exit_3(tmp_path):
    cfg = tmp_path / "trainer.txt"
    cfg.write_text(
        "schema_version = 1\ntrials = 1\nmethods = original\n"
        "slices = s0\nslice.s0.size = 50\n"
        "oracle.kind = trainer\noracle.command = false\noracle.timeout = 5\n"
    )
    assert main(["run", "--config", str(cfg)]) == 3


def test_fit_subcommand(tmp_path, capsys):
    pts = tmp_path / "points.csv"
    pts.write_text("size,loss\n10,1.0\n40,0.5\n90,0.33\n160,0.25\n")
    assert main(["fit", "--points", str(pts)]) == 0
    out = capsys.readouterr().out
    assert "a = " in out and "b = " in out


def test_fit_degenerate_is_exit_4(tmp_path):
    pts = tmp_path / "zeros.csv"
    pts.write_text("10,0.0\n40,0.0\n")
    assert main(["fit", "--points", str(pts)]) == 4


def test_compare_estimation_subcommand(config_file, tmp_path, capsys):
    out = tmp_path / "est"
    code = main(["compare-estimation", "--config", str(config_file), "--out", str(out)])
    assert code == 0
    assert (out / "estimation_comparison.csv").exists()
    assert "amortized" in capsys.readouterr().out


def test_plot_data_subcommand(config_file, tmp_path):
    out = tmp_path / "results"
    main(["run", "--config", str(config_file), "--out", str(out)])
    code = main(["plot-data", "--report", str(out)])
    assert code == 0
    lines = (out / "plot_data.csv").read_text().splitlines()
    assert lines[0] == "method,budget,trial,loss,avg_eer,max_eer"
    assert len(lines) == 1 + 2 * 3  # trials * methods


def test_plot_data_missing_report_is_exit_2(tmp_path):
    assert main(["plot-data", "--report", str(tmp_path / "missing")]) == 2
