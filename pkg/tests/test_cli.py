import itertools
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from centric_cea import nk, qap
from centric_cea.cli import main
from centric_cea.tables import format_value, read_csv, write_csv

INSTANCES = Path(__file__).resolve().parent.parent / "instances"
NK_SMALL = INSTANCES / "nk_n10_k2_random.nk"
QAP_TINY = INSTANCES / "tiny3.dat"


def _bytes(directory):
    return {p.name: p.read_bytes() for p in sorted(Path(directory).iterdir()) if p.suffix == ".csv"}


def test_takeover_fan_out(tmp_path):
    assert main(["takeover", "--side", "8", "--beta", "0.2,0.5,0.8", "--runs", "5", "--seed", "7",
                 "--out", str(tmp_path)]) == 0
    for name in ("takeover.csv", "growth.csv", "matings.csv"):
        rows = read_csv(tmp_path / name)
        assert {r["beta"] for r in rows} == {"0.2", "0.5", "0.8"}
    takeover = read_csv(tmp_path / "takeover.csv")
    assert len(takeover) == 15
    assert [int(r["seed"]) for r in takeover[:5]] == [7, 8, 9, 10, 11]
    growth = read_csv(tmp_path / "growth.csv")
    assert growth[0]["t"] == "1"


def test_takeover_beta_one_is_undefined(tmp_path):
    assert main(["takeover", "--side", "4", "--beta", "1.0", "--runs", "2", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "takeover.csv")
    assert [r["takeover_time"] for r in rows] == ["undefined", "undefined"]


def test_takeover_is_byte_identical(tmp_path):
    argv = ["takeover", "--side", "6", "--beta", "0.3,0.9", "--runs", "4", "--seed", "3"]
    assert main(argv + ["--out", str(tmp_path / "a")]) == 0
    assert main(argv + ["--out", str(tmp_path / "b")]) == 0
    assert main(argv + ["--out", str(tmp_path / "c"), "--jobs", "2"]) == 0
    a = _bytes(tmp_path / "a")
    assert a == _bytes(tmp_path / "b") == _bytes(tmp_path / "c")


def test_optimize_single_run_has_zero_std(tmp_path):
    assert main(["optimize", "--problem", "nk", "--instance", str(NK_SMALL), "--side", "5", "--runs", "1",
                 "--generations", "20", "--beta", "0.2,1.0", "--raw-series", "--out", str(tmp_path)]) == 0
    summary = read_csv(tmp_path / "optimize_summary.csv")
    assert [r["std_best"] for r in summary] == ["0.0", "0.0"]
    series = read_csv(tmp_path / "best_series.csv")
    assert len(series) == 2 * 21
    assert len(read_csv(tmp_path / "best_series_raw.csv")) == 2 * 21


def test_optimize_orientation_and_instance_dir(tmp_path):
    assert main(["optimize", "--problem", "qap", "--instance", "tiny3", "--instance-dir", str(INSTANCES),
                 "--side", "3", "--runs", "3", "--generations", "15", "--beta", "0.5",
                 "--out", str(tmp_path)]) == 0
    runs = read_csv(tmp_path / "optimize_runs.csv")
    _, optimum = qap.bruteforce_optimum(qap.load_qaplib(QAP_TINY))
    assert all(float(r["best"]) >= optimum for r in runs)
    series = read_csv(tmp_path / "best_series.csv")
    values = [float(r["mean_best"]) for r in series]
    assert values == sorted(values, reverse=True)


def test_estimate_pij_windows_and_conservation(tmp_path):
    assert main(["estimate-pij", "--problem", "nk", "--instance", str(NK_SMALL), "--side", "4", "--runs", "2",
                 "--generations", "1500", "--window", "50", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "pij.csv")
    assert len(rows) == 30
    assert rows[1]["window_start"] == "51"
    for r in rows:
        assert sum(int(r[f"trials{k}"]) for k in ("00", "01", "11")) == 16 * 50 * 2
        for k in ("00", "01", "11"):
            p = float(r[f"p{k}"])
            assert 0 < p < 1
            assert r[f"low_confidence{k}"] == ("1" if r[f"trials{k}"] == "0" else "0")


def _flat_inputs(directory, betas=(0.0, 0.5, 1.0)):
    matings = [(b, t, 10.0 - 5 * b, 5 * b * (1 - b), 5 * b * b) for b in betas for t in (1, 2, 3)]
    write_csv(directory / "matings.csv", ("beta", "t", "mean_n00", "mean_n01", "mean_n11"), matings)
    write_csv(
        directory / "pij.csv",
        ("window_start", "trials00", "trials01", "trials11", "successes00", "successes01", "successes11"),
        [(1, 100, 100, 100, 3, 3, 3), (51, 100, 100, 100, 1, 1, 1)],
    )


def test_optimal_beta_flat_probabilities_pick_smallest(tmp_path):
    _flat_inputs(tmp_path)
    assert main(["optimal-beta", "--matings", str(tmp_path / "matings.csv"), "--pij", str(tmp_path / "pij.csv"),
                 "--horizon", "3", "--out", str(tmp_path / "out")]) == 0
    rows = read_csv(tmp_path / "out" / "optimal_beta.csv")
    assert [r["beta_star"] for r in rows] == ["0.0", "0.0"]
    curve = read_csv(tmp_path / "out" / "p_curve.csv")
    assert len({r["P"] for r in curve}) == 1
    assert [r["one_sided"] for r in curve] == ["1", "0", "1"]


def test_optimal_beta_missing_inputs(tmp_path, capsys):
    code = main(["optimal-beta", "--pij", str(tmp_path / "nope.csv"), "--out", str(tmp_path)])
    assert code != 0
    err = capsys.readouterr().err
    assert "matings.csv" in err and "pij.csv" in err
    assert not (tmp_path / "optimal_beta.csv").exists()


def test_optimal_beta_compute(tmp_path):
    assert main(["optimal-beta", "--compute", "--problem", "nk", "--instance", str(NK_SMALL), "--side", "4",
                 "--runs", "2", "--generations", "60", "--window", "20", "--takeover-runs", "5",
                 "--betas", "0:0.5:1", "--horizon", "10", "--out", str(tmp_path), "--plot"]) == 0
    assert len(read_csv(tmp_path / "optimal_beta.csv")) == 3
    assert len(read_csv(tmp_path / "p_curve.csv")) == 3
    assert {r["beta"] for r in read_csv(tmp_path / "matings.csv")} == {"0.0", "0.5", "1.0"}
    assert (tmp_path / "optimal_beta.png").stat().st_size > 0


def test_optimal_beta_chained_from_files(tmp_path):
    assert main(["takeover", "--side", "4", "--beta", "0.0,0.5,1.0", "--runs", "5", "--max-generations", "100",
                 "--out", str(tmp_path)]) == 0
    assert main(["estimate-pij", "--problem", "nk", "--instance", str(NK_SMALL), "--side", "4", "--runs", "2",
                 "--generations", "40", "--window", "20", "--out", str(tmp_path)]) == 0
    assert main(["optimal-beta", "--matings", str(tmp_path / "matings.csv"), "--pij", str(tmp_path / "pij.csv"),
                 "--out", str(tmp_path)]) == 0
    assert len(read_csv(tmp_path / "optimal_beta.csv")) == 2


def test_nk_gen_writes_parseable_instance(tmp_path):
    assert main(["nk-gen", "--n", "32", "--k", "10", "--model", "random", "--seed", "3", "--out", str(tmp_path)]) == 0
    path = tmp_path / "nk_n32_k10_random_s3.nk"
    land = nk.load(path)
    assert (land.n, land.k, land.model) == (32, 10, "random")
    again = tmp_path / "again.nk"
    assert main(["nk-gen", "--n", "32", "--k", "10", "--seed", "3", "--output", str(again)]) == 0
    assert again.read_bytes() == path.read_bytes()


def test_oracle_nk_enumeration(tmp_path):
    assert main(["oracle", "--nk", str(NK_SMALL), "--out", str(tmp_path)]) == 0
    row = read_csv(tmp_path / "oracle.csv")[0]
    land = nk.load(NK_SMALL)
    values = [nk.evaluate(land, bits) for bits in itertools.product((0, 1), repeat=10)]
    assert float(row["optimum_value"]) == max(values)
    assert nk.evaluate(land, [int(c) for c in row["optimum_solution"]]) == max(values)


def test_oracle_qap_enumeration(tmp_path):
    assert main(["oracle", "--qap", str(QAP_TINY), "--out", str(tmp_path)]) == 0
    row = read_csv(tmp_path / "oracle.csv")[0]
    inst = qap.load_qaplib(QAP_TINY)
    assert float(row["optimum_value"]) == min(qap.evaluate(inst, p) for p in itertools.permutations(range(3)))


def test_oracle_refuses_large(tmp_path, capsys):
    assert main(["oracle", "--qap", str(INSTANCES / "nug30_surrogate.dat"), "--out", str(tmp_path)]) == 1
    assert "limit" in capsys.readouterr().err
    assert main(["oracle", "--nk", str(INSTANCES / "nk_n32_k2_random.nk"), "--out", str(tmp_path)]) == 1


@pytest.mark.parametrize(
    "argv, key",
    [
        (["takeover", "--beta", "1.5"], "--beta"),
        (["takeover", "--runs", "0"], "--runs"),
        (["takeover", "--side", "-3"], "--side"),
        (["optimize", "--problem", "nk", "--instance", "/nonexistent.nk"], "--instance"),
        (["optimize", "--problem", "nk", "--instance", str(NK_SMALL), "--generations", "0"], "--generations"),
        (["estimate-pij", "--problem", "nk", "--instance", str(NK_SMALL), "--window", "0"], "--window"),
        (["estimate-pij", "--problem", "nk", "--instance", str(NK_SMALL), "--estimation-beta", "-1"],
         "--estimation-beta"),
        (["nk-gen", "--n", "8", "--k", "9"], "--k"),
        (["oracle"], "--nk"),
    ],
)
def test_invalid_config_names_the_key(tmp_path, capsys, argv, key):
    assert main(argv + ["--out", str(tmp_path)]) == 2
    assert key in capsys.readouterr().err
    assert not any(tmp_path.glob("*.csv"))


def test_unparseable_instance_exits_nonzero(tmp_path, capsys):
    bad = tmp_path / "bad.dat"
    bad.write_text("3\n1 2\n")
    assert main(["optimize", "--problem", "qap", "--instance", str(bad), "--out", str(tmp_path)]) == 1
    assert "token" in capsys.readouterr().err


def test_dump_config_and_plot(tmp_path):
    assert main(["takeover", "--side", "5", "--beta", "0.5,1.0", "--runs", "3", "--out", str(tmp_path),
                 "--dump-config", "--plot"]) == 0
    config = json.loads((tmp_path / "config.json").read_text())
    assert config["side"] == 5 and config["beta"] == [0.5, 1.0]
    assert (tmp_path / "takeover.png").exists() and (tmp_path / "growth.png").exists()


def test_plots_for_every_report(tmp_path):
    assert main(["optimize", "--problem", "nk", "--instance", str(NK_SMALL), "--side", "4", "--runs", "2",
                 "--generations", "10", "--beta", "0.2,1.0", "--plot", "--out", str(tmp_path)]) == 0
    assert main(["estimate-pij", "--problem", "nk", "--instance", str(NK_SMALL), "--side", "4", "--runs", "1",
                 "--generations", "40", "--window", "10", "--plot", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "performance.png").exists() and (tmp_path / "pij.png").exists()


def test_floats_round_trip_losslessly(tmp_path):
    values = [0.1, 1 / 3, 2.0**-40, 6144.0, np.float64(np.pi)]
    path = write_csv(tmp_path / "x.csv", ("v",), [(v,) for v in values])
    assert [float(r["v"]) for r in read_csv(path)] == [float(v) for v in values]
    assert format_value(None) == "undefined"
    assert format_value(np.int64(3)) == "3"


def test_module_entry_point(tmp_path):
    result = subprocess.run(
        [sys.executable, "-m", "centric_cea", "oracle", "--qap", str(QAP_TINY), "--out", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert result.returncode == 0, result.stderr
    assert "tiny3.dat" in result.stdout


def test_takeover_accepts_beta_range(tmp_path):
    assert main(["takeover", "--side", "3", "--beta", "0:0.5:1", "--runs", "2", "--max-generations", "10",
                 "--out", str(tmp_path)]) == 0
    assert {r["beta"] for r in read_csv(tmp_path / "matings.csv")} == {"0.0", "0.5", "1.0"}
