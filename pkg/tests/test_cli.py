import json
import math
import subprocess
import sys

import pytest

from collapsesim import __version__
from collapsesim.cli import main
from collapsesim.report import read_csv_records
from conftest import run_cli


def test_coarse_default_seed_42(tmp_path):
    doc = run_cli(tmp_path, "coarse", "--seed", "42")
    est = doc["summary"]["estimate"]
    assert doc["schema_version"] == 1
    assert doc["software_version"] == __version__
    assert est["samples"] == 10**5
    assert abs(est["mean"] - 0.5) <= 3 * est["std_error"]
    assert doc["records"][-1]["samples"] == 10**5
    assert doc["records"][-1]["mean"] == est["mean"]


def test_exact_mode_records(tmp_path):
    doc = run_cli(tmp_path, "exact", "--particles", "6", "--steps", "5", "--dt", "0.2")
    assert [r["step"] for r in doc["records"]] == [1, 2, 3, 4, 5]
    assert doc["summary"]["state_dim"] == 128
    assert doc["summary"]["max_norm_deviation"] <= 1e-12


def test_compare_mode_small(tmp_path):
    doc = run_cli(tmp_path, "compare", "--particles", "8", "--samples", "20000")
    s = doc["summary"]
    assert [r["path"] for r in doc["records"]] == ["exact", "coarse"]
    assert s["exact_probability"] == pytest.approx(s["exact_visibility_form"], abs=1e-12)
    assert s["within_3_std_error"]


def test_bench_exact_small_range(tmp_path):
    cfg = tmp_path / "bench.ini"
    cfg.write_text("mode = bench-exact\n[bench]\nn_min = 4\nn_max = 8\n")
    doc = run_cli(tmp_path, "bench-exact", "--config", str(cfg))
    dense = [r for r in doc["records"] if r["label"] == "exact-dense"]
    assert [r["size_param"] for r in dense] == [4, 5, 6, 7, 8]
    assert all(r["state_dim"] == 2 * 2 ** r["size_param"] for r in dense)
    growth = doc["timing"]["exact-dense"]
    assert growth["model"] == "exponential"
    assert set(growth) >= {"log_slope", "r_squared", "verdict", "median_ratio"}


def test_bench_coarse_small(tmp_path):
    cfg = tmp_path / "bench.ini"
    cfg.write_text("mode = bench-coarse\n[bench]\nm_values = 1000 2000 4000 8000\n")
    doc = run_cli(tmp_path, "bench-coarse", "--config", str(cfg))
    assert doc["summary"]["state_dims"] == [2, 2, 2, 2]
    assert doc["timing"]["coarse"]["model"] == "linear"


def test_csv_output(tmp_path):
    text = run_cli(tmp_path, "coarse", "--samples", "1000", "--format", "csv", name="out.csv")
    rows = read_csv_records(text)
    assert rows[-1]["samples"] == "1000"
    assert text.startswith("# schema_version: 1\n")


def test_stdout_output(capsys):
    assert main(["coarse", "--samples", "64"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["summary"]["estimate"]["samples"] == 64


def test_config_error_exit_code_and_no_file(tmp_path, capsys):
    out = tmp_path / "out.json"
    assert main(["coarse", "--samples", "0", "--out", str(out)]) == 2
    assert "samples" in capsys.readouterr().err
    assert not out.exists()


def test_bad_config_file_exit_code(tmp_path):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("mode = coarse\n[coarse]\nwindow1 = -1\n")
    assert main(["coarse", "--config", str(cfg)]) == 2


def test_unwritable_output_exit_code(tmp_path, capsys):
    out = tmp_path / "missing" / "out.json"
    assert main(["coarse", "--out", str(out)]) == 3
    assert "output" in capsys.readouterr().err
    assert not out.exists()
    assert not out.parent.exists()


def test_runtime_error_exit_code(tmp_path):
    # Passes config validation but exhausts the norm-bound Taylor series budget.
    cfg = tmp_path / "c.ini"
    cfg.write_text("mode = exact\n[apparatus]\nparticles = 2\npropagator = dense\n[coarse]\nabar1 = 1e300\n")
    out = tmp_path / "out.json"
    code = main(["exact", "--config", str(cfg), "--out", str(out)])
    assert code == 3
    assert not out.exists()


def test_module_entry_point(tmp_path):
    out = tmp_path / "o.json"
    proc = subprocess.run([sys.executable, "-m", "collapsesim", "coarse", "--samples", "10", "--out", str(out)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert math.isfinite(json.loads(out.read_text())["summary"]["estimate"]["mean"])
