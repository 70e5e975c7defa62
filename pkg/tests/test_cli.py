import csv
import io
import json
import subprocess
import sys

import pytest

from spikedkpz.cli import ConfigError, main, parse_grid, parse_points


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr().out
    body = [line for line in out.splitlines() if not line.startswith("#")]
    rows = list(csv.DictReader(io.StringIO("\n".join(body))))
    return code, rows, out


def test_parse_helpers():
    assert parse_grid("-2:2:0.5") == pytest.approx([-2 + 0.5 * i for i in range(9)])
    assert parse_grid("1,2.5") == [1.0, 2.5]
    assert parse_grid("") == []
    with pytest.raises(ConfigError):
        parse_grid("1:0:0.5")
    assert parse_points("-1+1j,-0.5-0.5j") == [(-1 + 1j, -0.5 - 0.5j)]


def test_dist_grid_monotone(capsys):
    code, rows, out = run(["dist", "--r-grid", "-2:2:0.5"], capsys)
    assert code == 0 and len(rows) == 9
    vals = [float(r["F"]) for r in rows]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert "# dist: PASS" in out


def test_dist_single_point_spiked(capsys):
    code, rows, _ = run(["dist", "--b=-1", "--beta=1", "--r-grid", "0"], capsys)
    assert code == 0 and len(rows) == 1
    assert float(rows[0]["F"]) == pytest.approx(0.62600279414, abs=1e-9)


def test_dist_bad_spikes_is_config_error(capsys):
    assert main(["dist", "--b=2", "--beta=1"]) == 2


def test_non_convergence_exit_code(capsys):
    assert main(["dist", "--order", "8", "--r-grid", "-2"]) == 3


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"nonsense": 1}))
    assert main(["dist", "--config", str(cfg)]) == 2


def test_config_and_out_files(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"r_grid": [-1, 0, 1], "b": "-1", "beta": "1"}))
    code, rows, _ = run(["dist", "--config", str(cfg), "--out", str(tmp_path / "o")], capsys)
    assert code == 0 and len(rows) == 3
    report = json.loads((tmp_path / "o" / "report.json").read_text())
    assert report["experiment"] == "dist" and report["passed"]
    assert len((tmp_path / "o" / "rows.csv").read_text().strip().splitlines()) == 4


def test_verify_laplace_u_zero_and_seed(capsys):
    argv = ["verify-laplace", "--N", "9", "--tau", "9", "--a", "0", "--alpha", "1.5",
            "--u-grid", "0", "--samples", "50", "--grid-M", "90", "--refine-M", "180", "--seed", "4"]
    code, rows, out1 = run(argv, capsys)
    assert code == 0
    assert float(rows[0]["mc"]) == 1.0 and float(rows[0]["det"]) == 1.0
    _, _, out2 = run(argv, capsys)
    strip = lambda s: [line for line in s.splitlines() if "PASS" not in line]
    assert strip(out1) == strip(out2)


def test_verify_sigma_single_value(capsys):
    code, rows, out = run(["verify-sigma", "--sigmas", "0.25"], capsys)
    assert code == 0 and len(rows) == 1
    assert "no trend" in out


def test_verify_kernel_limit_single_n(capsys):
    code, rows, out = run(["verify-kernel-limit", "--N-list", "1000"], capsys)
    assert code == 0 and len(rows) == 5
    assert "ratio_to_8N" not in rows[0]
    assert "not assessed" in out


def test_sim_writes_samples(tmp_path, capsys):
    code, rows, _ = run(["sim", "--N", "10", "--samples", "20", "--out", str(tmp_path)], capsys)
    assert code == 0 and int(rows[0]["samples"]) == 20
    lines = (tmp_path / "samples.csv").read_text().split()
    assert len(lines) == 21
    assert json.loads((tmp_path / "samples.json").read_text())["seed"] == 0


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "spikedkpz", "dist", "--r-grid", "0"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "0.9693728283" in proc.stdout
