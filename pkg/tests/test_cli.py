from __future__ import annotations

import csv
import math

import pytest

from gelfree.cli import fmt, main
from gelfree.config import ConfigError, build_config, parse_grid, read_config_file, thread_cap
from gelfree.laplace import LaplaceEvaluator
from gelfree.measure import MeasureSpec


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_minimal_flags_fill_defaults():
    cfg = build_config("analytic", flag_values={"k": "1", "measure": "mono"})
    assert cfg.k == 1.0 and cfg.measure.describe() == "mono"
    assert cfg.t_grid == tuple(sorted(cfg.t_grid))


@pytest.mark.parametrize("flags", [{"k": "-1"}, {"k": "abc"}, {"t_grid": "2,1"},
                                   {"measure": "gamma"}, {"order": "11"}, {"bogus": "1"}])
def test_bad_values_rejected(flags):
    with pytest.raises(ConfigError):
        build_config("analytic", flag_values=flags)


def test_grid_syntax():
    assert parse_grid("0.5,1,2") == (0.5, 1.0, 2.0)
    assert parse_grid("log:1e-2:1e2:5") == pytest.approx((0.01, 0.1, 1.0, 10.0, 100.0))
    assert parse_grid("lin:0:1:3") == (0.0, 0.5, 1.0)
    with pytest.raises(ConfigError):
        parse_grid("1,1")


def test_config_file(tmp_path):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("# comment\nk = 2\nmeasure=exp:1\n\nt-grid=0.5,1\n")
    values = read_config_file(cfg_file)
    cfg = build_config("analytic", values, {"k": "0.5"})
    assert cfg.k == 0.5  # flags win
    assert cfg.t_grid == (0.5, 1.0)
    cfg_file.write_text("k=1\nwhatever=3\n")
    with pytest.raises(ConfigError, match="whatever"):
        read_config_file(cfg_file)
    cfg_file.write_text("k=1\nseed=2\nk=3\n")
    with pytest.raises(ConfigError, match=":3:"):
        read_config_file(cfg_file)


def test_thread_cap(monkeypatch):
    monkeypatch.delenv("GELFREE_THREADS", raising=False)
    assert thread_cap() == 1
    monkeypatch.setenv("GELFREE_THREADS", "3")
    assert thread_cap() == 3
    monkeypatch.setenv("GELFREE_THREADS", "0")
    with pytest.raises(ConfigError):
        thread_cap()


def test_float_format():
    assert fmt(0.1) == "0.10000000000000001"
    assert float(fmt(math.pi)) == math.pi
    assert fmt(float("nan")) == "nan"


def test_analytic_csv(tmp_path):
    code = main(["analytic", "--k", "1", "--measure", "mono", "--t-grid", "0.5,2",
                 "--s-grid", "0,1", "--out-dir", str(tmp_path)])
    assert code == 0
    rows = _rows(tmp_path / "analytic.csv")
    assert rows[0] == ["t", "s", "L", "dL_ds_at_zero_if_s0"]
    assert len(rows) == 5
    ev = LaplaceEvaluator(MeasureSpec.monodisperse(), 1.0)
    t, s, val, d0 = (float(v) for v in rows[2])
    assert (t, s) == (0.5, 1.0) and val == ev(0.5, 1.0) and math.isnan(d0)
    assert float(rows[1][3]) == ev.dL_ds_at_zero(0.5)
    assert (tmp_path / "report.txt").exists()


def test_characteristics_csv(tmp_path):
    assert main(["characteristics", "--s0", "1", "--stride", "500", "--out-dir", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "characteristics.csv")
    assert rows[0] == ["t", "Sigma", "ell"]
    assert float(rows[1][1]) == 1.0
    assert float(rows[-1][1]) == 0.0 and float(rows[-1][2]) == 1.0


def test_selfsim_csv(tmp_path):
    assert main(["selfsim", "--k", "1", "--order", "12", "--grid", "0.5,1,2", "--out-dir", str(tmp_path)]) == 0
    L = _rows(tmp_path / "selfsim_L.csv")
    M = _rows(tmp_path / "selfsim_M.csv")
    assert L[0] == ["s", "L_star"] and M[0] == ["x", "M_star"]
    assert float(L[2][1]) == pytest.approx(0.442854401, abs=1e-9)
    assert 0 < float(M[1][1]) < float(M[3][1]) < 1


def test_simulate_outputs_and_determinism(tmp_path):
    args = ["simulate", "--k", "1", "--measure", "mono", "--n-particles", "2000", "--seed", "5",
            "--t-end", "1", "--observe-at", "0.5,1", "--s-grid", "0.5,1"]
    assert main(args + ["--out-dir", str(tmp_path / "a")]) == 0
    assert main(args + ["--out-dir", str(tmp_path / "b")]) == 0
    for name in ("simulate_laplace_s0.5.csv", "simulate_laplace_s1.csv", "simulate_mean_mass.csv",
                 "report.txt"):
        assert (tmp_path / "a" / name).read_bytes().replace(b"/a", b"/b") == \
            (tmp_path / "b" / name).read_bytes()
    rows = _rows(tmp_path / "a" / "simulate_laplace_s1.csv")
    assert rows[0] == ["time", "estimate", "std_error"] and len(rows) == 3


def test_simulate_replicates_parallel(tmp_path, monkeypatch):
    args = ["simulate", "--n-particles", "500", "--seed", "1", "--t-end", "0.5", "--replicates", "3",
            "--s-grid", "1"]
    monkeypatch.setenv("GELFREE_THREADS", "1")
    assert main(args + ["--out-dir", str(tmp_path / "serial")]) == 0
    monkeypatch.setenv("GELFREE_THREADS", "2")
    assert main(args + ["--out-dir", str(tmp_path / "pool")]) == 0
    assert (tmp_path / "serial" / "simulate_laplace_s1.csv").read_bytes() == \
        (tmp_path / "pool" / "simulate_laplace_s1.csv").read_bytes()


def test_simulate_gelation_reports_explosion(tmp_path):
    code = main(["simulate", "--k", "0", "--n-particles", "5000", "--t-end", "2", "--out-dir", str(tmp_path)])
    assert code == 3
    assert "ExplosionDetected" in (tmp_path / "report.txt").read_text()


def test_usage_errors(tmp_path, capsys):
    assert main(["analytic", "--k", "-1", "--out-dir", str(tmp_path)]) == 2
    assert main(["nonsense"]) == 2
    assert main(["analytic", "--config", str(tmp_path / "missing.cfg")]) == 2
    assert "error" in capsys.readouterr().err


def test_validate_subset(tmp_path, capsys):
    code = main(["validate", "--criteria", "3,6", "--out-dir", str(tmp_path)])
    assert code == 0
    text = (tmp_path / "report.txt").read_text()
    assert "[PASS] C03" in text and "[PASS] C06" in text
    body = text.split("# timing")[0]
    assert main(["validate", "--criteria", "3,6", "--out-dir", str(tmp_path / "again")]) == 0
    assert (tmp_path / "again" / "report.txt").read_text().split("# timing")[0] == \
        body.replace(str(tmp_path), str(tmp_path / "again"))


def test_validate_small_n_fails_monte_carlo(tmp_path):
    code = main(["validate", "--criteria", "8", "--n-particles", "100", "--out-dir", str(tmp_path)])
    assert code == 1
    line = [ln for ln in (tmp_path / "report.txt").read_text().splitlines() if "C08" in ln][0]
    assert "[FAIL]" in line and "SE=" in line


def test_validate_gelation_baseline(tmp_path):
    assert main(["validate", "--k", "0", "--criteria", "10", "--out-dir", str(tmp_path)]) == 0
