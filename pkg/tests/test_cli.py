import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from metasinr import __version__
from metasinr.cli import run


def write(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def invoke(argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(argv, out, err)
    return code, out.getvalue(), err.getvalue()


def parse(text):
    meta = dict(line[2:].split(": ", 1) for line in text.splitlines() if line.startswith("# "))
    rows = list(csv.DictReader(line for line in text.splitlines() if not line.startswith("#")))
    return meta, rows


def test_moments_tbs_only_reference(tmp_path):
    cfg = write(tmp_path, {"model": "tbs_only", "radio": {"sigma2": 0.0}, "theta_db": [0]})
    code, out, _ = invoke(["moments", "--config", cfg])
    assert code == 0
    meta, rows = parse(out)
    assert meta["metasinr"] == __version__ and len(meta["config_sha256"]) == 64 and meta["seed"] == "0"
    assert float(rows[0]["m1"]) == pytest.approx(0.5602, abs=1e-3)
    assert list(rows[0])[:7] == ["model", "env", "theta_db", "m1", "m2", "var", "method"]


def test_moments_variance_column(tmp_path):
    cfg = write(tmp_path, {"model": "ppp", "environment": "highrise", "theta_db": [-10, 0, 10, 20]})
    _, rows = parse(invoke(["moments", "--config", cfg])[1])
    for r in rows:
        assert float(r["var"]) == pytest.approx(float(r["m2"]) - float(r["m1"]) ** 2, abs=1e-12)
        assert float(r["var"]) >= 0


def test_moments_cross_mode(tmp_path):
    cfg = write(tmp_path, {"model": "mcp", "theta_db": [-10], "methods": ["beta", "simulate"],
                           "n_realizations": 400, "seed": 4})
    _, rows = parse(invoke(["moments", "--config", cfg])[1])
    by = {r["method"]: r for r in rows}
    assert float(by["analytic"]["m1"]) == pytest.approx(float(by["empirical"]["m1"]), abs=0.03)
    assert float(by["empirical"]["m1_se"]) > 0


def test_meta_curves_are_monotone(tmp_path):
    cfg = write(tmp_path, {"model": "mcp", "environment": "urban", "theta_db": [0, 10],
                           "methods": ["beta", "noise_limited", "simulate"], "n_realizations": 100,
                           "gamma": {"start": 0.05, "stop": 0.95, "step": 0.05}})
    code, out, _ = invoke(["meta", "--config", cfg])
    assert code == 0
    _, rows = parse(out)
    curves = {}
    for r in rows:
        if r["method"] == "beta_vs_empirical_max_gap":
            assert 0 <= float(r["ccdf"]) <= 1
            continue
        curves.setdefault((r["theta_db"], r["method"]), []).append((float(r["gamma"]), float(r["ccdf"])))
    assert {m for _, m in curves} == {"beta", "beta_noise_limited", "empirical"}
    for pts in curves.values():
        g, c = np.array(pts).T
        assert np.all(np.diff(g) > 0) and np.all(np.diff(c) <= 1e-12)
    gaps = [r for r in rows if r["method"] == "beta_vs_empirical_max_gap"]
    assert len(gaps) == 2


def test_meta_gil_pelaez_refusal(tmp_path):
    cfg = write(tmp_path, {"model": "mcp", "methods": ["gilpelaez"]})
    code, out, err = invoke(["meta", "--config", cfg])
    assert code == 4 and out == ""
    assert "m_l = m_n = 1" in err


def test_meta_gil_pelaez_tbs_only(tmp_path):
    cfg = write(tmp_path, {"model": "tbs_only", "methods": ["gilpelaez", "beta"], "theta_db": [10],
                           "gamma": [0.2, 0.5, 0.8]})
    code, out, _ = invoke(["meta", "--config", cfg])
    assert code == 0
    _, rows = parse(out)
    gp = [float(r["ccdf"]) for r in rows if r["method"] == "gil_pelaez"]
    beta = [float(r["ccdf"]) for r in rows if r["method"] == "beta"]
    assert np.max(np.abs(np.subtract(gp, beta))) <= 0.02


def test_sweep_theta_monotone(tmp_path):
    cfg = write(tmp_path, {"model": "ppp", "environment": "urban",
                           "sweep": {"axis": "theta", "grid": [-10, -5, 0, 5, 10, 15, 20], "gamma": 0.5}})
    _, rows = parse(invoke(["sweep", "--config", cfg])[1])
    c = [float(r["ccdf"]) for r in rows]
    assert np.all(np.diff(c) <= 1e-12)
    assert sum(int(r["argmax"]) for r in rows) == 1


def test_sweep_altitude_interior_optimum(tmp_path):
    cfg = write(tmp_path, {"model": "mcp", "environment": "suburban",
                           "sweep": {"axis": "altitude", "grid": {"start": 20, "stop": 500, "step": 40},
                                     "theta_db": 0, "gamma": 0.9}})
    _, rows = parse(invoke(["sweep", "--config", cfg, "--threads", "3"])[1])
    best = [i for i, r in enumerate(rows) if r["argmax"] == "1"]
    assert len(rows) == 13 and best and 0 < best[0] < 12


def test_sweep_density_reports_ratio(tmp_path):
    cfg = write(tmp_path, {"model": "ppp", "sweep": {"axis": "density", "grid": [0.5, 1, 2]}})
    _, rows = parse(invoke(["sweep", "--config", cfg])[1])
    assert [float(r["density_ratio"]) for r in rows] == pytest.approx([0.5, 1, 2])


def test_sweep_requires_grid(tmp_path):
    cfg = write(tmp_path, {"model": "mcp"})
    code, _, err = invoke(["sweep", "--config", cfg])
    assert code == 2 and "config.sweep" in err


def test_simulate_reproducible(tmp_path, monkeypatch):
    cfg = write(tmp_path, {"model": "ppp", "environment": "dense_urban", "theta_db": [0, 10],
                           "n_realizations": 30, "seed": 21})
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert invoke(["simulate", "--config", cfg, "--out", str(a), "--threads", "1"])[0] == 0
    monkeypatch.setenv("METASINR_THREADS", "4")
    assert invoke(["simulate", "--config", cfg, "--out", str(b)])[0] == 0
    assert a.read_bytes() == b.read_bytes()
    c = tmp_path / "c.csv"
    invoke(["simulate", "--config", cfg, "--out", str(c), "--seed", "22"])
    assert c.read_bytes() != a.read_bytes()


def test_simulate_fractions(tmp_path):
    cfg = write(tmp_path, {"model": "mcp", "environment": "urban", "n_realizations": 40})
    _, rows = parse(invoke(["simulate", "--config", cfg])[1])
    frac = [float(r["value"]) for r in rows if r["quantity"].startswith("fraction_")]
    assert len(frac) == 5 and sum(frac) == pytest.approx(1.0)


def test_simulate_highrise_gain_over_tbs_only(tmp_path):
    common = {"environment": "highrise", "theta_db": [0], "gamma": [0.8], "n_realizations": 600, "seed": 3}
    ccdf = {}
    for model in ("mcp", "tbs_only"):
        cfg = write(tmp_path, dict(common, model=model), f"{model}.json")
        _, rows = parse(invoke(["simulate", "--config", cfg])[1])
        ccdf[model] = next(float(r["value"]) for r in rows if r["quantity"] == "ccdf")
    assert ccdf["mcp"] >= 1.6 * ccdf["tbs_only"]


def test_config_error_exit_code(tmp_path):
    cfg = write(tmp_path, {"radio": {"alpha_x": 3}})
    code, out, err = invoke(["moments", "--config", cfg])
    assert code == 2 and out == "" and "config.radio" in err


def test_bad_thread_env(tmp_path, monkeypatch):
    monkeypatch.setenv("METASINR_THREADS", "many")
    assert invoke(["moments", "--config", write(tmp_path, {})])[0] == 2


def test_typo_form_flag(tmp_path):
    cfg = write(tmp_path, {"model": "ppp"})
    rep = parse(invoke(["moments", "--config", cfg])[1])
    pri = parse(invoke(["moments", "--config", cfg, "--typo-form", "printed"])[1])
    assert rep[0]["typo_form"] == "repaired" and pri[0]["typo_form"] == "printed"
    assert rep[1][0]["m1"] != pri[1][0]["m1"]


def test_console_script(tmp_path):
    cfg = write(tmp_path, {"model": "tbs_only"})
    res = subprocess.run([sys.executable, "-m", "metasinr.cli", "moments", "--config", cfg],
                         capture_output=True, text=True, check=True)
    assert res.stdout.startswith("# metasinr:")
