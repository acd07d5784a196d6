import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from metasinr.config import ConfigError, load_config, parse_config


def test_defaults_are_reference_table():
    cfg = parse_config({})
    r = cfg.scenario.radio
    assert (r.rho_u, r.rho_t, r.alpha_l, r.alpha_n, r.alpha_t) == (0.2, 10.0, 2.1, 4.0, 4.0)
    assert (r.m_l, r.m_n, r.eta_l, r.eta_n, r.sigma2) == (3, 1, 1.0, 0.01, 1e-9)
    assert cfg.scenario.deployment.tbs_density == pytest.approx(1e-6)
    assert cfg.model == "mcp" and cfg.thetas == (1.0,)


def test_db_and_per_km2_conversion():
    cfg = parse_config({"model": "ppp", "deployment": {"uav_density_per_km2": 3, "h": 50},
                        "radio": {"eta_n_db": -30, "sigma2_db": -100}, "theta_db": [-10, 0, 10]})
    assert cfg.scenario.deployment.uav_density == pytest.approx(3e-6)
    assert cfg.scenario.radio.eta_n == pytest.approx(1e-3)
    assert cfg.scenario.radio.sigma2 == pytest.approx(1e-10)
    assert cfg.thetas == pytest.approx((0.1, 1.0, 10.0))


def test_scenario1_grounds_uavs():
    cfg = parse_config({"scenario1": True, "radio": {"eta_n_db": -20}})
    assert cfg.scenario.h == 0.0
    assert cfg.scenario.radio.eta_l == cfg.scenario.radio.eta_n == 1.0


@pytest.mark.parametrize("doc, field", [
    ({"bogus": 1}, "config"),
    ({"model": "star"}, "config.model"),
    ({"radio": {"alpha_x": 2}}, "config.radio"),
    ({"radio": {"eta_l": 1, "eta_l_db": 0}}, "config.radio.eta_l"),
    ({"deployment": {"h": "tall"}}, "config.deployment.h"),
    ({"gamma": [0.5, 0.2]}, "config.gamma"),
    ({"gamma": [1.5]}, "config.gamma"),
    ({"seed": -1}, "config.seed"),
    ({"methods": ["magic"]}, "config.methods"),
    ({"typo_form": "other"}, "config.typo_form"),
    ({"sweep": {"axis": "altitude", "grid": []}}, "config.sweep.grid"),
    ({"model": "tbs_only", "sweep": {"axis": "altitude", "grid": [1]}}, "config.sweep.axis"),
])
def test_field_level_errors(doc, field):
    with pytest.raises(ConfigError) as info:
        parse_config(doc)
    assert field in str(info.value)


def test_range_grids():
    cfg = parse_config({"gamma": {"start": 0.1, "stop": 0.9, "step": 0.1},
                        "sweep": {"axis": "altitude", "grid": {"start": 20, "stop": 500, "step": 40}}})
    assert len(cfg.gamma) == 9 and cfg.gamma[-1] == pytest.approx(0.9)
    assert cfg.sweep.grid == tuple(float(x) for x in range(20, 501, 40))


def test_load_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(bad)


positive = st.floats(1e-3, 1e3, allow_nan=False)


@given(st.sampled_from(["mcp", "ppp", "tbs_only"]), positive, positive, st.floats(-40, 10), st.floats(-130, -60),
       st.lists(st.floats(-20, 30), min_size=1, max_size=4), st.integers(0, 2**31),
       st.sampled_from(["altitude", "density", "theta", "gamma"]))
def test_round_trip(model, lam, h, eta_db, noise_db, thetas_db, seed, axis):
    sweep_grid = {"altitude": [20.0, 60.5], "density": [0.3, 2.5], "theta": [-3.0, 7.0], "gamma": [0.2, 0.7]}
    if model == "tbs_only" and axis in ("altitude", "density"):
        axis = "theta"
    doc = {"model": model, "environment": "urban",
           "deployment": {"uav_density_per_km2": lam, "h": h, "tbs_density_per_km2": 1.7},
           "radio": {"eta_n_db": eta_db, "sigma2_db": noise_db, "m_l": 2},
           "theta_db": thetas_db, "seed": seed, "window": {"guard_scale": 1.5},
           "sweep": {"axis": axis, "grid": sweep_grid[axis]}}
    first = parse_config(doc)
    text = json.dumps(first.to_dict())
    second = parse_config(json.loads(text))
    assert second.scenario == first.scenario
    assert second.thetas == first.thetas and second.gamma == first.gamma
    assert second.seed == first.seed and second.window() == first.window()
    assert second.sweep.axis == first.sweep.axis
    assert second.sweep.grid == pytest.approx(first.sweep.grid, rel=1e-12)
    assert second.digest() == parse_config(json.loads(json.dumps(second.to_dict()))).digest()
