"""JSON scenario configuration.

dB quantities appear only in the file, under keys ending in ``_db``, and
densities only per km^2 under keys ending in ``_per_km2``.  Loading converts
everything to linear SI units once; ``to_dict`` writes linear keys back so a
load/serialize/load cycle reproduces every scalar exactly.  Sweep grids keep
their file units (per km^2, dB) and round-trip to float rounding.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .channel import ENVIRONMENTS, RadioParams, db_to_linear, environment, linear_to_db
from .geometry import Deployment, McpClusters, PppUavs, TbsOnly, Window
from .scenario import MODELS, PER_KM2, Scenario

METHODS = ("beta", "gilpelaez", "simulate", "noise_limited")
SWEEP_AXES = ("altitude", "density", "theta", "gamma")
TYPO_FORMS = ("repaired", "printed")


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    grid: tuple
    gamma: float = 0.9
    theta: float = 1.0
    method: str = "beta"


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: Scenario
    thetas: tuple = (1.0,)
    gamma: tuple = tuple(np.round(np.arange(1, 100) / 100.0, 2))
    methods: tuple = ("beta",)
    scenario1: bool = False
    seed: int = 0
    n_realizations: int = 2000
    user_region_radius: float = 1000.0
    bs_region_radius: float | None = None
    guard_scale: float = 1.0
    typo_form: str = "repaired"
    sweep: SweepSpec | None = None
    env_name: str = "suburban"

    @property
    def model(self) -> str:
        return self.scenario.model

    def window(self) -> Window:
        sc = self.scenario
        if self.bs_region_radius is not None:
            return Window(self.user_region_radius, self.bs_region_radius)
        return Window.guarded(sc.deployment, sc.env, self.user_region_radius, self.guard_scale)

    def to_dict(self) -> dict:
        sc, r = self.scenario, self.scenario.radio
        var = sc.deployment.variant
        dep = {"tbs_density": sc.deployment.tbs_density, "users_per_cluster": sc.users_per_cluster,
               "user_density": sc.user_density}
        if not isinstance(var, TbsOnly):
            dep["uav_density"] = var.density
            dep["h"] = var.h
        if isinstance(var, McpClusters):
            dep["r_c"] = var.r_c
        out = {
            "model": sc.model,
            "environment": self.env_name if self.env_name in ENVIRONMENTS else {"e1": sc.env.e1, "e2": sc.env.e2},
            "deployment": dep,
            "radio": {"rho_u": r.rho_u, "rho_t": r.rho_t, "alpha_l": r.alpha_l, "alpha_n": r.alpha_n,
                      "alpha_t": r.alpha_t, "m_l": r.m_l, "m_n": r.m_n, "eta_l": r.eta_l, "eta_n": r.eta_n,
                      "sigma2": r.sigma2},
            "theta": list(self.thetas),
            "gamma": list(self.gamma),
            "methods": list(self.methods),
            "scenario1": False,
            "seed": self.seed,
            "n_realizations": self.n_realizations,
            "window": {"user_region_radius": self.user_region_radius, "bs_region_radius": self.bs_region_radius,
                       "guard_scale": self.guard_scale},
            "typo_form": self.typo_form,
        }
        if self.sweep is not None:
            s = self.sweep
            grid = list(s.grid)
            if s.axis == "density":
                grid = [g / PER_KM2 for g in grid]
            elif s.axis == "theta":
                grid = [float(linear_to_db(g)) for g in grid]
            out["sweep"] = {"axis": s.axis, "grid": grid, "gamma": s.gamma, "theta": s.theta,
                            "method": s.method}
        return out

    def digest(self) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


# ---------------------------------------------------------------------------
# parsing helpers


def _take(d: dict, path: str, allowed: set):
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"{path}: unknown field(s) {sorted(unknown)}")


def _num(d: dict, key: str, path: str, default=None, *, per_km2=False, db=False):
    """Read ``key`` in linear form, or its ``_db`` / ``_per_km2`` variant."""
    variants = [key]
    if db:
        variants.append(key + "_db")
    if per_km2:
        variants.append(key + "_per_km2")
    present = [v for v in variants if v in d]
    if len(present) > 1:
        raise ConfigError(f"{path}.{key}: give only one of {present}")
    if not present:
        return default
    name = present[0]
    value = d[name]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}.{name}: expected a number, got {value!r}")
    value = float(value)
    if not np.isfinite(value):
        raise ConfigError(f"{path}.{name}: must be finite")
    if name.endswith("_db"):
        return db_to_linear(value)
    if name.endswith("_per_km2"):
        return value * PER_KM2
    return value


def _num_list(d: dict, key: str, path: str, default, *, db=False):
    present = [k for k in ((key, key + "_db") if db else (key,)) if k in d]
    if len(present) > 1:
        raise ConfigError(f"{path}: give only one of {present}")
    if not present:
        return default
    name = present[0]
    raw = d[name]
    if isinstance(raw, dict):
        try:
            start, stop, step = float(raw["start"]), float(raw["stop"]), float(raw["step"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"{path}.{name}: range needs numeric start/stop/step") from exc
        if step <= 0:
            raise ConfigError(f"{path}.{name}.step: must be positive")
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        raw = list(np.round(start + step * np.arange(n), 12))
    if isinstance(raw, (int, float)) and not isinstance(raw, bool):
        raw = [raw]
    if not isinstance(raw, list) or not raw:
        raise ConfigError(f"{path}.{name}: expected a non-empty list of numbers")
    try:
        vals = [float(v) for v in raw]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}.{name}: expected numbers") from exc
    if name.endswith("_db"):
        vals = [db_to_linear(v) for v in vals]
    return tuple(vals)


def parse_config(doc: dict) -> ScenarioConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config: top level must be a JSON object")
    _take(doc, "config", {"model", "environment", "deployment", "radio", "theta", "theta_db", "gamma",
                          "methods", "scenario1", "seed", "n_realizations", "window", "typo_form", "sweep"})
    model = doc.get("model", "mcp")
    if model not in MODELS:
        raise ConfigError(f"config.model: expected one of {MODELS}, got {model!r}")

    env_raw = doc.get("environment", "suburban")
    try:
        env = environment(env_raw)
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"config.environment: {exc}") from exc
    env_name = env.name if isinstance(env_raw, str) else "custom"

    dep = doc.get("deployment", {})
    if not isinstance(dep, dict):
        raise ConfigError("config.deployment: expected an object")
    _take(dep, "config.deployment", {"tbs_density", "tbs_density_per_km2", "uav_density", "uav_density_per_km2",
                                     "h", "r_c", "users_per_cluster", "user_density", "user_density_per_km2"})
    p = "config.deployment"
    lam_t = _num(dep, "tbs_density", p, PER_KM2, per_km2=True)
    lam_u = _num(dep, "uav_density", p, PER_KM2, per_km2=True)
    h = _num(dep, "h", p, 100.0)
    r_c = _num(dep, "r_c", p, 100.0)
    upc = _num(dep, "users_per_cluster", p, 5.0)
    lam_user = _num(dep, "user_density", p, 5.0 * PER_KM2, per_km2=True)

    radio_doc = doc.get("radio", {})
    if not isinstance(radio_doc, dict):
        raise ConfigError("config.radio: expected an object")
    keys = ("rho_u", "rho_t", "alpha_l", "alpha_n", "alpha_t", "m_l", "m_n", "eta_l", "eta_n", "sigma2")
    _take(radio_doc, "config.radio", set(keys) | {"eta_l_db", "eta_n_db", "sigma2_db", "rho_u_db", "rho_t_db"})
    defaults = RadioParams()
    radio_kw = {}
    for k in keys:
        v = _num(radio_doc, k, "config.radio", getattr(defaults, k), db=k in ("eta_l", "eta_n", "sigma2", "rho_u", "rho_t"))
        radio_kw[k] = v

    scenario1 = doc.get("scenario1", False)
    if not isinstance(scenario1, bool):
        raise ConfigError("config.scenario1: expected true or false")
    try:
        radio = RadioParams(**radio_kw)
        if model == "mcp":
            variant = McpClusters(lam_u, r_c, h)
        elif model == "ppp":
            variant = PppUavs(lam_u, h)
        else:
            variant = TbsOnly()
        sc = Scenario(Deployment(variant, lam_t), env, radio, upc, lam_user)
        if scenario1:
            if model == "tbs_only":
                raise ValueError("scenario1 needs a UAV deployment")
            sc = sc.grounded()
    except ValueError as exc:
        raise ConfigError(f"config: {exc}") from exc

    thetas = _num_list(doc, "theta", "config", (1.0,), db=True)
    if any(t <= 0 for t in thetas):
        raise ConfigError("config.theta: thresholds must be positive")
    gamma = _num_list(doc, "gamma", "config", ScenarioConfig.gamma)
    if any(not 0.0 < g < 1.0 for g in gamma):
        raise ConfigError("config.gamma: values must lie strictly inside (0, 1)")
    if any(b <= a for a, b in zip(gamma, gamma[1:])):
        raise ConfigError("config.gamma: values must be strictly increasing")

    methods = doc.get("methods", ["beta"])
    if isinstance(methods, str):
        methods = [methods]
    if not isinstance(methods, list) or not methods or any(m not in METHODS for m in methods):
        raise ConfigError(f"config.methods: expected a non-empty list drawn from {METHODS}")

    seed = doc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError("config.seed: expected a nonnegative integer")
    n_real = doc.get("n_realizations", 2000)
    if isinstance(n_real, bool) or not isinstance(n_real, int) or n_real < 1:
        raise ConfigError("config.n_realizations: expected a positive integer")

    win = doc.get("window", {})
    if not isinstance(win, dict):
        raise ConfigError("config.window: expected an object")
    _take(win, "config.window", {"user_region_radius", "bs_region_radius", "guard_scale"})
    user_r = _num(win, "user_region_radius", "config.window", 1000.0)
    bs_r = win.get("bs_region_radius")
    if bs_r is not None:
        bs_r = _num(win, "bs_region_radius", "config.window")
    guard = _num(win, "guard_scale", "config.window", 1.0)
    try:
        if bs_r is not None:
            Window(user_r, bs_r)
        elif user_r <= 0 or guard <= 0:
            raise ValueError("window radius and guard scale must be positive")
    except ValueError as exc:
        raise ConfigError(f"config.window: {exc}") from exc

    typo = doc.get("typo_form", "repaired")
    if typo not in TYPO_FORMS:
        raise ConfigError(f"config.typo_form: expected one of {TYPO_FORMS}")

    sweep = None
    if "sweep" in doc:
        sweep = _parse_sweep(doc["sweep"], model)

    return ScenarioConfig(sc, thetas, gamma, tuple(methods), scenario1, seed, n_real, user_r, bs_r, guard,
                          typo, sweep, env_name)


def _parse_sweep(s, model: str) -> SweepSpec:
    if not isinstance(s, dict):
        raise ConfigError("config.sweep: expected an object")
    _take(s, "config.sweep", {"axis", "grid", "gamma", "theta", "theta_db", "method"})
    axis = s.get("axis")
    if axis not in SWEEP_AXES:
        raise ConfigError(f"config.sweep.axis: expected one of {SWEEP_AXES}")
    if axis in ("altitude", "density") and model == "tbs_only":
        raise ConfigError(f"config.sweep.axis: {axis} sweeps need a UAV deployment")
    if "grid" not in s:
        raise ConfigError("config.sweep.grid: missing")
    if isinstance(s["grid"], list) and not s["grid"]:
        raise ConfigError("config.sweep.grid: grid is empty")
    grid = _num_list(s, "grid", "config.sweep", None)
    if axis == "density":
        grid = tuple(g * PER_KM2 for g in grid)
    if axis == "theta":
        # theta grids are given in dB
        grid = tuple(db_to_linear(g) for g in grid)
    gamma = _num(s, "gamma", "config.sweep", 0.9)
    theta = _num(s, "theta", "config.sweep", 1.0, db=True)
    method = s.get("method", "beta")
    if method not in ("beta", "simulate"):
        raise ConfigError("config.sweep.method: expected 'beta' or 'simulate'")
    if not 0 < gamma < 1:
        raise ConfigError("config.sweep.gamma: must lie inside (0, 1)")
    return SweepSpec(axis, grid, gamma, theta, method)


def load_config(path) -> ScenarioConfig:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return parse_config(doc)


def with_overrides(cfg: ScenarioConfig, **kwargs) -> ScenarioConfig:
    return replace(cfg, **{k: v for k, v in kwargs.items() if v is not None})
