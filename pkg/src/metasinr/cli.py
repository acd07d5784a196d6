"""Command-line entry point: ``metasinr moments|meta|sweep|simulate``."""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np

from . import __version__
from .analytic import (
    UnsupportedModelError,
    UnsupportedOrderError,
    beta_approx_ccdf,
    exact_meta_ccdf,
    exact_supported,
    moments,
)
from .channel import linear_to_db
from .config import ConfigError, ScenarioConfig, load_config
from .quadrature import QuadratureError
from .simulation import AssocClass, meta_from_links, simulate_links

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_UNSUPPORTED = 0, 2, 3, 4


def _fmt(x) -> str:
    if x is None or x == "":
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _db(theta: float) -> float:
    return round(float(linear_to_db(theta)), 9)


class _Table:
    def __init__(self, header):
        self.header = list(header)
        self.rows = []

    def add(self, **values):
        unknown = set(values) - set(self.header)
        if unknown:
            raise KeyError(f"unexpected columns {sorted(unknown)}")
        self.rows.append([_fmt(values.get(col, "")) for col in self.header])

    def render(self, meta: dict) -> str:
        buf = io.StringIO()
        for key, value in meta.items():
            buf.write(f"# {key}: {value}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.header)
        writer.writerows(self.rows)
        return buf.getvalue()


def _pmap(fn, items, threads: int):
    items = list(items)
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _terms_text(terms: dict) -> str:
    return ";".join(f"{k}={float(np.real(v)):.9g}" for k, v in terms.items())


# ---------------------------------------------------------------------------
# commands


def cmd_moments(cfg: ScenarioConfig, threads: int = 1) -> _Table:
    sc = cfg.scenario
    table = _Table(["model", "env", "theta_db", "m1", "m2", "var", "method", "terms", "m1_se", "var_se",
                    "runtime_ms"])
    analytic = [m for m in cfg.methods if m in ("beta", "gilpelaez", "noise_limited")]

    def run(theta):
        out = []
        if analytic and any(m != "noise_limited" for m in analytic):
            t0 = time.perf_counter()
            m1, m2 = moments(sc, theta, [1, 2], typo_form=cfg.typo_form)
            out.append(("analytic", m1, m2, time.perf_counter() - t0))
        if "noise_limited" in cfg.methods:
            t0 = time.perf_counter()
            m1, m2 = moments(sc, theta, [1, 2], noise_limited=True)
            out.append(("noise_limited", m1, m2, time.perf_counter() - t0))
        return out

    for theta, results in zip(cfg.thetas, _pmap(run, cfg.thetas, threads)):
        for method, m1, m2, dt in results:
            a, b = float(np.real(m1.total)), float(np.real(m2.total))
            table.add(model=sc.model, env=cfg.env_name, theta_db=_db(theta), m1=a, m2=b, var=b - a * a,
                      method=method, terms=_terms_text(m1.terms), runtime_ms=round(dt * 1e3, 1))
    if "simulate" in cfg.methods:
        links = simulate_links(sc, cfg.thetas, cfg.n_realizations, cfg.seed, window=cfg.window(), threads=threads)
        for i, theta in enumerate(cfg.thetas):
            em = meta_from_links(links, i, cfg.gamma)
            table.add(model=sc.model, env=cfg.env_name, theta_db=_db(theta), m1=em.m1, m2=em.m2,
                      var=em.variance, method="empirical", m1_se=em.m1_se, var_se=em.var_se)
    return table


def cmd_meta(cfg: ScenarioConfig, threads: int = 1) -> _Table:
    sc = cfg.scenario
    gamma = np.asarray(cfg.gamma)
    if "gilpelaez" in cfg.methods and not exact_supported(sc):
        raise UnsupportedModelError(
            "gilpelaez needs complex-order moments: only TBS-only networks or m_l = m_n = 1 are supported; "
            "use the beta method"
        )
    table = _Table(["model", "env", "theta_db", "gamma", "ccdf", "method", "se", "runtime_ms"])

    def run(theta):
        curves = []
        if "beta" in cfg.methods:
            t0 = time.perf_counter()
            m1, m2 = moments(sc, theta, [1, 2], typo_form=cfg.typo_form)
            curve = beta_approx_ccdf(float(np.real(m1.total)), float(np.real(m2.total)), gamma, theta)
            curves.append((curve, time.perf_counter() - t0))
        if "noise_limited" in cfg.methods:
            t0 = time.perf_counter()
            m1, m2 = moments(sc, theta, [1, 2], noise_limited=True)
            curve = beta_approx_ccdf(float(m1.total), float(m2.total), gamma, theta)
            curves.append((replace(curve, method="beta_noise_limited"), time.perf_counter() - t0))
        if "gilpelaez" in cfg.methods:
            t0 = time.perf_counter()
            curves.append((exact_meta_ccdf(sc, theta, gamma, typo_form=cfg.typo_form), time.perf_counter() - t0))
        return curves

    analytic = _pmap(run, cfg.thetas, threads)
    empirical = None
    if "simulate" in cfg.methods:
        links = simulate_links(sc, cfg.thetas, cfg.n_realizations, cfg.seed, window=cfg.window(), threads=threads)
        empirical = [meta_from_links(links, i, gamma) for i in range(len(cfg.thetas))]

    for i, theta in enumerate(cfg.thetas):
        beta_curve = None
        for curve, dt in analytic[i]:
            if curve.method == "beta":
                beta_curve = curve
            for g, v in zip(curve.gamma, curve.ccdf):
                table.add(model=sc.model, env=cfg.env_name, theta_db=_db(theta), gamma=float(g), ccdf=float(v),
                          method=curve.method, runtime_ms=round(dt * 1e3, 1))
        if empirical is not None:
            em = empirical[i]
            n = em.n_links
            for g, v in zip(em.gamma, em.ccdf):
                se = float(np.sqrt(max(v * (1 - v), 0.0) / n))
                table.add(model=sc.model, env=cfg.env_name, theta_db=_db(theta), gamma=float(g), ccdf=float(v),
                          method="empirical", se=se)
            if beta_curve is not None:
                gap = float(np.max(np.abs(beta_curve.ccdf - em.ccdf)))
                table.add(model=sc.model, env=cfg.env_name, theta_db=_db(theta), ccdf=gap,
                          method="beta_vs_empirical_max_gap")
    return table


def sweep_points(cfg: ScenarioConfig, threads: int = 1) -> list[dict]:
    """One evaluation per sweep grid point, in grid order."""
    sw = cfg.sweep
    if sw is None:
        raise ConfigError("config.sweep: required by the sweep command")
    if not sw.grid:
        raise ConfigError("config.sweep.grid: grid is empty")
    base = cfg.scenario

    def setup(value):
        sc, theta, gamma = base, sw.theta, sw.gamma
        if sw.axis == "altitude":
            sc = base.with_altitude(value)
        elif sw.axis == "density":
            sc = base.with_uav_density(value)
        elif sw.axis == "theta":
            theta = value
        else:
            gamma = value
        return sc, theta, gamma

    def run(value):
        sc, theta, gamma = setup(value)
        if sw.method == "simulate":
            links = simulate_links(sc, [theta], cfg.n_realizations, cfg.seed, threads=1)
            em = meta_from_links(links, 0, [gamma])
            return {"value": value, "theta": theta, "gamma": gamma, "m1": em.m1, "m2": em.m2,
                    "ccdf": float(em.ccdf[0]), "method": "empirical", "model": sc.model}
        m1, m2 = moments(sc, theta, [1, 2], typo_form=cfg.typo_form)
        a, b = float(np.real(m1.total)), float(np.real(m2.total))
        curve = beta_approx_ccdf(a, b, [gamma], theta)
        return {"value": value, "theta": theta, "gamma": gamma, "m1": a, "m2": b,
                "ccdf": float(curve.ccdf[0]), "method": "beta", "model": sc.model}

    return _pmap(run, sw.grid, threads)


def cmd_sweep(cfg: ScenarioConfig, threads: int = 1) -> _Table:
    points = sweep_points(cfg, threads)
    sw = cfg.sweep
    best = int(np.argmax([p["ccdf"] for p in points]))
    table = _Table(["axis", "value", "model", "env", "theta_db", "gamma", "m1", "m2", "ccdf", "method", "argmax",
                    "density_ratio"])
    lam_t = cfg.scenario.deployment.tbs_density
    for i, p in enumerate(points):
        value = p["value"]
        ratio = value / lam_t if sw.axis == "density" and lam_t > 0 else ""
        if sw.axis == "density":
            value = value * 1e6  # report per km^2
        elif sw.axis == "theta":
            value = _db(value)
        table.add(axis=sw.axis, value=value, model=p["model"], env=cfg.env_name, theta_db=_db(p["theta"]),
                  gamma=p["gamma"], m1=p["m1"], m2=p["m2"], ccdf=p["ccdf"], method=p["method"],
                  argmax=int(i == best), density_ratio=ratio)
    return table


def cmd_simulate(cfg: ScenarioConfig, threads: int = 1) -> _Table:
    sc = cfg.scenario
    links = simulate_links(sc, cfg.thetas, cfg.n_realizations, cfg.seed, window=cfg.window(), threads=threads)
    table = _Table(["model", "env", "theta_db", "quantity", "gamma", "value", "se"])
    for i, theta in enumerate(cfg.thetas):
        em = meta_from_links(links, i, cfg.gamma)
        row = dict(model=sc.model, env=cfg.env_name, theta_db=_db(theta))
        table.add(**row, quantity="m1", value=em.m1, se=em.m1_se)
        table.add(**row, quantity="m2", value=em.m2, se=em.m2_se)
        table.add(**row, quantity="var", value=em.variance, se=em.var_se)
        table.add(**row, quantity="n_links", value=em.n_links)
        for g, v in zip(em.gamma, em.ccdf):
            table.add(**row, quantity="ccdf", gamma=float(g), value=float(v),
                      se=float(np.sqrt(max(v * (1 - v), 0.0) / em.n_links)))
        for cls in AssocClass:
            name = cls.name.lower()
            table.add(**row, quantity=f"fraction_{name}", value=em.class_fractions[name])
    return table


COMMANDS = {"moments": cmd_moments, "meta": cmd_meta, "sweep": cmd_sweep, "simulate": cmd_simulate}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="metasinr", description="SINR meta distribution of UAV-assisted networks")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="JSON scenario file")
    parser.add_argument("--out", help="CSV output path (default: stdout)")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("--threads", type=int, help="worker threads (default: $METASINR_THREADS or 1)")
    parser.add_argument("--typo-form", choices=("repaired", "printed"), help="UAV interference functional form")
    return parser


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    threads = args.threads
    if threads is None:
        env = os.environ.get("METASINR_THREADS")
        try:
            threads = int(env) if env else 1
        except ValueError:
            print(f"error: METASINR_THREADS must be an integer, got {env!r}", file=stderr)
            return EXIT_CONFIG
    if threads < 1:
        print("error: --threads must be at least 1", file=stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config)
        overrides = {}
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed: expected a nonnegative integer")
            overrides["seed"] = args.seed
        if args.typo_form is not None:
            overrides["typo_form"] = args.typo_form
        cfg = replace(cfg, **overrides)
        table = COMMANDS[args.command](cfg, threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=stderr)
        return EXIT_CONFIG
    except (UnsupportedModelError, UnsupportedOrderError) as exc:
        print(f"unsupported: {exc}", file=stderr)
        return EXIT_UNSUPPORTED
    except (QuadratureError, ArithmeticError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=stderr)
        return EXIT_NUMERIC

    meta = {"metasinr": __version__, "command": args.command, "seed": cfg.seed, "config_sha256": cfg.digest(),
            "typo_form": cfg.typo_form}
    text = table.render(meta)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    return EXIT_OK


def main(argv=None) -> int:
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
