"""Monte Carlo ground truth for per-link success probabilities.

A realization freezes BS and user positions and all LoS states; only fading
is random.  Each measured link's conditional success probability is either
evaluated in product form (exact average over interferer fading, with the
gamma bound on Nakagami serving links) or estimated by drawing fading.

Interference from beyond the BS window is not dropped: the product form
multiplies in the PGFL of the exterior annulus, and the fading estimator adds
the exterior mean interference.
"""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .analytic import beta2
from .channel import LinkClass, los_probability
from .geometry import (
    McpClusters,
    NetworkRealization,
    PppUavs,
    Window,
    _uniform_disk as _disk,
    sample_ppp,
)
from .quadrature import QuadSpec, integrate_semi_infinite
from .scenario import Scenario

MIN_LINK_DISTANCE = 1.0
DEFAULT_GAMMA = np.round(np.arange(1, 100) / 100.0, 2)


class AssocClass(enum.IntEnum):
    CLUSTER_LOS_UAV = 0
    CLUSTER_NLOS_UAV = 1
    NEAREST_LOS_UAV = 2
    NEAREST_NLOS_UAV = 3
    TBS = 4


@dataclass(frozen=True)
class ProductForm:
    pass


@dataclass(frozen=True)
class FadingMC:
    n_draws: int = 1000


@dataclass(frozen=True)
class LinkRecord:
    user: int
    association: AssocClass
    serving_distance: float
    p_success: float
    realization: int = 0


# ---------------------------------------------------------------------------
# random streams


def substream(seed: int, index: int, purpose: int = 0) -> np.random.Generator:
    """Counter-based stream for one realization; independent of scheduling."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(index), int(purpose)])))


# ---------------------------------------------------------------------------
# realizations


def default_window(scenario: Scenario, user_region_radius: float = 1000.0, guard_scale: float = 1.0) -> Window:
    return Window.guarded(scenario.deployment, scenario.env, user_region_radius, guard_scale)


def _too_close(users: np.ndarray, bs_xy: np.ndarray) -> np.ndarray:
    if len(bs_xy) == 0 or len(users) == 0:
        return np.zeros(len(users), dtype=bool)
    d2 = ((users[:, None, :] - bs_xy[None, :, :]) ** 2).sum(-1)
    return d2.min(axis=1) < MIN_LINK_DISTANCE**2


def generate_realization(scenario: Scenario, window: Window, rng: np.random.Generator) -> NetworkRealization:
    """Sample BSs to the BS window and users inside the user window."""
    dep = scenario.deployment
    var = dep.variant
    h = dep.h
    r_user, r_bs = window.user_region_radius, window.bs_region_radius
    tbs = sample_ppp(dep.tbs_density, r_bs, rng)
    cluster = None
    if isinstance(var, McpClusters):
        centers = sample_ppp(var.density, r_bs, rng)
        near = np.flatnonzero(np.hypot(centers[:, 0], centers[:, 1]) <= r_user + var.r_c)
        counts = rng.poisson(scenario.users_per_cluster, near.size)
        owner = np.repeat(near, counts)
        users = centers[owner] + _disk(owner.size, var.r_c, rng)
        uav_xy = centers
        keep = np.hypot(users[:, 0], users[:, 1]) <= r_user
        users, cluster = users[keep], owner[keep]
    elif isinstance(var, PppUavs):
        uav_xy = sample_ppp(var.density, r_bs, rng)
        users = sample_ppp(scenario.user_density, r_user, rng)
    else:
        uav_xy = np.zeros((0, 2))
        users = sample_ppp(scenario.user_density, r_user, rng)

    # keep every link at least MIN_LINK_DISTANCE long
    blockers = [tbs] + ([uav_xy] if h < MIN_LINK_DISTANCE else [])
    bs_xy = np.concatenate(blockers) if blockers else np.zeros((0, 2))
    for _ in range(1000):
        bad = _too_close(users, bs_xy)
        if not bad.any():
            break
        if cluster is not None:
            users[bad] = uav_xy[cluster[bad]] + _disk(int(bad.sum()), var.r_c, rng)
            inside = np.hypot(users[:, 0], users[:, 1]) <= r_user
            users, cluster = users[inside], cluster[inside]
        else:
            users[bad] = _disk(int(bad.sum()), r_user, rng)
    uav = np.column_stack([uav_xy, np.full(len(uav_xy), float(h))])
    if len(uav) and len(users):
        ground = np.hypot(users[:, None, 0] - uav[None, :, 0], users[:, None, 1] - uav[None, :, 1])
        los = rng.random(ground.shape) < los_probability(ground, h, scenario.env)
    else:
        los = np.zeros((len(users), len(uav)), dtype=bool)
    return NetworkRealization(tbs, uav, users, np.asarray(los, dtype=bool), cluster, window)


# ---------------------------------------------------------------------------
# per-realization link evaluation


@dataclass
class _Links:
    """Per-user serving choice and per-interferer mean powers."""

    assoc: np.ndarray          # AssocClass per user
    serving_distance: np.ndarray
    serving_power: np.ndarray
    serving_m: np.ndarray       # fading order of the serving link
    serving_class: list         # LinkClass per user
    power: np.ndarray           # (U, B) mean interferer powers, serving BS zeroed
    order: np.ndarray           # (U, B) fading order per interferer (1 for TBSs)


def _links(real: NetworkRealization, sc: Scenario) -> _Links:
    radio, h = sc.radio, sc.h
    users, tbs, uav = real.users, real.tbs_points, real.uav_points
    n_u, n_t, n_a = len(users), len(tbs), len(uav)
    d_t = np.hypot(users[:, None, 0] - tbs[None, :, 0], users[:, None, 1] - tbs[None, :, 1])
    g_a = np.hypot(users[:, None, 0] - uav[None, :, 0], users[:, None, 1] - uav[None, :, 1])
    d_a = np.sqrt(g_a * g_a + h * h)
    los = real.los_flag
    p_t = radio.rho_t * d_t ** (-radio.alpha_t)
    with np.errstate(divide="ignore"):
        p_a = np.where(los, radio.eta_l * d_a ** (-radio.alpha_l), radio.eta_n * d_a ** (-radio.alpha_n)) * radio.rho_u
    m_a = np.where(los, radio.m_l, radio.m_n)
    rows = np.arange(n_u)

    best_t = np.argmax(p_t, axis=1) if n_t else np.zeros(n_u, dtype=int)
    best_t_pow = p_t[rows, best_t] if n_t else np.zeros(n_u)
    model = sc.model
    if model == "tbs_only":
        if n_t == 0:
            raise ValueError("no TBS inside the window; enlarge the BS region")
        serve_uav = np.zeros(n_u, dtype=bool)
        uav_idx = np.zeros(n_u, dtype=int)
        assoc = np.full(n_u, AssocClass.TBS)
    elif model == "mcp":
        uav_idx = real.cluster_of_user.astype(int)
        serve_uav = p_a[rows, uav_idx] > best_t_pow
        cl_los = los[rows, uav_idx]
        assoc = np.where(serve_uav, np.where(cl_los, AssocClass.CLUSTER_LOS_UAV, AssocClass.CLUSTER_NLOS_UAV),
                         AssocClass.TBS)
    else:
        if n_a:
            uav_idx = np.argmax(p_a, axis=1)
            serve_uav = p_a[rows, uav_idx] > best_t_pow
        else:
            uav_idx = np.zeros(n_u, dtype=int)
            serve_uav = np.zeros(n_u, dtype=bool)
        is_los = los[rows, uav_idx] if n_a else np.zeros(n_u, dtype=bool)
        assoc = np.where(serve_uav, np.where(is_los, AssocClass.NEAREST_LOS_UAV, AssocClass.NEAREST_NLOS_UAV),
                         AssocClass.TBS)
    if np.any(~serve_uav) and n_t == 0:
        raise ValueError("a user must be served by a TBS but none lies in the window")

    power = np.concatenate([p_t, p_a], axis=1)
    order = np.concatenate([np.ones((n_u, n_t), dtype=int), m_a], axis=1)
    serv_col = np.where(serve_uav, n_t + uav_idx, best_t)
    serving_power = power[rows, serv_col].copy()
    serving_m = order[rows, serv_col].copy()
    power[rows, serv_col] = 0.0
    dist = np.where(serve_uav, d_a[rows, uav_idx] if n_a else 0.0, d_t[rows, best_t] if n_t else 0.0)
    classes = []
    for a in assoc:
        if a == AssocClass.TBS:
            classes.append(LinkClass.TBS)
        elif a in (AssocClass.CLUSTER_LOS_UAV, AssocClass.NEAREST_LOS_UAV):
            classes.append(LinkClass.LOS_UAV)
        else:
            classes.append(LinkClass.NLOS_UAV)
    return _Links(assoc.astype(int), dist, serving_power, serving_m, classes, power, order)


class _FarField:
    """Interference from beyond the BS window, seen from the window center.

    ``exponent(s)`` is the PGFL exponent of all exterior BSs for Laplace
    argument ``s``; ``mean`` is their mean aggregate power.
    """

    def __init__(self, sc: Scenario, radius: float, spec: QuadSpec = QuadSpec(1e-12, 1e-8)):
        self.sc, self.radius, self.spec = sc, radius, spec
        r = sc.radio
        self.alphas = [r.alpha_t]
        if sc.deployment.uav_density > 0:
            self.alphas += [r.alpha_l, r.alpha_n]
        self.mean = float(np.sum(self._integrate(lambda z: self._terms(z, None))))

    def _terms(self, z, s):
        sc, r, h = self.sc, self.sc.radio, self.sc.h
        lam_t, lam_u = sc.deployment.tbs_density, sc.deployment.uav_density
        out = []
        # TBS ring
        a_t = r.rho_t * z ** (-r.alpha_t)
        out.append(lam_t * z * (a_t if s is None else -np.expm1(-np.log1p(np.multiply.outer(s, a_t)))))
        if lam_u > 0:
            v = np.sqrt(z * z + h * h)
            p_l = np.asarray(los_probability(z, h, sc.env))
            for cls, p in ((LinkClass.LOS_UAV, p_l), (LinkClass.NLOS_UAV, 1.0 - p_l)):
                m = r.fading_order(cls)
                a = r.eta(cls) * r.rho_u * v ** (-r.alpha(cls))
                val = a if s is None else -np.expm1(-m * np.log1p(np.multiply.outer(s, a) / m))
                out.append(lam_u * z * p * val)
        return 2.0 * math.pi * sum(out)

    def _integrate(self, f):
        decay = min(self.alphas) - 1.0
        return integrate_semi_infinite(f, self.radius, self.spec, scale=self.radius, decay=decay)

    def exponent(self, s):
        s = np.asarray(s, dtype=float)
        flat = s.ravel()
        if flat.size == 0:
            return np.zeros(s.shape)
        out = np.asarray(self._integrate(lambda z: self._terms(z, flat)))
        return out.reshape(s.shape)


def _product_form(links: _Links, sc: Scenario, thetas: np.ndarray, far: _FarField | None) -> np.ndarray:
    """Success probability per (user, theta) with interferer fading averaged out."""
    radio = sc.radio
    n_u = links.power.shape[0]
    out = np.zeros((n_u, thetas.size))
    if n_u == 0:
        return out
    m_s = links.serving_m
    # base Laplace argument: theta / serving mean power, times beta*m for Nakagami links
    scale = np.array([beta2(int(m)) * m if c is not LinkClass.TBS else 1.0
                      for m, c in zip(m_s, links.serving_class)])
    s0 = np.multiply.outer(scale / links.serving_power, thetas)  # (U, T)
    k_max = int(m_s.max())
    ks = np.arange(1, k_max + 1)
    s = s0[:, :, None] * ks  # (U, T, K)
    inv_m = 1.0 / links.order
    # sum over interferers of -m log1p(s a / m)
    acc = np.einsum(
        "ub,utkb->utk",
        links.order.astype(float),
        -np.log1p(s[..., None] * (links.power * inv_m)[:, None, None, :]),
    )
    acc -= s * radio.sigma2
    if far is not None:
        acc -= far.exponent(s)
    for u in range(n_u):
        m = int(m_s[u])
        if links.serving_class[u] is LinkClass.TBS or m == 1:
            out[u] = np.exp(acc[u, :, 0])
        else:
            c = np.array([math.comb(m, k) * (-1) ** (k + 1) for k in range(1, m + 1)], dtype=float)
            out[u] = np.exp(acc[u, :, :m]) @ c
    return np.clip(out, 0.0, 1.0)


def _fading_mc(links: _Links, sc: Scenario, thetas: np.ndarray, n_draws: int, rng: np.random.Generator,
               far: _FarField | None, chunk: int = 200) -> np.ndarray:
    radio = sc.radio
    n_u, n_b = links.power.shape
    out = np.zeros((n_u, thetas.size))
    extra = far.mean if far is not None else 0.0
    for u in range(n_u):
        hits = np.zeros(thetas.size)
        m_vec = links.order[u]
        for start in range(0, n_draws, chunk):
            n = min(chunk, n_draws - start)
            m0 = int(links.serving_m[u])
            g0 = rng.gamma(m0, 1.0 / m0, n)
            gains = rng.gamma(m_vec, 1.0 / m_vec, (n, n_b))
            interference = gains @ links.power[u] + extra
            sinr = links.serving_power[u] * g0 / (interference + radio.sigma2)
            hits += (sinr[:, None] > thetas[None, :]).sum(axis=0)
        out[u] = hits / n_draws
    return out


def evaluate_realization(real: NetworkRealization, sc: Scenario, thetas, method=ProductForm(),
                         rng: np.random.Generator | None = None, far_field: bool = True):
    """Association classes, serving distances and success probabilities ``(U, T)``."""
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    links = _links(real, sc)
    far = _FarField(sc, real.window.bs_region_radius) if (far_field and real.window is not None) else None
    if isinstance(method, FadingMC):
        if rng is None:
            raise ValueError("fading Monte Carlo needs a random stream")
        p = _fading_mc(links, sc, thetas, method.n_draws, rng, far)
    else:
        p = _product_form(links, sc, thetas, far)
    return links.assoc, links.serving_distance, p


def link_success_probability(user: int, real: NetworkRealization, theta: float, sc: Scenario,
                             method=ProductForm(), rng: np.random.Generator | None = None,
                             realization: int = 0, far_field: bool = True) -> LinkRecord:
    assoc, dist, p = evaluate_realization(real, sc, [theta], method, rng, far_field)
    return LinkRecord(int(user), AssocClass(int(assoc[user])), float(dist[user]), float(p[user, 0]), realization)


# ---------------------------------------------------------------------------
# pooled statistics


@dataclass(frozen=True)
class LinkTable:
    """All measured links of a run; ``p`` has one column per threshold."""

    thetas: np.ndarray
    realization: np.ndarray
    assoc: np.ndarray
    serving_distance: np.ndarray
    p: np.ndarray
    n_realizations: int

    @property
    def n_links(self) -> int:
        return self.p.shape[0]


def simulate_links(sc: Scenario, thetas, n_realizations: int = 2000, seed: int = 0, *,
                   window: Window | None = None, method=ProductForm(), threads: int | None = None,
                   far_field: bool = True) -> LinkTable:
    """Run ``n_realizations`` independent realizations; results are ordered by index."""
    if n_realizations < 1:
        raise ValueError("need at least one realization")
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    window = window or default_window(sc)
    threads = threads or int(os.environ.get("METASINR_THREADS", "1"))

    def one(i):
        real = generate_realization(sc, window, substream(seed, i, 0))
        rng = substream(seed, i, 1)
        assoc, dist, p = evaluate_realization(real, sc, thetas, method, rng, far_field)
        return assoc, dist, p

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(one, range(n_realizations)))
    else:
        parts = [one(i) for i in range(n_realizations)]
    rid = np.concatenate([np.full(len(a), i) for i, (a, _, _) in enumerate(parts)]).astype(int)
    assoc = np.concatenate([a for a, _, _ in parts]).astype(int)
    dist = np.concatenate([d for _, d, _ in parts])
    p = np.concatenate([q for _, _, q in parts]).reshape(-1, thetas.size)
    return LinkTable(thetas, rid, assoc, dist, p, n_realizations)


@dataclass(frozen=True)
class EmpiricalMeta:
    theta: float
    gamma: np.ndarray
    ccdf: np.ndarray
    n_links: int
    n_realizations: int
    m1: float
    m2: float
    m1_se: float
    m2_se: float
    var_se: float
    class_fractions: dict = field(default_factory=dict)

    @property
    def variance(self) -> float:
        return self.m2 - self.m1**2


def meta_from_links(table: LinkTable, theta_index: int = 0, gamma_grid=DEFAULT_GAMMA,
                    n_boot: int = 200, boot_seed: int = 12345) -> EmpiricalMeta:
    if table.n_links == 0:
        raise ValueError("no measured links; enlarge the user region or the number of realizations")
    p = table.p[:, theta_index]
    gam = np.asarray(gamma_grid, dtype=float)
    ccdf = (p[None, :] > gam[:, None]).mean(axis=1)
    r = table.n_realizations
    n_r = np.bincount(table.realization, minlength=r).astype(float)
    s1 = np.bincount(table.realization, weights=p, minlength=r)
    s2 = np.bincount(table.realization, weights=p * p, minlength=r)
    rng = np.random.default_rng(boot_seed)
    counts = rng.multinomial(r, np.full(r, 1.0 / r), size=n_boot).astype(float)
    tot = counts @ n_r
    ok = tot > 0
    b1 = (counts @ s1)[ok] / tot[ok]
    b2 = (counts @ s2)[ok] / tot[ok]
    fractions = {c.name.lower(): float(np.mean(table.assoc == c)) for c in AssocClass}
    return EmpiricalMeta(
        float(table.thetas[theta_index]), gam, ccdf, table.n_links, r,
        float(p.mean()), float((p * p).mean()),
        float(b1.std(ddof=1)) if b1.size > 1 else float("nan"),
        float(b2.std(ddof=1)) if b2.size > 1 else float("nan"),
        float((b2 - b1 * b1).std(ddof=1)) if b1.size > 1 else float("nan"),
        fractions,
    )


def empirical_meta(sc: Scenario, theta, gamma_grid=DEFAULT_GAMMA, n_realizations: int = 2000,
                   rng_seed: int = 0, **kwargs):
    """Empirical meta distribution; a list when ``theta`` is a sequence."""
    table = simulate_links(sc, theta, n_realizations, rng_seed, **kwargs)
    metas = [meta_from_links(table, i, gamma_grid) for i in range(table.thetas.size)]
    return metas if np.ndim(theta) else metas[0]
