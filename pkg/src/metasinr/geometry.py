"""Point-process sampling, distance laws and exclusion radii."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .channel import Environment, LinkClass, RadioParams, los_probability, los_probability_far


# ---------------------------------------------------------------------------
# deployment models and windows


@dataclass(frozen=True)
class McpClusters:
    """Clustered users; one UAV hovers at ``h`` above every cluster center."""

    density: float
    r_c: float
    h: float

    def __post_init__(self):
        if self.density < 0:
            raise ValueError("cluster density must be nonnegative")
        if self.r_c <= 0:
            raise ValueError("cluster radius must be positive")
        if self.h < 0:
            raise ValueError("altitude must be nonnegative")


@dataclass(frozen=True)
class PppUavs:
    """UAVs form a PPP at altitude ``h``; users form an independent PPP."""

    density: float
    h: float

    def __post_init__(self):
        if self.density < 0:
            raise ValueError("UAV density must be nonnegative")
        if self.h < 0:
            raise ValueError("altitude must be nonnegative")


@dataclass(frozen=True)
class TbsOnly:
    pass


@dataclass(frozen=True)
class Deployment:
    variant: McpClusters | PppUavs | TbsOnly
    tbs_density: float

    def __post_init__(self):
        if self.tbs_density < 0:
            raise ValueError("TBS density must be nonnegative")

    @property
    def uav_density(self) -> float:
        return 0.0 if isinstance(self.variant, TbsOnly) else self.variant.density

    @property
    def h(self) -> float:
        return 0.0 if isinstance(self.variant, TbsOnly) else self.variant.h

    @property
    def kind(self) -> str:
        return {McpClusters: "mcp", PppUavs: "ppp", TbsOnly: "tbs_only"}[type(self.variant)]


GUARD_FLOOR = 2000.0


def guard_margin(deployment: Deployment, env: Environment | None = None) -> float:
    """Extra radius of the BS window beyond the user region.

    Five mean nearest-neighbour distances of the sparsest relevant process,
    and never less than 2 km.  For PPP UAVs the sparsest relevant process is
    the far-field LoS population (density ``lambda_u * P_l(inf)``), since a
    LoS UAV can win the association from tens of kilometres away.
    """
    margin = GUARD_FLOOR
    if deployment.tbs_density > 0:
        margin = max(margin, 5.0 / math.sqrt(math.pi * deployment.tbs_density))
    lam_u = deployment.uav_density
    if lam_u > 0:
        if isinstance(deployment.variant, PppUavs) and env is not None:
            lam_u = lam_u * los_probability_far(env)
        margin = max(margin, 5.0 / math.sqrt(math.pi * lam_u))
    return margin


@dataclass(frozen=True)
class Window:
    user_region_radius: float
    bs_region_radius: float

    def __post_init__(self):
        if self.user_region_radius <= 0 or self.bs_region_radius <= 0:
            raise ValueError("window radii must be positive")
        if self.bs_region_radius < self.user_region_radius:
            raise ValueError("BS region must contain the user region")

    @classmethod
    def guarded(cls, deployment: Deployment, env: Environment | None = None,
                user_region_radius: float = 1000.0, guard_scale: float = 1.0) -> "Window":
        margin = guard_scale * guard_margin(deployment, env)
        return cls(user_region_radius, user_region_radius + margin)

    def satisfies_guard(self, deployment: Deployment, env: Environment | None = None) -> bool:
        return self.bs_region_radius - self.user_region_radius >= guard_margin(deployment, env) * (1 - 1e-12)


# ---------------------------------------------------------------------------
# sampling


def _uniform_disk(n: int, radius: float, rng: np.random.Generator) -> np.ndarray:
    r = radius * np.sqrt(rng.random(n))
    phi = rng.uniform(0.0, 2.0 * np.pi, n)
    return np.column_stack([r * np.cos(phi), r * np.sin(phi)])


def sample_ppp(intensity: float, region_radius: float, rng: np.random.Generator) -> np.ndarray:
    """Homogeneous PPP on a centered disk, as an ``(n, 2)`` array."""
    if intensity < 0:
        raise ValueError("intensity must be nonnegative")
    if region_radius <= 0:
        raise ValueError("region radius must be positive")
    n = rng.poisson(intensity * math.pi * region_radius**2)
    return _uniform_disk(n, region_radius, rng)


def sample_mcp(parent_intensity: float, r_c: float, mean_users_per_cluster: float,
               region_radius: float, rng: np.random.Generator):
    """Matern cluster process.

    Returns ``(centers, users, cluster_of_user)``; each cluster holds a
    Poisson number of users, uniform on its disk of radius ``r_c``.
    """
    if r_c <= 0:
        raise ValueError("cluster radius must be positive")
    if mean_users_per_cluster < 0:
        raise ValueError("mean users per cluster must be nonnegative")
    centers = sample_ppp(parent_intensity, region_radius, rng)
    counts = rng.poisson(mean_users_per_cluster, len(centers))
    owner = np.repeat(np.arange(len(centers)), counts)
    users = centers[owner] + _uniform_disk(owner.size, r_c, rng)
    return centers, users, owner


@dataclass(frozen=True, eq=False)
class NetworkRealization:
    """One frozen geometry: BS positions, measured users and their LoS states."""

    tbs_points: np.ndarray
    uav_points: np.ndarray
    users: np.ndarray
    los_flag: np.ndarray
    cluster_of_user: np.ndarray | None = None
    window: Window | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("tbs_points", "uav_points", "users", "los_flag"):
            arr = getattr(self, name)
            arr.setflags(write=False)
        if self.cluster_of_user is not None:
            self.cluster_of_user.setflags(write=False)
        if self.los_flag.shape != (len(self.users), len(self.uav_points)):
            raise ValueError("los_flag must have shape (users, uavs)")

    @property
    def n_users(self) -> int:
        return len(self.users)


# ---------------------------------------------------------------------------
# distance laws


def cluster_uav_distance_law(r, r_c: float, h: float):
    """PDF and CDF of the 3-D distance from a cluster user to its UAV."""
    r = np.asarray(r, dtype=float)
    top = math.sqrt(r_c**2 + h**2)
    inside = (r >= h) & (r <= top)
    pdf = np.where(inside, 2.0 * r / r_c**2, 0.0)
    cdf = np.clip((r**2 - h**2) / r_c**2, 0.0, 1.0)
    if pdf.ndim == 0:
        return float(pdf), float(cdf)
    return pdf, cdf


def nearest_tbs_law(r, tbs_density: float):
    """PDF, CDF and CCDF of the distance to the nearest TBS."""
    r = np.asarray(r, dtype=float)
    ccdf = np.exp(-math.pi * tbs_density * r**2)
    pdf = 2.0 * math.pi * tbs_density * r * ccdf
    cdf = -np.expm1(-math.pi * tbs_density * r**2)
    if r.ndim == 0:
        return float(pdf), float(cdf), float(ccdf)
    return pdf, cdf, ccdf


_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


class _LosAreaTable:
    """Cumulative ``H(z) = int_0^z t (P_l(t) - P_l(inf)) dt`` on a geometric grid.

    Queries add a Gauss-Legendre integral over the partial last cell, so the
    result is as accurate as the per-cell rule rather than an interpolant.
    """

    def __init__(self, h: float, env: Environment):
        self.h, self.env = h, env
        self.p_far = los_probability_far(env)
        scale = max(h, 1.0)
        self.grid = np.concatenate([[0.0], scale * np.geomspace(1e-4, 1e8, 1201)])
        lo, hi = self.grid[:-1], self.grid[1:]
        cell = self._cells(lo, hi)
        self.cum = np.concatenate([[0.0], np.cumsum(cell)])

    def _integrand(self, t):
        return t * (np.asarray(los_probability(t, self.h, self.env)) - self.p_far)

    def _cells(self, lo, hi):
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        t = mid[:, None] + half[:, None] * _GL_X
        return (self._integrand(t) @ _GL_W) * half

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        flat = np.clip(z.ravel(), 0.0, self.grid[-1])
        k = np.clip(np.searchsorted(self.grid, flat, side="right") - 1, 0, self.grid.size - 2)
        out = self.cum[k] + self._cells(self.grid[k], flat)
        # beyond the table the correction term has settled to its linear tail
        return out.reshape(z.shape)


@lru_cache(maxsize=64)
def _los_table(h: float, e1: float, e2: float) -> _LosAreaTable:
    return _LosAreaTable(h, Environment(e1, e2))


def los_area_integral(z, h: float, env: Environment, link: LinkClass = LinkClass.LOS_UAV):
    """``int_0^z t P_e(t) dt`` for the LoS or NLoS class, vectorized over ``z``."""
    z = np.asarray(z, dtype=float)
    table = _los_table(float(h), env.e1, env.e2)
    los = table.p_far * z**2 / 2.0 + table(z)
    if link is LinkClass.LOS_UAV:
        return los
    if link is LinkClass.NLOS_UAV:
        return z**2 / 2.0 - los
    raise ValueError("link must be a UAV class")


def nearest_uav_law(r, uav_density: float, h: float, env: Environment, link: LinkClass):
    """PDF and CDF of the 3-D distance to the nearest LoS (or NLoS) UAV of a PPP."""
    r = np.asarray(r, dtype=float)
    ground = np.sqrt(np.maximum(r**2 - h**2, 0.0))
    area = los_area_integral(ground, h, env, link)
    ccdf = np.exp(-2.0 * math.pi * uav_density * area)
    p = np.asarray(los_probability(ground, h, env))
    if link is LinkClass.NLOS_UAV:
        p = 1.0 - p
    valid = r >= h
    pdf = np.where(valid, 2.0 * math.pi * uav_density * p * r * ccdf, 0.0)
    cdf = np.where(valid, -np.expm1(-2.0 * math.pi * uav_density * area), 0.0)
    if r.ndim == 0:
        return float(pdf), float(cdf)
    return pdf, cdf


# ---------------------------------------------------------------------------
# exclusion radii


class ExclusionKind(enum.Enum):
    LOS_UAV_VS_TBS = "lt"
    NLOS_UAV_VS_TBS = "nt"
    LOS_UAV_VS_NLOS_UAV = "ln"
    NLOS_UAV_VS_LOS_UAV = "nl"
    TBS_VS_LOS_UAV = "tl"
    TBS_VS_NLOS_UAV = "tn"


# (serving class, interfering class) for each radius
_KIND_CLASSES = {
    ExclusionKind.LOS_UAV_VS_TBS: (LinkClass.LOS_UAV, LinkClass.TBS),
    ExclusionKind.NLOS_UAV_VS_TBS: (LinkClass.NLOS_UAV, LinkClass.TBS),
    ExclusionKind.LOS_UAV_VS_NLOS_UAV: (LinkClass.LOS_UAV, LinkClass.NLOS_UAV),
    ExclusionKind.NLOS_UAV_VS_LOS_UAV: (LinkClass.NLOS_UAV, LinkClass.LOS_UAV),
    ExclusionKind.TBS_VS_LOS_UAV: (LinkClass.TBS, LinkClass.LOS_UAV),
    ExclusionKind.TBS_VS_NLOS_UAV: (LinkClass.TBS, LinkClass.NLOS_UAV),
}


def exclusion_kind(serving: LinkClass, interferer: LinkClass) -> ExclusionKind:
    for kind, pair in _KIND_CLASSES.items():
        if pair == (serving, interferer):
            return kind
    raise ValueError(f"no exclusion radius for {serving} vs {interferer}")


def exclusion_coefficients(kind: ExclusionKind, radio: RadioParams) -> tuple[float, float]:
    """``(c, q)`` with radius ``c * x**q`` before any altitude floor.

    Equal mean powers ``w_i d^-a_i = w_s x^-a_s`` give ``c = (w_i/w_s)^(1/a_i)``
    and ``q = a_s / a_i``.
    """
    serving, interferer = _KIND_CLASSES[kind]
    w_s = radio.eta(serving) * radio.power(serving)
    w_i = radio.eta(interferer) * radio.power(interferer)
    a_s, a_i = radio.alpha(serving), radio.alpha(interferer)
    return (w_i / w_s) ** (1.0 / a_i), a_s / a_i


def exclusion_radius(kind: ExclusionKind, serving_distance, radio: RadioParams, h: float = 0.0):
    """Closest distance an interferer of the excluded class may lie at.

    Radii against TBSs are ground distances and carry no floor; radii
    against UAVs are 3-D distances and are floored at ``h``.
    """
    c, q = exclusion_coefficients(kind, radio)
    x = np.asarray(serving_distance, dtype=float)
    d = c * x**q
    if _KIND_CLASSES[kind][1] is not LinkClass.TBS:
        d = np.maximum(d, h)
    return float(d) if d.ndim == 0 else d


def inverse_exclusion_radius(kind: ExclusionKind, radius, radio: RadioParams):
    """Serving distance whose (unfloored) exclusion radius equals ``radius``."""
    c, q = exclusion_coefficients(kind, radio)
    d = (np.asarray(radius, dtype=float) / c) ** (1.0 / q)
    return float(d) if d.ndim == 0 else d
