"""Air-to-ground and ground-to-ground channel model.

LoS probability follows the elevation-angle sigmoid used for low-altitude
platforms; UAV links see Nakagami-m fading (unit-mean Gamma power gains),
TBS links see Rayleigh fading (unit-mean exponential power gains).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np


class LinkClass(enum.Enum):
    LOS_UAV = "los_uav"
    NLOS_UAV = "nlos_uav"
    TBS = "tbs"


@dataclass(frozen=True)
class Environment:
    """Environment pair (e1, e2) of the LoS sigmoid."""

    e1: float
    e2: float
    name: str = "custom"

    def __post_init__(self):
        if not (self.e1 > 0 and self.e2 > 0):
            raise ValueError(f"environment parameters must be positive, got ({self.e1}, {self.e2})")


ENVIRONMENTS = {
    "highrise": Environment(27.0, 0.08, "highrise"),
    "dense_urban": Environment(12.0, 0.11, "dense_urban"),
    "urban": Environment(9.6, 0.16, "urban"),
    "suburban": Environment(4.88, 0.43, "suburban"),
}


def environment(name_or_pair) -> Environment:
    """Resolve an environment name or an ``(e1, e2)`` pair."""
    if isinstance(name_or_pair, Environment):
        return name_or_pair
    if isinstance(name_or_pair, str):
        key = name_or_pair.strip().lower().replace(" ", "_").replace("-", "_")
        if key not in ENVIRONMENTS:
            raise ValueError(f"unknown environment {name_or_pair!r}; expected one of {sorted(ENVIRONMENTS)}")
        return ENVIRONMENTS[key]
    if isinstance(name_or_pair, dict):
        return Environment(float(name_or_pair["e1"]), float(name_or_pair["e2"]))
    e1, e2 = name_or_pair
    return Environment(float(e1), float(e2))


def db_to_linear(value_db):
    out = 10.0 ** (np.asarray(value_db, dtype=float) / 10.0)
    return float(out) if out.ndim == 0 else out


def linear_to_db(value):
    out = 10.0 * np.log10(np.asarray(value, dtype=float))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class RadioParams:
    """Powers in watts, losses as linear ratios, noise power in watts."""

    rho_u: float = 0.2
    rho_t: float = 10.0
    alpha_l: float = 2.1
    alpha_n: float = 4.0
    alpha_t: float = 4.0
    m_l: int = 3
    m_n: int = 1
    eta_l: float = 1.0
    eta_n: float = 0.01
    sigma2: float = 1e-9

    def __post_init__(self):
        if self.rho_u <= 0 or self.rho_t <= 0:
            raise ValueError("transmit powers must be positive")
        if self.eta_l <= 0 or self.eta_n <= 0:
            raise ValueError("excess losses must be positive (linear)")
        if self.alpha_l <= 0:
            raise ValueError("alpha_l must be positive")
        if self.alpha_n <= 2 or self.alpha_t <= 2:
            raise ValueError("alpha_n and alpha_t must exceed 2")
        for name in ("m_l", "m_n"):
            m = getattr(self, name)
            if int(m) != m or m < 1:
                raise ValueError(f"{name} must be a positive integer, got {m}")
            object.__setattr__(self, name, int(m))
        if self.sigma2 < 0:
            raise ValueError("noise power must be nonnegative")

    def alpha(self, cls: LinkClass) -> float:
        return {LinkClass.LOS_UAV: self.alpha_l, LinkClass.NLOS_UAV: self.alpha_n, LinkClass.TBS: self.alpha_t}[cls]

    def eta(self, cls: LinkClass) -> float:
        return {LinkClass.LOS_UAV: self.eta_l, LinkClass.NLOS_UAV: self.eta_n, LinkClass.TBS: 1.0}[cls]

    def fading_order(self, cls: LinkClass) -> int:
        return {LinkClass.LOS_UAV: self.m_l, LinkClass.NLOS_UAV: self.m_n, LinkClass.TBS: 1}[cls]

    def power(self, cls: LinkClass) -> float:
        return self.rho_t if cls is LinkClass.TBS else self.rho_u


def elevation_deg(horizontal_distance, h):
    r = np.asarray(horizontal_distance, dtype=float)
    angle = np.degrees(np.arctan2(h, r))
    # r = h = 0 is taken as the overhead limit
    return np.where((r == 0) & (np.asarray(h) == 0), 90.0, angle)


def los_probability(horizontal_distance, h, env: Environment):
    """Probability of a LoS air-to-ground link at the given ground distance."""
    phi = elevation_deg(horizontal_distance, h)
    p = 1.0 / (1.0 + env.e1 * np.exp(-env.e2 * (phi - env.e1)))
    return float(p) if np.ndim(p) == 0 else p


def nlos_probability(horizontal_distance, h, env: Environment):
    p = 1.0 - np.asarray(los_probability(horizontal_distance, h, env))
    return float(p) if np.ndim(p) == 0 else p


def los_probability_far(env: Environment) -> float:
    """Limit of the LoS probability at vanishing elevation."""
    return 1.0 / (1.0 + env.e1 * math.exp(env.e2 * env.e1))


def mean_rx_power(link_class: LinkClass, distance, radio: RadioParams):
    """Fading-averaged received power in watts."""
    d = np.asarray(distance, dtype=float)
    if np.any(d <= 0):
        raise ValueError("link distance must be positive")
    p = radio.eta(link_class) * radio.power(link_class) * d ** (-radio.alpha(link_class))
    return float(p) if np.ndim(p) == 0 else p


def sample_fading(link_class: LinkClass, radio: RadioParams, rng: np.random.Generator, size=None):
    """Unit-mean power gain: Gamma(m, 1/m) for UAV links, Exp(1) for TBS links."""
    if link_class is LinkClass.TBS:
        return rng.exponential(1.0, size)
    m = radio.fading_order(link_class)
    return rng.gamma(m, 1.0 / m, size)
