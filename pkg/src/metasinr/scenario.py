"""A full parameter set for one network, in linear SI units."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .channel import ENVIRONMENTS, Environment, RadioParams, environment
from .geometry import Deployment, McpClusters, PppUavs, TbsOnly

PER_KM2 = 1e-6

MODELS = ("mcp", "ppp", "tbs_only")


@dataclass(frozen=True)
class Scenario:
    """Deployment, propagation environment and radio parameters.

    ``users_per_cluster`` (MCP) and ``user_density`` (PPP users) only set how
    many links a simulated realization measures.
    """

    deployment: Deployment
    env: Environment = ENVIRONMENTS["suburban"]
    radio: RadioParams = field(default_factory=RadioParams)
    users_per_cluster: float = 5.0
    user_density: float = 5.0 * PER_KM2

    @property
    def model(self) -> str:
        return self.deployment.kind

    @property
    def h(self) -> float:
        return self.deployment.h

    def with_altitude(self, h: float) -> "Scenario":
        variant = self.deployment.variant
        if isinstance(variant, TbsOnly):
            raise ValueError("a TBS-only network has no UAV altitude")
        return replace(self, deployment=replace(self.deployment, variant=replace(variant, h=h)))

    def with_uav_density(self, density: float) -> "Scenario":
        variant = self.deployment.variant
        if isinstance(variant, TbsOnly):
            raise ValueError("a TBS-only network has no UAV density")
        return replace(self, deployment=replace(self.deployment, variant=replace(variant, density=density)))

    def grounded(self) -> "Scenario":
        """UAVs moved to the ground with no excess loss; fading orders are kept."""
        radio = replace(self.radio, eta_l=1.0, eta_n=1.0)
        return replace(self.with_altitude(0.0), radio=radio)

    def tbs_only(self) -> "Scenario":
        return replace(self, deployment=Deployment(TbsOnly(), self.deployment.tbs_density))


def default_scenario(model: str = "mcp", env="suburban", **radio_overrides) -> Scenario:
    """Reference parameters: 1 TBS and 1 UAV (or cluster) per km^2, h = r_c = 100 m."""
    lam = 1.0 * PER_KM2
    if model == "mcp":
        variant = McpClusters(lam, 100.0, 100.0)
    elif model == "ppp":
        variant = PppUavs(lam, 100.0)
    elif model == "tbs_only":
        variant = TbsOnly()
    else:
        raise ValueError(f"unknown model {model!r}; expected one of {MODELS}")
    return Scenario(Deployment(variant, lam), environment(env), RadioParams(**radio_overrides))
