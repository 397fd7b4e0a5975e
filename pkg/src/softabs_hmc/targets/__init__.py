"""target distributions for the softabs sampler."""

from ..core.base import TargetModel, target_registry
from ..core.config import TargetConfig
from .funnel import FunnelModel
from .gaussian import GaussianModel

# register all targets
target_registry.register(FunnelModel)
target_registry.register(GaussianModel)


def build_target(config: TargetConfig) -> TargetModel:
    """Instantiate the target named in the configuration."""
    return target_registry.create(config.name, config)


__all__ = ["FunnelModel", "GaussianModel", "build_target", "target_registry"]
