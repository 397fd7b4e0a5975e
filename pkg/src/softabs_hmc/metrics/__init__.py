"""metric families for the softabs sampler."""

from ..core.base import MetricFamily, metric_registry
from ..core.config import MetricConfig
from .diagonal import DiagSoftAbsMetric, diag_softabs_transform
from .euclidean import EuclideanMetric
from .outer import (
    DiagOuterSoftAbsMetric,
    OuterSoftAbsMetric,
    diag_outer_softabs,
    outer_softabs_metric,
)
from .softabs import SoftAbsMetric, log_det_gradient, quadratic_form_gradient

# register all metric families
metric_registry.register(EuclideanMetric)
metric_registry.register(SoftAbsMetric)
metric_registry.register(DiagSoftAbsMetric)
metric_registry.register(OuterSoftAbsMetric)
metric_registry.register(DiagOuterSoftAbsMetric)


def build_metric(config: MetricConfig) -> MetricFamily:
    """Instantiate the metric family named in the configuration."""
    return metric_registry.create(config.family.value, config)


__all__ = [
    "DiagOuterSoftAbsMetric",
    "DiagSoftAbsMetric",
    "EuclideanMetric",
    "OuterSoftAbsMetric",
    "SoftAbsMetric",
    "build_metric",
    "diag_outer_softabs",
    "diag_softabs_transform",
    "log_det_gradient",
    "metric_registry",
    "outer_softabs_metric",
    "quadratic_form_gradient",
]
