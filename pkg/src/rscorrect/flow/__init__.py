"""Dense optical flow: variational estimation plus correlation-volume matching."""

from .correlation import (
    CorrelationPyramid,
    build_correlation,
    lookup,
    refine_flow_with_correlation,
)
from .estimator import FlowParams, estimate_flow
from .features import FeatureMap, extract_features

__all__ = [
    "CorrelationPyramid",
    "FeatureMap",
    "FlowParams",
    "build_correlation",
    "estimate_flow",
    "extract_features",
    "lookup",
    "refine_flow_with_correlation",
]
