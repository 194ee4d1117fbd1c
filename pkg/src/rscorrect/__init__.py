"""Rolling-shutter imaging simulator and dual-reversed correction toolkit.

The package simulates rolling-shutter capture from global-shutter content,
corrects dual reversed rolling-shutter pairs back to global-shutter frames
at arbitrary scanline times, rebuilds rolling-shutter images from corrected
frames (row-wise frame interpolation over distorted time maps), and scores
the round trip with cycle-consistency losses and standard image metrics.
"""

from .core import (
    Direction,
    FlowField,
    Frame,
    FusionMask,
    RowDisplacementMap,
    RowMask,
    ScanConfig,
    TimeMap,
    backward_warp,
    bilinear_sample,
    blend_masked,
)
from .correction import (
    CorrectionParams,
    CorrectionResult,
    MotionMap,
    correct_to_time,
    correct_to_time_detailed,
    correct_video,
    correct_video_detailed,
    estimate_motion_map,
    fusion_mask,
    target_row_grid,
    time_displacement,
    warp_rs_to_gs,
)
from .errors import (
    ConfigError,
    CoverageError,
    DimensionError,
    ParameterError,
    RangeError,
    ToolkitError,
    UsageError,
)
from .flow import (
    CorrelationPyramid,
    FeatureMap,
    FlowParams,
    build_correlation,
    estimate_flow,
    extract_features,
    lookup,
    refine_flow_with_correlation,
)
from .formation import (
    GsSequence,
    row_time,
    row_times,
    sequence_from_scene,
    synthesize_dual_pair,
    synthesize_rs,
)
from .metrics import LossReport, charbonnier, cycle_losses, psnr, ssim
from .reconstruction import (
    FULL_SPAN,
    MID_TO_END,
    START_TO_MID,
    SegmentSpec,
    distorted_time_map,
    reconstruct_rs_full,
    reconstruct_rs_with_intermediate,
    time_mask,
    vfi_rowwise,
)
from .scene import (
    Rotation,
    SceneSpec,
    Translation,
    Zoom,
    render_gs_at,
    render_rs_exact,
    scan_for_scene,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "CorrectionParams",
    "CorrectionResult",
    "CorrelationPyramid",
    "CoverageError",
    "DimensionError",
    "Direction",
    "FeatureMap",
    "FlowField",
    "FlowParams",
    "Frame",
    "FusionMask",
    "FULL_SPAN",
    "GsSequence",
    "LossReport",
    "MID_TO_END",
    "MotionMap",
    "ParameterError",
    "RangeError",
    "Rotation",
    "RowDisplacementMap",
    "RowMask",
    "START_TO_MID",
    "ScanConfig",
    "SceneSpec",
    "SegmentSpec",
    "TimeMap",
    "ToolkitError",
    "Translation",
    "UsageError",
    "Zoom",
    "backward_warp",
    "bilinear_sample",
    "blend_masked",
    "build_correlation",
    "charbonnier",
    "correct_to_time",
    "correct_to_time_detailed",
    "correct_video",
    "correct_video_detailed",
    "cycle_losses",
    "distorted_time_map",
    "estimate_flow",
    "estimate_motion_map",
    "extract_features",
    "fusion_mask",
    "lookup",
    "psnr",
    "reconstruct_rs_full",
    "reconstruct_rs_with_intermediate",
    "refine_flow_with_correlation",
    "render_gs_at",
    "render_rs_exact",
    "row_time",
    "row_times",
    "scan_for_scene",
    "sequence_from_scene",
    "ssim",
    "synthesize_dual_pair",
    "synthesize_rs",
    "target_row_grid",
    "time_displacement",
    "time_mask",
    "vfi_rowwise",
    "warp_rs_to_gs",
]
