"""Geometry-based correction of a dual reversed rolling-shutter pair.

The pipeline: build per-row time-displacement maps between each input scan
and the target scanline time, recover per-pixel motion-per-scan from the
flow between the two inputs (each pixel pair spans a known time gap), scale
that motion entry-by-entry with the displacement map to get warp fields, and
fuse the two backward-warped images with a time-proximity mask.

Row indices are 1-based in every public signature, matching the scanline
numbering used throughout the package; storage stays 0-based internally.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .core import (
    Direction,
    Frame,
    FusionMask,
    RowDisplacementMap,
    ScanConfig,
    bilinear_sample,
    blend_masked,
)
from .errors import DimensionError, RangeError
from .flow import FlowParams, estimate_flow


@dataclass(frozen=True)
class CorrectionParams:
    """Correction tuning.

    ``delta_t_floor`` guards the velocity division near the scan-crossing
    rows; ``None`` resolves to half a row readout, ``0.5 / (H - 1)``.
    ``use_external_flow`` injects a precomputed flow pair (top-to-bottom ->
    bottom-to-top first) in place of the internal estimator.
    """

    fixed_point_iters: int = 3
    delta_t_floor: float | None = None
    mask_eps: float = 1e-6
    use_external_flow: tuple | None = None
    flow_params: FlowParams = FlowParams()

    def __post_init__(self):
        if self.fixed_point_iters < 0:
            raise RangeError("fixed_point_iters must be non-negative")
        if self.delta_t_floor is not None and not self.delta_t_floor > 0:
            raise RangeError("delta_t_floor must be positive")
        if not self.mask_eps > 0:
            raise RangeError("mask_eps must be positive")

    def resolved_floor(self, height: int) -> float:
        return self.delta_t_floor if self.delta_t_floor is not None else 0.5 / (height - 1)


@dataclass(eq=False)
class MotionMap:
    """Per-pixel scene displacement over one full scan duration, pixels.

    ``low_confidence`` marks pixels whose recovering time gap fell below the
    division floor.
    """

    u: np.ndarray
    v: np.ndarray
    valid: np.ndarray
    low_confidence: np.ndarray

    @property
    def height(self) -> int:
        return self.u.shape[0]

    @property
    def width(self) -> int:
        return self.u.shape[1]


def time_displacement(height: int, m: int, direction: Direction) -> RowDisplacementMap:
    """Per-row normalized time offset from the target scanline time of row m.

    Top-to-bottom rows get ``(i - m) / (H - 1)``; bottom-to-top rows get
    ``((H - i) - (m - 1)) / (H - 1)``, both in full-scan units.
    """
    if height < 2:
        raise RangeError(f"height must be >= 2, got {height}")
    if not 1 <= m <= height:
        raise RangeError(f"target row {m} outside 1..{height}")
    i = np.arange(1, height + 1, dtype=np.float64)
    if direction is Direction.TOP_TO_BOTTOM:
        values = (i - m) / (height - 1)
    else:
        values = ((height - i) - (m - 1)) / (height - 1)
    return RowDisplacementMap(values)


def _displacement_at(dmap: RowDisplacementMap, rows0: np.ndarray) -> np.ndarray:
    """Displacement map linearly interpolated at fractional 0-based rows."""
    h = dmap.height
    return np.interp(np.clip(rows0, 0.0, h - 1.0), np.arange(h, dtype=np.float64), dmap.values)


def _inter_scan_gap(height: int, rows1: np.ndarray, f_v: np.ndarray, anchor: Direction) -> np.ndarray:
    """Normalized capture-time gap spanned by a flow vector.

    For a pixel at 1-based row ``i`` of the anchor image whose flow lands on
    row ``i + f_v`` of the opposite image, the gap is the difference of the
    two rows' capture times in full-scan units.
    """
    if anchor is Direction.TOP_TO_BOTTOM:
        return ((height - (rows1 + f_v)) - (rows1 - 1)) / (height - 1)
    return ((rows1 + f_v - 1) - (height - rows1)) / (height - 1)


def estimate_motion_map(
    i_t2b: Frame, i_b2t: Frame, params: CorrectionParams | None = None
):
    """Recover per-scan motion maps from the flow between the dual inputs.

    Returns one map anchored on each input grid (top-to-bottom first). Each
    flow vector is divided by the capture-time gap it spans; gaps below the
    floor are clamped and flagged low-confidence.
    """
    params = params or CorrectionParams()
    if i_t2b.data.shape != i_b2t.data.shape:
        raise DimensionError(
            f"dual inputs differ in shape: {i_t2b.data.shape} vs {i_b2t.data.shape}"
        )
    h, w = i_t2b.height, i_t2b.width
    if params.use_external_flow is not None:
        f_ab, f_ba = params.use_external_flow
        if (f_ab.height, f_ab.width) != (h, w) or (f_ba.height, f_ba.width) != (h, w):
            raise DimensionError("injected flow fields must match the input size")
    else:
        f_ab = estimate_flow(i_t2b, i_b2t, params.flow_params)
        f_ba = estimate_flow(i_b2t, i_t2b, params.flow_params)
    floor = params.resolved_floor(h)
    rows1 = np.arange(1, h + 1, dtype=np.float64)[:, None]

    maps = []
    for flow, anchor in ((f_ab, Direction.TOP_TO_BOTTOM), (f_ba, Direction.BOTTOM_TO_TOP)):
        gap = _inter_scan_gap(h, rows1, flow.v, anchor)
        low = np.abs(gap) < floor
        scale = np.sign(gap) / np.maximum(np.abs(gap), floor)
        maps.append(
            MotionMap(flow.u * scale, flow.v * scale, flow.valid.copy(), low)
        )
    return maps[0], maps[1]


def _sample_motion(motion: MotionMap, sy: np.ndarray, sx: np.ndarray):
    h, w = motion.u.shape
    cy = np.clip(sy, 0.0, h - 1.0)
    cx = np.clip(sx, 0.0, w - 1.0)
    ou = ndimage.map_coordinates(motion.u, [cy, cx], order=1, mode="nearest")
    ov = ndimage.map_coordinates(motion.v, [cy, cx], order=1, mode="nearest")
    okf = ndimage.map_coordinates(motion.valid.astype(np.float64), [cy, cx], order=1, mode="nearest")
    return ou, ov, okf > 0.999


def warp_rs_to_gs(i_rs: Frame, motion: MotionMap, dmap: RowDisplacementMap, iters: int = 3):
    """Warp a rolling-shutter image to the target scanline time.

    Each output pixel samples the input at ``p + D[r] * O``, where the row
    ``r`` actually sampled is refined by a fixed-point iteration (under
    vertical motion the sampled row differs from the target row, and the
    displacement must be taken at the sampled row). Returns the warped frame
    and a validity mask.
    """
    if (motion.height, motion.width) != (i_rs.height, i_rs.width):
        raise DimensionError("motion map size does not match the image")
    if dmap.height != i_rs.height:
        raise DimensionError("row displacement map height does not match the image")
    if iters < 0:
        raise RangeError("iters must be non-negative")
    h, w = i_rs.height, i_rs.width
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)

    sy, sx = yy, xx
    ok_motion = None
    f_u = f_v = None
    for k in range(iters + 1):
        ou, ov, ok_motion = _sample_motion(motion, sy, sx)
        d = _displacement_at(dmap, sy)
        f_u = d * ou
        f_v = d * ov
        if k == iters:
            break
        sy = yy + f_v
        sx = xx + f_u

    values, inbounds = bilinear_sample(i_rs, xx + f_u, yy + f_v)
    return Frame(np.clip(values, 0.0, 1.0)), inbounds & ok_motion


def fusion_mask(
    d_t2b: RowDisplacementMap,
    d_b2t: RowDisplacementMap,
    eps: float = 1e-6,
    width: int = 1,
) -> FusionMask:
    """Time-proximity blend weights: rows captured nearer the target dominate.

    ``M[i] = (|D_b2t[i]| + eps/2) / (|D_t2b[i]| + |D_b2t[i]| + eps)``,
    broadcast across columns.
    """
    if d_t2b.height != d_b2t.height:
        raise DimensionError("displacement maps differ in height")
    a = np.abs(d_t2b.values)
    b = np.abs(d_b2t.values)
    rows = (b + eps / 2.0) / (a + b + eps)
    return FusionMask(np.repeat(rows[:, None], width, axis=1))


@dataclass(eq=False)
class CorrectionResult:
    """A corrected frame plus its coverage bookkeeping."""

    frame: Frame
    target_row: int
    filled: np.ndarray  # pixels valid in neither branch, filled from neighbors

    @property
    def filled_count(self) -> int:
        return int(self.filled.sum())


def _nearest_fill(data: np.ndarray, hole: np.ndarray) -> np.ndarray:
    if not hole.any():
        return data
    _, (iy, ix) = ndimage.distance_transform_edt(hole, return_indices=True)
    return data[iy, ix]


def _correct_single(
    i_t2b: Frame,
    i_b2t: Frame,
    o_t2b: MotionMap,
    o_b2t: MotionMap,
    m: int,
    params: CorrectionParams,
) -> CorrectionResult:
    h, w = i_t2b.height, i_t2b.width
    d1 = time_displacement(h, m, Direction.TOP_TO_BOTTOM)
    d2 = time_displacement(h, m, Direction.BOTTOM_TO_TOP)
    w1, ok1 = warp_rs_to_gs(i_t2b, o_t2b, d1, params.fixed_point_iters)
    w2, ok2 = warp_rs_to_gs(i_b2t, o_b2t, d2, params.fixed_point_iters)
    mask = fusion_mask(d1, d2, params.mask_eps, width=1)
    blended = blend_masked(w1, w2, mask, Frame(np.zeros_like(w1.data)))

    out = blended.data.copy()
    only1 = ok1 & ~ok2
    only2 = ok2 & ~ok1
    out[only1] = w1.data[only1]
    out[only2] = w2.data[only2]
    hole = ~(ok1 | ok2)
    out = _nearest_fill(out, hole)
    return CorrectionResult(Frame(np.clip(out, 0.0, 1.0)), m, hole)


def correct_to_time(
    i_t2b: Frame,
    i_b2t: Frame,
    scan: ScanConfig,
    m: int,
    params: CorrectionParams | None = None,
) -> Frame:
    """Correct the dual pair to the global-shutter frame at scanline ``m``."""
    return correct_to_time_detailed(i_t2b, i_b2t, scan, m, params).frame


def correct_to_time_detailed(
    i_t2b: Frame,
    i_b2t: Frame,
    scan: ScanConfig,
    m: int,
    params: CorrectionParams | None = None,
) -> CorrectionResult:
    """As :func:`correct_to_time` but returning coverage bookkeeping too."""
    params = params or CorrectionParams()
    _check_pair(i_t2b, i_b2t, scan)
    if not 1 <= m <= scan.height:
        raise RangeError(f"target row {m} outside 1..{scan.height}")
    o1, o2 = estimate_motion_map(i_t2b, i_b2t, params)
    return _correct_single(i_t2b, i_b2t, o1, o2, m, params)


def correct_video(
    i_t2b: Frame,
    i_b2t: Frame,
    scan: ScanConfig,
    times: list | None = None,
    params: CorrectionParams | None = None,
) -> list:
    """Correct the dual pair to a list of target scanlines, sharing the flow."""
    return [r.frame for r in correct_video_detailed(i_t2b, i_b2t, scan, times, params)]


def correct_video_detailed(
    i_t2b: Frame,
    i_b2t: Frame,
    scan: ScanConfig,
    times: list | None = None,
    params: CorrectionParams | None = None,
    workers: int = 1,
) -> list:
    """Per-target :class:`CorrectionResult` list; flow is computed once.

    ``workers > 1`` warps targets on a thread pool (inputs are shared
    read-only, so results are identical to the serial order).
    """
    params = params or CorrectionParams()
    _check_pair(i_t2b, i_b2t, scan)
    targets = list(times) if times is not None else target_row_grid(scan.height)
    for m in targets:
        if not 1 <= m <= scan.height:
            raise RangeError(f"target row {m} outside 1..{scan.height}")
    o1, o2 = estimate_motion_map(i_t2b, i_b2t, params)
    if workers > 1 and len(targets) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(
                pool.map(lambda m: _correct_single(i_t2b, i_b2t, o1, o2, m, params), targets)
            )
    return [_correct_single(i_t2b, i_b2t, o1, o2, m, params) for m in targets]


def target_row_grid(height: int, count: int = 9) -> list:
    """``count`` scanlines uniformly spanning the scan, first and last rows
    included; exact when ``H - 1`` divides evenly, nearest rows otherwise."""
    if count < 1:
        raise RangeError("target count must be at least 1")
    if count == 1:
        return [1]
    rows = 1.0 + np.arange(count) * (height - 1) / (count - 1)
    return [int(r) for r in np.floor(rows + 0.5)]


def _check_pair(i_t2b: Frame, i_b2t: Frame, scan: ScanConfig) -> None:
    if i_t2b.data.shape != i_b2t.data.shape:
        raise DimensionError(
            f"dual inputs differ in shape: {i_t2b.data.shape} vs {i_b2t.data.shape}"
        )
    if (i_t2b.height, i_t2b.width) != (scan.height, scan.width):
        raise DimensionError(
            f"inputs {i_t2b.height}x{i_t2b.width} do not match scan {scan.height}x{scan.width}"
        )
