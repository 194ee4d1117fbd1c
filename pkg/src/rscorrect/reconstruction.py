"""Rebuild rolling-shutter images from global-shutter frames.

Rolling-shutter synthesis is treated as row-wise frame interpolation: each
row carries its own interpolation time, collected in a distorted time map.
A full-span reconstruction interpolates between the start and end frames in
both directions and blends the two with complementary row weights, which
makes the first and last rows exact copies of the corresponding endpoints.
With an intermediate frame available, the scan is split at its row and each
half is reconstructed from its own endpoint pair, joined by a binary row
mask.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Direction, Frame, RowMask, TimeMap, bilinear_sample
from .errors import DimensionError, RangeError
from .flow import FlowParams, estimate_flow

FULL_SPAN = "full_span"
START_TO_MID = "start_to_mid"
MID_TO_END = "mid_to_end"


@dataclass(frozen=True)
class SegmentSpec:
    """A scan segment: the whole span, or one side of an intermediate row."""

    kind: str
    height: int
    m: int | None = None

    def __post_init__(self):
        if self.kind not in (FULL_SPAN, START_TO_MID, MID_TO_END):
            raise RangeError(f"unknown segment kind {self.kind!r}")
        if self.height < 2:
            raise RangeError("segment height must be >= 2")
        if self.kind != FULL_SPAN:
            if self.m is None or not 1 <= self.m <= self.height:
                raise RangeError(f"segment row {self.m} outside 1..{self.height}")


def distorted_time_map(seg: SegmentSpec) -> TimeMap:
    """Per-row interpolation times for a segment.

    Full span: ``(i-1)/(H-1)``. Start-to-mid: ``(i-1)/(m-1)`` up to row m,
    then 1; the single-row segment m=1 pins row 1 to 0. Mid-to-end: 0 up to
    row m, then ``(i-m-1)/(H-m-1)``; the single-row tail m=H-1 pins row H
    to 1. The conventions keep segment endpoints exact.
    """
    h = seg.height
    i = np.arange(1, h + 1, dtype=np.float64)
    if seg.kind == FULL_SPAN:
        return TimeMap((i - 1) / (h - 1))
    m = seg.m
    if seg.kind == START_TO_MID:
        values = np.ones(h)
        if m == 1:
            values[0] = 0.0
        else:
            values[:m] = (i[:m] - 1) / (m - 1)
        return TimeMap(values)
    values = np.zeros(h)
    if m == h - 1:
        values[h - 1] = 1.0
    elif m < h - 1:
        values[m:] = (i[m:] - m - 1) / (h - m - 1)
    return TimeMap(values)


def time_mask(m: int, height: int, direction: Direction) -> RowMask:
    """Binary row selector: 1 through row ``m``, 0 after (flipped for
    bottom-to-top scans)."""
    if not 1 <= m <= height:
        raise RangeError(f"row {m} outside 1..{height}")
    values = np.where(np.arange(1, height + 1) <= m, 1.0, 0.0)
    mask = RowMask(values)
    return mask.flipped() if direction is Direction.BOTTOM_TO_TOP else mask


def vfi_rowwise(
    anchor: Frame,
    other: Frame,
    tmap: TimeMap,
    flow=None,
    params: FlowParams | None = None,
) -> Frame:
    """Interpolate from ``anchor`` toward ``other`` with a per-row time.

    Row ``i`` of the output backward-samples ``anchor`` with the reversed
    flow ``-T[i] * f`` taken at the output grid, where ``f`` is the flow
    from ``anchor`` to ``other`` (motion over the unit interval is assumed
    linear). Rows with ``T[i] = 0`` reproduce the anchor exactly. A
    precomputed ``flow`` may be supplied to skip the internal estimate.
    """
    if anchor.data.shape != other.data.shape:
        raise DimensionError(
            f"frames differ in shape: {anchor.data.shape} vs {other.data.shape}"
        )
    if tmap.height != anchor.height:
        raise DimensionError("time map height does not match the frames")
    f = flow if flow is not None else estimate_flow(anchor, other, params)
    if (f.height, f.width) != (anchor.height, anchor.width):
        raise DimensionError("flow grid does not match the frames")
    h, w = anchor.height, anchor.width
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    t = tmap.values[:, None]
    values, _ = bilinear_sample(anchor, xx - t * f.u, yy - t * f.v)
    return Frame(np.clip(values, 0.0, 1.0))


def _segment_pair(
    start: Frame, end: Frame, tmap: TimeMap, flows, params: FlowParams | None
) -> Frame:
    """Both-direction interpolation of one segment, blended with complement
    row weights so rows at T=0 / T=1 copy the respective endpoint."""
    f_fwd, f_bwd = flows if flows is not None else (None, None)
    toward_end = vfi_rowwise(start, end, tmap, f_fwd, params)
    toward_start = vfi_rowwise(end, start, tmap.complement(), f_bwd, params)
    t = tmap.values[:, None, None]
    return Frame((1.0 - t) * toward_end.data + t * toward_start.data)


def reconstruct_rs_full(
    g_start: Frame,
    g_end: Frame,
    direction: Direction,
    flows=None,
    params: FlowParams | None = None,
) -> Frame:
    """Reconstruct a rolling-shutter image from the start and end frames.

    ``flows`` optionally carries the precomputed (start->end, end->start)
    flow pair.
    """
    if g_start.data.shape != g_end.data.shape:
        raise DimensionError(
            f"frames differ in shape: {g_start.data.shape} vs {g_end.data.shape}"
        )
    tmap = distorted_time_map(SegmentSpec(FULL_SPAN, g_start.height))
    if direction is Direction.BOTTOM_TO_TOP:
        tmap = tmap.flipped()
    return _segment_pair(g_start, g_end, tmap, flows, params)


def reconstruct_rs_with_intermediate(
    g_start: Frame,
    g_mid: Frame,
    g_end: Frame,
    m: int,
    direction: Direction,
    flows=None,
    params: FlowParams | None = None,
) -> Frame:
    """Reconstruct a rolling-shutter image using an intermediate frame.

    The scan is split at row ``m`` (the scanline of ``g_mid``): rows up to
    ``m`` interpolate between ``g_start`` and ``g_mid``, later rows between
    ``g_mid`` and ``g_end``, and a binary row mask stitches the halves.
    ``flows`` optionally carries ((s->m, m->s), (m->e, e->m)).
    """
    if g_start.data.shape != g_mid.data.shape or g_start.data.shape != g_end.data.shape:
        raise DimensionError("the three frames must share one shape")
    h = g_start.height
    if not 1 <= m <= h:
        raise RangeError(f"row {m} outside 1..{h}")
    t_sm = distorted_time_map(SegmentSpec(START_TO_MID, h, m))
    t_me = distorted_time_map(SegmentSpec(MID_TO_END, h, m))
    mask = time_mask(m, h, direction)
    if direction is Direction.BOTTOM_TO_TOP:
        t_sm = t_sm.flipped()
        t_me = t_me.flipped()
    f_sm, f_me = flows if flows is not None else (None, None)
    first = _segment_pair(g_start, g_mid, t_sm, f_sm, params)
    second = _segment_pair(g_mid, g_end, t_me, f_me, params)
    u = mask.values[:, None, None]
    return Frame(u * first.data + (1.0 - u) * second.data)
