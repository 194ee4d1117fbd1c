"""Discrete forward model: rolling-shutter frames from global-shutter stacks.

Row ``i`` (1-based) of a top-to-bottom scan is captured at
``t_mid + tau * (i - (H+1)/2)``; a bottom-to-top scan visits image row ``i``
at scan step ``H - i + 1``, so its capture times run in reverse. A dual
reversed pair shares every geometry parameter except the direction, which
means the two scans sample the same instant on the crossing row.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Direction, Frame, ScanConfig
from .errors import ConfigError, CoverageError, DimensionError, RangeError


@dataclass(eq=False)
class GsSequence:
    """Ordered global-shutter frames with strictly increasing capture times."""

    frames: list
    times: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        if len(self.frames) == 0:
            raise DimensionError("sequence must contain at least one frame")
        if self.times.ndim != 1 or len(self.frames) != self.times.shape[0]:
            raise DimensionError("frames and times must have equal length")
        if self.times.shape[0] > 1 and not np.all(np.diff(self.times) > 0):
            raise RangeError("capture times must be strictly increasing")
        shape = self.frames[0].data.shape
        for f in self.frames[1:]:
            if f.data.shape != shape:
                raise DimensionError("all frames in a sequence must share one shape")

    @property
    def t_first(self) -> float:
        return float(self.times[0])

    @property
    def t_last(self) -> float:
        return float(self.times[-1])

    def frame_at(self, t: float, context: str = "time") -> np.ndarray:
        """Linearly interpolated image content at time ``t`` (exact at samples)."""
        times = self.times
        if t < times[0] or t > times[-1]:
            raise CoverageError(
                f"{context} {t} outside the sequence span [{times[0]}, {times[-1]}]"
            )
        idx = int(np.searchsorted(times, t, side="right")) - 1
        if idx >= 0 and times[idx] == t:
            return self.frames[idx].data
        w = (t - times[idx]) / (times[idx + 1] - times[idx])
        return (1.0 - w) * self.frames[idx].data + w * self.frames[idx + 1].data


def row_time(scan: ScanConfig, i: int) -> float:
    """Capture time of image row ``i`` (1-based) under the scan config."""
    if not 1 <= i <= scan.height:
        raise RangeError(f"row index {i} outside 1..{scan.height}")
    h = scan.height
    step = i if scan.direction is Direction.TOP_TO_BOTTOM else h - i + 1
    return scan.t_mid + scan.tau * (step - (h + 1) / 2.0)


def row_times(scan: ScanConfig) -> np.ndarray:
    """Capture times of all image rows, index 0 holding row 1."""
    h = scan.height
    steps = np.arange(1, h + 1, dtype=np.float64)
    if scan.direction is Direction.BOTTOM_TO_TOP:
        steps = h - steps + 1
    return scan.t_mid + scan.tau * (steps - (h + 1) / 2.0)


def synthesize_rs(seq: GsSequence, scan: ScanConfig) -> Frame:
    """Assemble a rolling-shutter frame by copying each row at its capture time.

    Rows whose capture time falls between two sequence samples are linearly
    interpolated; rows landing exactly on a sample are copied bit-exactly.
    Raises ``CoverageError`` (naming the offending row) when a row time is
    outside the sequence span.
    """
    ref = seq.frames[0]
    if (ref.height, ref.width) != (scan.height, scan.width):
        raise DimensionError(
            f"sequence frames {ref.height}x{ref.width} do not match scan {scan.height}x{scan.width}"
        )
    out = np.empty_like(ref.data)
    for i0, t in enumerate(row_times(scan)):
        content = seq.frame_at(float(t), context=f"row {i0 + 1} capture time")
        out[i0] = content[i0]
    return Frame(out)


def synthesize_dual_pair(seq: GsSequence, scan_t2b: ScanConfig, scan_b2t: ScanConfig):
    """Synthesize the reversed-direction rolling-shutter pair from one sequence."""
    if scan_t2b.direction is not Direction.TOP_TO_BOTTOM:
        raise ConfigError("first scan config must be top-to-bottom")
    if scan_b2t.direction is not Direction.BOTTOM_TO_TOP:
        raise ConfigError("second scan config must be bottom-to-top")
    same = (
        scan_t2b.height == scan_b2t.height
        and scan_t2b.width == scan_b2t.width
        and scan_t2b.tau == scan_b2t.tau
        and scan_t2b.t_mid == scan_b2t.t_mid
    )
    if not same:
        raise ConfigError("dual scan configs must differ only in direction")
    return synthesize_rs(seq, scan_t2b), synthesize_rs(seq, scan_b2t)


def sequence_from_scene(spec, scan: ScanConfig) -> GsSequence:
    """Global-shutter sequence sampled at every row time of ``scan``."""
    from .scene import render_gs_at

    times = np.sort(row_times(scan))
    return GsSequence([render_gs_at(spec, float(t)) for t in times], times)
