"""Shared domain types plus the sampling, warping, and blending primitives.

Images are stored row-major as ``(height, width, channels)`` float64 arrays
with intensities in [0, 1]. Pixel (0, 0) is the top-left corner; ``x`` indexes
columns and ``y`` indexes rows. All operations are pure: inputs are never
mutated and outputs are freshly allocated.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, RangeError


class Direction(enum.Enum):
    """Rolling-shutter scan direction."""

    TOP_TO_BOTTOM = "t2b"
    BOTTOM_TO_TOP = "b2t"


@dataclass(frozen=True, eq=False)
class Frame:
    """An image raster: ``data`` has shape (height, width, channels).

    Invariants: every sample is finite and in [0, 1]; height and width are
    at least 2; channels is 1 or 3.
    """

    data: np.ndarray

    def __post_init__(self):
        d = self.data
        if d.ndim != 3 or d.shape[2] not in (1, 3):
            raise DimensionError(f"frame data must be (H, W, C) with C in {{1, 3}}, got {d.shape}")
        if d.shape[0] < 2 or d.shape[1] < 2:
            raise DimensionError(f"frame must be at least 2x2, got {d.shape[:2]}")
        if not np.all(np.isfinite(d)):
            raise RangeError("frame contains non-finite samples")
        if d.min() < 0.0 or d.max() > 1.0:
            raise RangeError("frame intensities must lie in [0, 1]")

    @classmethod
    def from_array(cls, arr) -> "Frame":
        """Build a frame from a (H, W) or (H, W, C) array, copying to float64."""
        a = np.asarray(arr, dtype=np.float64)
        if a.ndim == 2:
            a = a[:, :, None]
        return cls(np.ascontiguousarray(a))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    def gray(self) -> np.ndarray:
        """Channel-mean grayscale view, shape (H, W)."""
        return self.data.mean(axis=2)


@dataclass(frozen=True)
class ScanConfig:
    """Rolling-shutter geometry.

    ``tau`` is the per-row readout interval in seconds and ``t_mid`` the
    midpoint of the exposure period, so the scan spans
    ``[t_mid - tau*(H-1)/2, t_mid + tau*(H-1)/2]``.
    """

    height: int
    width: int
    tau: float
    direction: Direction
    t_mid: float = 0.0

    def __post_init__(self):
        if self.height < 2:
            raise RangeError(f"scan height must be >= 2, got {self.height}")
        if self.width < 2:
            raise RangeError(f"scan width must be >= 2, got {self.width}")
        if not self.tau > 0:
            raise RangeError(f"per-row readout tau must be positive, got {self.tau}")

    @property
    def t_start(self) -> float:
        return self.t_mid - self.tau * (self.height - 1) / 2.0

    @property
    def t_end(self) -> float:
        return self.t_mid + self.tau * (self.height - 1) / 2.0

    @property
    def scan_duration(self) -> float:
        return self.tau * (self.height - 1)

    def with_direction(self, direction: Direction) -> "ScanConfig":
        return ScanConfig(self.height, self.width, self.tau, direction, self.t_mid)


@dataclass(eq=False)
class FlowField:
    """Dense per-pixel displacement field in pixels, with a validity mask."""

    u: np.ndarray
    v: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        if self.u.shape != self.v.shape or self.u.shape != self.valid.shape:
            raise DimensionError("flow components and mask must share one shape")
        if self.u.ndim != 2:
            raise DimensionError(f"flow components must be 2-D, got {self.u.ndim}-D")
        if not np.all(np.isfinite(self.u[self.valid])) or not np.all(np.isfinite(self.v[self.valid])):
            raise RangeError("flow contains non-finite values marked valid")

    @classmethod
    def zeros(cls, height: int, width: int) -> "FlowField":
        z = np.zeros((height, width))
        return cls(z, z.copy(), np.ones((height, width), dtype=bool))

    @classmethod
    def constant(cls, height: int, width: int, du: float, dv: float) -> "FlowField":
        return cls(
            np.full((height, width), float(du)),
            np.full((height, width), float(dv)),
            np.ones((height, width), dtype=bool),
        )

    @property
    def height(self) -> int:
        return self.u.shape[0]

    @property
    def width(self) -> int:
        return self.u.shape[1]

    def negated(self) -> "FlowField":
        return FlowField(-self.u, -self.v, self.valid.copy())


@dataclass(frozen=True, eq=False)
class RowDisplacementMap:
    """Per-row signed time offset in normalized scan units (full scan = 1)."""

    values: np.ndarray

    def __post_init__(self):
        v = self.values
        if v.ndim != 1 or v.shape[0] < 2:
            raise DimensionError("row displacement map must be 1-D with at least 2 rows")
        if not np.all(np.isfinite(v)) or np.abs(v).max() > 1.0 + 1e-12:
            raise RangeError("row displacements must lie in [-1, 1]")

    @property
    def height(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True, eq=False)
class TimeMap:
    """Per-row interpolation time in [0, 1]."""

    values: np.ndarray

    def __post_init__(self):
        v = self.values
        if v.ndim != 1 or v.shape[0] < 2:
            raise DimensionError("time map must be 1-D with at least 2 rows")
        if not np.all(np.isfinite(v)) or v.min() < -1e-12 or v.max() > 1.0 + 1e-12:
            raise RangeError("time map values must lie in [0, 1]")

    @property
    def height(self) -> int:
        return self.values.shape[0]

    def complement(self) -> "TimeMap":
        return TimeMap(1.0 - self.values)

    def flipped(self) -> "TimeMap":
        return TimeMap(self.values[::-1].copy())


@dataclass(frozen=True, eq=False)
class RowMask:
    """Per-row binary selector."""

    values: np.ndarray

    def __post_init__(self):
        v = self.values
        if v.ndim != 1:
            raise DimensionError("row mask must be 1-D")
        if not np.all((v == 0.0) | (v == 1.0)):
            raise RangeError("row mask must be binary")

    @property
    def height(self) -> int:
        return self.values.shape[0]

    def flipped(self) -> "RowMask":
        return RowMask(self.values[::-1].copy())


@dataclass(frozen=True, eq=False)
class FusionMask:
    """Per-pixel blend weight in [0, 1]; shape broadcasts against frames."""

    m: np.ndarray

    def __post_init__(self):
        v = self.m
        if v.ndim != 2:
            raise DimensionError("fusion mask must be 2-D")
        if not np.all(np.isfinite(v)) or v.min() < -1e-12 or v.max() > 1.0 + 1e-12:
            raise RangeError("fusion mask weights must lie in [0, 1]")


def bilinear_sample(frame: Frame, x, y):
    """Sample a frame with bilinear interpolation at real coordinates.

    Parameters
    ----------
    frame : Frame
        Source image.
    x, y : scalar or ndarray
        Column and row coordinates. Coordinates outside
        ``[0, W-1] x [0, H-1]`` are clamped to the nearest edge pixel.

    Returns
    -------
    values : ndarray
        Sampled intensities with shape ``shape(x) + (channels,)``.
    inbounds : ndarray of bool
        False where the requested coordinate fell outside the frame.
    """
    xs = np.asarray(x, dtype=np.float64)
    ys = np.asarray(y, dtype=np.float64)
    h, w = frame.height, frame.width
    inbounds = (xs >= 0.0) & (xs <= w - 1.0) & (ys >= 0.0) & (ys <= h - 1.0)
    cx = np.clip(xs, 0.0, w - 1.0)
    cy = np.clip(ys, 0.0, h - 1.0)
    x0 = np.minimum(np.floor(cx).astype(np.intp), w - 2)
    y0 = np.minimum(np.floor(cy).astype(np.intp), h - 2)
    fx = (cx - x0)[..., None]
    fy = (cy - y0)[..., None]
    d = frame.data
    top = d[y0, x0] * (1.0 - fx) + d[y0, x0 + 1] * fx
    bot = d[y0 + 1, x0] * (1.0 - fx) + d[y0 + 1, x0 + 1] * fx
    values = top * (1.0 - fy) + bot * fy
    return values, inbounds


def backward_warp(src: Frame, flow: FlowField):
    """Warp ``src`` by sampling at ``p + flow(p)`` for every output pixel p.

    Returns the warped frame together with a validity mask that is False
    wherever the sample position fell outside the source or the flow was
    itself invalid.
    """
    if (flow.height, flow.width) != (src.height, src.width):
        raise DimensionError(
            f"flow grid {flow.height}x{flow.width} does not match frame {src.height}x{src.width}"
        )
    yy, xx = np.mgrid[0 : src.height, 0 : src.width].astype(np.float64)
    values, inbounds = bilinear_sample(src, xx + flow.u, yy + flow.v)
    valid = inbounds & flow.valid
    return Frame(np.clip(values, 0.0, 1.0)), valid


def blend_masked(a: Frame, b: Frame, mask: FusionMask, residual: Frame) -> Frame:
    """Per-pixel ``residual + mask*a + (1-mask)*b``, clamped to [0, 1]."""
    if a.data.shape != b.data.shape or a.data.shape != residual.data.shape:
        raise DimensionError("blend operands must share one shape")
    if mask.m.shape[0] != a.height or mask.m.shape[1] not in (1, a.width):
        raise DimensionError(
            f"fusion mask {mask.m.shape} does not broadcast over {a.height}x{a.width}"
        )
    m = mask.m[:, :, None]
    out = residual.data + m * a.data + (1.0 - m) * b.data
    return Frame(np.clip(out, 0.0, 1.0))


def frames_close(a: Frame, b: Frame, atol: float = 1e-12) -> bool:
    """True when two frames agree within ``atol`` everywhere."""
    return a.data.shape == b.data.shape and bool(np.all(np.abs(a.data - b.data) <= atol))
