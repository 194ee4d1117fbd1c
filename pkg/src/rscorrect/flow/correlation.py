"""All-pairs correlation volumes with multi-scale pooling and windowed lookup.

The level-0 volume holds the dot product of every descriptor pair:
``V[i, j, k, l] = sum_h a[i, j, h] * b[k, l, h]``. Coarser levels average-pool
the last two (target) dimensions with kernel 2 and stride 2. The reverse-
direction volume is the transpose pairing ``(i, j) <-> (k, l)`` and is built
from the already-computed volume, never by re-multiplying features.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import FlowField
from ..errors import DimensionError, ParameterError
from .features import FeatureMap

DEFAULT_LEVELS = 4
DEFAULT_RADIUS = 1  # window size 3


@dataclass(eq=False)
class CorrelationPyramid:
    """Multi-scale 4-D similarity volumes.

    ``levels[s]`` has shape (Hc, Wc, ceil-halved target dims); ``reverse``
    records whether this pyramid is the transposed (b -> a) pairing.
    """

    levels: list = field(default_factory=list)
    reverse: bool = False

    @property
    def num_levels(self) -> int:
        return len(self.levels)

    @property
    def grid_shape(self):
        return self.levels[0].shape[:2]

    def reversed(self) -> "CorrelationPyramid":
        """Transpose pairing of this pyramid, pooled the same way."""
        base = self.levels[0].transpose(2, 3, 0, 1)
        return CorrelationPyramid(_pool_levels(base, self.num_levels), not self.reverse)


def _avg_pool_last2(vol: np.ndarray) -> np.ndarray:
    """Average pooling over the last two dims, kernel 2, stride 2 (floor)."""
    hk, wk = vol.shape[-2], vol.shape[-1]
    he, we = (hk // 2) * 2, (wk // 2) * 2
    v = vol[..., :he, :we]
    shape = v.shape[:-2] + (he // 2, 2, we // 2, 2)
    return v.reshape(shape).mean(axis=(-3, -1))


def _pool_levels(base: np.ndarray, num_levels: int) -> list:
    levels = [base]
    for _ in range(num_levels - 1):
        prev = levels[-1]
        if prev.shape[-2] < 2 or prev.shape[-1] < 2:
            break
        levels.append(_avg_pool_last2(prev))
    return levels


def build_correlation(a: FeatureMap, b: FeatureMap, num_levels: int = DEFAULT_LEVELS) -> CorrelationPyramid:
    """Build the forward correlation pyramid between two feature maps.

    Levels stop early if the target dimensions can no longer be halved, so
    ``num_levels`` is an upper bound for small grids.
    """
    if a.data.shape != b.data.shape:
        raise DimensionError(f"feature maps differ in shape: {a.data.shape} vs {b.data.shape}")
    if num_levels < 1:
        raise ParameterError("num_levels must be at least 1")
    base = np.einsum("ijh,klh->ijkl", a.data, b.data, optimize=True)
    return CorrelationPyramid(_pool_levels(base, num_levels), reverse=False)


def _window_offsets(radius: int):
    k = 2 * radius + 1
    dy, dx = np.mgrid[-radius : radius + 1, -radius : radius + 1]
    return dy.reshape(-1).astype(np.float64), dx.reshape(-1).astype(np.float64), k


def _sample_volume(level: np.ndarray, ys: np.ndarray, xs: np.ndarray):
    """Bilinear sample of each cell's (k, l) slice at per-cell positions.

    ``ys``/``xs`` have shape (Hc, Wc, K); samples are clamped to the slice
    with an out-of-bounds flag returned alongside.
    """
    hc, wc, hk, wk = level.shape
    oob = (ys < 0) | (ys > hk - 1) | (xs < 0) | (xs > wk - 1)
    cy = np.clip(ys, 0.0, hk - 1.0)
    cx = np.clip(xs, 0.0, wk - 1.0)
    y0 = np.minimum(np.floor(cy).astype(np.intp), hk - 2) if hk > 1 else np.zeros_like(cy, dtype=np.intp)
    x0 = np.minimum(np.floor(cx).astype(np.intp), wk - 2) if wk > 1 else np.zeros_like(cx, dtype=np.intp)
    fy = cy - y0
    fx = cx - x0
    ii = np.arange(hc)[:, None, None]
    jj = np.arange(wc)[None, :, None]
    y1 = np.minimum(y0 + 1, hk - 1)
    x1 = np.minimum(x0 + 1, wk - 1)
    v00 = level[ii, jj, y0, x0]
    v01 = level[ii, jj, y0, x1]
    v10 = level[ii, jj, y1, x0]
    v11 = level[ii, jj, y1, x1]
    vals = (v00 * (1 - fx) + v01 * fx) * (1 - fy) + (v10 * (1 - fx) + v11 * fx) * fy
    return vals, oob


def lookup(pyr: CorrelationPyramid, flow: FlowField, radius: int = DEFAULT_RADIUS):
    """Sample correlation windows around the flow target at every level.

    For cell (i, j) and level s, a (2*radius+1)^2 window is bilinearly
    sampled from ``levels[s][i, j]`` centered at ``((i, j) + flow) / 2**s``.
    Windows are concatenated level by level (row-major within each window).

    Returns
    -------
    features : ndarray, shape (Hc, Wc, num_levels * (2*radius+1)**2)
    oob : ndarray of bool, same shape
        True where a sample was clamped back onto the volume.
    """
    if radius < 0:
        raise ParameterError(f"window radius must be non-negative, got {radius}")
    hc, wc = pyr.grid_shape
    if (flow.height, flow.width) != (hc, wc):
        raise DimensionError(f"flow grid {flow.height}x{flow.width} does not match cells {hc}x{wc}")
    dy, dx, _k = _window_offsets(radius)
    ii = np.arange(hc, dtype=np.float64)[:, None]
    jj = np.arange(wc, dtype=np.float64)[None, :]
    ty = ii + flow.v
    tx = jj + flow.u
    chunks, oobs = [], []
    for s, level in enumerate(pyr.levels):
        scale = 1.0 / (2.0**s)
        ys = ty[:, :, None] * scale + dy[None, None, :]
        xs = tx[:, :, None] * scale + dx[None, None, :]
        vals, oob = _sample_volume(level, ys, xs)
        chunks.append(vals)
        oobs.append(oob)
    return np.concatenate(chunks, axis=2), np.concatenate(oobs, axis=2)


def refine_flow_with_correlation(
    flow: FlowField, pyr: CorrelationPyramid, radius: int = DEFAULT_RADIUS
) -> FlowField:
    """Snap each cell's flow to the best correlation within its search window.

    The window argmax (level 0) replaces the flow, refined to sub-cell
    precision by a separable quadratic fit. Ties keep the offset closest to
    the incoming flow, so flat windows leave it unchanged; windows that fall
    entirely outside the volume leave the cell untouched.
    """
    if radius < 0:
        raise ParameterError(f"window radius must be non-negative, got {radius}")
    hc, wc = pyr.grid_shape
    if (flow.height, flow.width) != (hc, wc):
        raise DimensionError(f"flow grid {flow.height}x{flow.width} does not match cells {hc}x{wc}")
    dy, dx, k = _window_offsets(radius)
    ii = np.arange(hc, dtype=np.float64)[:, None]
    jj = np.arange(wc, dtype=np.float64)[None, :]
    ys = (ii + flow.v)[:, :, None] + dy[None, None, :]
    xs = (jj + flow.u)[:, :, None] + dx[None, None, :]
    vals, oob = _sample_volume(pyr.levels[0], ys, xs)

    # Visit offsets closest-to-center first so ties keep the incoming flow.
    order = np.argsort(dy**2 + dx**2, kind="stable")
    peak = vals.max(axis=2, keepdims=True)
    is_peak = vals[:, :, order] >= peak - 1e-12
    best = order[np.argmax(is_peak, axis=2)]
    by, bx = best // k, best % k

    grid = vals.reshape(hc, wc, k, k)
    ci = np.arange(hc)[:, None]
    cj = np.arange(wc)[None, :]
    c0 = grid[ci, cj, by, bx]

    def axis_delta(minus, plus, at_edge):
        denom = minus + plus - 2.0 * c0
        with np.errstate(divide="ignore", invalid="ignore"):
            delta = 0.5 * (minus - plus) / denom
        delta = np.where(np.abs(denom) > 1e-12, delta, 0.0)
        return np.where(at_edge, 0.0, np.clip(delta, -0.5, 0.5))

    dxs = axis_delta(
        grid[ci, cj, by, np.maximum(bx - 1, 0)],
        grid[ci, cj, by, np.minimum(bx + 1, k - 1)],
        (bx == 0) | (bx == k - 1),
    )
    dys = axis_delta(
        grid[ci, cj, np.maximum(by - 1, 0), bx],
        grid[ci, cj, np.minimum(by + 1, k - 1), bx],
        (by == 0) | (by == k - 1),
    )

    all_oob = oob.all(axis=2)
    new_u = np.where(all_oob, flow.u, flow.u + (bx - radius) + dxs)
    new_v = np.where(all_oob, flow.v, flow.v + (by - radius) + dys)
    return FlowField(new_u, new_v, flow.valid.copy())
