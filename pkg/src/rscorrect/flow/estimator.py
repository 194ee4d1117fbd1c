"""Dense optical flow by coarse-to-fine robust variational estimation.

At each pyramid level the second image is warped by the current flow, the
brightness-constancy term is linearized there, and the total field is
re-solved with a Charbonnier-weighted data term plus first-order smoothness
(Jacobi sweeps with iteratively reweighted data attachment). A median filter
after every warp pass suppresses outliers. Reductions are plain NumPy ops in
a fixed order, so results are reproducible bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ..core import FlowField, Frame
from ..errors import DimensionError, ParameterError

# Neighborhood average used by the smoothness term.
_AVG = np.array(
    [
        [1 / 12, 1 / 6, 1 / 12],
        [1 / 6, 0.0, 1 / 6],
        [1 / 12, 1 / 6, 1 / 12],
    ]
)
_PYRAMID_BLUR_SIGMA = 0.8
_SOLVER_SWEEPS = 30


@dataclass(frozen=True)
class FlowParams:
    """Tuning knobs for the variational estimator."""

    pyramid_factor: float = 0.5
    min_level_size: int = 16
    warp_iterations: int = 5
    smoothness: float = 0.15
    robust_eps: float = 1e-3
    median_radius: int = 2

    def __post_init__(self):
        if not 0.0 < self.pyramid_factor < 1.0:
            raise ParameterError("pyramid_factor must lie in (0, 1)")
        if self.min_level_size <= 0 or self.warp_iterations <= 0:
            raise ParameterError("min_level_size and warp_iterations must be positive")
        if self.smoothness <= 0 or self.robust_eps <= 0 or self.median_radius <= 0:
            raise ParameterError("smoothness, robust_eps, and median_radius must be positive")


def _resize(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize with half-pixel centers (symmetric under flips)."""
    in_h, in_w = img.shape
    ys = np.clip((np.arange(out_h) + 0.5) * (in_h / out_h) - 0.5, 0, in_h - 1)
    xs = np.clip((np.arange(out_w) + 0.5) * (in_w / out_w) - 0.5, 0, in_w - 1)
    cy, cx = np.meshgrid(ys, xs, indexing="ij")
    return ndimage.map_coordinates(img, [cy, cx], order=1, mode="nearest")


def _warp(img: np.ndarray, u: np.ndarray, v: np.ndarray):
    h, w = img.shape
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    sy = yy + v
    sx = xx + u
    valid = (sy >= 0) & (sy <= h - 1) & (sx >= 0) & (sx <= w - 1)
    out = ndimage.map_coordinates(
        img, [np.clip(sy, 0, h - 1), np.clip(sx, 0, w - 1)], order=1, mode="nearest"
    )
    return out, valid


def _pyramid(img: np.ndarray, factor: float, min_size: int) -> list:
    levels = [img]
    cur = img
    while min(cur.shape) * factor >= min_size:
        blurred = ndimage.gaussian_filter(cur, _PYRAMID_BLUR_SIGMA, mode="nearest")
        nh = int(np.floor(cur.shape[0] * factor))
        nw = int(np.floor(cur.shape[1] * factor))
        cur = _resize(blurred, nh, nw)
        levels.append(cur)
    return levels


def _solve_level(a, b, u, v, params: FlowParams):
    lam = params.smoothness
    eps2 = params.robust_eps**2
    size = 2 * params.median_radius + 1
    for _ in range(params.warp_iterations):
        bw, valid = _warp(b, u, v)
        gy_a, gx_a = np.gradient(a)
        gy_b, gx_b = np.gradient(bw)
        ix = 0.5 * (gx_a + gx_b)
        iy = 0.5 * (gy_a + gy_b)
        it = bw - a
        # Linearize around the current flow but solve for the total field so
        # the smoothness term acts on it, not on the increment.
        c = it - ix * u - iy * v
        uu, vv = u, v
        gate = valid.astype(np.float64)
        g2 = ix * ix + iy * iy
        for _ in range(_SOLVER_SWEEPS):
            ub = ndimage.correlate(uu, _AVG, mode="nearest")
            vb = ndimage.correlate(vv, _AVG, mode="nearest")
            r = ix * uu + iy * vv + c
            w = gate / np.sqrt(r * r + eps2)
            num = ix * ub + iy * vb + c
            den = lam + w * g2
            uu = ub - w * ix * num / den
            vv = vb - w * iy * num / den
        u = ndimage.median_filter(uu, size=size, mode="nearest")
        v = ndimage.median_filter(vv, size=size, mode="nearest")
    return u, v


def estimate_flow(a: Frame, b: Frame, params: FlowParams | None = None) -> FlowField:
    """Estimate the dense flow that backward-warps ``b`` onto ``a``.

    The returned field satisfies ``a(p) ~= b(p + f(p))``; its validity mask
    is everywhere True (out-of-frame motion is extrapolated by smoothness).
    """
    params = params or FlowParams()
    if a.data.shape != b.data.shape:
        raise DimensionError(f"frames differ in shape: {a.data.shape} vs {b.data.shape}")
    if min(a.height, a.width) < params.min_level_size:
        raise DimensionError(
            f"frames must be at least {params.min_level_size} px on each side"
        )
    pyr_a = _pyramid(a.gray(), params.pyramid_factor, params.min_level_size)
    pyr_b = _pyramid(b.gray(), params.pyramid_factor, params.min_level_size)

    u = np.zeros(pyr_a[-1].shape)
    v = np.zeros_like(u)
    for la, lb in zip(reversed(pyr_a), reversed(pyr_b)):
        if u.shape != la.shape:
            su = la.shape[1] / u.shape[1]
            sv = la.shape[0] / u.shape[0]
            u = _resize(u, *la.shape) * su
            v = _resize(v, *la.shape) * sv
        u, v = _solve_level(la, lb, u, v, params)
    return FlowField(u, v, np.ones(a.data.shape[:2], dtype=bool))
