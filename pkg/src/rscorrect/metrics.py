"""Loss functions and image-quality metrics.

The cycle losses compare the input rolling-shutter pair against the pair
reconstructed from corrected frames: ``l_se`` covers the reconstructions
from the start/end frames, ``l_sme`` those using the intermediate frame,
and ``l_self`` is their sum. The penalty is a zero-anchored Charbonnier,
so identical images score exactly 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import convolve2d

from .core import Frame
from .errors import DimensionError, RangeError

PSNR_CAP_DB = 99.0
_SSIM_WINDOW = 11
_SSIM_SIGMA = 1.5
_SSIM_K1 = 0.01
_SSIM_K2 = 0.03


@dataclass
class LossReport:
    """Cycle-consistency loss breakdown; ``l_self = l_se + l_sme`` exactly."""

    l_se: float
    l_sme: float
    l_self: float
    per_image: dict = field(default_factory=dict)
    border: int = 0

    def lines(self):
        out = [f"l_se: {self.l_se:.8f}", f"l_sme: {self.l_sme:.8f}", f"l_self: {self.l_self:.8f}"]
        out += [f"loss[{k}]: {v:.8f}" for k, v in self.per_image.items()]
        out.append(f"excluded_border: {self.border}")
        return out


def _crop(data: np.ndarray, border: int) -> np.ndarray:
    if border == 0:
        return data
    if border < 0 or 2 * border >= min(data.shape[0], data.shape[1]):
        raise RangeError(f"border {border} leaves no pixels on a {data.shape[0]}x{data.shape[1]} image")
    return data[border:-border, border:-border]


def charbonnier(a: Frame, b: Frame, eps: float = 1e-3, border: int = 0) -> float:
    """Zero-anchored Charbonnier penalty, ``mean(sqrt(d^2 + eps^2)) - eps``."""
    if a.data.shape != b.data.shape:
        raise DimensionError(f"frames differ in shape: {a.data.shape} vs {b.data.shape}")
    if not eps > 0:
        raise RangeError("eps must be positive")
    d = _crop(a.data, border) - _crop(b.data, border)
    # subtract inside the mean so identical inputs score exactly zero
    return float(np.mean(np.sqrt(d * d + eps * eps) - eps))


def cycle_losses(
    inputs,
    recon_full,
    recon_mid,
    eps: float = 1e-3,
    border: int = 0,
) -> LossReport:
    """Score reconstructed rolling-shutter pairs against the inputs.

    Parameters
    ----------
    inputs : (Frame, Frame)
        Original pair, top-to-bottom first.
    recon_full : (Frame, Frame)
        Pair rebuilt from the start/end corrected frames.
    recon_mid : (Frame, Frame)
        Pair rebuilt using the intermediate corrected frame.
    """
    in_t2b, in_b2t = inputs
    full_t2b, full_b2t = recon_full
    mid_t2b, mid_b2t = recon_mid
    per = {
        "full_t2b": charbonnier(full_t2b, in_t2b, eps, border),
        "full_b2t": charbonnier(full_b2t, in_b2t, eps, border),
        "mid_t2b": charbonnier(mid_t2b, in_t2b, eps, border),
        "mid_b2t": charbonnier(mid_b2t, in_b2t, eps, border),
    }
    l_se = per["full_t2b"] + per["full_b2t"]
    l_sme = per["mid_t2b"] + per["mid_b2t"]
    return LossReport(l_se, l_sme, l_se + l_sme, per, border)


def psnr(a: Frame, b: Frame, border: int = 0) -> float:
    """Peak signal-to-noise ratio in dB over the [0, 1] range, capped at 99."""
    if a.data.shape != b.data.shape:
        raise DimensionError(f"frames differ in shape: {a.data.shape} vs {b.data.shape}")
    d = _crop(a.data, border) - _crop(b.data, border)
    mse = float(np.mean(d * d))
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(10.0 * np.log10(1.0 / mse), PSNR_CAP_DB)


def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    ax = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(ax * ax) / (2.0 * sigma * sigma))
    k = np.outer(g, g)
    return k / k.sum()


def ssim(a: Frame, b: Frame, border: int = 0) -> float:
    """Mean structural similarity with an 11x11 Gaussian window (sigma 1.5).

    Stabilizers use K1 = 0.01, K2 = 0.03 on a dynamic range of 1.0; channel
    scores are averaged. Requires at least 11 px per side after cropping.
    """
    if a.data.shape != b.data.shape:
        raise DimensionError(f"frames differ in shape: {a.data.shape} vs {b.data.shape}")
    da = _crop(a.data, border)
    db = _crop(b.data, border)
    if min(da.shape[0], da.shape[1]) < _SSIM_WINDOW:
        raise DimensionError(f"images must be at least {_SSIM_WINDOW} px per side for SSIM")
    win = _gaussian_window(_SSIM_WINDOW, _SSIM_SIGMA)
    c1 = _SSIM_K1**2
    c2 = _SSIM_K2**2
    scores = []
    for ch in range(da.shape[2]):
        x = da[:, :, ch]
        y = db[:, :, ch]
        mx = convolve2d(x, win, mode="valid")
        my = convolve2d(y, win, mode="valid")
        mxx = convolve2d(x * x, win, mode="valid")
        myy = convolve2d(y * y, win, mode="valid")
        mxy = convolve2d(x * y, win, mode="valid")
        vx = mxx - mx * mx
        vy = myy - my * my
        cxy = mxy - mx * my
        s = ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2))
        scores.append(float(s.mean()))
    return float(np.mean(scores))
