"""Hand-crafted matching features on a 1/8-resolution cell grid.

Each 8x8 cell is summarized by its mean gray level, mean x/y gradients, and
a 9-bin histogram of census neighbor-comparison counts (for every pixel, the
number of its 8 neighbors that are strictly brighter). The census bins make
the descriptor robust to illumination offsets; the gradient means keep it
orientation-sensitive. Every cell vector is L2-normalized, so dot products
between descriptors are cosine similarities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import Frame
from ..errors import DimensionError

CELL = 8
FEATURE_DIM = 12


@dataclass(eq=False)
class FeatureMap:
    """Per-cell descriptors, shape (H/8, W/8, 12), unit L2 norm per cell."""

    data: np.ndarray

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]


def _census_counts(gray: np.ndarray) -> np.ndarray:
    """Number of strictly-brighter 8-neighbors for every pixel (edge padded)."""
    padded = np.pad(gray, 1, mode="edge")
    counts = np.zeros(gray.shape, dtype=np.int8)
    h, w = gray.shape
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dy == 0 and dx == 0:
                continue
            nb = padded[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]
            counts += (nb > gray).astype(np.int8)
    return counts


def _cell_mean(arr: np.ndarray, hc: int, wc: int) -> np.ndarray:
    return arr[: hc * CELL, : wc * CELL].reshape(hc, CELL, wc, CELL).mean(axis=(1, 3))


def extract_features(frame: Frame) -> FeatureMap:
    """Compute the cell-grid descriptor map for one frame.

    Requires the frame to be at least 16x16; trailing rows/columns that do
    not fill a whole cell are ignored.
    """
    if frame.height < 2 * CELL or frame.width < 2 * CELL:
        raise DimensionError(f"frame must be at least {2*CELL}x{2*CELL} for feature extraction")
    gray = frame.gray()
    hc, wc = frame.height // CELL, frame.width // CELL
    gy, gx = np.gradient(gray)
    counts = _census_counts(gray)

    feats = np.empty((hc, wc, FEATURE_DIM))
    feats[:, :, 0] = _cell_mean(gray, hc, wc)
    feats[:, :, 1] = _cell_mean(gx, hc, wc)
    feats[:, :, 2] = _cell_mean(gy, hc, wc)
    for b in range(9):
        feats[:, :, 3 + b] = _cell_mean((counts == b).astype(np.float64), hc, wc)

    norms = np.linalg.norm(feats, axis=2, keepdims=True)
    feats /= np.maximum(norms, 1e-12)
    return FeatureMap(feats)
