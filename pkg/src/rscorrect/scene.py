"""Parametric analytic scenes with closed-form global-shutter images.

A scene is a procedural texture observed through a time-parameterized motion.
Because the texture can be evaluated at any real coordinate, the image at any
continuous time is available in closed form, which makes these scenes exact
oracles for the formation, correction, and reconstruction pipelines.

Rendering uses inverse mapping: the image at time ``t`` samples the texture at
``motion^-1(pixel, t)``, so every rendered frame is resample-consistent with
every other frame of the same scene.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Direction, Frame, ScanConfig
from .errors import DimensionError, RangeError
from .formation import row_times

_OCTAVES = 4
_LACUNARITY = 2.0
_GAIN = 0.5
_BASE_CELL = 32.0
# Rendered intensities stay inside [0.5 - _SPAN, 0.5 + _SPAN].
_SPAN = 0.4


@dataclass(frozen=True)
class Translation:
    """Uniform translation, pixels per second."""

    vx: float
    vy: float

    def inverse(self, py, px, t):
        return py - self.vy * t, px - self.vx * t

    def max_displacement(self, t: float, height: int, width: int) -> float:
        return max(abs(self.vx), abs(self.vy)) * abs(t)


@dataclass(frozen=True)
class Rotation:
    """Rotation about ``center`` (x, y), radians per second."""

    omega: float
    center: tuple

    def inverse(self, py, px, t):
        ang = -self.omega * np.asarray(t, dtype=np.float64)
        ca, sa = np.cos(ang), np.sin(ang)
        cx, cy = self.center
        dx, dy = px - cx, py - cy
        return cy + sa * dx + ca * dy, cx + ca * dx - sa * dy

    def max_displacement(self, t: float, height: int, width: int) -> float:
        cx, cy = self.center
        r = max(
            math.hypot(x - cx, y - cy)
            for x in (0.0, width - 1.0)
            for y in (0.0, height - 1.0)
        )
        return 2.0 * r * abs(math.sin(min(abs(self.omega * t), math.pi) / 2.0))


@dataclass(frozen=True)
class Zoom:
    """Exponential zoom about ``center`` (x, y); scale is exp(rate * t)."""

    rate: float
    center: tuple

    def inverse(self, py, px, t):
        s = np.exp(self.rate * np.asarray(t, dtype=np.float64))
        cx, cy = self.center
        return cy + (py - cy) / s, cx + (px - cx) / s

    def max_displacement(self, t: float, height: int, width: int) -> float:
        cx, cy = self.center
        r = max(
            math.hypot(x - cx, y - cy)
            for x in (0.0, width - 1.0)
            for y in (0.0, height - 1.0)
        )
        return r * abs(1.0 / math.exp(self.rate * t) - 1.0) if t else 0.0


@dataclass(frozen=True)
class SceneSpec:
    """A procedural scene: seeded multi-octave value noise under one motion.

    ``margin`` is the texture overscan in pixels; rendering is valid only at
    times whose motion pulls samples at most ``margin`` outside the canvas.
    """

    height: int
    width: int
    motion: object
    seed: int = 0
    channels: int = 1
    margin: float = 16.0

    def __post_init__(self):
        if self.height < 2 or self.width < 2:
            raise RangeError("scene canvas must be at least 2x2")
        if self.channels not in (1, 3):
            raise RangeError("scene channels must be 1 or 3")
        if self.margin < 0:
            raise RangeError("margin must be non-negative")

    def validity_check(self, t: float) -> None:
        d = self.motion.max_displacement(t, self.height, self.width)
        if d > self.margin + 1e-9:
            raise RangeError(
                f"time {t} moves samples {d:.2f} px, beyond the {self.margin} px margin"
            )


class _ValueNoise:
    """Multi-octave seeded value noise over one channel, bilinear lattice lookup."""

    def __init__(self, seed_seq: np.random.SeedSequence, extent_y: float, extent_x: float):
        rng = np.random.Generator(np.random.PCG64(seed_seq))
        self.lattices = []
        cell = _BASE_CELL
        for _ in range(_OCTAVES):
            ny = int(np.ceil(extent_y / cell)) + 3
            nx = int(np.ceil(extent_x / cell)) + 3
            self.lattices.append((rng.random((ny, nx)) * 2.0 - 1.0, cell))
            cell /= _LACUNARITY
        self.norm = sum(_GAIN**o for o in range(_OCTAVES))

    def __call__(self, y, x, offset: float):
        out = np.zeros(np.broadcast(y, x).shape)
        amp = 1.0
        for lattice, cell in self.lattices:
            # offset makes the coordinates non-negative, so truncation == floor
            gy = (y + offset) / cell + 1.0
            gx = (x + offset) / cell + 1.0
            iy = np.minimum(gy.astype(np.intp), lattice.shape[0] - 2)
            ix = np.minimum(gx.astype(np.intp), lattice.shape[1] - 2)
            fy = gy - iy
            fx = gx - ix
            flat = lattice.ravel()
            nx = lattice.shape[1]
            idx = iy * nx + ix
            v00 = flat.take(idx)
            v01 = flat.take(idx + 1)
            v10 = flat.take(idx + nx)
            v11 = flat.take(idx + nx + 1)
            top = v00 + fx * (v01 - v00)
            bot = v10 + fx * (v11 - v10)
            out += amp * (top + fy * (bot - top))
            amp *= _GAIN
        return 0.5 + _SPAN * (out / self.norm)


_texture_cache: dict = {}


def _texture(spec: SceneSpec):
    key = (spec.seed, spec.height, spec.width, spec.channels, spec.margin)
    tex = _texture_cache.get(key)
    if tex is None:
        extent_y = spec.height - 1 + 2 * spec.margin
        extent_x = spec.width - 1 + 2 * spec.margin
        seqs = np.random.SeedSequence(spec.seed).spawn(spec.channels)
        tex = [_ValueNoise(s, extent_y, extent_x) for s in seqs]
        if len(_texture_cache) > 32:
            _texture_cache.clear()
        _texture_cache[key] = tex
    return tex


_grid_cache: dict = {}


def _pixel_grid(height: int, width: int):
    grid = _grid_cache.get((height, width))
    if grid is None:
        grid = np.mgrid[0:height, 0:width].astype(np.float64)
        if len(_grid_cache) > 8:
            _grid_cache.clear()
        _grid_cache[(height, width)] = grid
    return grid[0], grid[1]


def _render_at_times(spec: SceneSpec, t) -> np.ndarray:
    """Evaluate the scene on the pixel grid; ``t`` broadcasts against rows."""
    yy, xx = _pixel_grid(spec.height, spec.width)
    qy, qx = spec.motion.inverse(yy, xx, t)
    tex = _texture(spec)
    chans = [noise(qy, qx, spec.margin) for noise in tex]
    return np.stack(chans, axis=-1)


def render_gs_at(spec: SceneSpec, time: float) -> Frame:
    """Render the global-shutter image of the scene at one instant.

    Deterministic: the same (spec, time) always produces a bit-identical
    frame. Raises ``RangeError`` when the motion at ``time`` would sample
    outside the textured margin.
    """
    spec.validity_check(time)
    return Frame(np.clip(_render_at_times(spec, float(time)), 0.0, 1.0))


def render_rs_exact(spec: SceneSpec, scan: ScanConfig) -> Frame:
    """Render the exact rolling-shutter image for a scan over this scene.

    Row ``i`` of the result equals row ``i`` of the global-shutter image at
    that row's capture time, for either scan direction.
    """
    if (scan.height, scan.width) != (spec.height, spec.width):
        raise DimensionError(
            f"scan {scan.height}x{scan.width} does not match canvas {spec.height}x{spec.width}"
        )
    times = row_times(scan)
    spec.validity_check(float(times.min()))
    spec.validity_check(float(times.max()))
    data = _render_at_times(spec, times[:, None])
    return Frame(np.clip(data, 0.0, 1.0))


def scan_for_scene(
    spec: SceneSpec, direction: Direction, duration: float = 1.0, t_mid: float = 0.5
) -> ScanConfig:
    """Convenience scan covering ``duration`` seconds over the scene canvas."""
    tau = duration / (spec.height - 1)
    return ScanConfig(spec.height, spec.width, tau, direction, t_mid)
