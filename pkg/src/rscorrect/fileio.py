"""File formats: 8-bit PNG frames, Middlebury flow files, run manifests.

Frames travel as 8-bit PNG; all internal math stays on [0, 1] reals and
quantization happens only here (round half away from zero). Flow files use
the Middlebury layout: the 4-byte magic ``PIEH``, width and height as
little-endian 32-bit integers, then row-major interleaved (u, v) float32
pairs. Samples with a magnitude above 1e9 mark invalid flow. Manifests are
human-readable ``key: value`` text with two-space indentation for nested
sections; writing is deterministic, so identical runs produce identical
bytes.
"""

from __future__ import annotations

import hashlib
import struct
from pathlib import Path

import numpy as np
from PIL import Image

from .core import FlowField, Frame
from .errors import DimensionError, RangeError

FLO_MAGIC = b"PIEH"
FLO_INVALID = 1e9


def read_frame(path) -> Frame:
    """Load a PNG (or any PIL-readable raster) as a [0, 1] frame."""
    with Image.open(path) as img:
        if img.mode in ("L", "I;16", "I"):
            arr = np.asarray(img.convert("L"), dtype=np.float64)[:, :, None]
        else:
            arr = np.asarray(img.convert("RGB"), dtype=np.float64)
    return Frame(arr / 255.0)


def write_frame(path, frame: Frame) -> None:
    """Quantize to 8 bits (round half away from zero) and write a PNG."""
    q = np.floor(frame.data * 255.0 + 0.5).astype(np.uint8)
    if frame.channels == 1:
        img = Image.fromarray(q[:, :, 0], mode="L")
    else:
        img = Image.fromarray(q, mode="RGB")
    img.save(path, format="PNG")


def read_flo(path) -> FlowField:
    """Read a Middlebury flow file."""
    raw = Path(path).read_bytes()
    if raw[:4] != FLO_MAGIC:
        raise RangeError(f"{path}: not a Middlebury flow file (bad magic)")
    if len(raw) < 12:
        raise RangeError(f"{path}: truncated flow file header")
    w, h = struct.unpack("<ii", raw[4:12])
    if w <= 0 or h <= 0:
        raise DimensionError(f"{path}: invalid flow dimensions {w}x{h}")
    count = 2 * w * h
    if len(raw) < 12 + 4 * count:
        raise RangeError(f"{path}: truncated flow file payload")
    data = np.frombuffer(raw[12:], dtype="<f4", count=count).reshape(h, w, 2)
    u = data[:, :, 0].astype(np.float64)
    v = data[:, :, 1].astype(np.float64)
    valid = (np.abs(u) < FLO_INVALID) & (np.abs(v) < FLO_INVALID)
    u = np.where(valid, u, 0.0)
    v = np.where(valid, v, 0.0)
    return FlowField(u, v, valid)


def write_flo(path, flow: FlowField) -> None:
    """Write a Middlebury flow file; invalid pixels get the 1e10 sentinel."""
    h, w = flow.height, flow.width
    data = np.empty((h, w, 2), dtype="<f4")
    data[:, :, 0] = np.where(flow.valid, flow.u, 10.0 * FLO_INVALID)
    data[:, :, 1] = np.where(flow.valid, flow.v, 10.0 * FLO_INVALID)
    with open(path, "wb") as f:
        f.write(FLO_MAGIC)
        f.write(struct.pack("<ii", w, h))
        f.write(data.tobytes())


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    digest.update(Path(path).read_bytes())
    return digest.hexdigest()


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _format_scalar(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_manifest_text(manifest: dict) -> str:
    """Render a nested dict as deterministic ``key: value`` text.

    Values may be scalars, lists of scalars (comma separated), or nested
    dicts (indented sections). Key order follows insertion order.
    """
    lines = []

    def emit(d: dict, indent: int) -> None:
        pad = "  " * indent
        for key, value in d.items():
            if isinstance(value, dict):
                lines.append(f"{pad}{key}:")
                emit(value, indent + 1)
            elif isinstance(value, (list, tuple)):
                joined = ", ".join(_format_scalar(v) for v in value)
                lines.append(f"{pad}{key}: [{joined}]")
            else:
                lines.append(f"{pad}{key}: {_format_scalar(value)}")

    emit(manifest, 0)
    return "\n".join(lines) + "\n"


def parse_manifest_text(text: str) -> dict:
    """Parse manifest text back into nested dicts of strings/lists.

    Scalars come back as strings; bracketed values come back as lists of
    strings. Re-serializing a parsed manifest reproduces the original text
    for manifests produced by :func:`write_manifest_text`.
    """
    root: dict = {}
    stack = [(root, -1)]
    for raw in text.splitlines():
        if not raw.strip():
            continue
        indent = (len(raw) - len(raw.lstrip(" "))) // 2
        key, _, rest = raw.strip().partition(":")
        rest = rest.strip()
        while stack and stack[-1][1] >= indent:
            stack.pop()
        parent = stack[-1][0]
        if rest == "":
            child: dict = {}
            parent[key] = child
            stack.append((child, indent))
        elif rest.startswith("[") and rest.endswith("]"):
            inner = rest[1:-1].strip()
            parent[key] = [s.strip() for s in inner.split(",")] if inner else []
        else:
            parent[key] = rest
    return root


def write_manifest(path, manifest: dict) -> None:
    Path(path).write_text(write_manifest_text(manifest), encoding="utf-8")


def read_manifest(path) -> dict:
    return parse_manifest_text(Path(path).read_text(encoding="utf-8"))
