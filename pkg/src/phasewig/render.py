"""Heatmaps as binary PGM (grayscale) and PPM (diverging) images.

Image rows run from the largest p down to the smallest; columns follow q.

Grayscale: pixel = round(255 (v - lo) / (hi - lo)) with lo, hi the field
min and max; a constant field maps to 0.

Diverging: s = max |v|, t = v / s in [-1, 1]. t >= 0 gives
(255, round(255 (1 - t)), round(255 (1 - t))), white to red; t < 0 gives
(round(255 (1 + t)), round(255 (1 + t)), 255), white to blue. An all-zero
field is white.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fieldio import atomic_write


@dataclass(frozen=True)
class RenderInfo:
    lo: float
    hi: float
    mode: str

    def as_dict(self) -> dict:
        return {"min": self.lo, "max": self.hi, "mode": self.mode}


def _image(values) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    if v.ndim != 2:
        raise ValueError("heatmaps need a 2-D field")
    if not np.all(np.isfinite(v)):
        raise ValueError("cannot render non-finite values")
    return v.T[::-1]


def gray_pixels(values) -> tuple[np.ndarray, RenderInfo]:
    img = _image(values)
    lo, hi = float(img.min()), float(img.max())
    if hi > lo:
        pix = np.rint(255.0 * (img - lo) / (hi - lo))
    else:
        pix = np.zeros_like(img)
    return pix.astype(np.uint8), RenderInfo(lo, hi, "linear")


def diverging_pixels(values) -> tuple[np.ndarray, RenderInfo]:
    img = _image(values)
    s = float(np.abs(img).max())
    t = img / s if s > 0 else np.zeros_like(img)
    fade = np.rint(255.0 * (1.0 - np.abs(t)))
    rgb = np.empty(img.shape + (3,))
    pos = t >= 0
    rgb[..., 0] = np.where(pos, 255.0, fade)
    rgb[..., 1] = fade
    rgb[..., 2] = np.where(pos, fade, 255.0)
    return rgb.astype(np.uint8), RenderInfo(-s, s, "diverging")


def pgm_bytes(values) -> tuple[bytes, RenderInfo]:
    pix, info = gray_pixels(values)
    h, w = pix.shape
    return f"P5\n{w} {h}\n255\n".encode() + pix.tobytes(), info


def ppm_bytes(values) -> tuple[bytes, RenderInfo]:
    pix, info = diverging_pixels(values)
    h, w = pix.shape[:2]
    return f"P6\n{w} {h}\n255\n".encode() + pix.tobytes(), info


def write_pgm(path, values) -> RenderInfo:
    data, info = pgm_bytes(values)
    atomic_write(path, data)
    return info


def write_ppm(path, values) -> RenderInfo:
    data, info = ppm_bytes(values)
    atomic_write(path, data)
    return info


def read_pnm(path) -> np.ndarray:
    """Pixels of a binary PGM/PPM written by this module."""
    with open(path, "rb") as fh:
        data = fh.read()
    parts = data.split(b"\n", 3)
    magic, (w, h), maxval = parts[0], map(int, parts[1].split()), int(parts[2])
    if maxval != 255 or magic not in (b"P5", b"P6"):
        raise ValueError("unsupported image")
    ch = 1 if magic == b"P5" else 3
    pix = np.frombuffer(parts[3], dtype=np.uint8).reshape((h, w, ch) if ch == 3 else (h, w))
    return pix
