"""Binary PPM (P6) reading and writing.

Frames, the only image format the toolkit ingests, are 8-bit RGB rasters.
A directory of frames is read in lexicographic filename order.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

_WS = b" \t\r\n\x0b\x0c"


def _next_token(buf: bytes, pos: int) -> tuple[bytes, int]:
    """Return the next header token, skipping whitespace and # comments."""
    n = len(buf)
    while pos < n:
        c = buf[pos : pos + 1]
        if c in (b"#",):
            while pos < n and buf[pos : pos + 1] != b"\n":
                pos += 1
        elif c in _WS:
            pos += 1
        else:
            break
    start = pos
    while pos < n and buf[pos : pos + 1] not in _WS and buf[pos : pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise ValueError("ppm: truncated header")
    return buf[start:pos], pos


def read_ppm(path: str | os.PathLike) -> np.ndarray:
    """Read a binary P6 file into a (H, W, 3) uint8 array."""
    buf = Path(path).read_bytes()
    magic, pos = _next_token(buf, 0)
    if magic != b"P6":
        raise ValueError(f"ppm: bad magic {magic!r}, expected P6")
    fields = []
    for _ in range(3):
        tok, pos = _next_token(buf, pos)
        if not tok.isdigit():
            raise ValueError(f"ppm: non-numeric header field {tok!r}")
        fields.append(int(tok))
    width, height, maxval = fields
    if width <= 0 or height <= 0:
        raise ValueError("ppm: non-positive dimensions")
    if maxval != 255:
        raise ValueError(f"ppm: unsupported maxval {maxval}, expected 255")
    pos += 1  # single whitespace byte after maxval
    need = width * height * 3
    raster = buf[pos : pos + need]
    if len(raster) < need:
        raise ValueError("ppm: truncated raster")
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width, 3).copy()


def write_ppm(path: str | os.PathLike, image: np.ndarray) -> None:
    """Write a (H, W, 3) uint8 array as binary P6."""
    img = np.asarray(image)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"ppm: expected (H, W, 3), got {img.shape}")
    if img.dtype != np.uint8:
        raise ValueError(f"ppm: expected uint8, got {img.dtype}")
    h, w = img.shape[:2]
    with open(path, "wb") as fh:
        fh.write(b"P6\n%d %d\n255\n" % (w, h))
        fh.write(img.tobytes())


def read_ppm_dir(dirpath: str | os.PathLike) -> list[np.ndarray]:
    """Read every *.ppm under `dirpath`, sorted lexicographically by name."""
    paths = sorted(Path(dirpath).glob("*.ppm"))
    if not paths:
        raise ValueError(f"ppm: no .ppm files in {dirpath}")
    frames = [read_ppm(p) for p in paths]
    shape = frames[0].shape
    for p, f in zip(paths, frames):
        if f.shape != shape:
            raise ValueError(f"ppm: frame size mismatch at {p.name}: {f.shape} != {shape}")
    return frames
