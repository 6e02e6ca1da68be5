"""Spatio-temporal maps: per-ROI signal traces extracted from frames.

A map is a (C, M, T) float32 array plus a frame rate: C channels
(3 for RGB, 1 for vertical motion), M=224 grid ROIs in row-major
order, T frames. Maps serialize to a little-endian "STM1" container.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .landmarks import LandmarkFrame
from .roi import N_ROIS, RoiGrid, chest_roi_grid, face_roi_grid

STM_MAGIC = b"STM1"
EPS_LK = 1e-4


@dataclass
class SpatioTemporalMap:
    """(C, M, T) float32 map with its source frame rate."""

    data: np.ndarray
    fps: float

    def __post_init__(self) -> None:
        self.data = np.ascontiguousarray(self.data, dtype=np.float32)
        if self.data.ndim != 3:
            raise ValueError(f"map: expected (C, M, T), got shape {self.data.shape}")
        if min(self.data.shape) < 1:
            raise ValueError(f"map: empty dimension in {self.data.shape}")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("map: non-finite entries")
        if not (self.fps > 0 and np.isfinite(self.fps)):
            raise ValueError(f"map: bad fps {self.fps}")
        self.fps = float(self.fps)

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def n_rois(self) -> int:
        return self.data.shape[1]

    @property
    def frames(self) -> int:
        return self.data.shape[2]

    def crop(self, start: int, stop: int) -> "SpatioTemporalMap":
        if not (0 <= start < stop <= self.frames):
            raise ValueError(f"map: bad crop [{start}, {stop}) for T={self.frames}")
        return SpatioTemporalMap(data=self.data[:, :, start:stop].copy(), fps=self.fps)


def _block_means_rgb(frame: np.ndarray, grid: RoiGrid) -> np.ndarray:
    """(3, 224) mean RGB per grid block, via an integral image."""
    region = frame[grid.top : grid.bottom, grid.left : grid.right].astype(np.float64)
    integ = np.zeros((region.shape[0] + 1, region.shape[1] + 1, 3), dtype=np.float64)
    np.cumsum(np.cumsum(region, axis=0), axis=1, out=integ[1:, 1:])
    ys = np.asarray(grid.row_edges) - grid.top
    xs = np.asarray(grid.col_edges) - grid.left
    y0, y1 = ys[:-1], ys[1:]
    x0, x1 = xs[:-1], xs[1:]
    sums = (
        integ[y1[:, None], x1[None, :]]
        - integ[y0[:, None], x1[None, :]]
        - integ[y1[:, None], x0[None, :]]
        + integ[y0[:, None], x0[None, :]]
    )
    areas = (y1 - y0)[:, None] * (x1 - x0)[None, :]
    means = sums / areas[..., None]
    return means.reshape(N_ROIS, 3).T


def build_rgb_map(
    frames: Sequence[np.ndarray],
    landmark_frames: Sequence[LandmarkFrame],
    fps: float,
) -> SpatioTemporalMap:
    """Average face-grid blocks of every frame into a (3, 224, T) map.

    Landmarks must cover frame indices 0..T-1; the grid follows the
    face frame by frame.
    """
    n = len(frames)
    if n < 1:
        raise ValueError("rgb map: no frames")
    by_index = {lm.frame_index: lm for lm in landmark_frames}
    missing = [t for t in range(n) if t not in by_index]
    if missing:
        raise ValueError(f"rgb map: landmarks missing for frames {missing[:5]} (of {len(missing)})")
    out = np.empty((3, N_ROIS, n), dtype=np.float32)
    for t in range(n):
        frame = np.asarray(frames[t])
        if frame.ndim != 3 or frame.shape[2] != 3:
            raise ValueError(f"rgb map: frame {t} is not (H, W, 3)")
        grid = face_roi_grid(by_index[t])
        h, w = frame.shape[:2]
        if grid.right > w or grid.bottom > h or grid.left < 0 or grid.top < 0:
            raise ValueError(f"rgb map: face grid exceeds frame bounds at frame {t}")
        out[:, :, t] = _block_means_rgb(frame, grid)
    return SpatioTemporalMap(data=out, fps=fps)


def _gradients(img: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Central-difference d/dy, d/dx with one-sided edges (np.gradient)."""
    gy, gx = np.gradient(img)
    return gy, gx


def vertical_flow(prev_block: np.ndarray, next_block: np.ndarray) -> float:
    """Vertical optical flow (px/frame, +down) of one block, Lucas-Kanade.

    Spatial gradients come from the two-frame mean, so swapping the
    frames exactly negates the estimate. The 2x2 structure tensor is
    averaged over pixels and solved through its eigenmodes; modes whose
    eigenvalue falls below EPS_LK are dropped, so a textureless or
    one-dimensional pattern contributes only along directions the data
    actually constrains (a flat block returns 0.0).
    """
    prev = np.asarray(prev_block, dtype=np.float64)
    nxt = np.asarray(next_block, dtype=np.float64)
    if prev.shape != nxt.shape or prev.ndim != 2:
        raise ValueError(f"flow: block shapes differ or not 2-D: {prev.shape} vs {nxt.shape}")
    if prev.shape[0] < 2 or prev.shape[1] < 2:
        raise ValueError(f"flow: block too small {prev.shape}")
    gy, gx = _gradients(0.5 * (prev + nxt))
    it = nxt - prev
    a = float(np.mean(gx * gx))
    b = float(np.mean(gx * gy))
    c = float(np.mean(gy * gy))
    rhs = -np.array([np.mean(gx * it), np.mean(gy * it)])
    evals, evecs = np.linalg.eigh(np.array([[a, b], [b, c]]))
    v = 0.0
    for lam, vec in zip(evals, evecs.T):
        if lam >= EPS_LK:
            v += float(vec[1] * np.dot(vec, rhs) / lam)
    return v


def _to_gray(frame: np.ndarray) -> np.ndarray:
    frame = np.asarray(frame)
    if frame.ndim == 2:
        return frame.astype(np.float64)
    if frame.ndim == 3 and frame.shape[2] == 3:
        f = frame.astype(np.float64)
        return 0.299 * f[:, :, 0] + 0.587 * f[:, :, 1] + 0.114 * f[:, :, 2]
    raise ValueError(f"flow map: frame must be (H, W) or (H, W, 3), got {frame.shape}")


def build_flow_map(
    frames: Sequence[np.ndarray],
    first_landmarks: LandmarkFrame,
    fps: float,
) -> tuple[SpatioTemporalMap, bool]:
    """Per-ROI vertical chest motion between consecutive frames.

    The chest grid is fixed from the first frame's landmarks. Column 0
    is zero (no predecessor frame). Returns the map and a flag saying
    whether the chest rect was clamped to the frame.
    """
    n = len(frames)
    if n < 2:
        raise ValueError("flow map: need at least 2 frames")
    gray = [_to_gray(f) for f in frames]
    h, w = gray[0].shape
    for t, g in enumerate(gray):
        if g.shape != (h, w):
            raise ValueError(f"flow map: frame {t} size {g.shape} != {(h, w)}")
    grid, clamped = chest_roi_grid(first_landmarks, frame_w=w, frame_h=h)
    blocks = [grid.block(m) for m in range(N_ROIS)]
    out = np.zeros((1, N_ROIS, n), dtype=np.float32)
    for t in range(1, n):
        prev, nxt = gray[t - 1], gray[t]
        for m, (y0, y1, x0, x1) in enumerate(blocks):
            out[0, m, t] = vertical_flow(prev[y0:y1, x0:x1], nxt[y0:y1, x0:x1])
    return SpatioTemporalMap(data=out, fps=fps), clamped


def stm_write(path: str | os.PathLike, stm: SpatioTemporalMap) -> None:
    """Serialize a map: magic, u32 C/M/T, f32 fps, f32 payload (c, m, t)."""
    c, m, t = stm.data.shape
    header = STM_MAGIC + struct.pack("<IIIf", c, m, t, stm.fps)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(stm.data, dtype="<f4").tobytes())


def stm_read(path: str | os.PathLike) -> SpatioTemporalMap:
    buf = open(path, "rb").read()
    head_len = 4 + struct.calcsize("<IIIf")
    if len(buf) < head_len:
        raise ValueError("stm: truncated header")
    if buf[:4] != STM_MAGIC:
        raise ValueError(f"stm: bad magic {buf[:4]!r}")
    c, m, t, fps = struct.unpack("<IIIf", buf[4:head_len])
    if min(c, m, t) < 1:
        raise ValueError(f"stm: zero dimension in header ({c}, {m}, {t})")
    need = c * m * t * 4
    payload = buf[head_len:]
    if len(payload) < need:
        raise ValueError(f"stm: truncated payload ({len(payload)} of {need} bytes)")
    if len(payload) > need:
        raise ValueError(f"stm: trailing bytes after payload ({len(payload) - need})")
    data = np.frombuffer(payload, dtype="<f4").reshape(c, m, t)
    if not np.all(np.isfinite(data)):
        raise ValueError("stm: non-finite entries")
    if not (fps > 0 and np.isfinite(fps)):
        raise ValueError(f"stm: bad fps {fps}")
    return SpatioTemporalMap(data=data.copy(), fps=float(fps))
