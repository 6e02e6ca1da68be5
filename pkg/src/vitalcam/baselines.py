"""Classical label-free reference methods.

CHROM and POS recover a pulse wave from the mean RGB trace of the face
via fixed chrominance projections computed in short overlapping
windows; the RR references are plain spatial means of the chest maps
(pixel intensity for rgb_mean, vertical motion for flow_mean). All
four are deterministic and parameter-free apart from the window
length.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .maps import SpatioTemporalMap
from .series import Waveform

WINDOW_SECONDS = 1.6


@dataclass(frozen=True)
class MeanTrace:
    """Per-frame spatial means: (3, T) for RGB, (T,) for vertical flow."""

    values: np.ndarray
    fps: float
    source: str = "rgb"

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", v)
        if self.source == "rgb":
            if v.ndim != 2 or v.shape[0] != 3:
                raise ValueError(f"baseline: expected (3, T) RGB trace, got {v.shape}")
        elif self.source == "flow_vertical":
            if v.ndim != 1:
                raise ValueError(f"baseline: expected 1-D flow trace, got {v.shape}")
        else:
            raise ValueError(f"baseline: unknown trace source {self.source!r}")
        if v.shape[-1] < 2:
            raise ValueError("baseline: trace needs at least 2 frames")
        if not np.isfinite(v).all():
            raise ValueError("baseline: non-finite trace values")
        if not (self.fps > 0 and np.isfinite(self.fps)):
            raise ValueError(f"baseline: bad fps {self.fps}")

    @property
    def frames(self) -> int:
        return int(self.values.shape[-1])


def rgb_mean_trace(stm: SpatioTemporalMap) -> MeanTrace:
    """Average an RGB map over its ROIs, one trace per channel."""
    if stm.channels != 3:
        raise ValueError(f"baseline: expected a 3-channel RGB map, got {stm.channels}")
    return MeanTrace(values=stm.data.mean(axis=1, dtype=np.float64), fps=stm.fps)


def _chrom_projection(cn: np.ndarray) -> np.ndarray:
    r, g, b = cn
    x = 3.0 * r - 2.0 * g
    y = 1.5 * r + g - 1.5 * b
    sy = y.std()
    alpha = x.std() / sy if sy > 0 else 0.0
    return x - alpha * y


def _pos_projection(cn: np.ndarray) -> np.ndarray:
    r, g, b = cn
    s1 = g - b
    s2 = g + b - 2.0 * r
    ss2 = s2.std()
    alpha = s1.std() / ss2 if ss2 > 0 else 0.0
    return s1 + alpha * s2


def _windowed_wave(trace: MeanTrace, projection) -> Waveform:
    """Project temporally normalized RGB windows and overlap-add them.

    Channels are normalized per window (x / mean - 1), which removes
    camera gain exactly; windows are Hann-tapered at half-window hop,
    plus one tail window so the final frames are covered.
    """
    if trace.source != "rgb":
        raise ValueError(f"baseline: need an RGB trace, got {trace.source!r}")
    rgb = trace.values
    t_len = trace.frames
    if np.ptp(rgb, axis=1).min() == 0.0:
        raise ValueError("baseline: flat input")
    win = int(round(WINDOW_SECONDS * trace.fps))
    win = max(win, 4)
    if t_len < 2 * win:
        raise ValueError(
            f"baseline: need at least two {WINDOW_SECONDS} s windows ({2 * win} frames), got {t_len}"
        )
    hop = win // 2
    taper = np.hanning(win)
    starts = list(range(0, t_len - win + 1, hop))
    if starts[-1] != t_len - win:
        starts.append(t_len - win)
    out = np.zeros(t_len, dtype=np.float64)
    for s in starts:
        seg = rgb[:, s : s + win]
        mu = seg.mean(axis=1)
        if np.any(mu <= 0):
            raise ValueError("baseline: non-positive channel mean")
        cn = seg / mu[:, None] - 1.0
        h = projection(cn)
        h = h - h.mean()
        out[s : s + win] += h * taper
    return Waveform(values=out, fs=trace.fps)


def chrom_wave(trace: MeanTrace) -> Waveform:
    """Chrominance pulse wave: X = 3R-2G, Y = 1.5R+G-1.5B, X - (sx/sy) Y."""
    return _windowed_wave(trace, _chrom_projection)


def pos_wave(trace: MeanTrace) -> Waveform:
    """Plane-orthogonal-to-skin pulse: S1 = G-B, S2 = G+B-2R, S1 + (s1/s2) S2."""
    return _windowed_wave(trace, _pos_projection)


def rr_benchmark_wave(stm: SpatioTemporalMap, kind: str) -> Waveform:
    """Spatial-mean respiration references over a chest map."""
    if kind == "rgb_mean":
        values = stm.data.mean(axis=(0, 1), dtype=np.float64)
    elif kind == "flow_mean":
        if stm.channels != 1:
            raise ValueError(f"baseline: flow_mean expects a 1-channel map, got {stm.channels}")
        values = stm.data[0].mean(axis=0, dtype=np.float64)
    else:
        raise ValueError(f"baseline: unknown kind {kind!r}")
    return Waveform(values=values, fs=stm.fps)
