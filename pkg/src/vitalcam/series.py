"""Shared 1-D series types: sampled waveforms and rate-over-time series."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field

import numpy as np


@dataclass
class Waveform:
    """Uniformly sampled scalar signal."""

    values: np.ndarray
    fs: float

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1 or self.values.size < 1:
            raise ValueError(f"waveform: expected non-empty 1-D values, got {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("waveform: non-finite samples")
        if not (self.fs > 0 and np.isfinite(self.fs)):
            raise ValueError(f"waveform: bad sample rate {self.fs}")

    @property
    def duration_s(self) -> float:
        return self.values.size / self.fs


@dataclass
class RateSeries:
    """Per-second rate estimates in beats (or breaths) per minute."""

    t_sec: np.ndarray
    bpm: np.ndarray

    def __post_init__(self) -> None:
        self.t_sec = np.asarray(self.t_sec, dtype=np.float64)
        self.bpm = np.asarray(self.bpm, dtype=np.float64)
        if self.t_sec.shape != self.bpm.shape or self.t_sec.ndim != 1:
            raise ValueError("rate series: t_sec and bpm must be matching 1-D arrays")
        if self.t_sec.size and np.any(np.diff(self.t_sec) <= 0):
            raise ValueError("rate series: t_sec must be strictly increasing")
        if not (np.all(np.isfinite(self.t_sec)) and np.all(np.isfinite(self.bpm))):
            raise ValueError("rate series: non-finite entries")

    def __len__(self) -> int:
        return self.t_sec.size


def resample_linear(x: np.ndarray, target_len: int, axis: int = -1) -> np.ndarray:
    """Linear-in-time resampling onto `target_len` points, endpoints preserved.

    Sample i of the output sits at position i*(L-1)/(target_len-1) of the
    input, so the first and last samples pass through exactly.
    """
    x = np.asarray(x)
    length = x.shape[axis]
    if length < 2:
        raise ValueError(f"resample: need at least 2 source samples, got {length}")
    if target_len < 2:
        raise ValueError(f"resample: need at least 2 target samples, got {target_len}")
    if target_len == length:
        return x.copy()
    pos = np.arange(target_len, dtype=np.float64) * (length - 1) / (target_len - 1)
    idx = np.minimum(pos.astype(np.int64), length - 2)
    frac = pos - idx
    xm = np.moveaxis(x, axis, -1)
    lo = xm[..., idx]
    hi = xm[..., idx + 1]
    out = lo + (hi - lo) * frac
    return np.moveaxis(out, -1, axis).astype(x.dtype, copy=False)


def write_rates_csv(path: str | os.PathLike, rates: RateSeries) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t_sec", "bpm"])
        for t, b in zip(rates.t_sec, rates.bpm):
            w.writerow([repr(float(t)), repr(float(b))])


def read_rates_csv(path: str | os.PathLike) -> RateSeries:
    ts, bs = [], []
    with open(path, "r", newline="") as fh:
        r = csv.reader(fh)
        header = next(r, None)
        if header is None or [h.strip() for h in header[:2]] != ["t_sec", "bpm"]:
            raise ValueError(f"rates csv: bad header {header!r}")
        for row in r:
            if not row:
                continue
            ts.append(float(row[0]))
            bs.append(float(row[1]))
    return RateSeries(t_sec=np.array(ts), bpm=np.array(bs))


def write_wave_csv(path: str | os.PathLike, wave: Waveform) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t_sec", "value"])
        for i, v in enumerate(wave.values):
            w.writerow([repr(i / wave.fs), repr(float(v))])


def read_wave_csv(path: str | os.PathLike) -> Waveform:
    ts, vs = [], []
    with open(path, "r", newline="") as fh:
        r = csv.reader(fh)
        header = next(r, None)
        if header is None or [h.strip() for h in header[:2]] != ["t_sec", "value"]:
            raise ValueError(f"wave csv: bad header {header!r}")
        for row in r:
            if not row:
                continue
            ts.append(float(row[0]))
            vs.append(float(row[1]))
    if len(ts) < 2:
        raise ValueError("wave csv: need at least 2 samples")
    dt = np.diff(ts)
    if np.any(dt <= 0) or not np.allclose(dt, dt[0], rtol=1e-6, atol=1e-9):
        raise ValueError("wave csv: non-uniform sampling")
    return Waveform(values=np.array(vs), fs=1.0 / dt[0])
