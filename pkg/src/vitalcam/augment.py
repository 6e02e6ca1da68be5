"""Temporal speed augmentation for synchronized clip pairs.

A random clip length L is drawn around the model's input length T and
the first L frames of both camera views are linearly resampled onto T
samples. Both views always share the same L, so an apparent-rate shift
(factor L/T) is applied consistently to the pair while the map's fps
field stays untouched.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .maps import SpatioTemporalMap
from .series import resample_linear

DEFAULT_SHRINK = 30
DEFAULT_STRETCH = 60


@dataclass(frozen=True)
class AugmentSpec:
    """Clip-length jitter around the target frame count."""

    target_frames: int
    shrink: int = DEFAULT_SHRINK
    stretch: int = DEFAULT_STRETCH

    def __post_init__(self) -> None:
        if self.target_frames < 8:
            raise ValueError(f"augment: target_frames {self.target_frames} < 8")
        if self.shrink < 0 or self.stretch < 0:
            raise ValueError("augment: shrink/stretch must be non-negative")
        if self.target_frames - self.shrink < 2:
            raise ValueError(
                f"augment: target_frames - shrink = {self.target_frames - self.shrink} < 2"
            )

    @property
    def min_frames(self) -> int:
        return self.target_frames - self.shrink

    @property
    def max_frames(self) -> int:
        return self.target_frames + self.stretch


def resample_temporal(stm: SpatioTemporalMap, target_frames: int) -> SpatioTemporalMap:
    """Resample a map's time axis to `target_frames` (fps field kept)."""
    if stm.frames < 2:
        raise ValueError(f"augment: map has {stm.frames} frame(s), need >= 2")
    data = resample_linear(stm.data.astype(np.float64), target_frames, axis=2)
    return SpatioTemporalMap(data=data.astype(np.float32), fps=stm.fps)


def augment_pair(
    map_a: SpatioTemporalMap,
    map_b: SpatioTemporalMap,
    spec: AugmentSpec,
    rng: np.random.Generator,
    on_length: Callable[[int], None] | None = None,
) -> tuple[SpatioTemporalMap, SpatioTemporalMap]:
    """Draw one L in [T-shrink, T+stretch], crop both views to their
    first L frames, and resample each onto T frames.

    Both maps must hold at least max_frames frames so every drawable L
    fits. `on_length` (when given) observes the drawn L.
    """
    t_out = spec.target_frames
    need = spec.max_frames
    for name, m in (("a", map_a), ("b", map_b)):
        if m.frames < need:
            raise ValueError(
                f"augment: view {name} has {m.frames} frames, need >= {need} "
                f"to cover the stretch range"
            )
    if map_a.frames != map_b.frames:
        raise ValueError(f"augment: views disagree on length ({map_a.frames} vs {map_b.frames})")
    length = int(rng.integers(spec.min_frames, spec.max_frames + 1))
    if on_length is not None:
        on_length(length)
    out = []
    for m in (map_a, map_b):
        clip = m.data[:, :, :length].astype(np.float64)
        res = resample_linear(clip, t_out, axis=2)
        out.append(SpatioTemporalMap(data=res.astype(np.float32), fps=m.fps))
    return out[0], out[1]
