"""Facial landmark records and their JSONL serialization.

Five points per frame: both eye centers, chin tip, and the left/right
face contour extremes. Coordinates are pixels in image space (x right,
y down), so the subject's right-side contour has the smaller x.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

Point = tuple[float, float]

_POINT_KEYS = ("left_eye", "right_eye", "chin", "face_left", "face_right")


@dataclass(frozen=True)
class LandmarkFrame:
    """Landmarks for a single video frame."""

    frame_index: int
    left_eye: Point
    right_eye: Point
    chin: Point
    face_left: Point
    face_right: Point

    @property
    def pupil_distance(self) -> float:
        dx = self.left_eye[0] - self.right_eye[0]
        dy = self.left_eye[1] - self.right_eye[1]
        return math.hypot(dx, dy)

    def validate(self, frame_w: int | None = None, frame_h: int | None = None) -> None:
        """Check geometric sanity; raise ValueError on violation."""
        if self.frame_index < 0:
            raise ValueError(f"landmarks: negative frame index {self.frame_index}")
        for key in _POINT_KEYS:
            x, y = getattr(self, key)
            if not (math.isfinite(x) and math.isfinite(y)):
                raise ValueError(f"landmarks: non-finite {key} at frame {self.frame_index}")
            if frame_w is not None and not (0 <= x <= frame_w):
                raise ValueError(f"landmarks: {key} x={x} outside [0, {frame_w}]")
            if frame_h is not None and not (0 <= y <= frame_h):
                raise ValueError(f"landmarks: {key} y={y} outside [0, {frame_h}]")
        if not self.left_eye[0] > self.right_eye[0]:
            raise ValueError(
                f"landmarks: left eye x must exceed right eye x at frame {self.frame_index}"
            )
        eye_y = 0.5 * (self.left_eye[1] + self.right_eye[1])
        if not self.chin[1] > eye_y:
            raise ValueError(f"landmarks: chin must lie below the eyes at frame {self.frame_index}")
        if self.pupil_distance <= 0.0:
            raise ValueError(f"landmarks: zero pupil distance at frame {self.frame_index}")


def _frame_from_record(rec: dict) -> LandmarkFrame:
    try:
        return LandmarkFrame(
            frame_index=int(rec["frame"]),
            left_eye=(float(rec["left_eye"][0]), float(rec["left_eye"][1])),
            right_eye=(float(rec["right_eye"][0]), float(rec["right_eye"][1])),
            chin=(float(rec["chin"][0]), float(rec["chin"][1])),
            face_left=(float(rec["face_left"][0]), float(rec["face_left"][1])),
            face_right=(float(rec["face_right"][0]), float(rec["face_right"][1])),
        )
    except (KeyError, TypeError, IndexError) as exc:
        raise ValueError(f"landmarks: malformed record {rec!r}") from exc


def read_landmarks_jsonl(path: str | os.PathLike) -> list[LandmarkFrame]:
    """Read one-JSON-object-per-line landmarks, sorted by frame index."""
    frames: list[LandmarkFrame] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"landmarks: bad JSON on line {lineno}") from exc
            frames.append(_frame_from_record(rec))
    if not frames:
        raise ValueError(f"landmarks: empty file {path}")
    frames.sort(key=lambda f: f.frame_index)
    seen = set()
    for f in frames:
        if f.frame_index in seen:
            raise ValueError(f"landmarks: duplicate frame index {f.frame_index}")
        seen.add(f.frame_index)
    return frames


def write_landmarks_jsonl(path: str | os.PathLike, frames: list[LandmarkFrame]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for f in frames:
            rec: dict = {"frame": f.frame_index}
            for key in _POINT_KEYS:
                x, y = getattr(f, key)
                rec[key] = [x, y]
            fh.write(json.dumps(rec) + "\n")
