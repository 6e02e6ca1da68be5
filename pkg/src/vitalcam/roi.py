"""Region-of-interest geometry: face block grid and chest rectangle.

Both measurement regions are partitioned into a 16 (wide) x 14 (tall)
grid of rectangular blocks, row-major, giving the 224 per-frame ROIs
that the map builders average over.
"""

from __future__ import annotations

from dataclasses import dataclass

from .landmarks import LandmarkFrame

GRID_COLS = 16
GRID_ROWS = 14
N_ROIS = GRID_COLS * GRID_ROWS


@dataclass(frozen=True)
class Rect:
    """Axis-aligned float rectangle in pixel coordinates (x right, y down)."""

    left: float
    top: float
    right: float
    bottom: float

    @property
    def width(self) -> float:
        return self.right - self.left

    @property
    def height(self) -> float:
        return self.bottom - self.top


def _edges(lo: int, hi: int, parts: int) -> tuple[int, ...]:
    span = hi - lo
    return tuple(lo + (span * i) // parts for i in range(parts)) + (hi,)


@dataclass(frozen=True)
class RoiGrid:
    """Integer block grid; block m covers rows/cols in row-major order."""

    col_edges: tuple[int, ...]
    row_edges: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.col_edges) != GRID_COLS + 1 or len(self.row_edges) != GRID_ROWS + 1:
            raise ValueError("roi grid: wrong edge counts")
        for edges in (self.col_edges, self.row_edges):
            for a, b in zip(edges, edges[1:]):
                if b <= a:
                    raise ValueError("roi grid: blocks must be at least one pixel")

    @property
    def n_rois(self) -> int:
        return N_ROIS

    @property
    def left(self) -> int:
        return self.col_edges[0]

    @property
    def top(self) -> int:
        return self.row_edges[0]

    @property
    def right(self) -> int:
        return self.col_edges[-1]

    @property
    def bottom(self) -> int:
        return self.row_edges[-1]

    def block(self, m: int) -> tuple[int, int, int, int]:
        """Pixel bounds (y0, y1, x0, x1) of ROI m, end-exclusive."""
        if not 0 <= m < N_ROIS:
            raise ValueError(f"roi grid: block index {m} out of range")
        r, c = divmod(m, GRID_COLS)
        return (
            self.row_edges[r],
            self.row_edges[r + 1],
            self.col_edges[c],
            self.col_edges[c + 1],
        )


def grid_from_rect(left: float, top: float, right: float, bottom: float) -> RoiGrid:
    """Round a float rect to pixels and partition it into the 16x14 grid."""
    il, it = int(round(left)), int(round(top))
    ir, ib = int(round(right)), int(round(bottom))
    if ir - il < GRID_COLS or ib - it < GRID_ROWS:
        raise ValueError(
            f"face too small: region {ir - il}x{ib - it} px cannot hold a "
            f"{GRID_COLS}x{GRID_ROWS} grid"
        )
    return RoiGrid(col_edges=_edges(il, ir, GRID_COLS), row_edges=_edges(it, ib, GRID_ROWS))


def face_roi_grid(lm: LandmarkFrame) -> RoiGrid:
    """Grid over the face: contour extremes wide, eye line to chin tall."""
    lm.validate()
    left = lm.face_right[0]
    right = lm.face_left[0]
    top = 0.5 * (lm.left_eye[1] + lm.right_eye[1])
    bottom = lm.chin[1]
    if right <= left:
        raise ValueError("face too small: contour extremes reversed or empty")
    return grid_from_rect(left, top, right, bottom)


def chest_rect(
    lm: LandmarkFrame,
    frame_w: int | None = None,
    frame_h: int | None = None,
) -> tuple[Rect, bool]:
    """Chest rectangle below the face, sized by the pupil distance.

    Horizontal span pads the face contour by half a pupil distance on
    each side; vertical span sits one to two pupil distances below the
    chin. Returns the rect and a flag that is True when the rect had to
    be clamped to the frame.
    """
    lm.validate(frame_w=frame_w, frame_h=frame_h)
    pd = lm.pupil_distance
    left = lm.face_right[0] - 0.5 * pd
    right = lm.face_left[0] + 0.5 * pd
    top = lm.chin[1] + pd
    bottom = lm.chin[1] + 2.0 * pd
    clamped = False
    if frame_w is not None:
        cl, cr = max(left, 0.0), min(right, float(frame_w))
        clamped |= (cl != left) or (cr != right)
        left, right = cl, cr
    if frame_h is not None:
        ct, cb = max(top, 0.0), min(bottom, float(frame_h))
        clamped |= (ct != top) or (cb != bottom)
        top, bottom = ct, cb
    if right <= left or bottom <= top:
        raise ValueError("chest region lies outside the frame")
    return Rect(left=left, top=top, right=right, bottom=bottom), clamped


def chest_roi_grid(
    lm: LandmarkFrame,
    frame_w: int | None = None,
    frame_h: int | None = None,
) -> tuple[RoiGrid, bool]:
    """Chest rect rounded and partitioned like the face grid."""
    rect, clamped = chest_rect(lm, frame_w=frame_w, frame_h=frame_h)
    try:
        grid = grid_from_rect(rect.left, rect.top, rect.right, rect.bottom)
    except ValueError as exc:
        raise ValueError(f"chest region too small: {exc}") from exc
    return grid, clamped
