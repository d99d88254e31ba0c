"""Motion evidence: two-frame differencing, binarisation, moving-region
extraction, a running-average background model and coarse block matching."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import BadThreshold, ChannelMismatch, DimensionMismatch, SequenceOrder, UninitializedModel
from .imaging import BoundingBox, Frame, round_half_up


@dataclass(frozen=True)
class MotionConfig:
    threshold: int = 25
    min_area: int = 12
    connectivity: int = 8
    bg_alpha: float = 0.05
    bg_threshold: int = 25

    def __post_init__(self):
        if not 0 < self.threshold < 255:
            raise BadThreshold(f"threshold must lie in (0, 255), got {self.threshold}")
        if not 0 < self.bg_threshold < 255:
            raise BadThreshold(f"bg_threshold must lie in (0, 255), got {self.bg_threshold}")
        if self.min_area < 1:
            raise ValueError(f"min_area must be >= 1, got {self.min_area}")
        if self.connectivity != 8:
            raise ValueError("only 8-connectivity is supported")
        if not 0 < self.bg_alpha <= 1:
            raise ValueError(f"bg_alpha must lie in (0, 1], got {self.bg_alpha}")


@dataclass(frozen=True, eq=False)
class DiffMap:
    """Per-pixel absolute difference of two gray frames, ``values[y, x]``."""

    values: np.ndarray

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """Thresholded motion evidence; every value is 0 or 255."""

    values: np.ndarray

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.values))


@dataclass(frozen=True)
class MovingRegion:
    box: BoundingBox
    area: int
    centroid: tuple[float, float]


@dataclass(frozen=True, eq=False)
class BackgroundModel:
    """Per-pixel exponential running mean. An empty model has ``mean is None``."""

    mean: np.ndarray | None = None
    frames_seen: int = 0
    alpha: float = 0.05

    @property
    def initialized(self) -> bool:
        return self.mean is not None

    @property
    def dims(self) -> tuple[int, int] | None:
        return None if self.mean is None else (self.mean.shape[1], self.mean.shape[0])


def _require_gray(*frames: Frame):
    for f in frames:
        if f.channels != 1:
            raise ChannelMismatch("motion operations take 1-channel frames")


def frame_difference(cur: Frame, prev: Frame) -> DiffMap:
    _require_gray(cur, prev)
    if cur.dims != prev.dims:
        raise DimensionMismatch(f"frame dims differ: {cur.dims} vs {prev.dims}")
    if not prev.seq < cur.seq:
        raise SequenceOrder(f"previous frame seq {prev.seq} is not older than {cur.seq}")
    return DiffMap(kernels.absdiff(cur.data, prev.data))


def binarize(diff: DiffMap, threshold: int) -> BinaryMask:
    """255 where the difference strictly exceeds ``threshold``, else 0."""
    if not 0 < threshold < 255:
        raise BadThreshold(f"threshold must lie in (0, 255), got {threshold}")
    return BinaryMask(kernels.threshold(diff.values, threshold))


def regions_from_stats(stats: np.ndarray, min_area: int) -> list[MovingRegion]:
    regions = []
    for row in stats:
        area = int(row[kernels.STAT_AREA])
        if area < min_area:
            continue
        x0, y0 = int(row[kernels.STAT_XMIN]), int(row[kernels.STAT_YMIN])
        x1, y1 = int(row[kernels.STAT_XMAX]), int(row[kernels.STAT_YMAX])
        centroid = (row[kernels.STAT_SUMX] / area, row[kernels.STAT_SUMY] / area)
        regions.append(MovingRegion(BoundingBox(x0, y0, x1 - x0 + 1, y1 - y0 + 1), area,
                                    (float(centroid[0]), float(centroid[1]))))
    regions.sort(key=lambda r: (-r.area, r.box.y, r.box.x, r.box.h, r.box.w, r.centroid[1], r.centroid[0]))
    return regions


def extract_regions(mask: BinaryMask, cfg: MotionConfig = MotionConfig()) -> list[MovingRegion]:
    """8-connected components of the mask that reach ``cfg.min_area`` pixels.

    Sorted by descending area, then by the top-left corner of the box (y, x).
    """
    _, stats = kernels.label_components(mask.values)
    return regions_from_stats(stats, cfg.min_area)


def update_background(model: BackgroundModel, frame: Frame) -> BackgroundModel:
    """Blend ``frame`` into the running mean; the first frame initialises it."""
    _require_gray(frame)
    if model.mean is None:
        return BackgroundModel(frame.data.astype(np.float64), 1, model.alpha)
    if model.dims != frame.dims:
        raise DimensionMismatch(f"background is {model.dims}, frame is {frame.dims}")
    mean = model.mean + model.alpha * (frame.data.astype(np.float64) - model.mean)
    return BackgroundModel(mean, model.frames_seen + 1, model.alpha)


def foreground_mask(model: BackgroundModel, frame: Frame, bg_threshold: int = 25) -> BinaryMask:
    """255 where ``|frame - round(mean)| > bg_threshold``."""
    _require_gray(frame)
    if model.mean is None:
        raise UninitializedModel("background model has not seen a frame yet")
    if model.dims != frame.dims:
        raise DimensionMismatch(f"background is {model.dims}, frame is {frame.dims}")
    return BinaryMask(kernels.absdiff_float_threshold(frame.data, round_half_up(model.mean), bg_threshold))


def block_motion(prev: Frame, cur: Frame, block: int = 8, radius: int = 4) -> np.ndarray:
    """Block-matching motion field.

    Returns an int32 array ``(rows, cols, 2)`` holding ``(dx, dy)`` for each
    full, non-overlapping ``block``-sized tile of ``cur``: the displacement
    within ``±radius`` for which the tile best matches ``prev`` at the
    displaced-back position (minimum SAD). Ties prefer smaller ``|dx|+|dy|``,
    then smaller ``dy``, then smaller ``dx``.
    """
    _require_gray(prev, cur)
    if prev.dims != cur.dims:
        raise DimensionMismatch(f"frame dims differ: {prev.dims} vs {cur.dims}")
    if block < 4:
        raise ValueError("block must be >= 4")
    if radius < 1:
        raise ValueError("radius must be >= 1")
    return kernels.block_motion(prev.data, cur.data, block, radius)
