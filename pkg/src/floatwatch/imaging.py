"""Raster types, colour conversion and box geometry shared by every stage."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ChannelMismatch, OutOfBounds

# BT.601 luma weights
LUMA_R = 0.299
LUMA_G = 0.587
LUMA_B = 0.114


def round_half_up(values):
    """Round to nearest integer with halves going up (``floor(x + 0.5)``).

    ``np.rint`` rounds half to even, which would make gray levels depend on
    parity; every rounding step in the pipeline goes through here instead.
    """
    return np.floor(np.asarray(values, dtype=np.float64) + 0.5)


@dataclass(frozen=True, eq=False)
class Frame:
    """An immutable 8-bit raster.

    ``data`` is ``(height, width)`` for gray frames and ``(height, width, 3)``
    for RGB, C-contiguous, so its buffer is exactly the row-major,
    channel-interleaved sample layout used on the wire and on disk.
    """

    data: np.ndarray
    timestamp: int = 0
    seq: int = 0

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim == 3 and arr.shape[2] == 1:
            arr = arr[:, :, 0]
        if arr.ndim not in (2, 3) or (arr.ndim == 3 and arr.shape[2] != 3):
            raise ChannelMismatch(f"frame data must be HxW or HxWx3, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"frame dims must be >= 1, got {arr.shape[1]}x{arr.shape[0]}")
        if arr.dtype != np.uint8:
            if arr.size and (arr.min() < 0 or arr.max() > 255):
                raise ValueError("frame samples must lie in [0, 255]")
            arr = arr.astype(np.uint8)
        if self.timestamp < 0 or self.seq < 0:
            raise ValueError("timestamp and seq must be non-negative")
        arr = np.ascontiguousarray(arr)
        if arr.flags.writeable:
            # caller may still hold a writable alias
            arr = arr.copy()
            arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def channels(self) -> int:
        return 1 if self.data.ndim == 2 else 3

    @property
    def dims(self) -> tuple[int, int]:
        return self.width, self.height

    @classmethod
    def from_bytes(cls, width: int, height: int, channels: int, payload: bytes,
                   timestamp: int = 0, seq: int = 0) -> "Frame":
        shape = (height, width) if channels == 1 else (height, width, channels)
        arr = np.frombuffer(payload, dtype=np.uint8, count=width * height * channels)
        return cls(arr.reshape(shape), timestamp=timestamp, seq=seq)

    def tobytes(self) -> bytes:
        return self.data.tobytes()

    def with_meta(self, *, timestamp: int | None = None, seq: int | None = None) -> "Frame":
        return replace(
            self,
            timestamp=self.timestamp if timestamp is None else timestamp,
            seq=self.seq if seq is None else seq,
        )

    def __eq__(self, other):
        if not isinstance(other, Frame):
            return NotImplemented
        return (
            self.timestamp == other.timestamp
            and self.seq == other.seq
            and self.data.shape == other.data.shape
            and np.array_equal(self.data, other.data)
        )

    __hash__ = None

    def __repr__(self):
        return (f"Frame({self.width}x{self.height}x{self.channels}, "
                f"seq={self.seq}, timestamp={self.timestamp})")


@dataclass(frozen=True, order=True)
class BoundingBox:
    """Axis-aligned pixel box; covers columns ``[x, x+w)`` and rows ``[y, y+h)``."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w < 1 or self.h < 1:
            raise ValueError(f"box extent must be >= 1, got {self.w}x{self.h}")
        if self.x < 0 or self.y < 0:
            raise OutOfBounds(f"box origin must be non-negative, got ({self.x}, {self.y})")

    @property
    def x2(self) -> int:
        return self.x + self.w

    @property
    def y2(self) -> int:
        return self.y + self.h

    @property
    def area(self) -> int:
        return self.w * self.h

    @property
    def center(self) -> tuple[float, float]:
        return self.x + self.w / 2.0, self.y + self.h / 2.0

    def fits(self, width: int, height: int) -> bool:
        return self.x2 <= width and self.y2 <= height

    def contains(self, other: "BoundingBox") -> bool:
        return (self.x <= other.x and self.y <= other.y
                and other.x2 <= self.x2 and other.y2 <= self.y2)

    def intersection_area(self, other: "BoundingBox") -> int:
        iw = min(self.x2, other.x2) - max(self.x, other.x)
        ih = min(self.y2, other.y2) - max(self.y, other.y)
        return iw * ih if iw > 0 and ih > 0 else 0

    def union(self, other: "BoundingBox") -> "BoundingBox":
        x, y = min(self.x, other.x), min(self.y, other.y)
        return BoundingBox(x, y, max(self.x2, other.x2) - x, max(self.y2, other.y2) - y)

    def as_tuple(self) -> tuple[int, int, int, int]:
        return self.x, self.y, self.w, self.h


def to_grayscale(frame: Frame) -> Frame:
    """BT.601 luma of an RGB frame, rounded half-up."""
    if frame.channels != 3:
        raise ChannelMismatch("to_grayscale expects a 3-channel frame")
    return Frame(rgb_to_luma(frame.data), timestamp=frame.timestamp, seq=frame.seq)


def rgb_to_luma(rgb: np.ndarray) -> np.ndarray:
    rgb = rgb.astype(np.float64)
    y = LUMA_R * rgb[..., 0] + LUMA_G * rgb[..., 1] + LUMA_B * rgb[..., 2]
    return np.clip(round_half_up(y), 0, 255).astype(np.uint8)


def gray_plane(frame: Frame) -> np.ndarray:
    """The frame's luma plane, converting RGB on the fly."""
    return frame.data if frame.channels == 1 else rgb_to_luma(frame.data)


def gray_to_rgb(frame: Frame) -> Frame:
    if frame.channels != 1:
        raise ChannelMismatch("gray_to_rgb expects a 1-channel frame")
    rgb = np.repeat(frame.data[:, :, None], 3, axis=2)
    return Frame(rgb, timestamp=frame.timestamp, seq=frame.seq)


def crop(frame: Frame, box: BoundingBox) -> Frame:
    if not box.fits(frame.width, frame.height):
        raise OutOfBounds(f"{box} exceeds frame {frame.width}x{frame.height}")
    return Frame(frame.data[box.y:box.y2, box.x:box.x2], timestamp=frame.timestamp, seq=frame.seq)


def bbox_iou(a: BoundingBox, b: BoundingBox) -> float:
    inter = a.intersection_area(b)
    if inter == 0:
        return 0.0
    return inter / (a.area + b.area - inter)
