"""YUV4MPEG2 reader and writer.

Supported chroma tags are ``C420``, ``C420mpeg2`` (both 4:2:0, chroma planes
of ``ceil(W/2) x ceil(H/2)``) and ``Cmono``; a missing ``C`` tag means
``C420``. 4:2:0 frames are upsampled by sample replication and converted to
RGB with BT.601, limited range unless the header carries
``XCOLORRANGE=FULL``. Mono luma passes through unchanged as a gray frame.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import BinaryIO

import numpy as np

from ..errors import DecodeError, FormatUnrecognized
from ..imaging import Frame, round_half_up

SIGNATURE = b"YUV4MPEG2"
MAX_HEADER = 4096
SUPPORTED_CHROMA = ("420", "420mpeg2", "mono")


@dataclass(frozen=True)
class Y4MHeader:
    width: int
    height: int
    fps: Fraction | None = None
    chroma: str = "420"
    full_range: bool = False
    params: tuple[str, ...] = ()

    @property
    def mono(self) -> bool:
        return self.chroma == "mono"

    @property
    def chroma_dims(self) -> tuple[int, int]:
        return (self.width + 1) // 2, (self.height + 1) // 2

    @property
    def frame_bytes(self) -> int:
        if self.mono:
            return self.width * self.height
        cw, ch = self.chroma_dims
        return self.width * self.height + 2 * cw * ch

    @classmethod
    def parse(cls, line: bytes) -> "Y4MHeader":
        try:
            text = line.decode("ascii")
        except UnicodeDecodeError as exc:
            raise FormatUnrecognized("Y4M header is not ASCII") from exc
        parts = text.split()
        if not parts or parts[0] != SIGNATURE.decode():
            raise FormatUnrecognized("missing YUV4MPEG2 signature")
        width = height = None
        fps = None
        chroma = "420"
        full_range = False
        for tok in parts[1:]:
            key, val = tok[0], tok[1:]
            if key == "W":
                width = _int_field(val, "W")
            elif key == "H":
                height = _int_field(val, "H")
            elif key == "F":
                num, _, den = val.partition(":")
                try:
                    fps = Fraction(int(num), int(den or 1))
                except (ValueError, ZeroDivisionError) as exc:
                    raise FormatUnrecognized(f"bad Y4M frame rate {val!r}") from exc
            elif key == "C":
                chroma = val
            elif key == "X" and val.upper() == "COLORRANGE=FULL":
                full_range = True
        if width is None or height is None:
            raise FormatUnrecognized("Y4M header lacks W or H")
        if width < 1 or height < 1:
            raise FormatUnrecognized(f"Y4M dims must be >= 1, got {width}x{height}")
        if chroma not in SUPPORTED_CHROMA:
            raise FormatUnrecognized(f"unsupported Y4M chroma tagging C{chroma}")
        return cls(width, height, fps, chroma, full_range, tuple(parts[1:]))

    def to_line(self) -> bytes:
        fields = [SIGNATURE.decode(), f"W{self.width}", f"H{self.height}"]
        if self.fps is not None:
            fields.append(f"F{self.fps.numerator}:{self.fps.denominator}")
        fields += ["Ip", "A1:1", f"C{self.chroma}"]
        if self.full_range:
            fields.append("XCOLORRANGE=FULL")
        return " ".join(fields).encode("ascii") + b"\n"


def _int_field(val: str, name: str) -> int:
    try:
        return int(val)
    except ValueError as exc:
        raise FormatUnrecognized(f"bad Y4M {name} field {val!r}") from exc


def yuv420_to_rgb(y: np.ndarray, u: np.ndarray, v: np.ndarray, full_range: bool) -> np.ndarray:
    h, w = y.shape
    cb = np.repeat(np.repeat(u, 2, axis=0), 2, axis=1)[:h, :w].astype(np.float64) - 128.0
    cr = np.repeat(np.repeat(v, 2, axis=0), 2, axis=1)[:h, :w].astype(np.float64) - 128.0
    if full_range:
        luma = y.astype(np.float64)
        r = luma + 1.402 * cr
        g = luma - 0.344136 * cb - 0.714136 * cr
        b = luma + 1.772 * cb
    else:
        luma = 1.164383 * (y.astype(np.float64) - 16.0)
        r = luma + 1.596027 * cr
        g = luma - 0.391762 * cb - 0.812968 * cr
        b = luma + 2.017232 * cb
    rgb = np.stack([r, g, b], axis=-1)
    return np.clip(round_half_up(rgb), 0, 255).astype(np.uint8)


def rgb_to_yuv420(rgb: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Full-range BT.601; chroma is the rounded mean of each 2x2 cell."""
    f = rgb.astype(np.float64)
    r, g, b = f[..., 0], f[..., 1], f[..., 2]
    y = 0.299 * r + 0.587 * g + 0.114 * b
    cb = 128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b
    cr = 128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b
    h, w = y.shape
    ph, pw = h + (h & 1), w + (w & 1)

    def sub(c):
        c = np.pad(c, ((0, ph - h), (0, pw - w)), mode="edge")
        return c.reshape(ph // 2, 2, pw // 2, 2).mean(axis=(1, 3))

    def q(a):
        return np.clip(round_half_up(a), 0, 255).astype(np.uint8)

    return q(y), q(sub(cb)), q(sub(cr))


class Y4MReader:
    """Sequential frame reader over a binary stream positioned at the header."""

    def __init__(self, stream: BinaryIO):
        self._stream = stream
        line = stream.readline(MAX_HEADER)
        if not line.endswith(b"\n"):
            raise FormatUnrecognized("Y4M header missing or not newline-terminated")
        self.header = Y4MHeader.parse(line[:-1])
        self.offset = len(line)
        self.frames_read = 0

    def read_planes(self) -> tuple[np.ndarray, ...] | None:
        """Next frame's raw planes, or ``None`` at a clean end of file."""
        start = self.offset
        marker = self._stream.readline(MAX_HEADER)
        if not marker:
            return None
        if not marker.startswith(b"FRAME") or not marker.endswith(b"\n"):
            raise DecodeError("expected FRAME marker", offset=start)
        self.offset += len(marker)
        hdr = self.header
        payload = self._stream.read(hdr.frame_bytes)
        if len(payload) != hdr.frame_bytes:
            raise DecodeError(
                f"truncated FRAME payload: {len(payload)} of {hdr.frame_bytes} bytes",
                offset=self.offset + len(payload),
            )
        self.offset += len(payload)
        self.frames_read += 1
        buf = np.frombuffer(payload, dtype=np.uint8)
        ysize = hdr.width * hdr.height
        y = buf[:ysize].reshape(hdr.height, hdr.width)
        if hdr.mono:
            return (y,)
        cw, ch = hdr.chroma_dims
        csize = cw * ch
        u = buf[ysize:ysize + csize].reshape(ch, cw)
        v = buf[ysize + csize:ysize + 2 * csize].reshape(ch, cw)
        return y, u, v

    def read_frame(self, timestamp: int = 0, seq: int = 0) -> Frame | None:
        planes = self.read_planes()
        if planes is None:
            return None
        if len(planes) == 1:
            return Frame(planes[0], timestamp=timestamp, seq=seq)
        return Frame(yuv420_to_rgb(*planes, self.header.full_range), timestamp=timestamp, seq=seq)


class Y4MWriter:
    """Writes RGB frames as full-range C420 and gray frames as Cmono."""

    def __init__(self, stream: BinaryIO, width: int, height: int, channels: int, fps: Fraction | int = 30):
        self._stream = stream
        mono = channels == 1
        self.header = Y4MHeader(width, height, Fraction(fps), "mono" if mono else "420", full_range=not mono)
        stream.write(self.header.to_line())
        self.frames_written = 0

    def write(self, frame: Frame) -> None:
        if (frame.width, frame.height) != (self.header.width, self.header.height):
            raise ValueError(f"frame {frame.width}x{frame.height} does not match stream dims")
        self._stream.write(b"FRAME\n")
        if self.header.mono:
            if frame.channels != 1:
                raise ValueError("mono stream needs gray frames")
            self._stream.write(frame.tobytes())
        else:
            if frame.channels != 3:
                raise ValueError("C420 stream needs RGB frames")
            for plane in rgb_to_yuv420(frame.data):
                self._stream.write(plane.tobytes())
        self.frames_written += 1
