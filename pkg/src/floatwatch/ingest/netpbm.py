"""Binary PGM (P5) and PPM (P6) with maxval 255."""

from __future__ import annotations

from pathlib import Path

from ..errors import DecodeError, FormatUnrecognized
from ..imaging import Frame

_WS = b" \t\n\r\v\f"


def _header_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    """Read ``count`` whitespace-separated tokens (``#`` comments skipped).

    Returns the tokens and the offset just past the single whitespace byte
    that terminates the header.
    """
    tokens: list[bytes] = []
    i = 0
    n = len(data)
    while len(tokens) < count:
        while i < n and data[i] in _WS:
            i += 1
        if i < n and data[i] == ord("#"):
            while i < n and data[i] not in b"\r\n":
                i += 1
            continue
        start = i
        while i < n and data[i] not in _WS and data[i] != ord("#"):
            i += 1
        if start == i:
            raise DecodeError("truncated netpbm header", offset=i)
        tokens.append(data[start:i])
    if i >= n:
        raise DecodeError("netpbm header not terminated by whitespace", offset=i)
    return tokens, i + 1


def decode(data: bytes, timestamp: int = 0, seq: int = 0) -> Frame:
    magic = data[:2]
    if magic not in (b"P5", b"P6"):
        raise FormatUnrecognized(f"not a binary PGM/PPM (magic {magic!r})")
    channels = 1 if magic == b"P5" else 3
    tokens, offset = _header_tokens(data, 4)
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise DecodeError(f"non-numeric netpbm header field: {exc}", offset=2) from exc
    if width < 1 or height < 1:
        raise DecodeError(f"netpbm dims must be >= 1, got {width}x{height}", offset=2)
    if maxval != 255:
        raise FormatUnrecognized(f"only maxval 255 is supported, got {maxval}")
    size = width * height * channels
    if len(data) - offset < size:
        raise DecodeError(f"raster truncated: need {size} bytes, have {len(data) - offset}", offset=len(data))
    return Frame.from_bytes(width, height, channels, data[offset:offset + size], timestamp=timestamp, seq=seq)


def encode(frame: Frame) -> bytes:
    magic = b"P5" if frame.channels == 1 else b"P6"
    return magic + b"\n%d %d\n255\n" % (frame.width, frame.height) + frame.tobytes()


def read(path: str | Path, timestamp: int = 0, seq: int = 0) -> Frame:
    return decode(Path(path).read_bytes(), timestamp=timestamp, seq=seq)


def write(path: str | Path, frame: Frame) -> None:
    Path(path).write_bytes(encode(frame))
