"""FWP v1, the length-prefixed frame wire protocol.

Layout, all integers big-endian::

    offset  size  field
    0       4     magic b"FWP1"
    4       4     width            (u32, >= 1)
    8       4     height           (u32, >= 1)
    12      4     channels         (u32, 1 or 3)
    16      8     timestamp_micros (u64)
    24      4     payload_len      (u32, == width * height * channels)
    28      ...   payload, row-major channel-interleaved samples
"""

from __future__ import annotations

import struct

from ..errors import ProtocolError
from ..imaging import Frame

MAGIC = b"FWP1"
HEADER = struct.Struct(">4sIIIQI")
HEADER_SIZE = HEADER.size  # 28
MAX_PAYLOAD = 64 * 1024 * 1024


def encode(frame: Frame) -> bytes:
    payload = frame.tobytes()
    return HEADER.pack(MAGIC, frame.width, frame.height, frame.channels, frame.timestamp, len(payload)) + payload


def parse_header(header: bytes) -> tuple[int, int, int, int, int]:
    """Validate a 28-byte header; returns ``(width, height, channels, timestamp, payload_len)``."""
    if len(header) != HEADER_SIZE:
        raise ProtocolError(f"FWP header must be {HEADER_SIZE} bytes, got {len(header)}")
    magic, width, height, channels, timestamp, length = HEADER.unpack(header)
    if magic != MAGIC:
        raise ProtocolError(f"bad FWP magic {magic!r}")
    if width == 0 or height == 0:
        raise ProtocolError(f"FWP frame has zero dimension {width}x{height}")
    if channels not in (1, 3):
        raise ProtocolError(f"FWP channels must be 1 or 3, got {channels}")
    if length != width * height * channels:
        raise ProtocolError(f"FWP payload_len {length} != {width}*{height}*{channels}")
    if length > MAX_PAYLOAD:
        raise ProtocolError(f"FWP payload of {length} bytes exceeds the {MAX_PAYLOAD}-byte limit")
    return width, height, channels, timestamp, length


def decode(data: bytes, seq: int = 0) -> Frame:
    """Decode exactly one message; trailing or missing bytes are an error."""
    width, height, channels, timestamp, length = parse_header(bytes(data[:HEADER_SIZE]))
    if len(data) != HEADER_SIZE + length:
        raise ProtocolError(f"FWP message is {len(data)} bytes, header announces {HEADER_SIZE + length}")
    return Frame.from_bytes(width, height, channels, bytes(data[HEADER_SIZE:]), timestamp=timestamp, seq=seq)


def recv_exact(sock, n: int) -> bytes | None:
    """Read exactly ``n`` bytes; ``None`` on clean EOF before the first byte."""
    buf = bytearray()
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            if not buf:
                return None
            raise ProtocolError(f"connection closed after {len(buf)} of {n} bytes")
        buf.extend(chunk)
    return bytes(buf)


def read_frame(sock, seq: int = 0) -> Frame | None:
    """Read one frame from a socket; ``None`` when the peer closed between frames."""
    header = recv_exact(sock, HEADER_SIZE)
    if header is None:
        return None
    width, height, channels, timestamp, length = parse_header(header)
    payload = recv_exact(sock, length)
    if payload is None:
        raise ProtocolError("connection closed before FWP payload")
    return Frame.from_bytes(width, height, channels, payload, timestamp=timestamp, seq=seq)


def send_frame(sock, frame: Frame) -> None:
    sock.sendall(encode(frame))
