"""Frame sources: image directories, Y4M files and FWP over TCP.

Every source numbers its frames 0, 1, 2, ... itself. File sources synthesise
timestamps from an fps hint; TCP sources keep the producer's timestamps.
"""

from __future__ import annotations

import logging
import os
import socket
import time
from dataclasses import dataclass
from pathlib import Path

from ..errors import (
    BindFailed,
    ConnectFailed,
    DecodeError,
    EndOfStream,
    FormatUnrecognized,
    ProtocolError,
    SourceNotFound,
)
from ..imaging import Frame
from . import fwp, netpbm
from .y4m import Y4MReader

log = logging.getLogger(__name__)

DEFAULT_FPS = 30.0
IMAGE_SUFFIXES = (".pgm", ".ppm", ".pnm")
SOURCE_KINDS = ("dir", "y4m", "tcp-listen", "tcp-connect")


@dataclass(frozen=True)
class SourceSpec:
    kind: str
    path: str | None = None
    host: str | None = None
    port: int | None = None
    fps: float | None = None

    def __post_init__(self):
        if self.kind not in SOURCE_KINDS:
            raise ValueError(f"unknown source kind {self.kind!r}")
        file_kind = self.kind in ("dir", "y4m")
        if file_kind and (self.path is None or self.port is not None):
            raise ValueError(f"{self.kind} source takes a path only")
        if not file_kind and (self.port is None or self.path is not None):
            raise ValueError(f"{self.kind} source takes host:port only")
        if self.fps is not None and self.fps <= 0:
            raise ValueError("fps hint must be positive")

    @property
    def live(self) -> bool:
        return self.kind.startswith("tcp")

    def uri(self) -> str:
        if self.kind in ("dir", "y4m"):
            return f"{self.kind}:{self.path}"
        if self.kind == "tcp-listen" and not self.host:
            return f"tcp-listen:{self.port}"
        return f"{self.kind}:{self.host}:{self.port}"


def parse_source_uri(uri: str, fps: float | None = None) -> SourceSpec:
    """``dir:/p``, ``y4m:/p``, ``tcp-listen:PORT`` / ``tcp-listen:HOST:PORT``, ``tcp-connect:HOST:PORT``."""
    kind, sep, rest = uri.partition(":")
    if not sep or not rest:
        raise ValueError(f"source URI {uri!r} is not KIND:LOCATION")
    if kind in ("dir", "y4m"):
        return SourceSpec(kind, path=rest, fps=fps)
    if kind in ("tcp-listen", "tcp-connect"):
        host, _, port = rest.rpartition(":")
        if kind == "tcp-connect" and not host:
            raise ValueError(f"tcp-connect needs HOST:PORT, got {rest!r}")
        try:
            port_num = int(port)
        except ValueError:
            raise ValueError(f"bad port in {uri!r}") from None
        if not 0 <= port_num <= 65535:
            raise ValueError(f"port out of range in {uri!r}")
        return SourceSpec(kind, host=host or None, port=port_num, fps=fps)
    raise ValueError(f"unknown source kind {kind!r} in {uri!r}")


class FrameSource:
    """Single-consumer frame source. Iterate it, or call ``next_frame`` until
    it raises ``EndOfStream``; once exhausted it stays exhausted."""

    live = False

    def __init__(self, spec: SourceSpec):
        self.spec = spec
        self.frames_delivered = 0
        self.dims: tuple[int, int, int] | None = None
        self._ended = False

    def next_frame(self) -> Frame:
        if self._ended:
            raise EndOfStream()
        try:
            frame = self._read(self.frames_delivered)
        except EndOfStream:
            self._ended = True
            raise
        dims = (frame.width, frame.height, frame.channels)
        if self.dims is None:
            self.dims = dims
        elif dims != self.dims:
            self._mismatch(dims)
        self.frames_delivered += 1
        return frame

    def _mismatch(self, dims):
        raise DecodeError(f"frame dims {dims} differ from stream dims {self.dims}")

    def _read(self, seq: int) -> Frame:
        raise NotImplementedError

    def _timestamp(self, seq: int) -> int:
        fps = self.spec.fps or DEFAULT_FPS
        return int(round(seq * 1_000_000 / fps))

    def close(self) -> None:
        self._ended = True

    def __iter__(self):
        while True:
            try:
                yield self.next_frame()
            except EndOfStream:
                return

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class DirSource(FrameSource):
    def __init__(self, spec: SourceSpec):
        super().__init__(spec)
        root = Path(spec.path)
        if not root.is_dir():
            raise SourceNotFound(f"no such directory: {root}")
        names = [n for n in os.listdir(root) if n.lower().endswith(IMAGE_SUFFIXES)]
        names.sort(key=os.fsencode)
        self.files = [root / n for n in names]

    def _read(self, seq):
        if seq >= len(self.files):
            raise EndOfStream()
        path = self.files[seq]
        try:
            return netpbm.read(path, timestamp=self._timestamp(seq), seq=seq)
        except DecodeError as exc:
            raise DecodeError(f"{path.name}: {exc}") from exc


class Y4MSource(FrameSource):
    def __init__(self, spec: SourceSpec):
        super().__init__(spec)
        path = Path(spec.path)
        if not path.is_file():
            raise SourceNotFound(f"no such file: {path}")
        self._fh = open(path, "rb")
        try:
            self.reader = Y4MReader(self._fh)
        except FormatUnrecognized:
            self._fh.close()
            raise
        hdr = self.reader.header
        self.dims = (hdr.width, hdr.height, 1 if hdr.mono else 3)
        if spec.fps is None and hdr.fps:
            self._fps = float(hdr.fps)
        else:
            self._fps = spec.fps or DEFAULT_FPS

    def _timestamp(self, seq):
        return int(round(seq * 1_000_000 / self._fps))

    def _read(self, seq):
        frame = self.reader.read_frame(timestamp=self._timestamp(seq), seq=seq)
        if frame is None:
            raise EndOfStream()
        return frame

    def close(self):
        super().close()
        self._fh.close()


class TcpListenSource(FrameSource):
    """Accepts one FWP producer at a time; a reconnecting producer continues
    the same seq numbering.

    ``accept_timeout`` (seconds) ends the stream when no producer shows up in
    time; ``None`` waits until ``close()``.
    """

    live = True

    def __init__(self, spec: SourceSpec, accept_timeout: float | None = None):
        super().__init__(spec)
        self.accept_timeout = accept_timeout
        self._conn: socket.socket | None = None
        self._closed = False
        sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        try:
            sock.bind((spec.host or "0.0.0.0", spec.port))
            sock.listen(1)
        except OSError as exc:
            sock.close()
            raise BindFailed(f"cannot bind {spec.host or '0.0.0.0'}:{spec.port}: {exc}") from exc
        sock.settimeout(0.2)
        self._listener = sock

    @property
    def address(self) -> tuple[str, int]:
        return self._listener.getsockname()

    def _accept(self):
        deadline = None if self.accept_timeout is None else time.monotonic() + self.accept_timeout
        while not self._closed:
            try:
                conn, peer = self._listener.accept()
            except socket.timeout:
                if deadline is not None and time.monotonic() >= deadline:
                    raise EndOfStream() from None
                continue
            except OSError:
                break
            conn.settimeout(None)
            log.info("producer connected from %s:%s", *peer[:2])
            return conn
        raise EndOfStream()

    def _drop_conn(self):
        if self._conn is not None:
            self._conn.close()
            self._conn = None

    def _mismatch(self, dims):
        self._drop_conn()
        raise ProtocolError(f"frame dims {dims} differ from stream dims {self.dims}")

    def _read(self, seq):
        while True:
            if self._conn is None:
                self._conn = self._accept()
            try:
                frame = fwp.read_frame(self._conn, seq=seq)
            except ProtocolError:
                self._drop_conn()
                raise
            except OSError as exc:
                if self._closed:
                    raise EndOfStream() from None
                log.warning("producer connection lost: %s", exc)
                self._drop_conn()
                continue
            if frame is None:
                log.info("producer disconnected after frame %d", seq - 1)
                self._drop_conn()
                continue
            return frame

    def close(self):
        super().close()
        self._closed = True
        if self._conn is not None:
            try:
                self._conn.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
        self._drop_conn()
        self._listener.close()


class TcpConnectSource(FrameSource):
    """Pulls FWP frames from a producer we connect to; on loss it retries
    ``retries`` times, ``retry_delay`` seconds apart, before ending."""

    live = True

    def __init__(self, spec: SourceSpec, timeout: float = 2.0, retries: int = 0, retry_delay: float = 0.5):
        super().__init__(spec)
        self.timeout = timeout
        self.retries = retries
        self.retry_delay = retry_delay
        self._closed = False
        self._conn = self._connect()

    def _connect(self):
        try:
            conn = socket.create_connection((self.spec.host, self.spec.port), timeout=self.timeout)
        except OSError as exc:
            raise ConnectFailed(f"cannot connect to {self.spec.host}:{self.spec.port}: {exc}") from exc
        conn.settimeout(None)
        return conn

    def _reconnect(self):
        for attempt in range(self.retries):
            if self._closed:
                break
            time.sleep(self.retry_delay)
            try:
                self._conn = self._connect()
                log.info("reconnected to producer (attempt %d)", attempt + 1)
                return True
            except ConnectFailed as exc:
                log.warning("%s", exc)
        return False

    def _read(self, seq):
        while True:
            if self._conn is None:
                raise EndOfStream()
            try:
                frame = fwp.read_frame(self._conn, seq=seq)
            except OSError:
                frame = None
            if frame is not None:
                return frame
            self._conn.close()
            self._conn = None
            if self._closed or not self._reconnect():
                raise EndOfStream()

    def close(self):
        super().close()
        self._closed = True
        if self._conn is not None:
            try:
                self._conn.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            self._conn.close()
            self._conn = None


def open_source(spec: SourceSpec | str, **options) -> FrameSource:
    """Open a source from a spec or URI. Extra keyword options go to the TCP sources."""
    if isinstance(spec, str):
        spec = parse_source_uri(spec)
    if spec.kind == "dir":
        return DirSource(spec)
    if spec.kind == "y4m":
        return Y4MSource(spec)
    if spec.kind == "tcp-listen":
        return TcpListenSource(spec, **options)
    return TcpConnectSource(spec, **options)



class MemorySource(FrameSource):
    """Frames from any iterable, in order. Used by tests and the benchmark;
    the frames keep their own seq and timestamp."""

    def __init__(self, frames, live: bool = False):
        super().__init__(SourceSpec("dir", path="<memory>"))
        self.live = live
        self._it = iter(frames)

    def _read(self, seq):
        try:
            return next(self._it)
        except StopIteration:
            raise EndOfStream() from None
