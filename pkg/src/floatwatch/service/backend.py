"""External detector backends over TCP.

Request: one FWP-encoded frame. Reply: one JSON line

    {"detections": [{"x": 0, "y": 0, "w": 1, "h": 1, "label": "vessel", "confidence": 0.8}, ...]}

The client keeps one connection open and reconnects after any failure. Every
reply box must fit inside the frame it answers.
"""

from __future__ import annotations

import json
import logging
import socket
import socketserver
import threading

from ..detect.types import LABELS, Detection
from ..errors import BackendProtocol, BackendUnavailable, ProtocolError
from ..imaging import BoundingBox, Frame
from ..ingest import fwp

log = logging.getLogger(__name__)

DEFAULT_TIMEOUT_MS = 500
MAX_REPLY = 1 << 20


def parse_reply(line: bytes, frame: Frame) -> list[Detection]:
    try:
        doc = json.loads(line)
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise BackendProtocol(f"backend reply is not JSON: {exc}") from None
    if not isinstance(doc, dict) or not isinstance(doc.get("detections"), list):
        raise BackendProtocol("backend reply must be an object with a 'detections' array")
    out = []
    for n, item in enumerate(doc["detections"]):
        try:
            x, y, w, h = (item[k] for k in ("x", "y", "w", "h"))
            label, conf = item["label"], item["confidence"]
        except (KeyError, TypeError):
            raise BackendProtocol(f"detection {n}: needs x, y, w, h, label, confidence") from None
        if not all(isinstance(v, int) and not isinstance(v, bool) for v in (x, y, w, h)):
            raise BackendProtocol(f"detection {n}: box fields must be integers")
        if not isinstance(conf, (int, float)) or isinstance(conf, bool) or not 0.0 <= conf <= 1.0:
            raise BackendProtocol(f"detection {n}: confidence must be a number in [0, 1]")
        if label not in LABELS:
            raise BackendProtocol(f"detection {n}: unknown label {label!r}")
        if x < 0 or y < 0 or w < 1 or h < 1 or x + w > frame.width or y + h > frame.height:
            raise BackendProtocol(f"detection {n}: box ({x}, {y}, {w}, {h}) outside the "
                                  f"{frame.width}x{frame.height} frame")
        out.append(Detection(BoundingBox(x, y, w, h), label, float(conf), source="external"))
    return out


class ExternalBackend:
    """Detector that delegates every frame to a remote service."""

    name = "external"

    def __init__(self, host: str, port: int, timeout_ms: int = DEFAULT_TIMEOUT_MS):
        self.host = host
        self.port = port
        self.timeout = timeout_ms / 1000.0
        self._sock: socket.socket | None = None
        self._buf = b""

    def _connect(self):
        try:
            self._sock = socket.create_connection((self.host, self.port), timeout=self.timeout)
        except OSError as exc:
            raise BackendUnavailable(f"backend {self.host}:{self.port} unreachable: {exc}") from exc
        self._buf = b""

    def _readline(self) -> bytes:
        while b"\n" not in self._buf:
            if len(self._buf) > MAX_REPLY:
                raise BackendProtocol(f"backend reply exceeds {MAX_REPLY} bytes without a newline")
            chunk = self._sock.recv(65536)
            if not chunk:
                raise BackendUnavailable("backend closed the connection before replying")
            self._buf += chunk
        line, _, self._buf = self._buf.partition(b"\n")
        return line

    def detect(self, frame: Frame) -> list[Detection]:
        if self._sock is None:
            self._connect()
        try:
            self._sock.settimeout(self.timeout)
            fwp.send_frame(self._sock, frame)
            line = self._readline()
        except socket.timeout:
            self.close()
            raise BackendUnavailable(f"backend {self.host}:{self.port} timed out "
                                     f"after {self.timeout * 1000:.0f} ms") from None
        except OSError as exc:
            self.close()
            raise BackendUnavailable(f"backend {self.host}:{self.port}: {exc}") from exc
        except (BackendProtocol, BackendUnavailable):
            self.close()
            raise
        try:
            return parse_reply(line, frame)
        except BackendProtocol:
            self.close()
            raise

    def reset(self):
        pass

    def close(self):
        if self._sock is not None:
            self._sock.close()
            self._sock = None
        self._buf = b""


def detections_to_reply(dets) -> bytes:
    items = []
    for d in dets:
        if isinstance(d, Detection):
            b = d.box
            d = {"x": b.x, "y": b.y, "w": b.w, "h": b.h, "label": d.label, "confidence": d.confidence}
        items.append(d)
    return (json.dumps({"detections": items}, separators=(",", ":")) + "\n").encode()


class _Handler(socketserver.BaseRequestHandler):
    def handle(self):
        server: BackendServer = self.server.owner
        seq = 0
        while True:
            try:
                frame = fwp.read_frame(self.request, seq=seq)
            except (ProtocolError, OSError) as exc:
                log.warning("backend server: dropping client: %s", exc)
                return
            if frame is None:
                return
            reply = server.handler(frame)
            if not isinstance(reply, bytes):
                reply = detections_to_reply(reply)
            try:
                self.request.sendall(reply)
            except OSError:
                return
            seq += 1


class _TCPServer(socketserver.ThreadingTCPServer):
    daemon_threads = True
    allow_reuse_address = True


class BackendServer:
    """Serve a ``frame -> detections`` callable over the backend protocol.

    ``handler`` may return Detections, plain dicts, or raw reply bytes (the
    last is handy for exercising client error paths). Use as a context
    manager or call ``start``/``stop``.
    """

    def __init__(self, handler, host: str = "127.0.0.1", port: int = 0):
        self.handler = handler
        self._server = _TCPServer((host, port), _Handler)
        self._server.owner = self
        self._thread: threading.Thread | None = None

    @property
    def address(self) -> tuple[str, int]:
        return self._server.server_address[:2]

    def start(self) -> "BackendServer":
        self._thread = threading.Thread(target=self._server.serve_forever, name="backend-server", daemon=True)
        self._thread.start()
        return self

    def serve_forever(self):
        self._server.serve_forever()

    def stop(self):
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()


def constant_backend(label: str = "vessel", confidence: float = 0.75, box=None):
    """Stub handler: one detection per frame with a fixed label and confidence,
    covering the whole frame unless ``box`` (x, y, w, h) is given."""

    def handler(frame: Frame):
        x, y, w, h = box if box is not None else (0, 0, frame.width, frame.height)
        return [{"x": x, "y": y, "w": w, "h": h, "label": label, "confidence": confidence}]

    return handler
