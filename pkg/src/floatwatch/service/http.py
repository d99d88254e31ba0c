"""Read-only HTTP results API over a running pipeline.

    GET /health          {"status": "ok" | "draining"}
    GET /stats           pipeline counters (see PipelineStats.snapshot) plus "state"
    GET /events?since=N  JSON array of events with frame seq > N, oldest first
    GET /frame/latest    newest frame as binary PPM, detection boxes outlined

Handlers only read snapshots and counters; they never wait on the pipeline.
"""

from __future__ import annotations

import json
import logging
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlsplit

import numpy as np

from ..errors import BindFailed
from ..imaging import Frame
from ..ingest import netpbm
from .pipeline import Pipeline

log = logging.getLogger(__name__)

OUTLINE = 3
CLASS_COLORS = {
    "vessel": (255, 0, 0),
    "vegetation": (0, 255, 0),
    "debris": (255, 160, 0),
    "unknown": (255, 255, 0),
}


def annotate(frame: Frame, detections) -> Frame:
    """RGB copy of ``frame`` with an ``OUTLINE``-pixel border drawn just
    inside each detection box, in its class colour."""
    img = frame.data
    rgb = np.repeat(img[:, :, None], 3, axis=2) if img.ndim == 2 else img.copy()
    for det in detections:
        b = det.box
        color = CLASS_COLORS.get(det.label, CLASS_COLORS["unknown"])
        x0, y0 = b.x, b.y
        x1, y1 = min(b.x2, frame.width), min(b.y2, frame.height)
        t = OUTLINE
        rgb[y0:min(y0 + t, y1), x0:x1] = color
        rgb[max(y1 - t, y0):y1, x0:x1] = color
        rgb[y0:y1, x0:min(x0 + t, x1)] = color
        rgb[y0:y1, max(x1 - t, x0):x1] = color
    return Frame(rgb, timestamp=frame.timestamp, seq=frame.seq)


def parse_since(query: str) -> int:
    """``since`` cursor from a query string; absent means everything (-1)."""
    params = parse_qs(query, keep_blank_values=True, strict_parsing=bool(query))
    unknown = set(params) - {"since"}
    if unknown:
        raise ValueError(f"unknown query parameter {sorted(unknown)[0]!r}")
    values = params.get("since")
    if values is None:
        return -1
    if len(values) != 1:
        raise ValueError("since given more than once")
    text = values[0]
    if not re.fullmatch(r"-?[0-9]+", text):
        raise ValueError(f"since must be an integer, got {text!r}")
    return int(text)


class _Handler(BaseHTTPRequestHandler):
    server_version = "floatwatch"
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):
        log.debug("http: " + fmt, *args)

    def _send(self, status: int, body: bytes = b"", ctype: str = "application/json"):
        self.send_response(status)
        if body or status != 204:
            self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        if body:
            self.wfile.write(body)

    def _json(self, status: int, doc):
        self._send(status, json.dumps(doc, separators=(",", ":")).encode())

    def do_GET(self):
        api: ApiServer = self.server.api
        url = urlsplit(self.path)
        path = url.path
        if path == "/health":
            self._json(200, {"status": "draining" if api.draining else "ok"})
        elif path == "/stats":
            doc = api.pipeline.stats.snapshot()
            doc["state"] = api.pipeline.state
            self._json(200, doc)
        elif path == "/events":
            try:
                since = parse_since(url.query)
            except ValueError as exc:
                self._json(400, {"error": str(exc)})
                return
            self._json(200, [ev.to_dict() for ev in api.pipeline.ring.since(since)])
        elif path == "/frame/latest":
            snap = api.pipeline.latest
            if snap is None:
                self._send(204)
                return
            body = netpbm.encode(annotate(snap.frame, snap.detections))
            self._send(200, body, "image/x-portable-pixmap")
        else:
            self._json(404, {"error": f"no such resource {path}"})


class _Server(ThreadingHTTPServer):
    daemon_threads = True
    allow_reuse_address = True


class ApiServer:
    """HTTP front end bound to one pipeline."""

    def __init__(self, pipeline: Pipeline, host: str = "127.0.0.1", port: int = 8080):
        self.pipeline = pipeline
        self.draining = False
        try:
            self._httpd = _Server((host, port), _Handler)
        except OSError as exc:
            raise BindFailed(f"cannot bind HTTP API on {host}:{port}: {exc}") from exc
        self._httpd.api = self
        self._thread: threading.Thread | None = None

    @property
    def address(self) -> tuple[str, int]:
        return self._httpd.server_address[:2]

    def start(self) -> "ApiServer":
        self._thread = threading.Thread(target=self._httpd.serve_forever, name="floatwatch-http", daemon=True)
        self._thread.start()
        return self

    def shutdown(self, grace: float = 0.0):
        """Report draining, stop the pipeline, then stop serving."""
        self.draining = True
        self.pipeline.stop()
        if grace > 0:
            threading.Event().wait(grace)
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._thread is not None:
            self._thread.join()
