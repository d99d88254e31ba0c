"""The streaming service: ingest -> detect (+ track) -> publish.

Three threads joined by bounded queues. Detection for a stream is strictly
sequential, because frame differencing needs frames in order. File sources
block when the ingest queue is full, so a file run never loses frames and is
reproducible. Live sources evict the oldest queued frame instead and count
it as dropped.
"""

from __future__ import annotations

import logging
import threading
import time
from collections import deque
from dataclasses import dataclass

from ..detect.classical import ClassicalBackend
from ..detect.tracker import Tracker
from ..detect.types import Detection, DetectionEvent
from ..errors import EndOfStream, FloatwatchError
from ..imaging import Frame
from ..ingest.queue import Closed, FrameQueue
from ..ingest.sources import FrameSource, open_source
from .backend import ExternalBackend
from .config import AppConfig

log = logging.getLogger(__name__)

STATS_VERSION = 1
STAGES = ("ingest", "detect", "publish")


class PipelineStats:
    """Monotone counters plus a one-second fps window; safe to read from any thread."""

    def __init__(self):
        self._lock = threading.Lock()
        self.ingested = 0
        self.processed = 0
        self.failed = 0
        self.events = 0
        self._dropped_fn = lambda: 0
        self._lat_sum = dict.fromkeys(STAGES, 0.0)
        self._lat_n = dict.fromkeys(STAGES, 0)
        self._window: deque[float] = deque()

    def add(self, counter: str, n: int = 1):
        with self._lock:
            setattr(self, counter, getattr(self, counter) + n)

    def latency(self, stage: str, seconds: float):
        with self._lock:
            self._lat_sum[stage] += seconds
            self._lat_n[stage] += 1

    def frame_done(self, now: float | None = None):
        now = time.monotonic() if now is None else now
        with self._lock:
            self.processed += 1
            self._window.append(now)
            while self._window and self._window[0] <= now - 1.0:
                self._window.popleft()

    @property
    def dropped(self) -> int:
        return self._dropped_fn()

    def fps(self, now: float | None = None) -> float:
        now = time.monotonic() if now is None else now
        with self._lock:
            return float(sum(1 for t in self._window if t > now - 1.0))

    def snapshot(self) -> dict:
        fps = self.fps()
        with self._lock:
            lat = {s: (self._lat_sum[s] / self._lat_n[s] * 1e6 if self._lat_n[s] else 0.0) for s in STAGES}
            return {
                "stats_version": STATS_VERSION,
                "ingested": self.ingested,
                "processed": self.processed,
                "dropped": self.dropped,
                "failed": self.failed,
                "events": self.events,
                "fps": fps,
                "latency_us": {s: round(v, 1) for s, v in lat.items()},
            }


class EventRing:
    """The newest ``capacity`` events, queryable by frame seq."""

    def __init__(self, capacity: int = 1000):
        self._events: deque[DetectionEvent] = deque(maxlen=capacity)
        self._lock = threading.Lock()

    def extend(self, events: list[DetectionEvent]):
        with self._lock:
            self._events.extend(events)

    def since(self, seq: int) -> list[DetectionEvent]:
        """Events whose frame seq is greater than ``seq``, oldest first.

        A frame's events are added atomically, so chaining ``since`` with the
        seq of the last event received never skips or repeats an event (as
        long as the poller keeps up with the ring).
        """
        with self._lock:
            return [ev for ev in self._events if ev.seq > seq]

    def __len__(self):
        with self._lock:
            return len(self._events)


@dataclass(frozen=True)
class Snapshot:
    frame: Frame
    detections: tuple[Detection, ...]


def make_backend(config: AppConfig):
    det = config.detector
    if det.backend == "external":
        host, port = det.external_address()
        return ExternalBackend(host, port, det.timeout_ms)
    return ClassicalBackend(config.motion, config.motion_mode, det.rules, det.area_ref,
                            det.merge_gap, det.texture_levels)


def open_configured_source(config: AppConfig) -> FrameSource:
    spec = config.source.spec()
    if spec.kind == "tcp-listen":
        return open_source(spec, accept_timeout=config.source.accept_timeout)
    if spec.kind == "tcp-connect":
        return open_source(spec, retries=config.source.retries, retry_delay=config.source.retry_delay)
    return open_source(spec)


class Pipeline:
    """One source, one backend, one tracker.

    ``state`` moves idle -> running -> draining -> stopped. ``draining``
    covers both the end-of-stream flush and an explicit ``stop()``; after
    ``stop()`` nothing more is published.
    """

    def __init__(self, config: AppConfig, source: FrameSource | None = None, backend=None,
                 event_sink=None):
        self.config = config
        self.source = source if source is not None else open_configured_source(config)
        self.backend = backend if backend is not None else make_backend(config)
        t = config.tracker
        self.tracker = Tracker(t.confirm_frames, t.drop_frames, t.assoc_iou)
        policy = config.pipeline.drop_policy
        drop = self.source.live if policy == "auto" else policy == "drop_oldest"
        cap = config.pipeline.queue_capacity
        self.frames_in = FrameQueue(cap, drop_oldest=drop)
        self.results = FrameQueue(cap, drop_oldest=False)
        self.stats = PipelineStats()
        self.stats._dropped_fn = lambda: self.frames_in.dropped
        self.ring = EventRing(config.pipeline.event_ring)
        self.event_sink = event_sink
        self.state = "idle"
        self.error: BaseException | None = None
        self._latest: Snapshot | None = None
        self._stop = threading.Event()
        self._threads: list[threading.Thread] = []

    @property
    def latest(self) -> Snapshot | None:
        return self._latest

    # stages

    def _ingest(self):
        try:
            while not self._stop.is_set():
                t0 = time.perf_counter()
                try:
                    frame = self.source.next_frame()
                except EndOfStream:
                    break
                except FloatwatchError as exc:
                    if self.source.live and not self._stop.is_set():
                        log.warning("ingest: %s", exc)
                        continue
                    raise
                self.stats.latency("ingest", time.perf_counter() - t0)
                self.stats.add("ingested")
                try:
                    self.frames_in.put(frame)
                except Closed:
                    break
        except BaseException as exc:  # surfaced through run()'s exit status
            if not self._stop.is_set():
                log.error("ingest failed: %s", exc)
                self.error = exc
        finally:
            self.frames_in.close()

    def _detect(self):
        last: Frame | None = None
        try:
            while True:
                try:
                    frame = self.frames_in.get()
                except Closed:
                    break
                if self._stop.is_set():
                    continue
                t0 = time.perf_counter()
                try:
                    dets = self.backend.detect(frame)
                except FloatwatchError as exc:
                    log.warning("frame %d: detector failed: %s", frame.seq, exc)
                    self.stats.add("failed")
                    continue
                events = self.tracker.update(dets, frame.seq, frame.timestamp)
                self.stats.latency("detect", time.perf_counter() - t0)
                last = frame
                self.results.put((frame, tuple(dets), events))
            if not self._stop.is_set() and last is not None:
                self.results.put((None, (), self.tracker.finish()))
        except BaseException as exc:
            if not self._stop.is_set():
                log.error("detect failed: %s", exc)
                self.error = exc
            self._stop.set()
        finally:
            self.results.close()

    def _publish(self):
        while True:
            try:
                frame, dets, events = self.results.get()
            except Closed:
                break
            if self._stop.is_set():
                continue
            t0 = time.perf_counter()
            if events:
                if self.event_sink is not None:
                    for ev in events:
                        self.event_sink(ev)
                self.ring.extend(events)
                self.stats.add("events", len(events))
            if frame is not None:
                self._latest = Snapshot(frame, dets)
                self.stats.latency("publish", time.perf_counter() - t0)
                self.stats.frame_done()

    # lifecycle

    def start(self) -> "Pipeline":
        if self.state != "idle":
            raise RuntimeError("pipeline already started")
        self.state = "running"
        for name, target in (("ingest", self._ingest), ("detect", self._detect), ("publish", self._publish)):
            th = threading.Thread(target=target, name=f"floatwatch-{name}", daemon=True)
            th.start()
            self._threads.append(th)
        return self

    def wait(self, timeout: float | None = None) -> bool:
        """Block until the stream is fully processed; True once every stage has exited."""
        deadline = None if timeout is None else time.monotonic() + timeout
        for th in self._threads:
            th.join(None if deadline is None else max(0.0, deadline - time.monotonic()))
            if th.is_alive():
                return False
        self.state = "stopped"
        self.source.close()
        return True

    def stop(self, timeout: float = 5.0):
        """Stop now: nothing further is published once this returns."""
        if self.state in ("idle", "stopped"):
            self.state = "stopped"
            return
        self.state = "draining"
        self._stop.set()
        self.source.close()
        self.frames_in.close()
        self.wait(timeout)

    def run(self) -> int:
        """Run to end of stream; returns a process exit status."""
        self.start()
        self.wait()
        if self.error is not None:
            return 1
        return 0
