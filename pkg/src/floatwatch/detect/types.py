from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Protocol, runtime_checkable

from ..imaging import BoundingBox, Frame

LABELS = ("vessel", "vegetation", "debris", "unknown")
EVENT_KINDS = ("appeared", "updated", "exited")


@dataclass(frozen=True)
class Detection:
    box: BoundingBox
    label: str
    confidence: float
    source: str = "classical"

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValueError(f"label {self.label!r} not in {LABELS}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")


@runtime_checkable
class Backend(Protocol):
    """Anything that turns a frame into detections.

    Implementations may keep state between frames (the classical backend keeps
    the previous frame) but must be deterministic given that state.
    """

    name: str

    def detect(self, frame: Frame) -> list[Detection]:
        ...


@dataclass(frozen=True)
class DetectionEvent:
    kind: str
    track_id: int
    seq: int
    timestamp: int
    box: BoundingBox
    label: str
    confidence: float

    def to_dict(self) -> dict:
        b = self.box
        return {
            "kind": self.kind,
            "track": self.track_id,
            "seq": self.seq,
            "timestamp": self.timestamp,
            "x": b.x,
            "y": b.y,
            "w": b.w,
            "h": b.h,
            "label": self.label,
            "confidence": round(self.confidence, 6),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict) -> "DetectionEvent":
        if d["kind"] not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {d['kind']!r}")
        return cls(d["kind"], int(d["track"]), int(d["seq"]), int(d["timestamp"]),
                   BoundingBox(int(d["x"]), int(d["y"]), int(d["w"]), int(d["h"])),
                   str(d["label"]), float(d["confidence"]))


def read_event_log(path) -> list[DetectionEvent]:
    with open(path, encoding="utf-8") as fh:
        return [DetectionEvent.from_dict(json.loads(line)) for line in fh if line.strip()]


def event_grammar_violations(events: list[DetectionEvent]) -> list[str]:
    """Check every track follows ``appeared (updated)* exited``.

    Returns human-readable violations; an empty list means the log is well
    formed. A track still open at the end of the log is a violation.
    """
    state: dict[int, str] = {}
    problems = []
    for i, ev in enumerate(events):
        prev = state.get(ev.track_id)
        if ev.kind == "appeared":
            if prev is not None:
                problems.append(f"event {i}: track {ev.track_id} appeared twice")
        elif prev is None:
            problems.append(f"event {i}: track {ev.track_id} {ev.kind} before appeared")
        elif prev == "exited":
            problems.append(f"event {i}: track {ev.track_id} {ev.kind} after exited")
        state[ev.track_id] = ev.kind
    for tid, last in state.items():
        if last != "exited":
            problems.append(f"track {tid} never exited")
    return problems
