"""Greedy IoU tracker that turns per-frame detections into debounced events."""

from __future__ import annotations

from dataclasses import dataclass

from ..imaging import BoundingBox, bbox_iou
from .types import Detection, DetectionEvent


@dataclass
class Track:
    id: int | None  # assigned when the track is confirmed
    last_box: BoundingBox
    label: str
    confidence: float
    hits: int = 1
    misses: int = 0

    @property
    def confirmed(self) -> bool:
        return self.id is not None


def greedy_pairs(a_boxes: list[BoundingBox], b_boxes: list[BoundingBox], threshold: float) -> list[tuple[int, int, float]]:
    """One-to-one pairs by descending IoU (ties: lower a index, then lower b
    index); pairs under ``threshold`` are never formed."""
    cands = []
    for i, a in enumerate(a_boxes):
        for j, b in enumerate(b_boxes):
            v = bbox_iou(a, b)
            if v >= threshold and v > 0.0:
                cands.append((-v, i, j))
    cands.sort()
    used_a, used_b, out = set(), set(), []
    for neg, i, j in cands:
        if i in used_a or j in used_b:
            continue
        used_a.add(i)
        used_b.add(j)
        out.append((i, j, -neg))
    return out


class Tracker:
    """Per-stream track bookkeeping.

    A detection that persists ``confirm_frames`` consecutive frames publishes
    ``appeared``; every later match publishes ``updated``; ``drop_frames``
    consecutive misses publish ``exited``. Unconfirmed tracks vanish on their
    first miss, so one-frame flickers never produce events.
    """

    def __init__(self, confirm_frames: int = 3, drop_frames: int = 5, assoc_iou: float = 0.3):
        if confirm_frames < 1 or drop_frames < 1:
            raise ValueError("confirm_frames and drop_frames must be >= 1")
        if not 0.0 < assoc_iou <= 1.0:
            raise ValueError("assoc_iou must lie in (0, 1]")
        self.confirm_frames = confirm_frames
        self.drop_frames = drop_frames
        self.assoc_iou = assoc_iou
        self.tracks: list[Track] = []
        self._next_id = 1
        self.last_seq = -1
        self.last_timestamp = 0

    def _event(self, kind, track, seq, timestamp):
        return DetectionEvent(kind, track.id, seq, timestamp, track.last_box, track.label, track.confidence)

    def update(self, detections: list[Detection], seq: int, timestamp: int) -> list[DetectionEvent]:
        self.last_seq, self.last_timestamp = seq, timestamp
        pairs = greedy_pairs([t.last_box for t in self.tracks], [d.box for d in detections], self.assoc_iou)
        matched_tracks = {i: j for i, j, _ in pairs}
        matched_dets = set(matched_tracks.values())

        events: list[DetectionEvent] = []
        survivors: list[Track] = []
        for i, track in enumerate(self.tracks):
            j = matched_tracks.get(i)
            if j is not None:
                det = detections[j]
                track.last_box, track.label, track.confidence = det.box, det.label, det.confidence
                track.hits += 1
                track.misses = 0
                if track.confirmed:
                    events.append(self._event("updated", track, seq, timestamp))
                elif track.hits >= self.confirm_frames:
                    self._confirm(track)
                    events.append(self._event("appeared", track, seq, timestamp))
                survivors.append(track)
            elif track.confirmed:
                track.hits = 0
                track.misses += 1
                if track.misses >= self.drop_frames:
                    events.append(self._event("exited", track, seq, timestamp))
                else:
                    survivors.append(track)
            # unconfirmed and unmatched: dropped silently

        for j, det in enumerate(detections):
            if j in matched_dets:
                continue
            track = Track(None, det.box, det.label, det.confidence)
            if self.confirm_frames == 1:
                self._confirm(track)
                events.append(self._event("appeared", track, seq, timestamp))
            survivors.append(track)
        self.tracks = survivors
        return events

    def _confirm(self, track: Track):
        track.id = self._next_id
        self._next_id += 1

    def finish(self, seq: int | None = None, timestamp: int | None = None) -> list[DetectionEvent]:
        """Close every confirmed track at end of stream.

        The exits carry the seq one past the last frame by default: they are
        not part of any frame, and a client polling events by seq must still
        see them after it has consumed the last frame's events.
        """
        seq = self.last_seq + 1 if seq is None else seq
        timestamp = self.last_timestamp if timestamp is None else timestamp
        events = [self._event("exited", t, seq, timestamp) for t in self.tracks if t.confirmed]
        self.tracks = []
        return events
