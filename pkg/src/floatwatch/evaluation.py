"""Scoring detector output against ground truth.

Matching is greedy by IoU and label-blind; a class-correct match is counted
separately. Reports serialise to JSON (``report_version`` 1) and to an
aligned plain-text table for side-by-side backend comparison.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field

from .detect.tracker import greedy_pairs
from .detect.types import LABELS, Detection, DetectionEvent
from .imaging import BoundingBox
from .synth import TruthEntry

REPORT_VERSION = 1
HIST_BINS = 10


@dataclass(frozen=True)
class MatchResult:
    pairs: tuple[tuple[int, int, float], ...]
    unmatched_dets: tuple[int, ...]
    unmatched_truths: tuple[int, ...]
    det_labels: tuple[str, ...] = ()
    truth_labels: tuple[str, ...] = ()
    confidences: tuple[float, ...] = ()

    @property
    def tp(self) -> int:
        return len(self.pairs)

    @property
    def fp(self) -> int:
        return len(self.unmatched_dets)

    @property
    def fn(self) -> int:
        return len(self.unmatched_truths)


def _box(item) -> BoundingBox:
    return item if isinstance(item, BoundingBox) else item.box


def match_detections(dets, truths, iou_threshold: float = 0.5) -> MatchResult:
    """Greedy one-to-one matching over all pairs by descending IoU; ties go to
    the lower detection index, then the lower truth index."""
    pairs = greedy_pairs([_box(d) for d in dets], [_box(t) for t in truths], iou_threshold)
    pairs.sort()
    used_d = {i for i, _, _ in pairs}
    used_t = {j for _, j, _ in pairs}
    return MatchResult(
        pairs=tuple(pairs),
        unmatched_dets=tuple(i for i in range(len(dets)) if i not in used_d),
        unmatched_truths=tuple(j for j in range(len(truths)) if j not in used_t),
        det_labels=tuple(getattr(d, "label", "unknown") for d in dets),
        truth_labels=tuple(getattr(t, "label", "unknown") for t in truths),
        confidences=tuple(float(getattr(d, "confidence", 1.0)) for d in dets),
    )


def histogram_bin(confidence: float) -> int:
    return min(int(confidence * HIST_BINS), HIST_BINS - 1)


@dataclass
class MetricsReport:
    backend: str = "classical"
    frames: int = 0
    tp: int = 0
    fp: int = 0
    fn: int = 0
    class_tp: int = 0
    mean_iou: float = 0.0
    confidence_histogram: list[int] = field(default_factory=lambda: [0] * HIST_BINS)
    per_class: dict[str, dict[str, int]] = field(default_factory=dict)
    fps: float | None = None

    @property
    def precision(self) -> float:
        total = self.tp + self.fp
        return 1.0 if total == 0 else self.tp / total

    @property
    def recall(self) -> float:
        total = self.tp + self.fn
        return 1.0 if total == 0 else self.tp / total

    @property
    def miss_rate(self) -> float:
        return 1.0 - self.recall

    @property
    def detections(self) -> int:
        return self.tp + self.fp

    @property
    def truths(self) -> int:
        return self.tp + self.fn

    def to_dict(self) -> dict:
        return {
            "report_version": REPORT_VERSION,
            "backend": self.backend,
            "frames": self.frames,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "class_tp": self.class_tp,
            "precision": self.precision,
            "recall": self.recall,
            "miss_rate": self.miss_rate,
            "mean_iou": self.mean_iou,
            "confidence_histogram": {
                "bins": [[k / HIST_BINS, (k + 1) / HIST_BINS] for k in range(HIST_BINS)],
                "counts": list(self.confidence_histogram),
            },
            "per_class": self.per_class,
            "fps": self.fps,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)


def compute_metrics(results: list[MatchResult], dets_per_frame: list[list[Detection]] | None = None,
                    backend: str = "classical", fps: float | None = None) -> MetricsReport:
    """Aggregate per-frame matches. Confidences for the histogram come from
    ``dets_per_frame`` when given, else from the match results themselves."""
    rep = MetricsReport(backend=backend, frames=len(results), fps=fps)
    per_class = {label: {"truths": 0, "detections": 0, "matched": 0, "class_correct": 0} for label in LABELS}
    iou_sum = 0.0
    for k, res in enumerate(results):
        rep.tp += res.tp
        rep.fp += res.fp
        rep.fn += res.fn
        for label in res.truth_labels:
            per_class.setdefault(label, dict.fromkeys(("truths", "detections", "matched", "class_correct"), 0))
            per_class[label]["truths"] += 1
        for label in res.det_labels:
            per_class[label]["detections"] += 1
        for i, j, v in res.pairs:
            iou_sum += v
            tl = res.truth_labels[j] if res.truth_labels else "unknown"
            per_class[tl]["matched"] += 1
            if res.det_labels and res.det_labels[i] == tl:
                rep.class_tp += 1
                per_class[tl]["class_correct"] += 1
        confs = [d.confidence for d in dets_per_frame[k]] if dets_per_frame is not None else res.confidences
        for c in confs:
            rep.confidence_histogram[histogram_bin(c)] += 1
    rep.mean_iou = iou_sum / rep.tp if rep.tp else 0.0
    rep.per_class = per_class
    return rep


def detections_from_events(events: list[DetectionEvent]) -> dict[int, list[Detection]]:
    """Per-frame detections implied by an event log (appeared/updated carry
    the box seen on that frame; exited repeats a stale box and is skipped)."""
    out: dict[int, list[Detection]] = defaultdict(list)
    for ev in events:
        if ev.kind == "exited":
            continue
        out[ev.seq].append(Detection(ev.box, ev.label, ev.confidence, source="events"))
    return out


def evaluate_frames(dets_by_seq: dict[int, list[Detection]], truth: list[TruthEntry],
                    iou_threshold: float = 0.5, backend: str = "classical",
                    fps: float | None = None, frames: range | None = None) -> MetricsReport:
    truth_by_seq: dict[int, list[TruthEntry]] = defaultdict(list)
    for entry in truth:
        truth_by_seq[entry.seq].append(entry)
    seqs = sorted(set(frames or ()) | set(truth_by_seq) | set(dets_by_seq))
    results, dets = [], []
    for seq in seqs:
        d = dets_by_seq.get(seq, [])
        results.append(match_detections(d, truth_by_seq.get(seq, []), iou_threshold))
        dets.append(d)
    return compute_metrics(results, dets, backend=backend, fps=fps)


def evaluate_events(events: list[DetectionEvent], truth: list[TruthEntry], iou_threshold: float = 0.5,
                    backend: str = "classical", fps: float | None = None,
                    frames: range | None = None) -> MetricsReport:
    return evaluate_frames(detections_from_events(events), truth, iou_threshold, backend, fps, frames)


COLUMNS = ("backend", "precision", "recall", "miss_rate", "mean_iou", "fps")


@dataclass(frozen=True)
class ComparisonTable:
    rows: tuple[tuple, ...]

    def to_text(self) -> str:
        cells = [list(COLUMNS)]
        for row in self.rows:
            name, *nums = row
            cells.append([name] + ["-" if v is None else f"{v:.4f}" if i < 4 else f"{v:.1f}"
                                   for i, v in enumerate(nums)])
        widths = [max(len(r[c]) for r in cells) for c in range(len(COLUMNS))]
        lines = []
        for r in cells:
            parts = [r[0].ljust(widths[0])] + [v.rjust(w) for v, w in zip(r[1:], widths[1:])]
            lines.append("  ".join(parts).rstrip())
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {"report_version": REPORT_VERSION, "columns": list(COLUMNS),
                "rows": [list(r) for r in self.rows]}


def compare_backends(reports: list[MetricsReport]) -> ComparisonTable:
    if not reports:
        raise ValueError("compare_backends needs at least one report")
    return ComparisonTable(tuple(
        (r.backend, r.precision, r.recall, r.miss_rate, r.mean_iou, r.fps) for r in reports
    ))
