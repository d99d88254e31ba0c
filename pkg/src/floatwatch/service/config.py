"""Application configuration (TOML).

Every section and key is optional; omitted keys take the defaults below.
Unknown sections or keys are rejected with the offending key named, so a typo
never silently falls back to a default.

    [source]    uri, fps, retries, retry_delay, accept_timeout
    [motion]    mode, threshold, min_area, connectivity, bg_alpha, bg_threshold
    [detector]  backend, address, timeout_ms, area_ref, merge_gap, texture_levels, [[detector.rules]]
    [tracker]   confirm_frames, drop_frames, assoc_iou
    [http]      bind, port
    [pipeline]  queue_capacity, event_ring, drop_policy
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import tomli

from ..detect.rules import DEFAULT_RULES, Rule, rules_from_config
from ..errors import BadThreshold, ConfigError
from ..ingest.sources import SourceSpec, parse_source_uri
from ..motion import MotionConfig

DROP_POLICIES = ("auto", "block", "drop_oldest")


@dataclass(frozen=True)
class SourceConfig:
    uri: str | None = None
    fps: float | None = None
    retries: int = 3
    retry_delay: float = 0.5
    accept_timeout: float | None = None

    def spec(self) -> SourceSpec:
        if self.uri is None:
            raise ConfigError("no source configured (set source.uri or pass --source)")
        try:
            return parse_source_uri(self.uri, self.fps)
        except ValueError as exc:
            raise ConfigError(f"source.uri: {exc}") from None


@dataclass(frozen=True)
class DetectorConfig:
    backend: str = "classical"
    address: str | None = None
    timeout_ms: int = 500
    area_ref: float = 64.0
    merge_gap: int = 2
    texture_levels: int = 8
    rules: tuple[Rule, ...] = DEFAULT_RULES

    def external_address(self) -> tuple[str, int]:
        if self.address is None:
            raise ConfigError("detector.address is required for the external backend")
        host, sep, port = self.address.rpartition(":")
        if not sep or not host or not port.isdigit():
            raise ConfigError(f"detector.address must be HOST:PORT, got {self.address!r}")
        return host, int(port)


@dataclass(frozen=True)
class TrackerConfig:
    confirm_frames: int = 3
    drop_frames: int = 5
    assoc_iou: float = 0.3


@dataclass(frozen=True)
class HttpConfig:
    bind: str = "127.0.0.1"
    port: int = 8080


@dataclass(frozen=True)
class PipelineConfig:
    queue_capacity: int = 8
    event_ring: int = 1000
    # auto: file sources block (lossless, reproducible), live sources drop oldest
    drop_policy: str = "auto"


@dataclass(frozen=True)
class AppConfig:
    source: SourceConfig = field(default_factory=SourceConfig)
    motion: MotionConfig = field(default_factory=MotionConfig)
    motion_mode: str = "diff"
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    http: HttpConfig = field(default_factory=HttpConfig)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)

    def replace(self, **changes) -> "AppConfig":
        return dataclasses.replace(self, **changes)


_NUMBER = (int, float)


def _check_type(where: str, value, kind):
    ok = isinstance(value, kind) and not isinstance(value, bool)
    if kind is bool:
        ok = isinstance(value, bool)
    if not ok:
        names = kind.__name__ if isinstance(kind, type) else "/".join(k.__name__ for k in kind)
        raise ConfigError(f"{where}: expected {names}, got {type(value).__name__}")
    return value


def _section(raw: dict, name: str, schema: dict[str, type | tuple]) -> dict:
    table = raw.get(name, {})
    if not isinstance(table, dict):
        raise ConfigError(f"[{name}] must be a table")
    out = {}
    for key, value in table.items():
        if key not in schema:
            raise ConfigError(f"unknown key {name}.{key}")
        out[key] = _check_type(f"{name}.{key}", value, schema[key])
    return out


def config_from_dict(raw: dict) -> AppConfig:
    sections = ("source", "motion", "detector", "tracker", "http", "pipeline")
    for name in raw:
        if name not in sections:
            raise ConfigError(f"unknown section [{name}]")

    src = _section(raw, "source", {"uri": str, "fps": _NUMBER, "retries": int,
                                   "retry_delay": _NUMBER, "accept_timeout": _NUMBER})
    mot = _section(raw, "motion", {"mode": str, "threshold": int, "min_area": int, "connectivity": int,
                                   "bg_alpha": _NUMBER, "bg_threshold": int})
    det = _section(raw, "detector", {"backend": str, "address": str, "timeout_ms": int, "area_ref": _NUMBER,
                                     "merge_gap": int, "texture_levels": int, "rules": list})
    trk = _section(raw, "tracker", {"confirm_frames": int, "drop_frames": int, "assoc_iou": _NUMBER})
    htp = _section(raw, "http", {"bind": str, "port": int})
    pip = _section(raw, "pipeline", {"queue_capacity": int, "event_ring": int, "drop_policy": str})

    mode = mot.pop("mode", "diff")
    if mode not in ("diff", "background"):
        raise ConfigError(f"motion.mode must be 'diff' or 'background', got {mode!r}")
    try:
        motion = MotionConfig(**mot)
    except (BadThreshold, ValueError) as exc:
        raise ConfigError(f"[motion] {exc}") from None

    if "rules" in det:
        if not all(isinstance(r, dict) for r in det["rules"]):
            raise ConfigError("detector.rules must be an array of tables")
        det["rules"] = rules_from_config(det["rules"])
    detector = DetectorConfig(**det)
    if detector.backend not in ("classical", "external"):
        raise ConfigError(f"detector.backend must be 'classical' or 'external', got {detector.backend!r}")
    if detector.backend == "external":
        detector.external_address()
    if detector.timeout_ms <= 0 or detector.area_ref <= 0 or detector.texture_levels < 2:
        raise ConfigError("detector.timeout_ms and area_ref must be positive, texture_levels >= 2")

    tracker = TrackerConfig(**trk)
    if tracker.confirm_frames < 1 or tracker.drop_frames < 1 or not 0 < tracker.assoc_iou <= 1:
        raise ConfigError("tracker: confirm_frames, drop_frames >= 1 and assoc_iou in (0, 1] required")

    http = HttpConfig(**htp)
    if not 0 <= http.port <= 65535:
        raise ConfigError(f"http.port out of range: {http.port}")

    pipeline = PipelineConfig(**pip)
    if pipeline.queue_capacity < 1 or pipeline.event_ring < 1:
        raise ConfigError("pipeline.queue_capacity and event_ring must be >= 1")
    if pipeline.drop_policy not in DROP_POLICIES:
        raise ConfigError(f"pipeline.drop_policy must be one of {DROP_POLICIES}")

    source = SourceConfig(**src)
    if source.uri is not None:
        source.spec()
    return AppConfig(source, motion, mode, detector, tracker, http, pipeline)


def load_config(path: str | Path) -> AppConfig:
    try:
        with open(path, "rb") as fh:
            raw = tomli.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return config_from_dict(raw)
