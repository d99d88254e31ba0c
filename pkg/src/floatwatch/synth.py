"""Synthetic water scenes with exact ground truth.

A frame is a gray water surface (base level + travelling sine ripple + seeded
noise) with opaque or alpha-blended objects composited on top. Noise comes
from one xoshiro256** stream per image row keyed by ``(seed, t, row)``, so any
frame can be rendered on its own and the output is bit-reproducible. The
generator is documented in docs/formats.md.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import kernels
from .errors import BadScenario
from .imaging import BoundingBox, Frame, round_half_up
from .ingest import netpbm
from .ingest.y4m import Y4MWriter

SHAPES = ("rect", "ellipse")


@dataclass(frozen=True)
class WaterBackground:
    base: float = 90.0
    ripple_amplitude: float = 4.0
    ripple_wavelength: float = 48.0
    ripple_direction: float = 0.6435  # radians, ~ (0.8, 0.6)
    ripple_speed: float = 0.15  # radians of phase per frame
    noise_sigma: float = 1.5


@dataclass(frozen=True)
class SceneObject:
    shape: str
    size: tuple[int, int]
    color: tuple[int, int, int]
    start: tuple[float, float]
    velocity: tuple[float, float] = (0.0, 0.0)
    enter_frame: int = 0
    exit_frame: int | None = None
    label: str = "debris"
    alpha: float = 1.0

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise BadScenario(f"unknown shape {self.shape!r}")
        if self.size[0] < 1 or self.size[1] < 1:
            raise BadScenario(f"object size must be >= 1, got {self.size}")
        if not 0.0 < self.alpha <= 1.0:
            raise BadScenario("object alpha must lie in (0, 1]")
        if any(not 0 <= c <= 255 for c in self.color):
            raise BadScenario("object colour components must lie in [0, 255]")

    def alive(self, t: int, frame_count: int) -> bool:
        end = frame_count if self.exit_frame is None else self.exit_frame
        return self.enter_frame <= t < end

    def origin(self, t: int) -> tuple[int, int]:
        x = self.start[0] + t * self.velocity[0]
        y = self.start[1] + t * self.velocity[1]
        return int(math.floor(x + 0.5)), int(math.floor(y + 0.5))


@dataclass(frozen=True)
class Scenario:
    width: int
    height: int
    frame_count: int
    seed: int = 0
    background: WaterBackground = field(default_factory=WaterBackground)
    objects: tuple[SceneObject, ...] = ()
    fps: float = 30.0

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise BadScenario(f"scenario dims must be >= 1, got {self.width}x{self.height}")
        if self.frame_count < 1:
            raise BadScenario("scenario needs at least one frame")
        if not 0 <= self.seed < 2 ** 64:
            raise BadScenario("seed must fit in 64 bits")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        d = dict(d)
        bg = WaterBackground(**d.pop("background", {}))
        objs = []
        for o in d.pop("objects", []):
            o = dict(o)
            for key in ("size", "color", "start", "velocity"):
                if key in o:
                    o[key] = tuple(o[key])
            objs.append(SceneObject(**o))
        return cls(background=bg, objects=tuple(objs), **d)


@dataclass(frozen=True)
class TruthEntry:
    seq: int
    id: int
    label: str
    box: BoundingBox

    def to_json(self) -> str:
        b = self.box
        return json.dumps({"seq": self.seq, "id": self.id, "label": self.label,
                           "x": b.x, "y": b.y, "w": b.w, "h": b.h}, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "TruthEntry":
        d = json.loads(line)
        return cls(int(d["seq"]), int(d["id"]), str(d["label"]),
                   BoundingBox(int(d["x"]), int(d["y"]), int(d["w"]), int(d["h"])))


def standard_scenario(seed: int = 7) -> Scenario:
    """320x240, 200 frames, three objects with >= 40 gray levels of contrast."""
    return Scenario(
        width=320,
        height=240,
        frame_count=200,
        seed=seed,
        background=WaterBackground(),
        objects=(
            # all three drift down at 1 px/frame, so their rows never meet
            SceneObject("rect", (40, 18), (228, 226, 220), start=(10.0, 10.0), velocity=(1.0, 1.0),
                        enter_frame=0, exit_frame=150, label="vessel"),
            SceneObject("ellipse", (28, 22), (30, 200, 50), start=(290.0, 40.0), velocity=(-1.0, 1.0),
                        enter_frame=20, exit_frame=175, label="vegetation"),
            SceneObject("rect", (16, 12), (60, 35, 15), start=(20.0, 76.0), velocity=(1.0, 1.0),
                        enter_frame=10, exit_frame=150, label="debris"),
        ),
    )


def water_surface(scenario: Scenario, t: int) -> np.ndarray:
    bg = scenario.background
    h, w = scenario.height, scenario.width
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    field_ = np.full((h, w), float(bg.base))
    if bg.ripple_amplitude:
        k = 2.0 * math.pi / bg.ripple_wavelength
        proj = xs * math.cos(bg.ripple_direction) + ys * math.sin(bg.ripple_direction)
        field_ += bg.ripple_amplitude * np.sin(k * proj - bg.ripple_speed * t)
    if bg.noise_sigma:
        field_ += bg.noise_sigma * kernels.gaussian_noise(scenario.seed, t, h, w)
    return field_


def object_mask(obj: SceneObject, t: int, width: int, height: int) -> tuple[np.ndarray, BoundingBox] | None:
    """Boolean footprint of ``obj`` at frame ``t`` clipped to the frame, with
    its tight box; ``None`` when nothing is visible."""
    ox, oy = obj.origin(t)
    ow, oh = obj.size
    x0, y0 = max(ox, 0), max(oy, 0)
    x1, y1 = min(ox + ow, width), min(oy + oh, height)
    if x0 >= x1 or y0 >= y1:
        return None
    mask = np.zeros((height, width), dtype=bool)
    if obj.shape == "rect":
        mask[y0:y1, x0:x1] = True
    else:
        ys, xs = np.mgrid[y0:y1, x0:x1].astype(np.float64)
        cx, cy = ox + ow / 2.0, oy + oh / 2.0
        inside = ((xs + 0.5 - cx) / (ow / 2.0)) ** 2 + ((ys + 0.5 - cy) / (oh / 2.0)) ** 2 <= 1.0
        mask[y0:y1, x0:x1] = inside
    rows = np.flatnonzero(mask.any(axis=1))
    if rows.size == 0:
        return None
    cols = np.flatnonzero(mask.any(axis=0))
    box = BoundingBox(int(cols[0]), int(rows[0]), int(cols[-1] - cols[0] + 1), int(rows[-1] - rows[0] + 1))
    return mask, box


def render_frame(scenario: Scenario, t: int) -> tuple[Frame, list[TruthEntry]]:
    if not 0 <= t < scenario.frame_count:
        raise BadScenario(f"frame index {t} outside [0, {scenario.frame_count})")
    h, w = scenario.height, scenario.width
    water = water_surface(scenario, t)
    rgb = np.repeat(water[:, :, None], 3, axis=2)
    truth = []
    for obj_id, obj in enumerate(scenario.objects, start=1):
        if not obj.alive(t, scenario.frame_count):
            continue
        hit = object_mask(obj, t, w, h)
        if hit is None:
            continue
        mask, box = hit
        color = np.asarray(obj.color, dtype=np.float64)
        rgb[mask] = (1.0 - obj.alpha) * rgb[mask] + obj.alpha * color
        truth.append(TruthEntry(t, obj_id, obj.label, box))
    pixels = np.clip(round_half_up(rgb), 0, 255).astype(np.uint8)
    timestamp = int(round(t * 1_000_000 / scenario.fps))
    return Frame(pixels, timestamp=timestamp, seq=t), truth


def iter_scene(scenario: Scenario):
    for t in range(scenario.frame_count):
        yield render_frame(scenario, t)


def generate_scene(scenario: Scenario, out_dir: str | Path, fmt: str = "y4m") -> dict[str, Path]:
    """Write the frames (``scene.y4m`` or ``frames/frame_NNNNNN.ppm``) and
    ``truth.jsonl`` into ``out_dir``; returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    truth_path = out / "truth.jsonl"
    paths = {"truth": truth_path}
    if fmt == "y4m":
        video = out / "scene.y4m"
        paths["frames"] = video
        fh = open(video, "wb")
        writer = Y4MWriter(fh, scenario.width, scenario.height, 3, Fraction(scenario.fps).limit_denominator(1001))
    elif fmt == "ppm":
        frames_dir = out / "frames"
        frames_dir.mkdir(exist_ok=True)
        paths["frames"] = frames_dir
        fh = writer = None
    else:
        raise ValueError(f"unknown scene format {fmt!r}; expected 'y4m' or 'ppm'")
    try:
        with open(truth_path, "w", encoding="utf-8") as tf:
            for frame, truth in iter_scene(scenario):
                if writer is not None:
                    writer.write(frame)
                else:
                    netpbm.write(paths["frames"] / f"frame_{frame.seq:06d}.ppm", frame)
                for entry in truth:
                    tf.write(entry.to_json() + "\n")
    finally:
        if fh is not None:
            fh.close()
    (out / "scenario.json").write_text(json.dumps(scenario.to_dict(), indent=2) + "\n", encoding="utf-8")
    paths["scenario"] = out / "scenario.json"
    return paths


def load_truth(path: str | Path) -> list[TruthEntry]:
    with open(path, encoding="utf-8") as fh:
        return [TruthEntry.from_json(line) for line in fh if line.strip()]


def load_scenario(path: str | Path) -> Scenario:
    return Scenario.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
