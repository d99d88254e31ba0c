"""Throughput measurements: the whole classical pipeline, and each hot
kernel under both implementations."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import kernels
from ._accel import BACKEND, HAVE_NUMBA
from .imaging import to_grayscale
from .ingest.sources import MemorySource
from .synth import Scenario, SceneObject, WaterBackground, render_frame


def bench_scenario(width: int = 640, height: int = 480, frames: int = 300, seed: int = 11) -> Scenario:
    """A busier scene than the standard one: six objects crossing the frame."""
    objects = []
    for k in range(6):
        size = (24 + 6 * k, 14 + 3 * k)
        start = (float(20 + 90 * k % max(1, width - 60)), float(15 + 70 * k % max(1, height - 40)))
        vel = (1.0 if k % 2 == 0 else -1.0, 1.0)
        color = [(230, 228, 222), (30, 200, 50), (60, 35, 15)][k % 3]
        label = ["vessel", "vegetation", "debris"][k % 3]
        objects.append(SceneObject("ellipse" if k % 3 == 1 else "rect", size, color, start, vel,
                                   0, frames, label))
    return Scenario(width, height, frames, seed, WaterBackground(), tuple(objects))


@dataclass(frozen=True)
class PipelineBench:
    frames: int
    width: int
    height: int
    seconds: float
    events: int
    accel: str

    @property
    def fps(self) -> float:
        return self.frames / self.seconds if self.seconds > 0 else float("inf")

    def to_dict(self) -> dict:
        return {"frames": self.frames, "width": self.width, "height": self.height,
                "seconds": round(self.seconds, 4), "fps": round(self.fps, 2),
                "events": self.events, "accel": self.accel}


def render_gray(scenario: Scenario) -> list:
    return [to_grayscale(render_frame(scenario, t)[0]) for t in range(scenario.frame_count)]


def bench_pipeline(frames: int = 300, width: int = 640, height: int = 480, seed: int = 11,
                   config=None, warmup: int = 3) -> PipelineBench:
    """Time the threaded pipeline over pre-rendered grayscale frames.

    Rendering happens before the clock starts; the timed span covers ingest,
    detection, tracking and publishing of every frame.
    """
    from .service.config import AppConfig
    from .service.pipeline import Pipeline

    config = config or AppConfig()
    scene = render_gray(bench_scenario(width, height, frames, seed))
    if warmup:
        # compile kernels outside the timed region
        Pipeline(config, MemorySource(scene[:warmup])).run()
    events = []
    pipe = Pipeline(config, MemorySource(scene), event_sink=events.append)
    t0 = time.perf_counter()
    status = pipe.run()
    seconds = time.perf_counter() - t0
    if status != 0:
        raise RuntimeError(f"benchmark pipeline failed: {pipe.error}")
    return PipelineBench(pipe.stats.processed, width, height, seconds, len(events), BACKEND)


def _time(fn, *args, repeats: int = 5) -> float:
    fn(*args)  # warm up / compile
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_kernels(width: int = 640, height: int = 480, repeats: int = 5, seed: int = 3) -> list[dict]:
    """Best-of-``repeats`` seconds per kernel call for each available implementation."""
    rng = np.random.default_rng(seed)
    a = rng.integers(0, 256, (height, width), dtype=np.uint8)
    b = rng.integers(0, 256, (height, width), dtype=np.uint8)
    ref = a.astype(np.float64) + rng.normal(0, 4, a.shape)
    mask = (rng.random((height, width)) < 0.2).astype(np.uint8) * 255
    q = (a.astype(np.int64) * 8) // 256
    order = kernels.search_order(4)
    keys = kernels.row_keys(seed, 0, height)
    cases = {
        "absdiff": (a, b),
        "threshold": (a, np.int64(25)),
        "absdiff_float_threshold": (a, ref, np.float64(25.0)),
        "label": (mask,),
        "glcm": (q, 8, 1, 0),
        "block_motion": (a[:240, :320].copy(), b[:240, :320].copy(), 8, order),
        "noise": (keys, width, kernels._SUM4_MEAN, kernels._SUM4_STD),
    }
    flavours = ["numba", "numpy"] if HAVE_NUMBA else ["numpy"]
    rows = []
    for name, args in cases.items():
        row = {"kernel": name}
        for flav in flavours:
            row[flav] = _time(kernels.IMPLEMENTATIONS[flav][name], *args, repeats=repeats)
        if len(flavours) == 2 and row["numba"] > 0:
            row["speedup"] = row["numpy"] / row["numba"]
        rows.append(row)
    return rows


def format_kernel_table(rows: list[dict]) -> str:
    cols = [c for c in ("kernel", "numba", "numpy", "speedup") if c in rows[0]]
    cells = [cols] + [[r["kernel"]] + [f"{r[c] * 1e3:.3f} ms" if c in ("numba", "numpy") else f"{r[c]:.1f}x"
                                       for c in cols[1:]] for r in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(cols))]
    lines = ["  ".join([row[0].ljust(widths[0])] + [v.rjust(w) for v, w in zip(row[1:], widths[1:])])
             for row in cells]
    return "\n".join(lines) + "\n"
