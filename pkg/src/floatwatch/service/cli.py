"""``floatwatch`` command line: detect, serve, synth, eval, bench."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import signal
import sys
import threading
from pathlib import Path

from ..errors import ConfigError, FloatwatchError
from .config import AppConfig, load_config

log = logging.getLogger("floatwatch")

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_STARTUP = 2


def _fail(exc: BaseException) -> int:
    print(f"floatwatch: error: {type(exc).__name__}: {exc}", file=sys.stderr)
    return EXIT_STARTUP


def build_config(args) -> AppConfig:
    config = load_config(args.config) if args.config else AppConfig()
    if args.source:
        config = config.replace(source=dataclasses.replace(config.source, uri=args.source))
        config.source.spec()
    if args.threshold is not None:
        try:
            config = config.replace(motion=dataclasses.replace(config.motion, threshold=args.threshold))
        except ValueError as exc:
            raise ConfigError(f"--threshold: {exc}") from None
    if args.backend:
        if args.backend == "classical":
            det = dataclasses.replace(config.detector, backend="classical")
        elif args.backend.startswith("external:"):
            det = dataclasses.replace(config.detector, backend="external", address=args.backend[len("external:"):])
            det.external_address()
        else:
            raise ConfigError(f"--backend must be 'classical' or 'external:HOST:PORT', got {args.backend!r}")
        config = config.replace(detector=det)
    return config


def _open_out(path):
    if path in (None, "-"):
        return sys.stdout, False
    return open(path, "w", encoding="utf-8"), True


def cmd_detect(args) -> int:
    from .pipeline import Pipeline

    try:
        config = build_config(args)
        pipe = Pipeline(config)
    except FloatwatchError as exc:
        return _fail(exc)
    out, owned = _open_out(args.out)
    try:
        pipe.event_sink = lambda ev: out.write(ev.to_json() + "\n")
        status = pipe.run()
    finally:
        if owned:
            out.close()
        else:
            out.flush()
    snap = pipe.stats.snapshot()
    print(f"processed {snap['processed']} frames, dropped {snap['dropped']}, "
          f"{snap['events']} events", file=sys.stderr)
    if status != 0:
        print(f"floatwatch: error: {type(pipe.error).__name__}: {pipe.error}", file=sys.stderr)
    return status


def cmd_serve(args) -> int:
    from .http import ApiServer
    from .pipeline import Pipeline

    try:
        config = build_config(args)
        if args.bind is not None or args.port is not None:
            http = dataclasses.replace(config.http, **{k: v for k, v in
                                                       (("bind", args.bind), ("port", args.port)) if v is not None})
            config = config.replace(http=http)
        pipe = Pipeline(config)
        api = ApiServer(pipe, config.http.bind, config.http.port)
    except FloatwatchError as exc:
        if "pipe" in locals():
            pipe.source.close()
        return _fail(exc)

    out, owned = _open_out(args.out) if args.out else (None, False)
    if out is not None:
        pipe.event_sink = lambda ev: (out.write(ev.to_json() + "\n"), out.flush())
    stop = threading.Event()

    def on_signal(signum, frame):
        stop.set()

    signal.signal(signal.SIGINT, on_signal)
    signal.signal(signal.SIGTERM, on_signal)
    host, port = api.address
    print(f"floatwatch: serving on http://{host}:{port}", file=sys.stderr, flush=True)
    api.start()
    pipe.start()
    while not stop.is_set():
        if pipe.wait(timeout=0.2) and args.exit_on_eos:
            break
    api.shutdown(grace=args.grace)
    if owned:
        out.close()
    return EXIT_RUNTIME if pipe.error is not None else EXIT_OK


def cmd_synth(args) -> int:
    from ..synth import generate_scene, load_scenario, standard_scenario

    try:
        scenario = load_scenario(args.scenario) if args.scenario else standard_scenario(7 if args.seed is None else args.seed)
        if args.seed is not None and args.scenario:
            scenario = dataclasses.replace(scenario, seed=args.seed)
        if args.frames is not None:
            scenario = dataclasses.replace(scenario, frame_count=args.frames)
        paths = generate_scene(scenario, args.out, fmt=args.format)
    except (FloatwatchError, OSError, ValueError) as exc:
        return _fail(exc)
    for name, path in paths.items():
        print(f"{name}: {path}")
    return EXIT_OK


def cmd_eval(args) -> int:
    from ..detect.types import read_event_log
    from ..evaluation import compare_backends, evaluate_events
    from ..synth import load_truth

    names = args.name or []
    if names and len(names) != len(args.events):
        return _fail(ValueError("give one --name per --events log"))
    try:
        truth = load_truth(args.truth)
        reports = []
        for k, path in enumerate(args.events):
            events = read_event_log(path)
            name = names[k] if names else Path(path).stem
            frames = range(args.frames) if args.frames else None
            reports.append(evaluate_events(events, truth, args.iou, backend=name, frames=frames))
    except (FloatwatchError, OSError, ValueError, KeyError) as exc:
        return _fail(exc)
    table = compare_backends(reports)
    print(table.to_text(), end="")
    if args.out:
        doc = {"report_version": 1, "reports": [r.to_dict() for r in reports], "table": table.to_dict()}
        Path(args.out).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_bench(args) -> int:
    from ..bench import bench_kernels, bench_pipeline, format_kernel_table

    config = None
    if args.config or args.threshold is not None:
        try:
            config = build_config(args)
        except FloatwatchError as exc:
            return _fail(exc)
    result = bench_pipeline(args.frames, args.width, args.height, seed=args.seed, config=config)
    doc = {"pipeline": result.to_dict()}
    print(f"pipeline [{result.accel}]: {result.frames} frames of {result.width}x{result.height} gray "
          f"in {result.seconds:.3f} s = {result.fps:.1f} fps")
    if args.kernels:
        rows = bench_kernels(args.width, args.height)
        doc["kernels"] = rows
        print(format_kernel_table(rows), end="")
    if args.out:
        Path(args.out).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    return EXIT_OK


def _common(p, source=True):
    p.add_argument("--config", metavar="PATH", help="TOML configuration file")
    if source:
        p.add_argument("--source", metavar="URI",
                       help="dir:/path, y4m:/path, tcp-listen:PORT or tcp-connect:HOST:PORT")
        p.add_argument("--backend", metavar="SPEC", help="classical or external:HOST:PORT")
    p.add_argument("--threshold", type=int, metavar="N", help="frame-difference threshold (1..254)")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="floatwatch", description=__doc__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="run the pipeline on a source and write the event log")
    _common(p)
    p.add_argument("--out", metavar="PATH", help="event log (JSON lines); default stdout")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("serve", help="run the pipeline behind the HTTP API")
    _common(p)
    p.add_argument("--bind", metavar="HOST")
    p.add_argument("--port", type=int)
    p.add_argument("--out", metavar="PATH", help="also append events to this file")
    p.add_argument("--exit-on-eos", action="store_true", help="stop serving once the source ends")
    p.add_argument("--grace", type=float, default=0.5, help="seconds to report draining before exit")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("synth", help="write a synthetic scene and its ground truth")
    p.add_argument("--out", metavar="DIR", required=True)
    p.add_argument("--scenario", metavar="JSON", help="scenario file; default is the standard scene")
    p.add_argument("--seed", type=int)
    p.add_argument("--frames", type=int)
    p.add_argument("--format", choices=("y4m", "ppm"), default="y4m")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("eval", help="score event logs against ground truth")
    p.add_argument("--events", metavar="PATH", action="append", required=True)
    p.add_argument("--name", action="append", help="report name per --events (default: file stem)")
    p.add_argument("--truth", metavar="PATH", required=True)
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("--frames", type=int, help="number of frames in the run (counts empty frames)")
    p.add_argument("--out", metavar="PATH", help="write the JSON report here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="measure pipeline throughput on a synthetic stream")
    _common(p, source=False)
    p.add_argument("--frames", type=int, default=300)
    p.add_argument("--width", type=int, default=640)
    p.add_argument("--height", type=int, default=480)
    p.add_argument("--seed", type=int, default=11)
    p.add_argument("--kernels", action="store_true", help="also time each kernel, numba vs numpy")
    p.add_argument("--out", metavar="PATH", help="write results as JSON")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    if not hasattr(args, "source"):
        args.source = args.backend = None
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
