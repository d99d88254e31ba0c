#!/usr/bin/env python3
"""Compare the numba and pure-numpy kernel paths.

Per-kernel timings call both implementations directly in one process. The
end-to-end pipeline number needs the dispatch flag, which is read at import,
so each flavour runs in its own subprocess.

    python3 benchmarks/bench_kernels.py [--frames 300] [--width 640] [--height 480]
"""

import argparse
import json
import os
import subprocess
import sys

from floatwatch.bench import bench_kernels, format_kernel_table

PIPELINE_SNIPPET = (
    "import json, sys; from floatwatch.bench import bench_pipeline; "
    "print(json.dumps(bench_pipeline(int(sys.argv[1]), int(sys.argv[2]), int(sys.argv[3])).to_dict()))"
)


def pipeline_run(flavour, frames, width, height):
    env = dict(os.environ, FLOATWATCH_ACCEL=flavour)
    out = subprocess.run([sys.executable, "-c", PIPELINE_SNIPPET, str(frames), str(width), str(height)],
                         env=env, check=True, capture_output=True, text=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--frames", type=int, default=300)
    ap.add_argument("--width", type=int, default=640)
    ap.add_argument("--height", type=int, default=480)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    print(f"kernels on {args.width}x{args.height} (best of {args.repeats}):")
    print(format_kernel_table(bench_kernels(args.width, args.height, args.repeats)))

    print(f"pipeline, {args.frames} gray frames of {args.width}x{args.height}:")
    for flavour in ("numba", "numpy"):
        res = pipeline_run(flavour, args.frames, args.width, args.height)
        print(f"  {res['accel']:6s} {res['seconds']:7.3f} s  {res['fps']:8.1f} fps")


if __name__ == "__main__":
    main()
