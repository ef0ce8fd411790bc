#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-numpy fallback.

Covers the two hot paths: PLV/PLI channel-pair grids and grouped conv2d
forward/backward. Run from the repo root:

    python3 benchmarks/bench_kernels.py [--channels 64] [--samples 1500]
"""

import argparse
import time

import numpy as np

from neuroconn.backend import available_backends, get_backend


def _time(fn, *args, repeats=3, **kwargs):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args, **kwargs)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--channels", type=int, default=64)
    parser.add_argument("--samples", type=int, default=1500)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    phases = rng.uniform(-np.pi, np.pi, size=(args.channels, args.samples))

    # a typical decoder shape: batch 32, 5-band 16x16 connectivity input,
    # 16 temporal filters of width 8
    x = rng.standard_normal((32, 5, 16, 16))
    w = rng.standard_normal((16, 5, 1, 8))
    y = rng.standard_normal((32, 16, 16, 9))

    cases = [
        ("plv_matrix", lambda k: k.plv_matrix(phases)),
        ("pli_matrix", lambda k: k.pli_matrix(phases)),
        ("conv2d_forward", lambda k: k.conv2d_forward(x, w, 1, 1, 0, 0, 1)),
        ("conv2d_backward_input", lambda k: k.conv2d_backward_input(y, w, 16, 16, 1, 1, 0, 0, 1)),
        ("conv2d_backward_kernel", lambda k: k.conv2d_backward_kernel(y, x, 1, 8, 1, 1, 0, 0, 1)),
    ]

    backends = available_backends()
    print(f"backends: {', '.join(backends)}")
    print(f"pair grid: {args.channels} channels x {args.samples} samples; "
          f"conv: x{x.shape} w{w.shape}")
    header = f"{'kernel':24s}" + "".join(f"{name:>12s}" for name in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10s}"
    print(header)
    for name, call in cases:
        times = [_time(call, get_backend(b), repeats=args.repeats) for b in backends]
        row = f"{name:24s}" + "".join(f"{t * 1e3:10.2f}ms" for t in times)
        if len(times) == 2:
            row += f"{times[1] / times[0]:9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
