"""Time the compiled scan kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import time

import numpy as np

from pasmamba import _backend
from pasmamba.ssm import init_ssm_params, selective_inputs


def _best(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cases(rng):
    # a feature map of 8 channels on 32x32 and 64x64 grids, state size 8
    for batch, d, L, n in ((1, 8, 1024, 8), (2, 8, 4096, 8)):
        params = init_ssm_params(d, n, rng)
        seq = rng.standard_normal((batch, d, L))
        _, a_bar, b_bar, ct = selective_inputs(seq, params)
        yield f"selective_scan B={batch} d={d} L={L} n={n}", "selective", (
            seq, np.ascontiguousarray(a_bar), np.ascontiguousarray(b_bar), np.ascontiguousarray(ct)
        )
        lanes = batch * d
        args = tuple(np.ascontiguousarray(rng.uniform(0, 1, (lanes, L, n))) for _ in range(3))
        yield f"scan_lanes K={lanes} L={L} n={n}", "lanes", args


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _backend.BACKEND != "cython":
        print("compiled kernels unavailable; only the fallback can be timed")
    backends = ["python"] + (["cython"] if _backend.BACKEND == "cython" else [])
    rng = np.random.default_rng(0)
    print(f"{'case':44s} " + " ".join(f"{b:>10s}" for b in backends) + "   speedup   max|diff|")
    for name, which, data in cases(rng):
        times, outs = [], []
        for b in backends:
            lanes, selective = _backend.kernels(b)
            fn = selective if which == "selective" else lanes
            outs.append(fn(*data))
            times.append(_best(lambda: fn(*data), args.repeat))
        row = f"{name:44s} " + " ".join(f"{t * 1e3:8.2f}ms" for t in times)
        if len(times) == 2:
            row += f"   {times[0] / times[1]:6.1f}x   {np.max(np.abs(outs[0] - outs[1])):.1e}"
        print(row)


if __name__ == "__main__":
    main()
