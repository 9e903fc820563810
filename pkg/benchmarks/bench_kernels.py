#!/usr/bin/env python3
"""Benchmark the decode-search kernels: numba @njit vs pure numpy.

Builds synthetic stage workloads shaped exactly like the simulator's relay
and destination decode stages and times both implementations on each.  Run
without TAMARC_BACKEND set (or =numba) so the njit path is importable:

    python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import time

import numpy as np

from tamarc import kernels


def make_stage(rng, n, d_max, Ms, with_relay):
    n_streams = len(Ms) + (1 if with_relay else 0)
    total = int(np.prod(Ms))
    strides = [1] * len(Ms)
    for l in range(len(Ms) - 2, -1, -1):
        strides[l] = strides[l + 1] * Ms[l + 1]
    n_msgs = list(Ms) + ([total] if with_relay else [])
    strides = strides + ([1] if with_relay else [])
    rows = sum(n_msgs)
    cx = lambda shape: rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    shift_grid = np.stack(
        np.meshgrid(*[np.arange(d_max + 1)] * n_streams, indexing="ij"), axis=-1
    ).reshape(-1, n_streams)
    return dict(
        y=cx(n),
        stacked=cx((rows, 2 * n)),
        row_start=np.cumsum([0] + n_msgs[:-1]).astype(np.int64),
        n_msgs=np.asarray(n_msgs, dtype=np.int64),
        strides=np.asarray(strides, dtype=np.int64),
        gains=cx(n_streams),
        offs=(d_max - shift_grid).astype(np.int64),
        total=total,
    )


def time_fn(fn, args, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(
            np.ascontiguousarray(args["y"], dtype=np.complex128),
            np.ascontiguousarray(args["stacked"], dtype=np.complex128),
            args["row_start"], args["n_msgs"], args["strides"],
            np.ascontiguousarray(args["gains"], dtype=np.complex128),
            args["offs"], args["total"],
        )
        best = min(best, time.perf_counter() - t0)
    return best


WORKLOADS = [
    ("relay  n=64 d=4 M=17x17", dict(n=64, d_max=4, Ms=(17, 17), with_relay=False)),
    ("dest   n=64 d=4 M=17x17", dict(n=64, d_max=4, Ms=(17, 17), with_relay=True)),
    ("dest   n=64 d=4 M=64x64", dict(n=64, d_max=4, Ms=(64, 64), with_relay=True)),
    ("dest   n=128 d=8 M=16x16", dict(n=128, d_max=8, Ms=(16, 16), with_relay=True)),
]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    rng = np.random.default_rng(0)
    if kernels.residuals_numba is None:
        print("numba path unavailable (TAMARC_BACKEND=numpy or numba missing); "
              "timing the numpy path only")
    print(f"{'workload':28s} {'numpy':>10s} {'numba':>10s} {'speedup':>8s}")
    for name, sizes in WORKLOADS:
        stage = make_stage(rng, **sizes)
        t_np = time_fn(kernels.residuals_numpy, stage, args.repeat)
        if kernels.residuals_numba is not None:
            kernels.residuals_numba(
                np.ascontiguousarray(stage["y"], dtype=np.complex128),
                np.ascontiguousarray(stage["stacked"], dtype=np.complex128),
                stage["row_start"], stage["n_msgs"], stage["strides"],
                np.ascontiguousarray(stage["gains"], dtype=np.complex128),
                stage["offs"], stage["total"],
            )  # compile before timing
            t_nb = time_fn(kernels.residuals_numba, stage, args.repeat)
            print(f"{name:28s} {t_np * 1e3:9.2f}ms {t_nb * 1e3:9.2f}ms {t_np / t_nb:7.1f}x")
        else:
            print(f"{name:28s} {t_np * 1e3:9.2f}ms {'-':>10s} {'-':>8s}")


if __name__ == "__main__":
    main()
