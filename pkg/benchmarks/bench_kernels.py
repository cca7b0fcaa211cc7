#!/usr/bin/env python3
"""Compare the numba and pure-numpy kernel backends on frame-sized inputs.

Both implementations are imported directly (ignoring ROIPACK_BACKEND), so a
single run produces a side-by-side table.  Numba functions are called once
before timing; the JIT compile time is reported separately because it is paid
once per process, not per frame.

Usage::

    python3 benchmarks/bench_kernels.py [--width 1920] [--height 1088] [--repeats 5]
"""

import argparse
import time

import numpy as np

from roipack.kernels import np_impl

try:
    from roipack.kernels import nb_impl
except ImportError:
    nb_impl = None


def best_of(fn, *args, repeats: int) -> float:
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def sparse_blocks(rng: np.random.Generator, nblocks: int) -> np.ndarray:
    """Zigzagged coefficient blocks with ~8 nonzero low-frequency levels."""
    zz = np.zeros((nblocks, 64), dtype=np.int32)
    for blk in zz:
        idx = rng.choice(20, size=8, replace=False)
        blk[idx] = rng.integers(1, 256, size=8) * rng.choice([-1, 1], size=8)
    return zz


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--width", type=int, default=1920)
    ap.add_argument("--height", type=int, default=1088)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()
    if args.width % 8 or args.height % 8:
        ap.error("width and height must be multiples of 8")

    rng = np.random.default_rng(7)
    plane = rng.uniform(-128, 128, (args.height, args.width))
    coefs = np_impl.blockwise_dct(plane)
    tall = rng.uniform(0, 255, (args.height, args.width))
    zz = sparse_blocks(rng, (args.height // 8) * (args.width // 8))
    encoded = np_impl.rle_encode(zz)

    workloads = [
        ("blockwise_dct", (plane,)),
        ("blockwise_idct", (coefs,)),
        ("resize_axis0_box", (tall, args.height // 2)),
        ("resize_axis0_bilinear", (tall, args.height * 2)),
        ("rle_encode", (zz,)),
        ("rle_decode", (encoded, zz.shape[0])),
    ]

    if nb_impl is not None:
        t0 = time.perf_counter()
        for name, wargs in workloads:
            getattr(nb_impl, name)(*wargs)
        print(f"numba JIT compile (one-off): {time.perf_counter() - t0:.2f} s\n")

    print(f"plane {args.width}x{args.height}, best of {args.repeats} runs")
    header = f"{'kernel':<24}{'numpy':>10}{'numba':>10}{'speedup':>9}"
    print(header)
    print("-" * len(header))
    for name, wargs in workloads:
        t_np = best_of(getattr(np_impl, name), *wargs, repeats=args.repeats)
        if nb_impl is None:
            print(f"{name:<24}{t_np * 1e3:>8.2f}ms{'n/a':>10}{'':>9}")
            continue
        t_nb = best_of(getattr(nb_impl, name), *wargs, repeats=args.repeats)
        print(
            f"{name:<24}{t_np * 1e3:>8.2f}ms{t_nb * 1e3:>8.2f}ms{t_np / t_nb:>8.1f}x"
        )

    if nb_impl is None:
        print("\nnumba not importable; showing the numpy fallback only")


if __name__ == "__main__":
    main()
