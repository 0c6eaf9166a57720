#!/usr/bin/env python3
"""Benchmark the numba kernels against the numpy/Python fallbacks.

Usage:
    python benchmarks/bench_kernels.py [--samples N] [--dims 32,96,192]

Both backends are loaded side by side (the env flag only controls which one
the package dispatches to), so a single run prints the comparison table.
"""

from __future__ import annotations

import argparse
import math
import time

import numpy as np

from chaoscalc import _kernels


def _time(fn, *args, repeat=5):
    best = math.inf
    for _ in range(repeat):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def bench_accumulate(n_samples: int):
    rng = np.random.default_rng(0)
    n_slots, n_terms = 24, 256
    values = rng.standard_normal((n_slots, n_samples))
    coeffs = rng.standard_normal(n_terms)
    ptr = [0]
    slots = []
    for _ in range(n_terms):
        k = int(rng.integers(2, 5))
        slots.extend(int(s) for s in rng.integers(0, n_slots, size=k))
        ptr.append(len(slots))
    ptr = np.array(ptr, dtype=np.int64)
    slots = np.array(slots, dtype=np.int64)

    rows = []
    t_np = _time(_kernels.accumulate_terms_numpy, values, coeffs, ptr, slots)
    rows.append(("accumulate", f"{n_terms} terms x {n_samples} samples", "numpy", t_np))
    if _kernels.accumulate_terms_jit is not None:
        _kernels.accumulate_terms_jit(values[:, :64], coeffs, ptr, slots)  # compile
        t_nb = _time(_kernels.accumulate_terms_jit, values, coeffs, ptr, slots)
        rows.append(("accumulate", f"{n_terms} terms x {n_samples} samples", "numba", t_nb))
    return rows


def bench_jacobi(dims):
    rng = np.random.default_rng(1)
    rows = []
    for dim in dims:
        m = rng.standard_normal((dim, dim))
        sym = np.ascontiguousarray((m + m.T) / 2)
        t_np = _time(_kernels.jacobi_eigh_numpy, sym, 1e-12, 100, repeat=2)
        rows.append(("jacobi", f"dim {dim}", "numpy", t_np))
        if _kernels.jacobi_eigh_jit is not None:
            _kernels.jacobi_eigh_jit(sym[:4, :4].copy(), 1e-12, 100)  # compile
            t_nb = _time(_kernels.jacobi_eigh_jit, sym, 1e-12, 100, repeat=2)
            rows.append(("jacobi", f"dim {dim}", "numba", t_nb))
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--samples", type=int, default=200_000)
    parser.add_argument("--dims", default="32,96")
    args = parser.parse_args()
    dims = [int(d) for d in args.dims.split(",") if d]

    rows = bench_accumulate(args.samples) + bench_jacobi(dims)
    print(f"{'kernel':<12}{'case':<32}{'backend':<9}{'best (s)':>10}{'speedup':>9}")
    baseline: dict[tuple[str, str], float] = {}
    for kernel, case, backend, t in rows:
        if backend == "numpy":
            baseline[(kernel, case)] = t
        speed = baseline.get((kernel, case), t) / t
        print(f"{kernel:<12}{case:<32}{backend:<9}{t:>10.4f}{speed:>8.1f}x")
    if _kernels.accumulate_terms_jit is None:
        print("note: numba backend unavailable (CHAOSCALC_DISABLE_NUMBA set or import failure)")


if __name__ == "__main__":
    main()
