"""Benchmark: compiled design-matrix kernel vs the pure-NumPy/SciPy fallback.

Times the Bessel-column fill that dominates harmonic analysis, at a few
(points, degree) sizes, and a small end-to-end least-squares fit with each
backend. Run from the repo root:

    python3 benchmarks/bench_kernels.py [--quick]

The compiled backend is imported directly; the fallback is exercised through
the same contract (`fill_design`). Numbers print as a small table with the
speedup ratio; parity (max abs difference) is checked on every case so the
benchmark doubles as an agreement smoke test.
"""

import argparse
import time

import numpy as np

from diskharm._kernels import BACKEND
from diskharm._kernels import _ref as ref_backend
from diskharm.analysis import fit_harmonics, packed_columns
from diskharm.basis import get_table

try:
    from diskharm._kernels import _fast as fast_backend
except ImportError:
    fast_backend = None


def _case(n_points, k_max, rng):
    rho = np.sqrt(rng.uniform(0.0, 1.0, n_points))
    phi = rng.uniform(-np.pi, np.pi, n_points)
    cols = packed_columns(get_table(k_max))
    return rho, phi, cols


def _time_fill(backend, rho, phi, cols, repeats):
    out = np.empty((cols.morder.size, rho.size))
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        backend.fill_design(rho, phi, cols.morder, cols.lvals, cols.amp, cols.kind, out)
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_fill(quick):
    rng = np.random.default_rng(7)
    sizes = [(20_000, 20), (50_000, 35)] if quick else [
        (20_000, 20),
        (50_000, 35),
        (120_000, 50),
        (205_000, 70),
    ]
    rows = []
    for n_points, k_max in sizes:
        rho, phi, cols = _case(n_points, k_max, rng)
        repeats = 3 if n_points <= 50_000 else 1
        t_ref, out_ref = _time_fill(ref_backend, rho, phi, cols, repeats)
        if fast_backend is not None:
            t_fast, out_fast = _time_fill(fast_backend, rho, phi, cols, repeats)
            diff = float(np.max(np.abs(out_fast - out_ref)))
        else:
            t_fast, diff = float("nan"), float("nan")
        rows.append((n_points, k_max, cols.morder.size, t_ref, t_fast, diff))
    print(f"backend selected at import: {BACKEND}")
    print(f"{'points':>8} {'K':>4} {'cols':>6} {'fallback_s':>11} "
          f"{'compiled_s':>11} {'speedup':>8} {'max_abs_diff':>13}")
    for n_points, k_max, ncols, t_ref, t_fast, diff in rows:
        ratio = t_ref / t_fast if t_fast == t_fast and t_fast > 0 else float("nan")
        print(f"{n_points:>8} {k_max:>4} {ncols:>6} {t_ref:>11.3f} "
              f"{t_fast:>11.3f} {ratio:>8.1f} {diff:>13.2e}")


def bench_fit(quick):
    rng = np.random.default_rng(11)
    n_points, k_max = (40_000, 25) if quick else (120_000, 40)
    rho = np.sqrt(rng.uniform(0.0, 1.0, n_points))
    phi = rng.uniform(-np.pi, np.pi, n_points)
    values = rng.standard_normal(n_points)
    table = get_table(k_max)
    t0 = time.perf_counter()
    fit_harmonics(rho, phi, values, table)
    dt = time.perf_counter() - t0
    print(f"\nend-to-end fit ({n_points} points, K={k_max}, backend={BACKEND}): "
          f"{dt:.2f} s")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--quick", action="store_true", help="small sizes only")
    args = ap.parse_args()
    if fast_backend is None:
        print("compiled backend unavailable; timing fallback only")
    bench_fill(args.quick)
    bench_fit(args.quick)


if __name__ == "__main__":
    main()
