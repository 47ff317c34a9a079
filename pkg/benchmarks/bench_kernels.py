"""Compare the compiled kernels against the numpy fallback.

Run with ``python3 benchmarks/bench_kernels.py``. Prints timings and the
largest disagreement between the two backends for each kernel.
"""
from __future__ import annotations

import argparse
import sys
import timeit

import numpy as np

from richris import _kernels_py

try:
    from richris import _kernels as _compiled
except ImportError:
    _compiled = None


def _flip_scan_case(rng, n_ports=110, n_pixels=25, per_pixel=4):
    a = rng.standard_normal((n_ports, n_ports)) + 1j * rng.standard_normal((n_ports, n_ports))
    m = np.ascontiguousarray(a + a.T)
    groups = np.arange(10, 10 + n_pixels * per_pixel, dtype=np.int64).reshape(n_pixels, per_pixel)
    deltas = rng.standard_normal((n_pixels, per_pixel)) + 1j * rng.standard_normal((n_pixels, per_pixel))
    rx = np.arange(1, 10, dtype=np.int64)
    tx = 0
    return m, groups, deltas, rx, tx


def bench(repeat=5, n=20000, seed=0):
    rng = np.random.default_rng(seed)
    x = np.concatenate([rng.uniform(1e-3, 12.0, n // 2), rng.uniform(12.0, 400.0, n // 2)])
    scan_args = _flip_scan_case(rng)
    cases = {
        "hankel0_2": (lambda k: k.hankel0_2(x), x.size),
        "flip_scan": (lambda k: k.flip_scan(*scan_args), len(scan_args[1])),
    }
    rows = []
    for name, (call, size) in cases.items():
        t_py = min(timeit.repeat(lambda: call(_kernels_py), number=1, repeat=repeat))
        if _compiled is None:
            rows.append((name, size, t_py, float("nan"), float("nan")))
            continue
        t_c = min(timeit.repeat(lambda: call(_compiled), number=1, repeat=repeat))
        ref, got = call(_kernels_py), call(_compiled)
        err = float(np.max(np.abs(got - ref)) / max(np.max(np.abs(ref)), 1e-300))
        rows.append((name, size, t_py, t_c, err))
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--points", type=int, default=20000)
    args = ap.parse_args(argv)
    if _compiled is None:
        print("compiled extension not built; timing the fallback only")
    print(f"{'kernel':10s} {'size':>7s} {'python s':>10s} {'compiled s':>11s} {'speedup':>8s} {'max rel diff':>13s}")
    for name, size, t_py, t_c, err in bench(args.repeat, args.points):
        print(f"{name:10s} {size:7d} {t_py:10.5f} {t_c:11.5f} {t_py / t_c:8.1f} {err:13.2e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
