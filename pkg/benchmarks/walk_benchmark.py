"""Benchmark the compiled walk kernel against the pure-Python fallback.

Run:  python benchmarks/walk_benchmark.py [--quick]

Both backends implement the same algorithm with the same draw discipline,
so colorings are compared bit for bit while timing.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from qmctransfer import _walk_cy, _walk_py  # type: ignore[attr-defined]
from qmctransfer.dyadic import WeightProfile, incidence_pattern


def build_case(n_points: int, d: int, h: int, seed: int):
    rng = np.random.default_rng(seed)
    pts = rng.random((n_points, d))
    shift = rng.random(d)
    pat = incidence_pattern(pts, h, WeightProfile.unit(d), shift)
    norm = np.sqrt(1.0 + np.prod(1.0 + h * np.ones(d)))
    ids = np.hstack([pat.ids, (pat.space + np.arange(n_points))[:, None]])
    colw = np.concatenate([pat.col_weights, [1.0]]) / norm
    return np.ascontiguousarray(ids), colw


def time_backend(mod, ids, colw, repeats: int) -> tuple[float, bytes]:
    n = ids.shape[0]
    order = np.arange(n, dtype=np.int64)
    wacc = np.zeros(int(ids.max()) + 1, dtype=np.float64)
    signs = np.zeros(n // 2, dtype=np.int8)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        mod.walk_pairs_uniform(ids, colw, order, wacc, 1e-3, True, False,
                               np.uint64(42), signs)
        best = min(best, time.perf_counter() - t0)
    return best, signs.tobytes()


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--quick", action="store_true", help="small sizes only")
    args = parser.parse_args()

    cases = [(1024, 2, 5), (4096, 2, 7)]
    if not args.quick:
        cases += [(16384, 2, 9), (65536, 2, 9)]

    print(f"{'points':>8} {'d':>3} {'h':>3} {'nnz/pt':>7} "
          f"{'cython':>10} {'python':>10} {'speedup':>8}")
    for n_points, d, h in cases:
        ids, colw = build_case(n_points, d, h, seed=7)
        t_cy, sig_cy = time_backend(_walk_cy, ids, colw, repeats=3)
        t_py, sig_py = time_backend(_walk_py, ids, colw, repeats=1)
        assert sig_cy == sig_py, "backends disagree on the coloring"
        print(f"{n_points:>8} {d:>3} {h:>3} {ids.shape[1]:>7} "
              f"{t_cy * 1e3:>8.2f}ms {t_py * 1e3:>8.2f}ms {t_py / t_cy:>7.1f}x")


if __name__ == "__main__":
    main()
