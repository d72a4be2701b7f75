"""Time the hot kernels under the numba and numpy backends.

Usage::

    python benchmarks/bench_kernels.py [--repeat 5]

Each kernel is called once per backend as a warm-up (this is where numba
compiles), then timed ``--repeat`` times; the best wall time is reported
together with the max absolute difference between the two backends.
"""
import argparse
import time

import numpy as np

from toralgibbs import _kernels
from toralgibbs.coding import build_partition
from toralgibbs.gibbs import WordTable, word_graph
from toralgibbs.potential import Potential
from toralgibbs.torus import cat_map, periodic_point_array


def _cases():
    L = cat_map()
    phi = Potential((((1, 0), 0.3, 0.0), ((1, 1), 0.1, -0.05), ((2, -1), 0.0, 0.07)), -0.4)
    args = phi.kernel_args
    rng = np.random.default_rng(0)

    pts = rng.random((200_000, 2))
    num, q = periodic_point_array(L, 16)
    y = rng.random((20_000, 2))
    d = rng.normal(size=(20_000, 1)) * np.asarray(L.e_s)[None, :]

    C = build_partition(L)
    table = WordTable(C.sft.words(10), C.alphabet_size)
    indptr, indices = word_graph(table)
    w = np.exp(rng.normal(scale=0.3, size=len(table)))

    return [
        (f"trig_eval ({len(pts)} points)", lambda: _kernels.trig_eval(pts, *args)),
        (f"orbit_sums (period 16, {len(num)} points)",
         lambda: _kernels.orbit_sums(num, q, L.matrix, 16, *args)),
        (f"stable_diff_sums ({len(y)} x 40)",
         lambda: _kernels.stable_diff_sums(y, d, L.matrix, L.mu_s, 40, *args)),
        (f"power_iteration ({len(table)} words)",
         lambda: _kernels.power_iteration(indptr, indices, w)),
    ]


def _first_array(out):
    return np.atleast_1d(out[1] if isinstance(out, tuple) else out)


def _best_time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    backends = ["numpy"] + (["numba"] if _kernels.HAVE_NUMBA else [])
    prev = _kernels.backend()
    print(f"{'kernel':<40} " + " ".join(f"{b:>10}" for b in backends) + f" {'speedup':>8} {'max|diff|':>10}")
    try:
        for name, fn in _cases():
            times, outs = {}, {}
            for b in backends:
                _kernels.set_backend(b)
                outs[b] = _first_array(fn())
                times[b] = _best_time(fn, args.repeat)
            cols = " ".join(f"{times[b] * 1e3:>8.2f}ms" for b in backends)
            if len(backends) == 2:
                speed = f"{times['numpy'] / times['numba']:>7.1f}x"
                diff = f"{np.max(np.abs(outs['numpy'] - outs['numba'])):>10.2e}"
            else:
                speed, diff = f"{'-':>8}", f"{'-':>10}"
            print(f"{name:<40} {cols} {speed} {diff}")
    finally:
        _kernels.set_backend(prev)


if __name__ == "__main__":
    main()
