"""Compare the compiled and numpy kernels on ID-level encoding and Hamming search.

    python benchmarks/bench_kernels.py [--samples N] [--repeat R]
"""

import argparse
import time

import numpy as np

from microhd import _backend
from microhd.encoders import discretize, make_id_level_codebook
from microhd.rng import Rng

SHAPES = [(617, 10000, 1024), (561, 2000, 32), (784, 1000, 4)]


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=64)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    backends = ["numpy"]
    try:
        _backend.get("cython")
        backends.insert(0, "cython")
    except ImportError:
        print("compiled extension not built; numpy only")

    print(f"{'kernel':<22} {'f':>5} {'d':>6} {'l':>5} " + " ".join(f"{b + ' ms/sample':>18}" for b in backends)
          + "  speedup")
    for f, d, l in SHAPES:
        cb = make_id_level_codebook(f, d, l, Rng(0))
        x = np.random.default_rng(0).random((args.samples, f))
        idx = np.ascontiguousarray(discretize(x, 0.0, 1.0, l))
        ref = None
        row = []
        for b in backends:
            k = _backend.get(b)
            out = k.id_level_accumulate(cb.id_words, cb.level_words, idx, d)
            if ref is None:
                ref = out
            assert np.array_equal(out, ref), "backends disagree"
            t = best_of(lambda: k.id_level_accumulate(cb.id_words, cb.level_words, idx, d), args.repeat)
            row.append(1000 * t / args.samples)
        speed = f"{row[-1] / row[0]:.1f}x" if len(row) > 1 else "-"
        print(f"{'id_level_accumulate':<22} {f:>5} {d:>6} {l:>5} " + " ".join(f"{t:>18.3f}" for t in row)
              + f"  {speed}")

    for n, d in [(256, 10000), (1024, 2000)]:
        rng = Rng(1)
        a = rng.words(n * ((d + 63) // 64)).reshape(n, -1)
        b = rng.words(26 * ((d + 63) // 64)).reshape(26, -1)
        row = []
        for name in backends:
            k = _backend.get(name)
            t = best_of(lambda: k.hamming_matrix(a, b), args.repeat)
            row.append(1000 * t / n)
        speed = f"{row[-1] / row[0]:.1f}x" if len(row) > 1 else "-"
        print(f"{'hamming_matrix (x26)':<22} {'':>5} {d:>6} {'':>5} " + " ".join(f"{t:>18.4f}" for t in row)
              + f"  {speed}")


if __name__ == "__main__":
    main()
