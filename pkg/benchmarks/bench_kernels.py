"""Time the hot kernels under the numba and numpy backends.

    python3 benchmarks/bench_kernels.py --sizes 100,300,600 --repeats 5

Each kernel is called once per backend before timing so numba compilation is
not counted.  Prints one line per (kernel, n) with both timings and the
speedup, plus the largest difference between the two backends' outputs.
"""

import argparse
import time

import numpy as np

from sigl import _accel
from sigl.graphons import Synthetic, sample_graph
from sigl.kernels import pair_inr_loss, pool_blocks
from sigl.nn import SirenInr


def _time(fn, repeats):
    fn()  # warm up (and compile, for numba)
    best = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best.append(time.perf_counter() - t0)
    return float(np.median(best))


def _both(fn, repeats):
    out, times = {}, {}
    for name in ("numpy", "numba"):
        _accel.set_backend(name)
        times[name] = _time(fn, repeats)
        out[name] = fn()
    return times, out


def _maxdiff(a, b):
    if isinstance(a, tuple):
        return max(float(np.max(np.abs(np.asarray(x) - np.asarray(y)))) for x, y in zip(a, b))
    return float(np.max(np.abs(a - b)))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="100,300,600")
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--window", type=int, default=6)
    args = ap.parse_args(argv)
    if not _accel.NUMBA_AVAILABLE:
        raise SystemExit("numba is not installed; nothing to compare")
    previous = _accel.backend_name()

    inr = SirenInr(2, seed=0)
    W0, W1, W2 = inr.weights
    b0, b1, b2 = inr.biases
    print(f"{'kernel':<14}{'n':>6}{'numpy s':>12}{'numba s':>12}{'speedup':>10}{'max diff':>12}")
    for n in (int(s) for s in args.sizes.split(",")):
        g = sample_graph(Synthetic(4), n, n)
        eta = np.random.default_rng(n).random(n)
        cases = {
            "pair_inr_loss": lambda: pair_inr_loss(eta, g.adjacency, W0, b0, W1, b1, W2[0], b2[0], inr.omega0),
            "pool_blocks": lambda: pool_blocks(g.adjacency, args.window),
        }
        for name, fn in cases.items():
            times, out = _both(fn, args.repeats)
            print(f"{name:<14}{n:>6}{times['numpy']:>12.4f}{times['numba']:>12.4f}"
                  f"{times['numpy'] / times['numba']:>9.1f}x{_maxdiff(out['numpy'], out['numba']):>12.2e}")
    _accel.set_backend(previous)


if __name__ == "__main__":
    main()
