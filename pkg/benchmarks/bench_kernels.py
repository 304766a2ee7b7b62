"""Compare the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeats 3]

Prints the median time of each kernel under both backends and checks that
their outputs agree.
"""
import argparse
import statistics
import time

import numpy as np

from netlowrank import _kernels_py as py
from netlowrank.generators import gen_barabasi_albert, gen_erdos_renyi

try:
    from netlowrank import _kernels as cy
except ImportError:
    cy = None


def median_time(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times), out


def cases():
    rng = np.random.default_rng(0)
    g = gen_barabasi_albert(3000, 8, seed=1)
    h = gen_erdos_renyi(2000, 0.01, seed=2)
    signs = np.where(rng.random((1000, 1000)) < 0.05, 1.0, -1.0)
    scores = rng.normal(size=(1000, 1000))
    Xa = np.hstack([rng.normal(size=(200, 9)), np.ones((200, 1))])
    y = np.where(rng.random(200) < 0.5, 1.0, -1.0)
    order = rng.integers(0, 200, size=200 * 200).astype(np.int64)
    return [
        ("node_triangles BA(3000, 8)", lambda k: k.node_triangles(g.indptr, g.indices)),
        ("core_numbers ER(2000, 0.01)", lambda k: k.core_numbers(h.indptr, h.indices)),
        ("logistic_loss_residual 1000x1000",
         lambda k: (k.logistic_loss_residual(signs, scores, r := np.empty_like(scores)), r)),
        ("pegasos_epochs 200 rows x 200 epochs", lambda k: k.pegasos_epochs(Xa, y, 0.005, order)),
    ]


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, z) for x, z in zip(a, b))
    return np.allclose(a, b, rtol=1e-9, atol=1e-12)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()
    if cy is None:
        raise SystemExit("compiled extension not built; run `pip install -e .` first")
    print(f"{'kernel':40s} {'cython s':>10s} {'python s':>10s} {'speedup':>8s}  agree")
    for name, fn in cases():
        tc, oc = median_time(lambda: fn(cy), args.repeats)
        tp, op = median_time(lambda: fn(py), args.repeats)
        print(f"{name:40s} {tc:10.4f} {tp:10.4f} {tp / tc:7.1f}x  {same(oc, op)}")


if __name__ == "__main__":
    main()
