"""Compiled vs pure-Python neighbour kernels: timings and an equality check.

    python benchmarks/bench_kernels.py [--refs 5000] [--queries 500] [--k 50] [--dim 3]
"""

import argparse
import time

import numpy as np

from brdad.neighbors import available_backends, build_index


def timed(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--refs", type=int, default=5000)
    ap.add_argument("--queries", type=int, default=500)
    ap.add_argument("--k", type=int, default=50)
    ap.add_argument("--dim", type=int, default=3)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    refs = rng.standard_normal((args.refs, args.dim))
    queries = rng.standard_normal((args.queries, args.dim))
    weights = np.full(args.k, 1.0 / args.k)
    index = build_index(refs)
    backends = available_backends()
    print(f"s={args.refs} queries={args.queries} k={args.k} d={args.dim} backends={backends}")

    outputs = {}
    timings = {}
    for b in backends:
        tq, knn = timed(lambda: index.query(queries, args.k, backend=b), args.repeat)
        tw, wsum = timed(lambda: index.weighted_k_distance(queries, weights, backend=b), args.repeat)
        outputs[b] = (knn, wsum)
        timings[b] = (tq, tw)
        print(f"{b:>9s}: knn query {tq * 1e3:9.2f} ms   weighted k-distance {tw * 1e3:9.2f} ms")

    if len(backends) == 2:
        (d1, i1), w1 = outputs[backends[0]]
        (d2, i2), w2 = outputs[backends[1]]
        same = np.array_equal(d1, d2) and np.array_equal(i1, i2) and np.array_equal(w1, w2)
        print(f"bit-identical outputs: {same}")
        print(f"speedup: knn {timings['python'][0] / timings['compiled'][0]:.1f}x, "
              f"weighted {timings['python'][1] / timings['compiled'][1]:.1f}x")
        if not same:
            raise SystemExit(1)


if __name__ == "__main__":
    main()
