#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallbacks.

Covers the three hot paths: closed-path enumeration (raw and aggregated by
visit counts), first-return enumeration, and Markov chain stepping.  Run
from the repository root:

    python benchmarks/bench_backends.py
"""
import os
import time

import numpy as np

os.environ.setdefault("SHIFTLAB_BACKEND", "numba")

from shiftlab import kernels  # noqa: E402
from shiftlab.graphs import build_graph  # noqa: E402
from shiftlab.induction import _bfs_dist_to  # noqa: E402


def timed(fn, repeat=3):
    best = float("inf")
    result = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def dense_random_graph(v, p, seed):
    rng = np.random.default_rng(seed)
    perm = rng.permutation(v)
    edges = {(int(perm[i]), int(perm[(i + 1) % v])) for i in range(v)}
    for a in range(v):
        for b in range(v):
            if rng.random() < p:
                edges.add((a, b))
    return build_graph([str(i) for i in range(v)], sorted(edges)).graph


def bench(name, fn):
    rows = []
    for backend in ("numba", "numpy"):
        os.environ["SHIFTLAB_BACKEND"] = backend
        fn()  # warm (JIT compile / cache)
        t, out = timed(fn)
        rows.append((backend, t, out))
    (b1, t1, o1), (b2, t2, o2) = rows
    assert o1 == o2, f"{name}: backends disagree"
    speedup = t2 / t1 if t1 > 0 else float("inf")
    print(f"{name:38s} numba {t1 * 1e3:9.2f} ms   numpy {t2 * 1e3:9.2f} ms   x{speedup:6.1f}")


def main():
    g = dense_random_graph(8, 0.35, seed=5)
    n = 11
    indptr, indices = g.csr
    reach = kernels.exact_reach(g.adjacency, n)

    def closed():
        paths, ov = kernels.closed_paths(indptr, indices, reach, n, (), 50_000_000)
        assert not ov
        return paths.shape[0]

    def counted():
        keys, mult, ov = kernels.closed_path_count_keys(indptr, indices, reach, n, (), 50_000_000)
        assert not ov
        return int(mult.sum())

    print(f"graph: {g.n_vertices} vertices, {len(g.edges)} edges; period-{n} points: {closed()}")
    bench(f"closed paths (n={n})", closed)
    bench(f"closed paths aggregated (n={n})", counted)

    big = dense_random_graph(7, 0.5, seed=9)
    indptr_b, indices_b = big.csr
    allowed = np.ones(big.n_vertices, dtype=bool)
    allowed[0] = False
    dist = _bfs_dist_to(big, allowed, 0)

    def returns():
        flat, lengths, ov = kernels.first_return_paths(
            indptr_b, indices_b, allowed, dist, 0, 0, 11, 50_000_000
        )
        assert not ov
        return len(lengths)

    bench("first returns (maxlen=11)", returns)

    P = np.array([[0.5, 0.3, 0.2], [0.1, 0.6, 0.3], [0.4, 0.4, 0.2]])
    cum = np.cumsum(P, axis=1)
    uniforms = np.random.default_rng(0).random(2_000_000)

    def chain():
        out = kernels.step_chain(cum, 0, uniforms)
        return int(out[-1]) + int(out.sum() % 1000)

    bench("chain stepping (2e6 steps)", chain)


if __name__ == "__main__":
    main()
