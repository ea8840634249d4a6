#!/usr/bin/env python3
"""Numba vs numpy search kernels.

Usage:
    python benchmarks/bench_kernels.py [--repeat N]

Both kernels are called directly, so the comparison does not depend on
SOFICLAB_DISABLE_JIT. The first jit call (compilation or cache load) is
timed separately and excluded from the per-call numbers.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from soficlab import _kernels
from soficlab.action import keps_constraints
from soficlab.algebra import bicyclic, cyclic, parse_word


def dfs_case(m, words, n, normalized):
    K = [parse_word(w, m) for w in words]
    c = keps_constraints(m, K)
    tabs = _kernels.all_tables(n)
    mult_ptr, mult, sep_ptr, sep, ident = _kernels.activation_layout(len(K), c.mult, c.sep, c.identity)
    fixed = np.full(len(K), -1, dtype=np.int64)
    if normalized and ident >= 0:
        fixed[ident] = _kernels.identity_index(n)

    def run(dfs):
        # same chunking as search_exhaustive, without the thread pool
        firsts = [int(fixed[0])] if fixed[0] >= 0 else range(len(tabs))
        bound, nodes = n + 1, 0
        for i, f in enumerate(firsts):
            best, _, used, _ = dfs(tabs, len(K), f, fixed, mult_ptr, mult, sep_ptr, sep, ident, bound, 10**9)
            nodes += int(used)
            if i == 0:
                bound = int(best) + 1
        return nodes

    return run


def descend_case(m, words, n, seed):
    K = [parse_word(w, m) for w in words]
    c = keps_constraints(m, K)
    frozen = np.zeros(len(K), dtype=np.bool_)
    starts = [np.random.default_rng([seed, i]).integers(0, n, size=(len(K), n), dtype=np.int64) for i in range(8)]

    def run(descend):
        return sum(int(descend(t, c.mult, c.sep, c.identity, frozen, 10_000)[1]) for t in starts)

    return run


def best_of(fn, arg, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(arg)
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    b = bicyclic()
    cases = [
        ("dfs bicyclic n=3", dfs_case(b, ("e", "a", "b", "ba"), 3, False), "dfs"),
        ("dfs bicyclic n=3 normalized", dfs_case(b, ("e", "a", "b", "ba"), 3, True), "dfs"),
        ("dfs cyclic3 n=4", dfs_case(cyclic(3), ("e", "a", "aa"), 4, False), "dfs"),
        ("descend bicyclic n=6", descend_case(b, ("e", "a", "b", "ba"), 6, 0), "descend"),
        ("descend bicyclic n=10", descend_case(b, ("e", "a", "b", "ba"), 10, 1), "descend"),
    ]
    print(f"numba available: {_kernels.JIT_ENABLED}")
    print(f"{'case':32s} {'numba (s)':>10s} {'numpy (s)':>10s} {'speedup':>8s}  agree")
    for name, run, kind in cases:
        jit_fn = _kernels.KERNELS["jit"][kind]
        np_fn = _kernels.KERNELS["numpy"][kind]
        t0 = time.perf_counter()
        run(jit_fn)
        warm = time.perf_counter() - t0
        tj, oj = best_of(run, jit_fn, args.repeat)
        tn, on = best_of(run, np_fn, args.repeat)
        print(f"{name:32s} {tj:10.4f} {tn:10.4f} {tn / max(tj, 1e-9):8.1f}  {oj == on}   (first jit call {warm:.2f}s)")


if __name__ == "__main__":
    main()
