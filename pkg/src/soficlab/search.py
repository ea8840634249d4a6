"""Searching for (K, eps)-actions of minimal defect.

The exhaustive search splits the space by the table of the first element of K
into fixed chunks. Chunk 0 runs first and its optimum becomes a shared upper
bound for all other chunks, which then run independently (possibly in
parallel). Every chunk is deterministic and the merge takes the minimum of
(eps, lexicographic witness), so the result does not depend on the number of
workers.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .action import FiniteAction, defects, frac_str, keps_constraints, action_to_json
from .algebra import MonoidSpec, Word, format_word, normalize
from .errors import BudgetExceeded, ValidationError

DEFAULT_BUDGET = 50_000_000


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("SOFICLAB_WORKERS", "1")))
    except ValueError:
        return 1


@dataclass
class SearchResult:
    min_eps: Optional[Fraction]
    witness: Optional[FiniteAction]
    mode: str
    nodes: int = 0
    partial: bool = False
    stats: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {
            "mode": self.mode,
            "partial": self.partial,
            "min_eps": None if self.min_eps is None else frac_str(self.min_eps),
            "witness": None if self.witness is None else action_to_json(self.witness),
        }
        if self.witness is not None:
            out["defects"] = defects(self.witness).to_json()
        out.update(self.stats)
        return out


def _prepare(m: MonoidSpec, K: Sequence[Word]):
    K = tuple(tuple(s) for s in K)
    if not K:
        raise ValidationError("K must be nonempty")
    for s in K:
        if normalize(s, m) != s:
            raise ValidationError(f"{format_word(s, m)} is not a normal form")
    if len(set(K)) != len(K):
        raise ValidationError("K has repeated elements")
    return K, keps_constraints(m, K)


def _run_pool(fn, jobs, workers):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def search_exhaustive(
    m: MonoidSpec,
    K: Sequence[Word],
    n: int,
    budget: int = DEFAULT_BUDGET,
    normalized: bool = False,
    workers: Optional[int] = None,
    kernel: Optional[str] = None,
) -> SearchResult:
    """Minimum of ``eps_overall`` over every assignment of tables to K.

    With ``normalized=True`` the identity (if in K) is pinned to the identity
    map. Ties are broken by the lexicographically least concatenation of
    tables in K order. Raises :class:`BudgetExceeded` when more than
    ``budget`` search nodes are needed; ``exc.partial`` is the best found.
    """
    if n < 1:
        raise ValidationError("n must be positive")
    workers = default_workers() if workers is None else workers
    dfs = _kernels.dfs if kernel is None else _kernels.KERNELS[kernel]["dfs"]
    K, c = _prepare(m, K)
    size = len(K)
    tabs = _kernels.all_tables(n)
    mult_ptr, mult, sep_ptr, sep, ident = _kernels.activation_layout(size, c.mult, c.sep, c.identity)
    fixed = np.full(size, -1, dtype=np.int64)
    if normalized and ident >= 0:
        fixed[ident] = _kernels.identity_index(n)
    firsts = [int(fixed[0])] if fixed[0] >= 0 else list(range(len(tabs)))

    def run(first, bound):
        return dfs(tabs, size, first, fixed, mult_ptr, mult, sep_ptr, sep, ident, bound, budget)

    head = run(firsts[0], n + 1)
    bound = int(head[0]) + 1
    rest = _run_pool(lambda f: run(f, bound), firsts[1:], workers)
    results = [head] + rest

    nodes = sum(int(r[2]) for r in results)
    best_score, best_choice = None, None
    for score, choice, _, _ in results:
        if choice[0] < 0:
            continue
        key = (int(score), tuple(tabs[choice].ravel().tolist()))
        if best_score is None or key < best_score:
            best_score, best_choice = key, choice
    witness = None
    if best_choice is not None:
        witness = FiniteAction(n, m, K, {s: tabs[best_choice[p]].copy() for p, s in enumerate(K)})
    mode = "normalized" if normalized else "exhaustive"
    result = SearchResult(
        None if best_score is None else Fraction(best_score[0], n), witness, mode, nodes=nodes,
        stats={"n": n, "K": [format_word(s, m) for s in K], "monoid": m.name},
    )
    if nodes > budget or any(int(r[3]) for r in results):
        result.partial = True
        raise BudgetExceeded(f"exhaustive search needed more than {budget} nodes", partial=result)
    return result


def search_random(
    m: MonoidSpec,
    K: Sequence[Word],
    n: int,
    iterations: int,
    seed: int,
    normalized: bool = False,
    workers: Optional[int] = None,
    kernel: Optional[str] = None,
    max_steps: int = 10_000,
) -> SearchResult:
    """Seeded random restarts, each followed by greedy single-entry descent.

    Restart ``i`` draws its tables from ``default_rng([seed, i])`` and is then
    descended on (max defect count, total defect count). The undescended
    restart 0 is also a candidate, so ``iterations=0`` reports that initial
    draw. The result is independent of ``workers``.
    """
    if n < 1:
        raise ValidationError("n must be positive")
    if iterations < 0:
        raise ValidationError("iterations must be nonnegative")
    workers = default_workers() if workers is None else workers
    kern = _kernels.KERNELS["jit" if _kernels.JIT_ENABLED else "numpy"] if kernel is None else _kernels.KERNELS[kernel]
    K, c = _prepare(m, K)
    size = len(K)
    ident = c.identity
    frozen = np.zeros(size, dtype=np.bool_)
    if normalized and ident >= 0:
        frozen[ident] = True
    mult, sep = np.ascontiguousarray(c.mult), np.ascontiguousarray(c.sep)

    def draw(i):
        t = np.random.default_rng([seed, i]).integers(0, n, size=(size, n), dtype=np.int64)
        if frozen.any():
            t[ident] = np.arange(n)
        return t

    def key(tables, worst):
        return (int(worst), tuple(tables.ravel().tolist()))

    def run(chunk):
        best = None
        for i in chunk:
            cur, w, _ = kern["descend"](draw(i), mult, sep, ident, frozen, max_steps)
            k = key(cur, w)
            if best is None or k < best:
                best = k
        return best

    start = draw(0)
    best = key(start, kern["score"](start, mult, sep, ident)[0])
    chunks = [list(range(i, iterations, max(workers, 1))) for i in range(max(workers, 1))]
    for found in _run_pool(run, [ch for ch in chunks if ch], workers):
        if found is not None and found < best:
            best = found
    flat = np.array(best[1], dtype=np.int64).reshape(size, n)
    witness = FiniteAction(n, m, K, {s: flat[p] for p, s in enumerate(K)})
    return SearchResult(
        Fraction(best[0], n), witness, "random",
        stats={"n": n, "K": [format_word(s, m) for s in K], "monoid": m.name, "iterations": iterations, "seed": seed},
    )
