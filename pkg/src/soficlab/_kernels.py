"""Search kernels.

Every kernel exists twice: a numba version (``*_jit``) and a numpy version
(``*_np``) that vectorizes the innermost level instead. Both return identical
results; :mod:`soficlab._jit` decides which one the public names point at.

Shared encoding: ``all_tables`` is the ``(n**n, n)`` array of every self-map
of ``{0..n-1}`` in lexicographic order, and a search state is a vector of
row indices, one per element of K. Constraints come from
:class:`soficlab.action.Constraints`, pre-sorted by the position at which
they become decidable (the largest K index they mention).
"""

from __future__ import annotations

import numpy as np

from ._jit import JIT_ENABLED, njit


def all_tables(n: int) -> np.ndarray:
    idx = np.arange(n**n, dtype=np.int64)
    powers = n ** np.arange(n - 1, -1, -1, dtype=np.int64)
    return (idx[:, None] // powers[None, :]) % n


def identity_index(n: int) -> int:
    return int(sum(x * n ** (n - 1 - x) for x in range(n)))


def activation_layout(m: int, mult: np.ndarray, sep: np.ndarray, identity: int):
    """Group constraints by activation position: CSR pointers + sorted rows."""
    def layout(rows):
        if len(rows) == 0:
            return np.zeros(m + 1, dtype=np.int64), rows.reshape(0, rows.shape[1] if rows.ndim == 2 else 1)
        act = rows.max(axis=1)
        order = np.argsort(act, kind="stable")
        ptr = np.zeros(m + 1, dtype=np.int64)
        np.add.at(ptr, act + 1, 1)
        return np.cumsum(ptr), rows[order]

    mult_ptr, mult_rows = layout(mult.reshape(-1, 3))
    sep_ptr, sep_rows = layout(sep.reshape(-1, 2))
    return mult_ptr, np.ascontiguousarray(mult_rows), sep_ptr, np.ascontiguousarray(sep_rows), identity


# --- exhaustive DFS ---------------------------------------------------------


@njit(cache=True, nogil=True)
def _dfs_jit(tabs, m, first, fixed, mult_ptr, mult, sep_ptr, sep, ident, bound, budget):
    T = tabs.shape[0]
    n = tabs.shape[1]
    choice = np.empty(m, np.int64)
    score = np.zeros(m + 1, np.int64)
    best = bound
    best_choice = np.full(m, -1, np.int64)
    nodes = 0
    status = 0
    d = 0
    choice[0] = first - 1
    while d >= 0:
        lo = 0
        hi = T - 1
        if d == 0:
            lo = first
            hi = first
        elif fixed[d] >= 0:
            lo = fixed[d]
            hi = fixed[d]
        if choice[d] < lo - 1:
            choice[d] = lo - 1
        choice[d] += 1
        if choice[d] > hi:
            d -= 1
            continue
        nodes += 1
        if nodes > budget:
            status = 1
            break
        s = score[d]
        if d == ident:
            row = tabs[choice[d]]
            cnt = 0
            for x in range(n):
                if row[x] != x:
                    cnt += 1
            if cnt > s:
                s = cnt
        for c in range(mult_ptr[d], mult_ptr[d + 1]):
            if s >= best:
                break
            ri = tabs[choice[mult[c, 0]]]
            rj = tabs[choice[mult[c, 1]]]
            rk = tabs[choice[mult[c, 2]]]
            cnt = 0
            for x in range(n):
                if rk[x] != ri[rj[x]]:
                    cnt += 1
            if cnt > s:
                s = cnt
        for c in range(sep_ptr[d], sep_ptr[d + 1]):
            if s >= best:
                break
            ri = tabs[choice[sep[c, 0]]]
            rj = tabs[choice[sep[c, 1]]]
            cnt = 0
            for x in range(n):
                if ri[x] == rj[x]:
                    cnt += 1
            if cnt > s:
                s = cnt
        if s >= best:
            continue
        if d == m - 1:
            best = s
            for p in range(m):
                best_choice[p] = choice[p]
            continue
        score[d + 1] = s
        d += 1
        choice[d] = -2
    return best, best_choice, nodes, status


def _dfs_np(tabs, m, first, fixed, mult_ptr, mult, sep_ptr, sep, ident, bound, budget):
    T, n = tabs.shape
    arange_n = np.arange(n)
    choice = np.full(m, -1, dtype=np.int64)
    state = {"best": bound, "best_choice": np.full(m, -1, dtype=np.int64), "nodes": 0, "status": 0}

    def row(p):
        return tabs[choice[p]]

    def leaf_scores(d, base):
        # all candidates for the last position at once
        if d == 0:
            cands = np.array([first])
        elif fixed[d] >= 0:
            cands = np.array([fixed[d]])
        else:
            cands = np.arange(T)
        C = tabs[cands]
        s = np.full(len(cands), base, dtype=np.int64)

        def tab(p):
            return C if p == d else row(p)[None, :]

        if d == ident:
            s = np.maximum(s, np.count_nonzero(C != arange_n, axis=1))
        for c in range(mult_ptr[d], mult_ptr[d + 1]):
            i, j, k = mult[c]
            ti, tj, tk = tab(i), tab(j), tab(k)
            comp = np.take_along_axis(np.broadcast_to(ti, (len(cands), n)), np.broadcast_to(tj, (len(cands), n)), axis=1)
            s = np.maximum(s, np.count_nonzero(tk != comp, axis=1))
        for c in range(sep_ptr[d], sep_ptr[d + 1]):
            i, j = sep[c]
            s = np.maximum(s, np.count_nonzero(tab(i) == tab(j), axis=1))
        return cands, s

    def partial_score(d, base):
        s = base
        if d == ident:
            s = max(s, int(np.count_nonzero(row(d) != arange_n)))
        for c in range(mult_ptr[d], mult_ptr[d + 1]):
            i, j, k = mult[c]
            s = max(s, int(np.count_nonzero(row(k) != row(i)[row(j)])))
        for c in range(sep_ptr[d], sep_ptr[d + 1]):
            i, j = sep[c]
            s = max(s, int(np.count_nonzero(row(i) == row(j))))
        return s

    def visit(d, base):
        if d == m - 1:
            cands, s = leaf_scores(d, base)
            state["nodes"] += len(cands)
            if state["nodes"] > budget:
                state["status"] = 1
                return False
            k = int(np.argmin(s))
            if s[k] < state["best"]:
                state["best"] = int(s[k])
                choice[d] = cands[k]
                state["best_choice"][:] = choice
            return True
        if d == 0:
            options = [first]
        elif fixed[d] >= 0:
            options = [int(fixed[d])]
        else:
            options = range(T)
        for t in options:
            state["nodes"] += 1
            if state["nodes"] > budget:
                state["status"] = 1
                return False
            choice[d] = t
            s = partial_score(d, base)
            if s >= state["best"]:
                continue
            if not visit(d + 1, s):
                return False
        return True

    visit(0, 0)
    return state["best"], state["best_choice"], state["nodes"], state["status"]


# --- scoring and greedy descent ---------------------------------------------


@njit(cache=True, nogil=True)
def _score_jit(tables, mult, sep, ident):
    n = tables.shape[1]
    worst = 0
    total = 0
    if ident >= 0:
        cnt = 0
        for x in range(n):
            if tables[ident, x] != x:
                cnt += 1
        worst = max(worst, cnt)
        total += cnt
    for c in range(mult.shape[0]):
        i, j, k = mult[c, 0], mult[c, 1], mult[c, 2]
        cnt = 0
        for x in range(n):
            if tables[k, x] != tables[i, tables[j, x]]:
                cnt += 1
        worst = max(worst, cnt)
        total += cnt
    for c in range(sep.shape[0]):
        i, j = sep[c, 0], sep[c, 1]
        cnt = 0
        for x in range(n):
            if tables[i, x] == tables[j, x]:
                cnt += 1
        worst = max(worst, cnt)
        total += cnt
    return worst, total


def _score_batch_np(batch, mult, sep, ident):
    """Scores for a ``(B, |K|, n)`` stack of candidate actions."""
    B, _, n = batch.shape
    worst = np.zeros(B, dtype=np.int64)
    total = np.zeros(B, dtype=np.int64)

    def add(cnt):
        nonlocal worst, total
        worst = np.maximum(worst, cnt)
        total = total + cnt

    if ident >= 0:
        add(np.count_nonzero(batch[:, ident, :] != np.arange(n), axis=1))
    for i, j, k in mult:
        add(np.count_nonzero(batch[:, k, :] != np.take_along_axis(batch[:, i, :], batch[:, j, :], axis=1), axis=1))
    for i, j in sep:
        add(np.count_nonzero(batch[:, i, :] == batch[:, j, :], axis=1))
    return worst, total


@njit(cache=True, nogil=True)
def _descend_jit(tables, mult, sep, ident, frozen, max_steps):
    m, n = tables.shape
    cur = tables.copy()
    w, t = _score_jit(cur, mult, sep, ident)
    for _ in range(max_steps):
        bw, bt = w, t
        bp, bx, by = -1, -1, -1
        for p in range(m):
            if frozen[p]:
                continue
            for x in range(n):
                old = cur[p, x]
                for y in range(n):
                    if y == old:
                        continue
                    cur[p, x] = y
                    cw, ct = _score_jit(cur, mult, sep, ident)
                    if cw < bw or (cw == bw and ct < bt):
                        bw, bt, bp, bx, by = cw, ct, p, x, y
                cur[p, x] = old
        if bp < 0:
            break
        cur[bp, bx] = by
        w, t = bw, bt
    return cur, w, t


def _descend_np(tables, mult, sep, ident, frozen, max_steps):
    m, n = tables.shape
    cur = tables.copy()
    w, t = (int(v[0]) for v in _score_batch_np(cur[None], mult, sep, ident))
    moves = [(p, x, y) for p in range(m) if not frozen[p] for x in range(n) for y in range(n)]
    moves = np.array(moves, dtype=np.int64).reshape(-1, 3)
    for _ in range(max_steps):
        live = moves[cur[moves[:, 0], moves[:, 1]] != moves[:, 2]]
        if len(live) == 0:
            break
        batch = np.repeat(cur[None], len(live), axis=0)
        batch[np.arange(len(live)), live[:, 0], live[:, 1]] = live[:, 2]
        cw, ct = _score_batch_np(batch, mult, sep, ident)
        better = (cw < w) | ((cw == w) & (ct < t))
        if not better.any():
            break
        # first strictly best move in (p, x, y) order
        key = np.where(better, cw * (len(sep) + len(mult) + 1) * (n + 1) + ct, np.iinfo(np.int64).max)
        k = int(np.argmin(key))
        p, x, y = live[k]
        cur[p, x] = y
        w, t = int(cw[k]), int(ct[k])
    return cur, w, t


def score_np(tables, mult, sep, ident):
    w, t = _score_batch_np(np.asarray(tables)[None], mult, sep, ident)
    return int(w[0]), int(t[0])


def score_jit(tables, mult, sep, ident):
    w, t = _score_jit(tables, mult, sep, ident)
    return int(w), int(t)


if JIT_ENABLED:
    dfs, descend, score = _dfs_jit, _descend_jit, score_jit
else:
    dfs, descend, score = _dfs_np, _descend_np, score_np

KERNELS = {
    "jit": {"dfs": _dfs_jit, "descend": _descend_jit, "score": score_jit},
    "numpy": {"dfs": _dfs_np, "descend": _descend_np, "score": score_np},
}
