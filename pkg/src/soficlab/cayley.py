"""Edge-labelled digraphs, balls, Cayley balls and rooted canonical forms.

Two ball metrics coexist and the caller always names one: ``"directed"``
counts only forward paths (the semigroup distance, which may be infinite),
``"undirected"`` is the usual graph metric.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterable, Optional

import numpy as np

from .algebra import MonoidSpec, Word, format_word, multiply
from .errors import ValidationError

METRIC_MODES = ("directed", "undirected")
Edge = tuple[int, str, int]


@dataclass(frozen=True)
class LabeledDigraph:
    """Finite digraph with labelled edges, out-deterministic per label."""

    n: int
    edges: tuple[Edge, ...]
    vertex_labels: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        edges = tuple(sorted(set((int(s), str(a), int(d)) for s, a, d in self.edges)))
        object.__setattr__(self, "edges", edges)
        if self.vertex_labels is not None:
            object.__setattr__(self, "vertex_labels", tuple(self.vertex_labels))
            if len(self.vertex_labels) != self.n:
                raise ValidationError("vertex_labels must have one entry per vertex")
        seen = set()
        for s, a, d in edges:
            if not (0 <= s < self.n and 0 <= d < self.n):
                raise ValidationError(f"edge {(s, a, d)} out of range for n={self.n}")
            if (s, a) in seen:
                raise ValidationError(f"vertex {s} has two outgoing {a!r}-edges")
            seen.add((s, a))

    @cached_property
    def out_adj(self) -> list[dict[str, int]]:
        adj: list[dict[str, int]] = [{} for _ in range(self.n)]
        for s, a, d in self.edges:
            adj[s][a] = d
        return adj

    @cached_property
    def in_adj(self) -> list[list[tuple[str, int]]]:
        adj: list[list[tuple[str, int]]] = [[] for _ in range(self.n)]
        for s, a, d in self.edges:
            adj[d].append((a, s))
        return adj

    @cached_property
    def alphabet(self) -> tuple[str, ...]:
        return tuple(sorted({a for _, a, _ in self.edges}))

    def relabel(self, perm: Iterable[int]) -> "LabeledDigraph":
        """Image under the vertex bijection ``v -> perm[v]``."""
        perm = list(perm)
        labels = None
        if self.vertex_labels is not None:
            labels = [""] * self.n
            for v, lab in enumerate(self.vertex_labels):
                labels[perm[v]] = lab
        return LabeledDigraph(self.n, tuple((perm[s], a, perm[d]) for s, a, d in self.edges), labels)


@dataclass(frozen=True)
class RootedBall:
    graph: LabeledDigraph
    root: int
    radius: int
    metric_mode: str

    def __post_init__(self):
        if self.metric_mode not in METRIC_MODES:
            raise ValidationError(f"metric_mode must be one of {METRIC_MODES}")
        if not 0 <= self.root < self.graph.n:
            raise ValidationError("root out of range")

    @property
    def n(self) -> int:
        return self.graph.n

    @cached_property
    def canon(self) -> bytes:
        return canonical_form(self)


SchreierPattern = RootedBall


# --- balls ------------------------------------------------------------------


def local_ball(
    root,
    radius: int,
    mode: str,
    out_edges: Callable[[object], Iterable[tuple[str, object]]],
    in_edges: Optional[Callable[[object], Iterable[tuple[str, object]]]] = None,
    vertex_label: Optional[Callable[[object], str]] = None,
) -> tuple[RootedBall, list]:
    """Ball around ``root`` in an implicitly given graph.

    ``out_edges(v)`` yields ``(label, w)`` pairs and ``in_edges(v)`` yields
    ``(label, u)``; any hashable vertex type works. Returns the ball (vertices
    renumbered in BFS order, root = 0) and the list of original vertices.
    """
    if mode not in METRIC_MODES:
        raise ValidationError(f"metric_mode must be one of {METRIC_MODES}")
    if radius < 0:
        raise ValidationError("radius must be nonnegative")
    if mode == "undirected" and in_edges is None:
        raise ValidationError("undirected balls need in_edges")
    index = {root: 0}
    order = [root]
    queue = deque([(root, 0)])
    while queue:
        v, dist = queue.popleft()
        if dist == radius:
            continue
        nbrs = [w for _, w in out_edges(v)]
        if mode == "undirected":
            nbrs += [u for _, u in in_edges(v)]
        for w in nbrs:
            if w not in index:
                index[w] = len(order)
                order.append(w)
                queue.append((w, dist + 1))
    edges = []
    for i, v in enumerate(order):
        for a, w in out_edges(v):
            j = index.get(w)
            if j is not None:
                edges.append((i, a, j))
    labels = [vertex_label(v) for v in order] if vertex_label is not None else None
    return RootedBall(LabeledDigraph(len(order), tuple(edges), labels), 0, radius, mode), order


def ball_at(g: LabeledDigraph, v: int, r: int, mode: str) -> RootedBall:
    if not 0 <= v < g.n:
        raise ValidationError("vertex out of range")
    out_adj, in_adj = g.out_adj, g.in_adj
    ball, _ = local_ball(
        v, r, mode,
        lambda x: out_adj[x].items(),
        lambda x: in_adj[x],
        (lambda x: g.vertex_labels[x]) if g.vertex_labels is not None else None,
    )
    return ball


def cayley_ball(m: MonoidSpec, r: int) -> RootedBall:
    """Ball of radius ``r`` around the identity in the left Cayley graph.

    Edges are ``(s, a, a*s)``; vertex labels are the normal forms.
    """
    if not m.has_identity:
        raise ValidationError(f"{m.name} has no identity to root the ball at")
    gens = [(g, (i,)) for i, g in enumerate(m.generators)]
    cache: dict[Word, list[tuple[str, Word]]] = {}

    def out_edges(s: Word):
        if s not in cache:
            cache[s] = [(name, multiply(w, s, m)) for name, w in gens]
        return cache[s]

    ball, _ = local_ball((), r, "directed", out_edges, vertex_label=lambda s: format_word(s, m))
    return ball


# --- canonical forms --------------------------------------------------------

_CANON_HEADER = b"soficlab-canon-v1\n"


def _mix(x: np.ndarray) -> np.ndarray:
    # splitmix64 finalizer; wraps mod 2**64
    x = x + np.uint64(0x9E3779B97F4A7C15)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def _rank(*keys: np.ndarray) -> np.ndarray:
    stacked = np.stack([k.astype(np.uint64) for k in keys], axis=1)
    _, inverse = np.unique(stacked, axis=0, return_inverse=True)
    return inverse.reshape(-1).astype(np.int64)


class _Canonizer:
    """Individualization-refinement with automorphism pruning.

    Colour refinement hashes the multiset of (direction, edge label,
    neighbour colour) per vertex; since the hash is a fixed function of
    isomorphism-invariant data, the search tree is invariant and the least
    leaf serialization is canonical. Hash collisions only coarsen cells.
    """

    def __init__(self, ball: RootedBall, use_vertex_labels: bool):
        g = ball.graph
        self.n = g.n
        self.labels = g.alphabet
        lab_id = {a: i for i, a in enumerate(self.labels)}
        e = np.array([(s, lab_id[a], d) for s, a, d in g.edges], dtype=np.int64).reshape(-1, 3)
        self.src, self.lab, self.dst = e[:, 0], e[:, 1], e[:, 2]
        if use_vertex_labels and g.vertex_labels is not None:
            self.vnames = tuple(sorted(set(g.vertex_labels)))
            vid = {x: i for i, x in enumerate(self.vnames)}
            self.vlab = np.array([vid[x] for x in g.vertex_labels], dtype=np.int64)
        else:
            self.vnames = None
            self.vlab = np.zeros(self.n, dtype=np.int64)
        self.lab_out = (self.lab.astype(np.uint64) << np.uint64(33))
        self.lab_in = self.lab_out | np.uint64(1 << 32)
        self.root = ball.root

    def refine(self, colors: np.ndarray) -> np.ndarray:
        ncol = int(colors.max()) + 1 if self.n else 0
        while ncol < self.n:
            c = colors.astype(np.uint64)
            acc = np.zeros(self.n, dtype=np.uint64)
            np.add.at(acc, self.src, _mix(self.lab_out | c[self.dst]))
            np.add.at(acc, self.dst, _mix(self.lab_in | c[self.src]))
            new = _rank(colors, acc)
            new_ncol = int(new.max()) + 1
            colors = new
            if new_ncol == ncol:
                break
            ncol = new_ncol
        return colors

    def serialize(self, colors: np.ndarray) -> bytes:
        order = np.argsort(colors, kind="stable")
        e = np.stack([colors[self.src], self.lab, colors[self.dst]], axis=1)
        e = e[np.lexsort((e[:, 2], e[:, 1], e[:, 0]))] if len(e) else e
        return self.vlab[order].astype(">i4").tobytes() + b"|" + e.astype(">i4").tobytes()

    def run(self) -> np.ndarray:
        init = np.where(np.arange(self.n) == self.root, 0, 1 + self.vlab)
        self.first = None  # (serial, order, path)
        self.best = None
        self.autos: list[np.ndarray] = []
        self._search(self.refine(_rank(init)), [])
        return self.best[1]

    def _orbit_root(self, path: list[int]):
        parent = list(range(self.n))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for gamma in self.autos:
            if all(gamma[p] == p for p in path):
                for x in range(self.n):
                    a, b = find(x), find(int(gamma[x]))
                    if a != b:
                        parent[max(a, b)] = min(a, b)
        return find

    def _search(self, colors: np.ndarray, path: list[int]) -> Optional[int]:
        counts = np.bincount(colors)
        if len(counts) == self.n:
            ser = self.serialize(colors)
            order = np.argsort(colors, kind="stable")
            if self.first is None:
                self.first = (ser, order, list(path))
                self.best = (ser, order)
                return None
            if ser == self.first[0]:
                gamma = np.empty(self.n, dtype=np.int64)
                gamma[self.first[1]] = order
                self.autos.append(gamma)
                fp = self.first[2]
                return next(i for i in range(len(path)) if path[i] != fp[i])
            if ser == self.best[0]:
                gamma = np.empty(self.n, dtype=np.int64)
                gamma[self.best[1]] = order
                self.autos.append(gamma)
            elif ser < self.best[0]:
                self.best = (ser, order)
            return None
        target = int(np.flatnonzero(counts > 1)[0])
        cell = np.flatnonzero(colors == target).tolist()
        tried: list[int] = []
        for v in cell:
            if tried and self.autos:
                find = self._orbit_root(path)
                if any(find(v) == find(t) for t in tried):
                    continue
            split = colors * 2 + 1
            split[v] = colors[v] * 2
            ret = self._search(self.refine(_rank(split)), path + [v])
            tried.append(v)
            if ret is not None and ret < len(path):
                return ret
        return None


def canonical_form(b: RootedBall, use_vertex_labels: bool = True) -> bytes:
    """Byte string equal for two balls iff they are rooted-isomorphic.

    Respects edge direction and labels, and vertex labels when present and
    ``use_vertex_labels`` is set. Radius and metric mode are not part of the
    form. The single unlabelled vertex canonicalizes to
    ``b"soficlab-canon-v1\\nn=1\\nV=-\\nE="``.
    """
    c = _Canonizer(b, use_vertex_labels)
    order = c.run() if c.n else np.zeros(0, dtype=np.int64)
    pos = np.empty(c.n, dtype=np.int64)
    pos[order] = np.arange(c.n)
    if c.vnames is None:
        vpart = "-"
    else:
        vpart = ",".join(c.vnames[int(c.vlab[v])] for v in order)
    edges = sorted((int(pos[s]), c.labels[int(a)], int(pos[d])) for s, a, d in zip(c.src, c.lab, c.dst))
    epart = ";".join(f"{s}:{a}:{d}" for s, a, d in edges)
    return _CANON_HEADER + f"n={c.n}\nV={vpart}\nE={epart}".encode()


def rooted_isomorphic(b1: RootedBall, b2: RootedBall, use_vertex_labels: Optional[bool] = None) -> bool:
    """Root-, label- and direction-preserving isomorphism test.

    Vertex labels count only when both balls carry them, unless forced with
    ``use_vertex_labels``.
    """
    if use_vertex_labels is None:
        use_vertex_labels = b1.graph.vertex_labels is not None and b2.graph.vertex_labels is not None
    if b1.n != b2.n or len(b1.graph.edges) != len(b2.graph.edges):
        return False
    return canonical_form(b1, use_vertex_labels) == canonical_form(b2, use_vertex_labels)


def is_connected(g: LabeledDigraph) -> bool:
    if g.n == 0:
        return True
    seen = {0}
    stack = [0]
    while stack:
        v = stack.pop()
        for w in list(g.out_adj[v].values()) + [u for _, u in g.in_adj[v]]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == g.n


def is_group_cayley(g: LabeledDigraph) -> bool:
    """Finite version of the rooted-homogeneity criterion for Cayley graphs of groups.

    True iff ``g`` is connected, every vertex has exactly one outgoing and one
    incoming edge of every label, and rooting at any vertex gives the same
    rooted labelled graph.
    """
    if g.n == 0 or not is_connected(g):
        return False
    alphabet = g.alphabet
    for v in range(g.n):
        if len(g.out_adj[v]) != len(alphabet):
            return False
        incoming = sorted(a for a, _ in g.in_adj[v])
        if incoming != list(alphabet):
            return False
    forms = {canonical_form(ball_at(g, v, g.n, "undirected"), use_vertex_labels=False) for v in range(g.n)}
    return len(forms) == 1


# --- JSON -------------------------------------------------------------------


def graph_to_json(g: LabeledDigraph, root: Optional[int] = None, metric_mode: Optional[str] = None) -> dict:
    return {
        "n": g.n,
        "root": root,
        "metric_mode": metric_mode,
        "vertex_labels": None if g.vertex_labels is None else {str(i): x for i, x in enumerate(g.vertex_labels)},
        "edges": [[s, a, d] for s, a, d in g.edges],
    }


def ball_to_json(b: RootedBall) -> dict:
    out = graph_to_json(b.graph, b.root, b.metric_mode)
    out["radius"] = b.radius
    return out


def graph_from_json(obj: dict) -> tuple[LabeledDigraph, Optional[int], Optional[str]]:
    try:
        n = int(obj["n"])
        vl = obj.get("vertex_labels")
        labels = None if vl is None else [vl[str(i)] for i in range(n)]
        edges = tuple((int(s), str(a), int(d)) for s, a, d in obj["edges"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed graph JSON: {exc}") from None
    return LabeledDigraph(n, edges, labels), obj.get("root"), obj.get("metric_mode")


def ball_from_json(obj: dict) -> RootedBall:
    g, root, mode = graph_from_json(obj)
    if root is None or mode is None:
        raise ValidationError("a rooted ball needs root and metric_mode")
    return RootedBall(g, int(root), int(obj.get("radius", g.n)), mode)
