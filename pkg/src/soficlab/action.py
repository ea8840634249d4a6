"""Finite (K, eps)-actions, their defects, and measures on finite sets.

All verdict-bearing quantities are exact ``Fraction``s. Tables are numpy
integer arrays; a table ``t`` of length ``n`` is the self-map ``x -> t[x]`` of
``{0, ..., n-1}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .algebra import MonoidSpec, Word, format_word, monoid_from_json, monoid_to_json, multiply, normalize, parse_word
from .cayley import LabeledDigraph, RootedBall, ball_at, canonical_form
from .errors import ValidationError


def frac_str(q) -> str:
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def to_fraction(x) -> Fraction:
    """Exact value of ``x``; floats are read through their shortest repr, so
    ``0.1`` means 1/10."""
    if isinstance(x, float):
        return Fraction(repr(x))
    try:
        return Fraction(x)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValidationError(f"not a rational number: {x!r}") from exc


def as_table(t, n: Optional[int] = None) -> np.ndarray:
    arr = np.asarray(t, dtype=np.int64)
    if arr.ndim != 1:
        raise ValidationError("a table must be one-dimensional")
    if n is not None and len(arr) != n:
        raise ValidationError(f"table has length {len(arr)}, expected {n}")
    if len(arr) and (arr.min() < 0 or arr.max() >= len(arr)):
        raise ValidationError("table entry out of range")
    return arr


@dataclass(frozen=True, eq=False)
class FiniteAction:
    n: int
    monoid: MonoidSpec
    K: tuple[Word, ...]
    tables: Mapping[Word, np.ndarray]

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError("an action needs a nonempty set")
        K = tuple(tuple(s) for s in self.K)
        for s in K:
            if normalize(s, self.monoid) != s:
                raise ValidationError(f"{format_word(s, self.monoid)} is not in normal form")
        if len(set(K)) != len(K):
            raise ValidationError("K has repeated elements")
        tables = {}
        for s in K:
            if s not in self.tables:
                raise ValidationError(f"no table for {format_word(s, self.monoid)}")
            t = as_table(self.tables[s], self.n)
            t.setflags(write=False)
            tables[s] = t
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "tables", tables)

    def __getitem__(self, s: Word) -> np.ndarray:
        return self.tables[s]

    def stacked(self) -> np.ndarray:
        """Tables as an ``(|K|, n)`` array in K order."""
        return np.stack([self.tables[s] for s in self.K])


@dataclass(frozen=True)
class Constraints:
    """Index form of the conditions a (K, eps)-action must meet.

    ``mult`` rows are ``(i, j, k)`` with ``K[i] K[j] = K[k]``; ``identity`` is
    the position of the identity in K or -1; ``sep`` lists all pairs ``i < j``.
    """

    mult: np.ndarray
    identity: int
    sep: np.ndarray


def keps_constraints(m: MonoidSpec, K: Sequence[Word]) -> Constraints:
    pos = {s: i for i, s in enumerate(K)}
    mult = []
    for i, s in enumerate(K):
        for j, t in enumerate(K):
            k = pos.get(multiply(s, t, m))
            if k is not None:
                mult.append((i, j, k))
    identity = pos.get((), -1) if m.has_identity else -1
    sep = list(combinations(range(len(K)), 2))
    return Constraints(
        np.array(mult, dtype=np.int64).reshape(-1, 3),
        identity,
        np.array(sep, dtype=np.int64).reshape(-1, 2),
    )


# --- defects ----------------------------------------------------------------


def hamming(f, g) -> Fraction:
    f, g = np.asarray(f), np.asarray(g)
    if f.shape != g.shape or f.ndim != 1 or len(f) == 0:
        raise ValidationError("hamming needs two tables of equal positive length")
    return Fraction(int(np.count_nonzero(f != g)), len(f))


@dataclass(frozen=True)
class DefectReport:
    eps_mult: Fraction
    eps_identity: Fraction
    eps_separation: Fraction

    @property
    def eps_overall(self) -> Fraction:
        return max(self.eps_mult, self.eps_identity, self.eps_separation)

    def to_json(self) -> dict:
        return {
            "eps_mult": frac_str(self.eps_mult),
            "eps_identity": frac_str(self.eps_identity),
            "eps_separation": frac_str(self.eps_separation),
            "eps_overall": frac_str(self.eps_overall),
        }


def defect_counts(tables: np.ndarray, c: Constraints) -> tuple[int, int, int]:
    """Raw point counts behind :func:`defects` for a stacked ``(|K|, n)`` array."""
    n = tables.shape[1]
    mult = 0
    for i, j, k in c.mult:
        mult = max(mult, int(np.count_nonzero(tables[k] != tables[i][tables[j]])))
    ident = 0
    if c.identity >= 0:
        ident = int(np.count_nonzero(tables[c.identity] != np.arange(n)))
    sep = 0
    for i, j in c.sep:
        sep = max(sep, int(np.count_nonzero(tables[i] == tables[j])))
    return mult, ident, sep


def defects(a: FiniteAction) -> DefectReport:
    """Smallest eps for each of the three conditions of a (K, eps)-action.

    Separation is ``max(0, max_{s != t} 1 - d_Ham)``, i.e. the largest
    fraction of points on which two distinct elements agree.
    """
    c = keps_constraints(a.monoid, a.K)
    mult, ident, sep = defect_counts(a.stacked(), c)
    return DefectReport(Fraction(mult, a.n), Fraction(ident, a.n), Fraction(sep, a.n))


def is_keps(a: FiniteAction, eps) -> bool:
    return defects(a).eps_overall <= to_fraction(eps)


# --- measures ---------------------------------------------------------------

_INT64_SAFE = 2**62


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Exact probability vector ``num / den``.

    Numerators live in an int64 array when that cannot overflow, otherwise in
    an object array of Python ints.
    """

    num: np.ndarray
    den: int

    def __post_init__(self):
        den = int(self.den)
        if den <= 0:
            raise ValidationError("denominator must be positive")
        num = np.asarray(self.num)
        dtype = np.int64 if den < _INT64_SAFE // max(len(num), 1) else object
        num = num.astype(dtype)
        if num.ndim != 1 or len(num) == 0:
            raise ValidationError("a measure needs a nonempty weight vector")
        if (num < 0).any():
            raise ValidationError("negative weight")
        if int(num.sum()) != den:
            raise ValidationError("weights must sum to exactly 1")
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    @classmethod
    def from_weights(cls, weights: Iterable) -> "DiscreteMeasure":
        ws = [Fraction(w) for w in weights]
        den = math.lcm(*(w.denominator for w in ws)) if ws else 1
        return cls(np.array([int(w * den) for w in ws], dtype=object), den)

    @classmethod
    def uniform(cls, n: int) -> "DiscreteMeasure":
        return cls(np.ones(n, dtype=np.int64), n)

    @classmethod
    def point_mass(cls, n: int, at: int) -> "DiscreteMeasure":
        num = np.zeros(n, dtype=np.int64)
        num[at] = 1
        return cls(num, 1)

    @property
    def n(self) -> int:
        return len(self.num)

    @property
    def weights(self) -> list[Fraction]:
        return [Fraction(int(x), self.den) for x in self.num]

    def __eq__(self, other):
        if not isinstance(other, DiscreteMeasure):
            return NotImplemented
        return self.n == other.n and total_variation(self, other) == 0

    def to_json(self) -> list[str]:
        return [frac_str(w) for w in self.weights]


def pushforward(mu: DiscreteMeasure, f) -> DiscreteMeasure:
    f = np.asarray(f)
    if len(f) != mu.n:
        raise ValidationError("table and measure sizes differ")
    if mu.num.dtype == np.int64 and mu.den < 2**52:
        # partial sums never exceed den, so float64 accumulation is exact
        out = np.rint(np.bincount(f, weights=mu.num, minlength=mu.n)).astype(np.int64)
    else:
        out = np.zeros(mu.n, dtype=mu.num.dtype)
        np.add.at(out, f, mu.num)
    return DiscreteMeasure(out, mu.den)


def total_variation(mu: DiscreteMeasure, nu: DiscreteMeasure) -> Fraction:
    """``max_E |mu(E) - nu(E)|``, computed as half the L1 distance."""
    if mu.n != nu.n:
        raise ValidationError("measures live on sets of different sizes")
    den = math.lcm(mu.den, nu.den)
    a, b = den // mu.den, den // nu.den
    if den < _INT64_SAFE // mu.n and mu.num.dtype == np.int64 and nu.num.dtype == np.int64:
        diff = np.abs(mu.num * a - nu.num * b)
    else:
        diff = np.abs(mu.num.astype(object) * a - nu.num.astype(object) * b)
    return Fraction(int(diff.sum()), 2 * den)


def invariance_defect(a: FiniteAction, mu: DiscreteMeasure) -> Fraction:
    if mu.n != a.n:
        raise ValidationError("measure and action sizes differ")
    return max((total_variation(mu, pushforward(mu, a[s])) for s in a.K), default=Fraction(0))


def invertibility_defect(a: FiniteAction) -> dict[Word, Fraction]:
    """Fraction of points whose preimage under each table is not a singleton."""
    return {
        s: Fraction(int(np.count_nonzero(np.bincount(a[s], minlength=a.n) != 1)), a.n)
        for s in a.K
    }


# --- graphs -----------------------------------------------------------------


def graph_from_action(a: FiniteAction, labels: Optional[Iterable[Word]] = None) -> LabeledDigraph:
    """Edges ``(x, s, psi_s(x))`` for every ``s`` in ``labels`` (default: all of K)."""
    labels = a.K if labels is None else tuple(tuple(s) for s in labels)
    for s in labels:
        if s not in a.tables:
            raise ValidationError(f"label {format_word(s, a.monoid)} is not in K")
    edges = []
    for s in labels:
        name = format_word(s, a.monoid)
        edges.extend((x, name, int(y)) for x, y in enumerate(a[s]))
    return LabeledDigraph(a.n, tuple(edges))


def generator_graph(a: FiniteAction) -> LabeledDigraph:
    """Edges ``(x, g, psi_g(x))`` for each generator ``g`` whose normal form is in K.

    Edges carry the generator's name even when it normalizes to something
    else (in ``cyclic1`` the generator ``a`` acts as ``psi_e``).
    """
    edges = []
    for i, name in enumerate(a.monoid.generators):
        nf = normalize((i,), a.monoid)
        if nf in a.tables:
            edges.extend((x, name, int(y)) for x, y in enumerate(a[nf]))
    return LabeledDigraph(a.n, tuple(edges))


def weiss_fraction(g: LabeledDigraph, model: RootedBall, r: int) -> Fraction:
    """Fraction of vertices whose directed r-ball is isomorphic to ``model``.

    Vertex labels are ignored.
    """
    if model.metric_mode != "directed" or model.radius != r:
        raise ValidationError("model must be a directed ball of radius r")
    target = canonical_form(model, use_vertex_labels=False)
    n_model, e_model = model.n, len(model.graph.edges)
    hits = 0
    for x in range(g.n):
        b = ball_at(g, x, r, "directed")
        if b.n == n_model and len(b.graph.edges) == e_model and canonical_form(b, use_vertex_labels=False) == target:
            hits += 1
    return Fraction(hits, g.n)


# --- stock actions ----------------------------------------------------------


def action_from_words(m: MonoidSpec, n: int, tables: Mapping[str, Sequence[int]]) -> FiniteAction:
    parsed = {normalize(parse_word(k, m), m): v for k, v in tables.items()}
    return FiniteAction(n, m, tuple(parsed), parsed)


def finite_quotient_action(m: MonoidSpec, K: Sequence[Word], n: int, generator_tables: Mapping[int, Sequence[int]]) -> FiniteAction:
    """Action on ``n`` points where generator ``i`` acts by ``generator_tables[i]``
    and each word acts by the composite (rightmost letter first)."""
    gens = {i: as_table(t, n) for i, t in generator_tables.items()}
    tables = {}
    for s in K:
        t = np.arange(n)
        for letter in reversed(s):
            t = gens[letter][t]
        tables[tuple(s)] = t
    return FiniteAction(n, m, tuple(tuple(s) for s in K), tables)


def action_to_json(a: FiniteAction) -> dict:
    from .algebra import builtin

    try:
        monoid = a.monoid.name if monoid_to_json(builtin(a.monoid.name)) == monoid_to_json(a.monoid) else monoid_to_json(a.monoid)
    except ValidationError:
        monoid = monoid_to_json(a.monoid)
    return {
        "n": a.n,
        "monoid": monoid,
        "K": [format_word(s, a.monoid) for s in a.K],
        "tables": {format_word(s, a.monoid): [int(x) for x in a[s]] for s in sorted(a.K, key=lambda w: (len(w), w))},
    }


def action_from_json(obj: dict, monoid: Optional[MonoidSpec] = None) -> FiniteAction:
    try:
        m = monoid if monoid is not None else monoid_from_json(obj["monoid"])
        n = int(obj["n"])
        K = [parse_word(s, m) for s in obj["K"]]
        raw = obj["tables"]
        tables = {}
        for s, text in zip(K, obj["K"]):
            if text not in raw:
                raise ValidationError(f"no table for {text!r}")
            tables[s] = as_table(raw[text], n)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"malformed action JSON: {exc}") from None
    return FiniteAction(n, m, tuple(K), tables)
