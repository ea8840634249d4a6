"""Finite approximations to the full one-sided shift (b = 2: angle doubling).

Points of ``{0..b-1}^N`` are strings; the shift drops the first digit, so the
preimages of ``x`` are ``0x, 1x, ...``. The finite model ``X'`` is the
disjoint union, over all words ``w`` of length ``r``, of the depth-``k``
preimage tree of ``w``:

* vertex ``(w, level, d)`` carries the label ``digits(d) + w`` (``d`` has
  ``level`` digits, most significant first);
* ``psi_f`` sends a vertex to its parent and a root ``w`` to the root of
  ``w[1:] + "0"``;
* a level-``l`` vertex weighs ``b**-l * b**-r / (k + 1)``.

Schreier patterns use the undirected metric and edges ``f1 .. f{radius}``
(``f_i`` is the ``i``-th iterate), with vertex labels cut to their first
``label_digits`` digits (default: the radius).
"""

from __future__ import annotations

import base64
from bisect import bisect_right
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import product
from typing import Optional

import numpy as np

from .action import (
    DiscreteMeasure, FiniteAction, defects, frac_str, invariance_defect, pushforward, to_fraction, total_variation,
)
from .algebra import MonoidSpec
from .cayley import LabeledDigraph, RootedBall, canonical_form, local_ball
from .errors import RadiusTooLarge, ValidationError

MAX_TRUE_RADIUS = 3


def nat_monoid() -> MonoidSpec:
    """The additive monoid N, generated by the single map ``f``."""
    return MonoidSpec("nat", ("f",), (), closed_form=lambda w: w)


@dataclass(frozen=True)
class ShiftSystem:
    branching: int = 2
    n_powers: int = 1

    def __post_init__(self):
        if not 2 <= self.branching <= 10:
            raise ValidationError("branching must be between 2 and 10")
        if self.n_powers < 1:
            raise ValidationError("n_powers must be positive")

    @property
    def digits(self) -> str:
        return "0123456789"[: self.branching]


def _digits(value: int, length: int, b: int) -> str:
    out = []
    for _ in range(length):
        value, rem = divmod(value, b)
        out.append(str(rem))
    return "".join(reversed(out))


def preimage_tree(omega: str, k: int, branching: int = 2) -> LabeledDigraph:
    """Depth-``k`` preimage tree of ``omega``; vertex 0 is the root and edges
    point from child to parent with label ``f``."""
    if k < 0:
        raise ValidationError("depth must be nonnegative")
    b = branching
    labels, edges = [], []
    start = 0
    for level in range(k + 1):
        for d in range(b**level):
            labels.append(_digits(d, level, b) + omega)
            if level:
                parent = (start - b ** (level - 1)) + d % b ** (level - 1)
                edges.append((start + d, "f", parent))
        start += b**level
    return LabeledDigraph(len(labels), tuple(edges), labels)


@dataclass(frozen=True)
class Layout:
    """Index arithmetic for ``X'``: vertex id = component * N + local id,
    with local ids laid out level by level."""

    b: int
    r: int
    k: int

    @cached_property
    def starts(self) -> list[int]:
        return [(self.b**level - 1) // (self.b - 1) for level in range(self.k + 2)]

    @property
    def per_component(self) -> int:
        return self.starts[self.k + 1]

    @property
    def components(self) -> int:
        return self.b**self.r

    @property
    def size(self) -> int:
        return self.components * self.per_component

    def decode(self, v: int) -> tuple[int, int, int]:
        c, local = divmod(v, self.per_component)
        level = bisect_right(self.starts, local) - 1
        return c, level, local - self.starts[level]

    def encode(self, c: int, level: int, d: int) -> int:
        return c * self.per_component + self.starts[level] + d

    def label(self, v: int) -> str:
        c, level, d = self.decode(v)
        return _digits(d, level, self.b) + _digits(c, self.r, self.b)

    def parent(self, v: int) -> int:
        c, level, d = self.decode(v)
        if level:
            return self.encode(c, level - 1, d % self.b ** (level - 1))
        return self.encode((c % self.b ** (self.r - 1)) * self.b, 0, 0)

    def preimages(self, v: int) -> list[int]:
        c, level, d = self.decode(v)
        out = []
        if level < self.k:
            out = [self.encode(c, level + 1, x * self.b**level + d) for x in range(self.b)]
        if level == 0 and c % self.b == 0:
            out += [self.encode(x * self.b ** (self.r - 1) + c // self.b, 0, 0) for x in range(self.b)]
        return out

    def iterate(self, v: int, i: int) -> int:
        for _ in range(i):
            v = self.parent(v)
        return v

    def preimages_iter(self, v: int, i: int) -> list[int]:
        frontier = [v]
        for _ in range(i):
            frontier = [u for w in frontier for u in self.preimages(w)]
        return frontier

    def level_array(self) -> np.ndarray:
        local = np.concatenate([np.full(self.b**lv, lv, dtype=np.int64) for lv in range(self.k + 1)])
        return np.tile(local, self.components)

    def parent_table(self) -> np.ndarray:
        b, N = self.b, self.per_component
        local_parent = np.empty(N, dtype=np.int64)
        local_parent[0] = -1
        for level in range(1, self.k + 1):
            d = np.arange(b**level, dtype=np.int64)
            local_parent[self.starts[level] : self.starts[level + 1]] = self.starts[level - 1] + d % b ** (level - 1)
        comps = np.arange(self.components, dtype=np.int64)
        table = (comps[:, None] * N + local_parent[None, :])
        table[:, 0] = (comps % b ** (self.r - 1)) * b * N
        return table.reshape(-1)


@dataclass(frozen=True, eq=False)
class FiniteApproximation:
    system: ShiftSystem
    r: int
    k: int
    layout: Layout
    mu_prime: DiscreteMeasure
    psi: FiniteAction

    @property
    def size(self) -> int:
        return self.layout.size

    def to_json(self) -> dict:
        inv = {f"f{i}": frac_str(total_variation(self.mu_prime, pushforward(self.mu_prime, self.psi[s])))
               for i, s in enumerate(self.psi.K, start=1)}
        return {
            "r": self.r,
            "k": self.k,
            "n_powers": self.system.n_powers,
            "branching": self.system.branching,
            "convention": "append0",
            "n_vertices": self.size,
            "level_mass": [frac_str(Fraction(self.system.branching ** (self.k - lv), self.mu_prime.den))
                           for lv in range(self.k + 1)],
            "invariance_defect": inv,
            "defects": defects(self.psi).to_json(),
        }


def build_approximation(system: ShiftSystem, r: int, k: int) -> FiniteApproximation:
    if r < 1 or k < 1:
        raise ValidationError("build_approximation needs r >= 1 and k >= 1")
    b = system.branching
    layout = Layout(b, r, k)
    levels = layout.level_array()
    mu = DiscreteMeasure(b ** (k - levels), b ** (r + k) * (k + 1))
    f = layout.parent_table()
    tables, t = {}, np.arange(layout.size, dtype=np.int64)
    for i in range(1, system.n_powers + 1):
        t = f[t]
        tables[(0,) * i] = t
    psi = FiniteAction(layout.size, nat_monoid(), tuple(tables), tables)
    return FiniteApproximation(system, r, k, layout, mu, psi)


# --- patterns ---------------------------------------------------------------


@dataclass
class PatternMeasure:
    """Exact masses of radius-``radius`` Schreier patterns, keyed by canonical form."""

    radius: int
    masses: dict[bytes, Fraction] = field(default_factory=dict)
    examples: dict[bytes, RootedBall] = field(default_factory=dict)

    def add(self, ball: RootedBall, mass: Fraction):
        key = canonical_form(ball)
        self.masses[key] = self.masses.get(key, Fraction(0)) + mass
        self.examples.setdefault(key, ball)

    def merge(self, other: "PatternMeasure"):
        for key, mass in other.masses.items():
            self.masses[key] = self.masses.get(key, Fraction(0)) + mass
            self.examples.setdefault(key, other.examples[key])

    def total(self) -> Fraction:
        return sum(self.masses.values(), Fraction(0))

    def to_json(self) -> list[dict]:
        return [
            {
                "pattern_canon": base64.b64encode(key).decode(),
                "pattern_pretty": pretty_pattern(key),
                "mass": frac_str(self.masses[key]),
            }
            for key in sorted(self.masses)
        ]


def pretty_pattern(canon: bytes) -> dict:
    _, n_line, v_line, e_line = canon.decode().split("\n")
    labels = None if v_line == "V=-" else v_line[2:].split(",")
    edges = [[int(s), a, int(d)] for s, a, d in (e.split(":") for e in e_line[2:].split(";") if e)]
    return {"n": int(n_line[2:]), "vertex_labels": labels, "edges": edges}


def _pattern_ball(root, radius, out_edges, in_edges, label) -> RootedBall:
    ball, _ = local_ball(root, radius, "undirected", out_edges, in_edges, label)
    return ball


def schreier_pattern_at(a: FiniteApproximation, v: int, radius: int, label_digits: Optional[int] = None) -> RootedBall:
    if radius > a.r or radius > a.system.n_powers:
        raise RadiusTooLarge("pattern radius must not exceed r or the number of powers in K")
    t = radius if label_digits is None else label_digits
    lay = a.layout
    return _pattern_ball(
        v, radius,
        lambda x: [(f"f{i}", lay.iterate(x, i)) for i in range(1, radius + 1)],
        lambda x: [(f"f{i}", u) for i in range(1, radius + 1) for u in lay.preimages_iter(x, i)],
        lambda x: lay.label(x)[:t],
    )


def pattern_classes(a: FiniteApproximation, radius: int, label_digits: Optional[int] = None):
    """Vertex classes of ``X'`` sharing a pattern, as (representative, mass).

    A pattern climbs at most ``radius**2`` levels and reads ``label_digits``
    digits, so it depends only on the component, the level and the first
    ``radius**2 + label_digits`` label digits.
    """
    t = radius if label_digits is None else label_digits
    depth = radius * radius + t
    b, k, lay = a.system.branching, a.k, a.layout
    den = a.mu_prime.den
    for c in range(lay.components):
        for level in range(k + 1):
            q = min(level, depth)
            mass = Fraction(b ** (k - q), den)
            for p in range(b**q):
                yield lay.encode(c, level, p * b ** (level - q)), mass


def nu_prime(
    a: FiniteApproximation,
    radius: int,
    label_digits: Optional[int] = None,
    workers: int = 1,
    exhaustive: bool = False,
) -> PatternMeasure:
    """Pattern measure of ``(X', mu')``: each vertex's pattern gets its mass.

    ``exhaustive=True`` visits every vertex instead of one per class.
    """
    if radius > a.r:
        raise RadiusTooLarge("radius exceeds the cylinder depth r")
    if exhaustive:
        weights = a.mu_prime.weights
        jobs = [(v, weights[v]) for v in range(a.size)]
    else:
        jobs = list(pattern_classes(a, radius, label_digits))

    def census(chunk):
        pm = PatternMeasure(radius)
        for v, mass in chunk:
            pm.add(schreier_pattern_at(a, v, radius, label_digits), mass)
        return pm

    return _parallel_census(census, jobs, radius, workers)


def _parallel_census(census, jobs, radius, workers) -> PatternMeasure:
    workers = max(1, workers)
    chunks = [jobs[i::workers] for i in range(workers)]
    if workers == 1:
        parts = [census(jobs)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(census, chunks))
    out = PatternMeasure(radius)
    for part in parts:
        out.merge(part)
    return out


def nu_true(system: ShiftSystem, radius: int, label_digits: Optional[int] = None, workers: int = 1) -> PatternMeasure:
    """Exact pattern measure of the shift with its Bernoulli measure.

    Almost every point is aperiodic, so its full Schreier graph is the generic
    one: a point is written ``c + shift^m(x)`` and two such spellings agree only
    when they reduce to the same one. The pattern at ``x`` reads the first
    ``radius**2 + label_digits`` digits of ``x``, each prefix having mass
    ``b**-len``.
    """
    if radius > MAX_TRUE_RADIUS:
        raise RadiusTooLarge(f"nu_true enumerates b**(radius**2 + radius) prefixes; radius <= {MAX_TRUE_RADIUS}")
    if radius < 0:
        raise ValidationError("radius must be nonnegative")
    t = radius if label_digits is None else label_digits
    b = system.branching
    depth = radius * radius + t
    digits = system.digits
    mass = Fraction(1, b**depth)

    def pattern(x: str) -> RootedBall:
        def canon(m, c):
            while c and m > 0 and c[-1] == x[m - 1]:
                c, m = c[:-1], m - 1
            return m, c

        def up(p, i):
            m, c = p
            return (m, c[i:]) if len(c) >= i else (m + i - len(c), "")

        def down(p, i):
            m, c = p
            return [canon(m, "".join(w) + c) for w in product(digits, repeat=i)]

        return _pattern_ball(
            (0, ""), radius,
            lambda p: [(f"f{i}", up(p, i)) for i in range(1, radius + 1)],
            lambda p: [(f"f{i}", u) for i in range(1, radius + 1) for u in down(p, i)],
            lambda p: (p[1] + x[p[0]:])[:t],
        )

    def census(chunk):
        pm = PatternMeasure(radius)
        for x in chunk:
            pm.add(pattern(x), mass)
        return pm

    jobs = ["".join(w) for w in product(digits, repeat=depth)]
    return _parallel_census(census, jobs, radius, workers)


def weak_discrepancy(p: PatternMeasure, q: PatternMeasure) -> Fraction:
    """Largest per-pattern mass difference over the union of supports."""
    if p.radius != q.radius:
        raise ValidationError("pattern measures have different radii")
    keys = set(p.masses) | set(q.masses)
    return max((abs(p.masses.get(u, Fraction(0)) - q.masses.get(u, Fraction(0))) for u in keys), default=Fraction(0))


@dataclass
class ApproximationReport:
    eps: Fraction
    radius: int
    eps_action: Fraction
    eps_separation: Fraction
    invariance: Fraction
    discrepancy: Fraction

    @property
    def ok(self) -> bool:
        return max(self.eps_action, self.invariance, self.discrepancy) <= self.eps

    def to_json(self) -> dict:
        return {
            "eps": frac_str(self.eps),
            "radius": self.radius,
            "action_defect": frac_str(self.eps_action),
            "separation_defect": frac_str(self.eps_separation),
            "invariance_defect": frac_str(self.invariance),
            "weak_discrepancy": frac_str(self.discrepancy),
            "is_keps_approximation": self.ok,
        }


def is_keps_approximation(
    a: FiniteApproximation, eps, radius: int, workers: int = 1, true_measure: Optional[PatternMeasure] = None
) -> tuple[bool, ApproximationReport]:
    """Checks the three conditions: (K, eps)-action, approximate invariance of
    ``mu'``, and cylinder-level closeness of the pattern measures."""
    if radius > a.r:
        raise RadiusTooLarge("radius exceeds the cylinder depth r")
    eps = to_fraction(eps)
    rep = defects(a.psi)
    truth = true_measure if true_measure is not None else nu_true(a.system, radius, workers=workers)
    report = ApproximationReport(
        eps, radius, rep.eps_overall, rep.eps_separation,
        invariance_defect(a.psi, a.mu_prime),
        weak_discrepancy(truth, nu_prime(a, radius, workers=workers)),
    )
    return report.ok, report
