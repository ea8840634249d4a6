"""Finitely presented monoids and semigroups.

Elements are represented by words, i.e. tuples of generator indices. Each
``MonoidSpec`` carries a string rewriting system; equality of elements is
equality of normal forms. Built-in presentations also carry a closed-form
normalizer which is the production path, while :func:`rewrite_normalize` is
the generic leftmost-innermost rewriting procedure used as the cross-check.

User-supplied rule sets are trusted to be confluent. Nothing here checks
that; a non-confluent system will silently give wrong equalities.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional, Sequence

from .errors import BudgetExhausted, ValidationError

Word = tuple[int, ...]

_NAME_RE = re.compile(r"^[a-z0-9_]+$")
_CHAR_BASE = 0xE000  # private-use block, one char per generator
IDENTITY_TOKEN = "e"


@dataclass(frozen=True)
class MonoidSpec:
    name: str
    generators: tuple[str, ...]
    rules: tuple[tuple[Word, Word], ...] = ()
    has_identity: bool = True
    normalization_budget: int = 10_000
    closed_form: Optional[Callable[[Word], Word]] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not _NAME_RE.match(self.name):
            raise ValidationError(f"bad monoid name {self.name!r}")
        if len(set(self.generators)) != len(self.generators):
            raise ValidationError("generator names must be unique")
        for g in self.generators:
            if not _NAME_RE.match(g):
                raise ValidationError(f"bad generator name {g!r}")
        ngen = len(self.generators)
        for lhs, rhs in self.rules:
            if not lhs:
                raise ValidationError("rule with empty left-hand side")
            if any(not 0 <= i < ngen for i in lhs + rhs):
                raise ValidationError("rule mentions an unknown generator")
            if len(lhs) < len(rhs) and self.closed_form is None:
                raise ValidationError("length-increasing rule in a user rewriting system")
        if self.normalization_budget <= 0:
            raise ValidationError("normalization_budget must be positive")

    @property
    def rank(self) -> int:
        return len(self.generators)

    def check_word(self, w: Sequence[int]) -> Word:
        w = tuple(int(i) for i in w)
        if any(not 0 <= i < self.rank for i in w):
            raise ValidationError(f"word {w} is not over the generators of {self.name}")
        if not w and not self.has_identity:
            raise ValidationError(f"{self.name} has no identity; the empty word is not an element")
        return w


# --- normal forms -----------------------------------------------------------


def rewrite_normalize(w: Sequence[int], m: MonoidSpec) -> Word:
    """Leftmost-innermost rewriting to a fixpoint.

    At every step the occurrence of a left-hand side with the smallest start
    position is rewritten (ties go to the earlier rule).
    """
    s = "".join(chr(_CHAR_BASE + i) for i in w)
    rules = [
        ("".join(chr(_CHAR_BASE + i) for i in lhs), "".join(chr(_CHAR_BASE + i) for i in rhs))
        for lhs, rhs in m.rules
    ]
    steps = 0
    while True:
        best_pos, best_rule = -1, None
        for lhs, rhs in rules:
            pos = s.find(lhs)
            if pos != -1 and (best_pos == -1 or pos < best_pos):
                best_pos, best_rule = pos, (lhs, rhs)
                if pos == 0:
                    break
        if best_rule is None:
            return tuple(ord(c) - _CHAR_BASE for c in s)
        steps += 1
        if steps > m.normalization_budget:
            raise BudgetExhausted(
                f"{m.name}: no normal form after {m.normalization_budget} rewrite steps"
            )
        lhs, rhs = best_rule
        s = s[:best_pos] + rhs + s[best_pos + len(lhs):]


def normalize(w: Sequence[int], m: MonoidSpec) -> Word:
    w = m.check_word(w)
    if m.closed_form is not None:
        return m.closed_form(w)
    return rewrite_normalize(w, m)


def multiply(x: Sequence[int], y: Sequence[int], m: MonoidSpec) -> Word:
    return normalize(tuple(x) + tuple(y), m)


def words_up_to(m: MonoidSpec, length: int) -> Iterator[Word]:
    """All words of length <= ``length``, shortest first, lexicographic within a length."""
    from itertools import product

    start = 0 if m.has_identity else 1
    for ell in range(start, length + 1):
        yield from product(range(m.rank), repeat=ell)


def elements_up_to(m: MonoidSpec, length: int) -> set[Word]:
    return {normalize(w, m) for w in words_up_to(m, length)}


# --- word syntax ------------------------------------------------------------


def format_word(w: Sequence[int], m: MonoidSpec) -> str:
    if not w:
        return IDENTITY_TOKEN
    names = [m.generators[i] for i in w]
    if all(len(g) == 1 for g in m.generators):
        return "".join(names)
    return ".".join(names)


def parse_word(text: str, m: MonoidSpec) -> Word:
    """Inverse of :func:`format_word`.

    ``"e"`` (or the empty string) is the identity unless ``e`` is itself a
    generator name. Concatenated names are split greedily, longest first;
    use ``.`` as an explicit separator for ambiguous alphabets.
    """
    text = text.strip()
    index = {g: i for i, g in enumerate(m.generators)}
    if text in ("", IDENTITY_TOKEN) and text not in index:
        return m.check_word(())
    if "." in text:
        try:
            return m.check_word(index[tok] for tok in text.split("."))
        except KeyError as exc:
            raise ValidationError(f"unknown generator {exc.args[0]!r} in {text!r}") from None
    by_len = sorted(m.generators, key=len, reverse=True)
    out, pos = [], 0
    while pos < len(text):
        for g in by_len:
            if text.startswith(g, pos):
                out.append(index[g])
                pos += len(g)
                break
        else:
            raise ValidationError(f"cannot parse {text!r} over generators {m.generators}")
    return m.check_word(out)


# --- built-ins --------------------------------------------------------------


def _bicyclic_nf(w: Word) -> Word:
    # a=0, b=1; elements b^i a^j
    i = j = 0
    for letter in w:
        if letter == 0:
            j += 1
        elif j:
            j -= 1
        else:
            i += 1
    return (1,) * i + (0,) * j


def bicyclic_multiply(x: tuple[int, int], y: tuple[int, int]) -> tuple[int, int]:
    """Product of b^i a^j and b^k a^l given as exponent pairs."""
    i, j = x
    k, l = y
    if j >= k:
        return i, j - k + l
    return i + k - j, l


def bicyclic() -> MonoidSpec:
    return MonoidSpec("bicyclic", ("a", "b"), (((0, 1), ()),), closed_form=_bicyclic_nf)


def int_monoid() -> MonoidSpec:
    def nf(w: Word) -> Word:
        t = sum(1 if c == 0 else -1 for c in w)
        return (0,) * t if t >= 0 else (1,) * -t

    return MonoidSpec("int_monoid", ("a", "b"), (((0, 1), ()), ((1, 0), ())), closed_form=nf)


def cyclic(n: int) -> MonoidSpec:
    if n < 1:
        raise ValidationError("cyclic(n) needs n >= 1")
    return MonoidSpec(f"cyclic{n}", ("a",), (((0,) * n, ()),), closed_form=lambda w: (0,) * (len(w) % n))


def _letters(k: int, alphabet: str) -> tuple[str, ...]:
    if k <= len(alphabet):
        return tuple(alphabet[:k])
    return tuple(f"{alphabet[0]}{i}" for i in range(1, k + 1))


def free(k: int) -> MonoidSpec:
    if k < 1:
        raise ValidationError("free(k) needs k >= 1")
    return MonoidSpec(f"free{k}", _letters(k, "abcdfghijk"), (), closed_form=lambda w: w)


def free_comm(k: int) -> MonoidSpec:
    if k < 1:
        raise ValidationError("free_comm(k) needs k >= 1")
    rules = tuple(((j, i), (i, j)) for i in range(k) for j in range(i + 1, k))
    return MonoidSpec(f"free_comm{k}", _letters(k, "xyz"), rules, closed_form=lambda w: tuple(sorted(w)))


def _fresh(base: str, taken: set[str]) -> str:
    name, i = base, 1
    while name in taken:
        i += 1
        name = f"{base}{i}"
    return name


def adjoin_identity(m: MonoidSpec, name: Optional[str] = None) -> MonoidSpec:
    """Adjoin a new two-sided identity.

    The new identity is the empty word; a fresh generator named ``e_new``
    rewrites to it. If ``m`` already had an identity, that element becomes the
    ordinary generator ``e_old``: it still acts as identity on the old
    elements but no longer on the new one.
    """
    taken = set(m.generators)
    gens = list(m.generators)
    base_rank = len(gens)
    old_id = None
    if m.has_identity:
        old_id = len(gens)
        gens.append(_fresh("e_old", taken))
        taken.add(gens[-1])
        rules = [(lhs, rhs if rhs else (old_id,)) for lhs, rhs in m.rules]
        for g in range(base_rank):
            rules.append(((old_id, g), (g,)))
            rules.append(((g, old_id), (g,)))
        rules.append(((old_id, old_id), (old_id,)))
    else:
        rules = list(m.rules)
    new_id = len(gens)
    gens.append(_fresh("e_new", taken))
    rules.append(((new_id,), ()))

    closed = None
    if m.closed_form is not None:
        base_nf = m.closed_form

        def closed(w: Word) -> Word:
            rest = tuple(c for c in w if c != new_id)
            if not rest:
                return ()
            core = tuple(c for c in rest if c != old_id)
            if old_id is not None and not core:
                return (old_id,)
            nf = base_nf(core)
            return nf if nf or old_id is None else (old_id,)

    return MonoidSpec(
        name or f"{m.name}_hat",
        tuple(gens),
        tuple(rules),
        has_identity=True,
        normalization_budget=m.normalization_budget,
        closed_form=closed,
    )


def bicyclic_hat() -> MonoidSpec:
    return adjoin_identity(bicyclic(), name="bicyclic_hat")


_BUILTIN_RE = re.compile(r"^(free_comm|free|cyclic)\(?(\d+)\)?$")


def builtin(name: str) -> MonoidSpec:
    """Look a built-in up by name: ``bicyclic``, ``bicyclic_hat``,
    ``int_monoid``, ``freeK``, ``free_commK``, ``cyclicN`` (``free(2)`` also
    accepted)."""
    simple = {"bicyclic": bicyclic, "bicyclic_hat": bicyclic_hat, "int_monoid": int_monoid}
    if name in simple:
        return simple[name]()
    match = _BUILTIN_RE.match(name)
    if match:
        kind, k = match.group(1), int(match.group(2))
        return {"free": free, "free_comm": free_comm, "cyclic": cyclic}[kind](k)
    raise ValidationError(f"unknown built-in monoid {name!r}")


def monoid_to_json(m: MonoidSpec) -> dict:
    return {
        "name": m.name,
        "generators": list(m.generators),
        "rules": [[format_word(l, m), format_word(r, m)] for l, r in m.rules],
        "has_identity": m.has_identity,
    }


def monoid_from_json(obj) -> MonoidSpec:
    """Accepts a built-in name or the JSON object written by :func:`monoid_to_json`.

    An object whose name is a built-in and whose content matches it comes back
    as the built-in (with its closed-form normalizer).
    """
    if isinstance(obj, str):
        return builtin(obj)
    try:
        name = obj["name"]
        gens = tuple(obj["generators"])
        has_identity = bool(obj.get("has_identity", True))
        raw_rules = obj.get("rules", [])
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed monoid JSON: {exc}") from None
    try:
        known = builtin(name)
    except ValidationError:
        known = None
    if known is not None and monoid_to_json(known) == {
        "name": name, "generators": list(gens), "rules": [list(r) for r in raw_rules], "has_identity": has_identity,
    }:
        return known
    shell = MonoidSpec(name, gens, (), has_identity=True)
    rules = tuple((parse_word(l, shell), parse_word(r, shell)) for l, r in raw_rules)
    return MonoidSpec(
        name, gens, rules, has_identity=has_identity,
        normalization_budget=int(obj.get("normalization_budget", 10_000)),
    )
