"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run directly (``python tests/test_acceptance.py``) for just the verdicts.
"""

from __future__ import annotations

import sys
import time
from fractions import Fraction
from itertools import product
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from _oracles import brute_min_eps, brute_rooted_iso, random_digraph  # noqa: E402
from _report import record  # noqa: E402
from soficlab.action import (  # noqa: E402
    DiscreteMeasure, defects, finite_quotient_action, generator_graph, invariance_defect, invertibility_defect,
    pushforward, total_variation, weiss_fraction,
)
from soficlab.algebra import (  # noqa: E402
    bicyclic, bicyclic_multiply, cyclic, elements_up_to, free, free_comm, int_monoid, parse_word, rewrite_normalize,
)
from soficlab.cayley import RootedBall, canonical_form, cayley_ball  # noqa: E402
from soficlab.cli import main  # noqa: E402
from soficlab.dynsys import ShiftSystem, build_approximation, is_keps_approximation, nu_prime, nu_true, weak_discrepancy  # noqa: E402
from soficlab.search import search_exhaustive, search_random  # noqa: E402

BICYCLIC_K = ("e", "a", "b", "ba")
# regression baselines, computed once by full enumeration of all table tuples
BICYCLIC_BASELINE = {1: Fraction(1), 2: Fraction(1, 2), 3: Fraction(1, 3)}


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


# --- 1 ----------------------------------------------------------------------


def criterion_1():
    m = bicyclic()

    def run():
        bad = 0
        for i, j, k, l in product(range(11), repeat=4):
            w = (1,) * i + (0,) * j + (1,) * k + (0,) * l
            p, q = bicyclic_multiply((i, j), (k, l))
            bad += rewrite_normalize(w, m) != (1,) * p + (0,) * q
        return bad

    bad, dt = _timed(run)
    return bad == 0 and dt < 1.0, f"14641 products, {bad} mismatches, {dt:.2f}s"


# --- 2 ----------------------------------------------------------------------


def criterion_2():
    def run():
        bad = []
        for r in range(9):
            for m, expect in ((free(2), 2 ** (r + 1) - 1), (bicyclic(), (r + 1) * (r + 2) // 2)):
                n = cayley_ball(m, r).n
                if n != expect or n != len(elements_up_to(m, r)):
                    bad.append((m.name, r, n))
        return bad

    bad, dt = _timed(run)
    return not bad and dt < 1.0, f"r <= 8, mismatches {bad}, {dt:.2f}s"


# --- 3 ----------------------------------------------------------------------


def criterion_3():
    rng = np.random.default_rng(20240601)

    def random_ball():
        n = int(rng.integers(1, 8))
        vl = ("x", "y") if rng.random() < 0.5 else None
        g = random_digraph(rng, n, ("a", "b"), p=float(rng.uniform(0.4, 1.0)), vlabels=vl)
        return RootedBall(g, int(rng.integers(n)), n, "directed")

    def run():
        disagree = positives = 0
        prev = random_ball()
        for i in range(500):
            if i % 2:
                # a relabelled copy, sometimes with one edge moved
                perm = rng.permutation(prev.n).tolist()
                g = prev.graph.relabel(perm)
                edges = list(g.edges)
                if edges and rng.random() < 0.3:
                    s, a, _ = edges.pop(int(rng.integers(len(edges))))
                    edges.append((s, a, int(rng.integers(g.n))))
                g = type(g)(g.n, tuple(edges), g.vertex_labels)
                cur = RootedBall(g, perm[prev.root], prev.radius, "directed")
            else:
                cur = random_ball()
            expect = brute_rooted_iso(prev, cur)
            positives += expect
            disagree += (canonical_form(prev) == canonical_form(cur)) != expect
            prev = cur
        return disagree, positives

    (disagree, positives), dt = _timed(run)
    return disagree == 0 and dt < 30, f"500 pairs, {positives} isomorphic, {disagree} disagreements, {dt:.1f}s"


# --- 4 ----------------------------------------------------------------------


def criterion_4():
    rng = np.random.default_rng(77)

    def random_measure(n):
        raw = rng.integers(0, 20, size=n)
        raw[int(rng.integers(n))] += 1
        return DiscreteMeasure(raw.astype(np.int64), int(raw.sum()))

    def run():
        bad = 0
        for _ in range(200):
            n = int(rng.integers(1, 13))
            p, q = random_measure(n), random_measure(n)
            den = p.den * q.den
            diff = p.num * q.den - q.num * p.den
            masks = (np.arange(2**n)[:, None] >> np.arange(n)[None, :]) & 1
            oracle = Fraction(int(np.abs(masks @ diff).max()), den)
            bad += total_variation(p, q) != oracle
        return bad

    bad, dt = _timed(run)
    return bad == 0 and dt < 30, f"200 pairs, n <= 12, {bad} mismatches, {dt:.1f}s"


# --- 5 ----------------------------------------------------------------------


def _exact_checks(a, radii):
    uniform = DiscreteMeasure.uniform(a.n)
    ok = defects(a).eps_overall == 0
    ok &= invariance_defect(a, uniform) == 0
    ok &= all(v == 0 for v in invertibility_defect(a).values())
    g = generator_graph(a)
    ok &= all(weiss_fraction(g, cayley_ball(a.monoid, r), r) == 1 for r in radii)
    return ok


def criterion_5():
    failures = []
    for n in range(1, 13):
        m = cyclic(n)
        K = sorted(elements_up_to(m, n), key=lambda w: (len(w), w))
        a = finite_quotient_action(m, K, n, {0: [(x + 1) % n for x in range(n)]})
        if not _exact_checks(a, (0, 1, 2)):
            failures.append(f"cyclic{n}")
    fc = free_comm(2)
    K = sorted(elements_up_to(fc, 2), key=lambda w: (len(w), w))
    for p, q in ((4, 4), (4, 6), (5, 5), (7, 7)):
        pts = [(x, y) for x in range(p) for y in range(q)]
        idx = {pt: i for i, pt in enumerate(pts)}
        gens = {0: [idx[((x + 1) % p, y)] for x, y in pts], 1: [idx[(x, (y + 1) % q)] for x, y in pts]}
        if not _exact_checks(finite_quotient_action(fc, K, p * q, gens), (0, 1, 2)):
            failures.append(f"torus{p}x{q}")
    return not failures, f"cyclic(1..12) and 4 tori, failures {failures}"


# --- 6 ----------------------------------------------------------------------


def criterion_6():
    m = int_monoid()
    bad = []
    checked = 0
    for r in (1, 2):
        model = cayley_ball(m, r)
        for n in range(2 * r + 3, 2 * r + 16):
            a = finite_quotient_action(
                m, [(0,), (1,)], n, {0: [(x + 1) % n for x in range(n)], 1: [(x - 1) % n for x in range(n)]}
            )
            checked += 1
            if weiss_fraction(generator_graph(a), model, r) != 1:
                bad.append((r, n))
    return not bad, f"{checked} cycles, failures {bad}"


# --- 7 ----------------------------------------------------------------------


def criterion_7():
    m = bicyclic()
    K = [parse_word(w, m) for w in BICYCLIC_K]
    full_enumeration = (3**3) ** len(K)
    got = {}

    def run():
        for n in (1, 2, 3):
            res = search_exhaustive(m, K, n, budget=full_enumeration)
            got[n] = (res.min_eps, res.nodes)

    _, dt = _timed(run)
    oracle = {n: brute_min_eps(m, K, n) for n in (2, 3)}
    ok = got[1][0] == 1
    ok &= all(got[n][0] > 0 and got[n][0] == BICYCLIC_BASELINE[n] == oracle[n] for n in (2, 3))
    ok &= got[3][1] <= full_enumeration and dt < 600
    detail = ", ".join(f"n={n}: {got[n][0]} ({got[n][1]} nodes)" for n in (1, 2, 3))
    return ok, f"{detail}, {dt:.2f}s"


# --- 8 ----------------------------------------------------------------------


def search_corpus():
    """Actions produced by the searches, plus raw random starting points."""
    out = []
    b = bicyclic()
    bK = [parse_word(w, b) for w in BICYCLIC_K]
    for n in (1, 2, 3):
        out.append(search_exhaustive(b, bK, n).witness)
        out.append(search_exhaustive(b, bK, n, normalized=True).witness)
    for n in (2, 3, 4):
        out.append(search_exhaustive(cyclic(2), [(), (0,)], n).witness)
    out.append(search_exhaustive(free_comm(2), [(), (0,), (1,)], 2).witness)
    for seed in range(3):
        for n in (4, 5, 6):
            out.append(search_random(b, bK, n, iterations=10, seed=seed).witness)
            out.append(search_random(int_monoid(), [(), (0,), (1,)], n, iterations=10, seed=seed).witness)
            out.append(search_random(cyclic(3), [(), (0,), (0, 0)], n, iterations=10, seed=seed).witness)
    for seed in range(20):
        out.append(search_random(b, bK, 6, iterations=0, seed=seed).witness)
    return out


def criterion_8():
    corpus = search_corpus()
    grid = [Fraction(j, 100) for j in range(0, 101)]
    violations = active = 0
    for a in corpus:
        uniform = DiscreteMeasure.uniform(a.n)
        inv = invertibility_defect(a)
        eps_values = sorted(set(grid) | {Fraction(j, 4 * a.n) for j in range(4 * a.n + 1)})
        for s in a.K:
            tv = total_variation(uniform, pushforward(uniform, a[s]))
            for eps in eps_values:
                if inv[s] > 2 * eps:
                    active += 1
                    violations += not tv > eps / 2
    return violations == 0, f"{len(corpus)} actions, {active} (s, eps) cases with the premise, {violations} violations"


# --- 9 ----------------------------------------------------------------------


def criterion_9():
    t0 = time.perf_counter()
    system = ShiftSystem()
    truth = nu_true(system, 1)
    sizes_ok, tvs, discs = True, [], []
    for k in range(1, 9):
        a = build_approximation(system, 2, k)
        sizes_ok &= a.size == 4 * (2 ** (k + 1) - 1)
        tvs.append(total_variation(a.mu_prime, pushforward(a.mu_prime, a.psi[(0,)])))
        discs.append(weak_discrepancy(truth, nu_prime(a, 1)))
    tv_ok = tvs == [Fraction(1, k + 1) for k in range(1, 9)]
    disc_ok = all(d <= Fraction(1, k + 1) for k, d in zip(range(1, 9), discs))
    decreasing = all(x > y for x, y in zip(tvs, tvs[1:])) and all(x > y for x, y in zip(discs, discs[1:]))
    reports = []
    for k in (20, 21):
        ok, rep = is_keps_approximation(build_approximation(system, 2, k), 0.1, 1, true_measure=truth)
        reports.append((k, ok, rep))
    keps_ok = all(ok for _, ok, _ in reports)
    dt = time.perf_counter() - t0
    detail = (
        f"sizes {sizes_ok}, TV = 1/(k+1) {tv_ok}, discrepancies {[str(d) for d in discs]}, "
        + ", ".join(
            f"k={k}: keps {ok} (inv {rep.invariance}, disc {rep.discrepancy}, separation {rep.eps_separation})"
            for k, ok, rep in reports
        )
        + f", {dt:.1f}s"
    )
    return sizes_ok and tv_ok and disc_ok and decreasing and keps_ok and dt < 60, detail


# --- 10 ---------------------------------------------------------------------

DETERMINISM_CONFIGS = [
    ["search", "--monoid", "bicyclic", "--K", "e,a,b,ba", "--n", "3", "--mode", "exhaustive"],
    ["search", "--monoid", "bicyclic", "--K", "e,a,b,ba", "--n", "4", "--mode", "random", "--iterations", "16", "--seed", "11"],
    ["search", "--monoid", "int_monoid", "--K", "e,a,b", "--n", "5", "--mode", "random", "--iterations", "16", "--seed", "2"],
    ["dynsys", "compare", "--r", "2", "--k", "5", "--level", "1"],
    ["dynsys", "compare", "--r", "2", "--k", "4", "--level", "2"],
    ["dynsys", "compare", "--r", "3", "--k", "3", "--level", "2", "--eps", "1/4"],
]


def criterion_10(tmp: Path):
    differing = []
    for i, cfg in enumerate(DETERMINISM_CONFIGS):
        outputs = set()
        for w in (1, 2, 8):
            target = tmp / f"cfg{i}_w{w}.json"
            if main(cfg + ["--workers", str(w), "--out", str(target)]) != 0:
                outputs.add(None)
            outputs.add(target.read_bytes() if target.exists() else None)
        if len(outputs) != 1 or None in outputs:
            differing.append(" ".join(cfg[:2]))
    return not differing, f"{len(DETERMINISM_CONFIGS)} configurations x workers 1/2/8, differing {differing}"


# --- pytest entry points ----------------------------------------------------

TITLES = {
    1: "bicyclic closed form vs rewriting",
    2: "Cayley ball counts",
    3: "canonical form vs brute-force isomorphism",
    4: "total variation vs subset maximum",
    5: "exact actions have zero defects",
    6: "cycles approximate Z",
    7: "bicyclic obstruction probe",
    8: "non-invertibility forces non-invariance",
    9: "doubling-map approximation",
    10: "determinism across worker counts",
}


@pytest.mark.parametrize("number", range(1, 10))
def test_criterion(number):
    ok, detail = globals()[f"criterion_{number}"]()
    record(number, ok, TITLES[number], detail)
    assert ok, detail


def test_criterion_10(tmp_path):
    ok, detail = criterion_10(tmp_path)
    record(10, ok, TITLES[10], detail)
    assert ok, detail


if __name__ == "__main__":
    import tempfile

    results = []
    for number in range(1, 10):
        ok, detail = globals()[f"criterion_{number}"]()
        results.append(ok)
        record(number, ok, TITLES[number], detail)
    with tempfile.TemporaryDirectory() as tmp:
        ok, detail = criterion_10(Path(tmp))
        results.append(ok)
        record(10, ok, TITLES[10], detail)
    sys.exit(0 if all(results) else 1)
