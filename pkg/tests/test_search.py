import importlib.util
import os
import subprocess
import sys
from fractions import Fraction

import numpy as np
import pytest

from _oracles import brute_min_eps
from soficlab import _kernels
from soficlab.action import defects, keps_constraints
from soficlab.algebra import bicyclic, cyclic, free_comm, parse_word
from soficlab.errors import BudgetExceeded, ValidationError
from soficlab.search import search_exhaustive, search_random

BICYCLIC_K = [parse_word(w, bicyclic()) for w in ("e", "a", "b", "ba")]
KERNELS = ["jit", "numpy"]


def cyclic2_K():
    return [(), (0,)]


@pytest.mark.parametrize("kernel", KERNELS)
@pytest.mark.parametrize("n", [1, 2, 3])
def test_bicyclic_matches_brute_force(n, kernel):
    m = bicyclic()
    res = search_exhaustive(m, BICYCLIC_K, n, kernel=kernel)
    assert res.min_eps == brute_min_eps(m, BICYCLIC_K, n)
    assert defects(res.witness).eps_overall == res.min_eps


@pytest.mark.parametrize("kernel", KERNELS)
def test_normalized_matches_brute_force(kernel):
    m = bicyclic()
    for n in (2, 3):
        res = search_exhaustive(m, BICYCLIC_K, n, normalized=True, kernel=kernel)
        assert res.min_eps == brute_min_eps(m, BICYCLIC_K, n, normalized=True)
        assert (res.witness[()] == np.arange(n)).all()


def test_frozen_bicyclic_values():
    m = bicyclic()
    assert search_exhaustive(m, BICYCLIC_K, 1).min_eps == 1
    assert search_exhaustive(m, BICYCLIC_K, 2).min_eps == Fraction(1, 2)
    assert search_exhaustive(m, BICYCLIC_K, 3).min_eps == Fraction(1, 3)


def test_other_monoids_match_brute_force():
    for m, K, n in ((cyclic(2), cyclic2_K(), 2), (cyclic(2), cyclic2_K(), 3), (free_comm(2), [(), (0,), (1,)], 2)):
        assert search_exhaustive(m, K, n).min_eps == brute_min_eps(m, K, n)


def test_cyclic2_exact_on_even_sets():
    m = cyclic(2)
    for n in (2, 4):
        res = search_exhaustive(m, cyclic2_K(), n)
        assert res.min_eps == 0
        assert sorted(res.witness[(0,)].tolist()) == list(range(n))


def test_kernels_agree_on_nodes_and_witness():
    m = bicyclic()
    a = search_exhaustive(m, BICYCLIC_K, 3, kernel="jit")
    b = search_exhaustive(m, BICYCLIC_K, 3, kernel="numpy")
    assert a.to_json() == b.to_json()


@pytest.mark.parametrize("workers", [2, 8])
def test_exhaustive_independent_of_workers(workers):
    m = bicyclic()
    base = search_exhaustive(m, BICYCLIC_K, 3, workers=1)
    other = search_exhaustive(m, BICYCLIC_K, 3, workers=workers)
    assert other.to_json() == base.to_json()


def test_budget_exceeded_reports_partial():
    with pytest.raises(BudgetExceeded) as info:
        search_exhaustive(bicyclic(), BICYCLIC_K, 3, budget=100)
    assert info.value.partial is not None and info.value.partial.partial


def test_search_rejects_non_normal_K():
    with pytest.raises(ValidationError):
        search_exhaustive(bicyclic(), [(0, 1)], 2)
    with pytest.raises(ValidationError):
        search_exhaustive(bicyclic(), [(0,), (0,)], 2)


@pytest.mark.parametrize("kernel", KERNELS)
def test_random_is_an_upper_bound(kernel):
    m = bicyclic()
    for n in (2, 3):
        exact = search_exhaustive(m, BICYCLIC_K, n).min_eps
        res = search_random(m, BICYCLIC_K, n, iterations=50, seed=1, kernel=kernel)
        assert res.min_eps >= exact
        assert defects(res.witness).eps_overall <= res.min_eps


def test_random_kernels_agree():
    m = bicyclic()
    a = search_random(m, BICYCLIC_K, 4, iterations=20, seed=5, kernel="jit")
    b = search_random(m, BICYCLIC_K, 4, iterations=20, seed=5, kernel="numpy")
    assert a.to_json() == b.to_json()


def test_random_independent_of_workers():
    m = bicyclic()
    ref = search_random(m, BICYCLIC_K, 4, iterations=30, seed=9, workers=1).to_json()
    for w in (2, 8):
        assert search_random(m, BICYCLIC_K, 4, iterations=30, seed=9, workers=w).to_json() == ref


def test_random_finds_exact_rotation():
    res = search_random(cyclic(5), [(), (0,)], 5, iterations=200, seed=0)
    assert res.min_eps == 0


def test_random_zero_iterations_reports_initial_draw():
    res = search_random(bicyclic(), BICYCLIC_K, 3, iterations=0, seed=4)
    assert res.min_eps == defects(res.witness).eps_overall


def test_score_kernels_agree():
    m = bicyclic()
    c = keps_constraints(m, BICYCLIC_K)
    rng = np.random.default_rng(0)
    for _ in range(50):
        t = rng.integers(0, 5, size=(4, 5)).astype(np.int64)
        assert _kernels.score_jit(t, c.mult, c.sep, c.identity) == _kernels.score_np(t, c.mult, c.sep, c.identity)


HAVE_NUMBA = importlib.util.find_spec("numba") is not None


@pytest.mark.parametrize("flag,expect", [("1", "_dfs_np"), ("0", "_dfs_jit" if HAVE_NUMBA else "_dfs_np")])
def test_env_flag_selects_kernel(flag, expect):
    env = dict(os.environ, SOFICLAB_DISABLE_JIT=flag)
    out = subprocess.run(
        [sys.executable, "-c", "from soficlab import _kernels; print(_kernels.dfs.__name__)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == expect
