import itertools
import json
import math

import numpy as np
import pytest
from scipy.optimize import brentq

from soficglauber import analysis
from soficglauber.analysis import (
    Bisection,
    balancing_flips,
    bisect_from_microstate,
    brute_force_mcut,
    cut_size,
    edge_disagreement,
    enumerate_good_models,
    eps_c_asymptotic,
    eps_f,
    eps_f_asymptote,
    f_ising,
    good_model_distances,
    joining_marginal,
    local_search_mcut,
    switching_effect,
    threshold_report,
)
from soficglauber.dynamics import burn_in_sample
from soficglauber.empirical import PatternDistribution, empirical_marginal, markov_tree_marginal, tv_distance
from soficglauber.errors import InvalidInputError, ResourceLimitError
from soficglauber.sofic import SoficMap, uniform_random
from soficglauber.spin import all_states, ising_from_epsilon


def cycle(n):
    return SoficMap.from_permutations([np.roll(np.arange(n), -1)])


def itertools_mcut(sigma):
    n = sigma.n
    best = None
    for ones in itertools.combinations(range(n), n // 2):
        side = np.zeros(n, int)
        side[list(ones)] = 1
        c = int((side[sigma.forward] != side[None, :]).sum())
        best = c if best is None else min(best, c)
    return best


def test_f_ising_values():
    assert f_ising(0.5, 3) == math.log(2)
    assert f_ising(0.1, 2) == pytest.approx(-0.0430, abs=1e-4)
    assert f_ising(0.05, 2) < 0
    with pytest.raises(InvalidInputError):
        f_ising(0.0, 2)


def test_f_is_concave_and_increasing():
    grid = np.linspace(0.01, 0.5, 200)
    for r in (2, 5):
        f = np.array([f_ising(e, r) for e in grid])
        assert np.all(np.diff(f) > 0)
        assert np.all(f[:-2] - 2 * f[1:-1] + f[2:] <= 1e-12)


@pytest.mark.parametrize("r", [2, 3, 5, 10, 50])
def test_eps_f_is_the_root(r):
    oracle = brentq(lambda e: f_ising(e, r), 1e-12, 0.5, xtol=1e-15)
    assert eps_f(r) == pytest.approx(oracle, abs=1e-9)
    assert abs(f_ising(eps_f(r), r)) < 1e-8


def test_eps_f_rank_two_and_errors():
    assert eps_f(2) == pytest.approx(0.1101, abs=1e-3)
    with pytest.raises(InvalidInputError):
        eps_f(1)


def test_asymptotes():
    for r in (50, 100, 200, 1000):
        assert math.sqrt(2 * r) * abs(eps_f(r) - eps_f_asymptote(r)) <= 0.05
        assert eps_c_asymptotic(r) > eps_f_asymptote(r)
    assert round(eps_c_asymptotic(2), 4) == 0.1184
    ranks = [2, 3, 5, 10, 100]
    assert all(eps_c_asymptotic(a) < eps_c_asymptotic(b) for a, b in zip(ranks, ranks[1:]))


def test_threshold_report_serializes():
    d = threshold_report(3).to_dict()
    assert json.loads(json.dumps(d)) == d
    assert d["schema_version"] == analysis.SCHEMA_VERSION and d["eps_c_is_asymptotic"]


def test_joinings():
    prod = joining_marginal("product", 0.3, 2, 1)
    diag = joining_marginal("diagonal", 0.3, 2, 1)
    assert abs(prod.weights.sum() - 1) < 1e-12 and abs(diag.weights.sum() - 1) < 1e-12
    assert len(diag) == 32
    assert tv_distance(prod, diag) > 0.5
    with pytest.raises(InvalidInputError):
        joining_marginal("other", 0.3, 2, 1)


def test_good_model_distances_match_direct_oracle():
    sigma = uniform_random(8, 2, 0)
    Q = markov_tree_marginal(0.3, 2, 1)
    fast = good_model_distances(sigma, Q)
    for i, x in enumerate(all_states(8, 2)):
        assert fast[i] == pytest.approx(tv_distance(empirical_marginal(x, sigma, 1, q=2), Q), abs=1e-12)


def test_enumeration_examples():
    sigma = uniform_random(10, 2, 1)
    Q = markov_tree_marginal(0.3, 2, 1)
    assert enumerate_good_models(sigma, Q, eta=1.0) == 2**10
    counts = [enumerate_good_models(sigma, Q, eta=e) for e in np.linspace(0, 1, 11)]
    assert all(a <= b for a, b in zip(counts, counts[1:]))
    impossible = PatternDistribution(1, 2, 2, [[1, 0, 0, 0, 0]], [1.0])
    assert enumerate_good_models(sigma, impossible, eta=1e-9) == 0
    with pytest.raises(ResourceLimitError):
        enumerate_good_models(uniform_random(30, 2, 0), Q, cap=2**20)


def test_cut_examples():
    four = cycle(4)
    assert cut_size(four, Bisection([0, 1, 0, 1])) == 4
    assert cut_size(four, Bisection([0, 0, 1, 1])) == 2
    with pytest.raises(InvalidInputError):
        Bisection([0, 0, 0, 1])
    assert brute_force_mcut(four) == 2
    assert brute_force_mcut(cycle(7)) == 2
    with pytest.raises(ResourceLimitError):
        brute_force_mcut(uniform_random(30, 2, 0))


@pytest.mark.parametrize("seed", range(30))
def test_brute_force_matches_itertools(seed):
    rng = np.random.default_rng(seed)
    sigma = uniform_random(int(rng.integers(2, 11)), int(rng.integers(1, 4)), rng)
    assert brute_force_mcut(sigma) == itertools_mcut(sigma)


def test_local_search_properties():
    sigma = uniform_random(60, 2, 2)
    cut, b = local_search_mcut(sigma, restarts=5, seed=3)
    assert cut == cut_size(sigma, b) and 0 <= cut <= 2 * 60
    assert local_search_mcut(sigma, restarts=5, seed=3)[0] == cut
    more = local_search_mcut(sigma, restarts=10, seed=3)[0]
    assert more <= cut
    with pytest.raises(InvalidInputError):
        local_search_mcut(sigma, restarts=0)


def test_balancing_and_bisect():
    assert balancing_flips(10, 10) == 5 and balancing_flips(5, 10) == 0 and balancing_flips(6, 11) == 0
    b = bisect_from_microstate([1, 1, 1, 1, 0, 0])
    assert b.side.tolist() == [0, 1, 1, 1, 0, 0]
    assert bisect_from_microstate([0, 1, 0, 1]).side.tolist() == [0, 1, 0, 1]
    with pytest.raises(InvalidInputError):
        bisect_from_microstate([0, 2, 1])


@pytest.mark.parametrize("n", [5, 8, 9])
def test_bisect_flips_are_minimal(n):
    for x in itertools.product((0, 1), repeat=n):
        x = np.array(x)
        y = bisect_from_microstate(x).side
        best = min(
            int((np.isin(np.arange(n), ones) != x.astype(bool)).sum())
            for k in (n // 2, n - n // 2)
            for ones in itertools.combinations(range(n), k)
        )
        assert int((y != x).sum()) == best == balancing_flips(int(x.sum()), n)


def test_switching_effect():
    assert switching_effect(None, trials=30, seed=4, n=10) <= 2
    assert switching_effect(uniform_random(8, 2, 5), trials=20, seed=6) <= 2
    with pytest.raises(ResourceLimitError):
        switching_effect(uniform_random(40, 2, 0), trials=1)


def test_good_model_cut_chain():
    """cut <= (edge disagreements) + (flips) * 2r for a bisected microstate."""
    eps, r, n = 0.45, 2, 1000
    phi = ising_from_epsilon(eps)
    for seed in range(5):
        sigma = uniform_random(n, r, seed)
        x = burn_in_sample(sigma, phi, 20.0, seed=100 + seed)
        flips = balancing_flips(int(x.sum()), n)
        cut = cut_size(sigma, bisect_from_microstate(x))
        assert cut <= edge_disagreement(x, sigma) * r * n + 2 * r * flips
        assert abs(edge_disagreement(x, sigma) - eps) < 0.05
