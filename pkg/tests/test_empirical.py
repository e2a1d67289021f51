import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from soficglauber.empirical import (
    PatternDistribution,
    all_patterns,
    dbar_bounds,
    empirical_marginal,
    gibbs_defect,
    markov_tree_marginal,
    pattern_counts,
    pullback_pattern,
    pullback_rows,
    tail_mass,
    tv_distance,
    tv_to_markov_tree,
    uniform_product_marginal,
)
from soficglauber.errors import InvalidInputError
from soficglauber.freegroup import ball
from soficglauber.sofic import SoficMap, act, uniform_random
from soficglauber.spin import ising_from_epsilon


def tree_probability(eps, r, R, labels):
    """Root uniform, then each child flips its parent's symbol with probability eps."""
    cb = ball(r, R)
    p = 0.5
    for k, w in enumerate(cb.words[1:], start=1):
        parent = cb.index[type(w)(w.letters[1:], r)]
        p *= eps if labels[k] != labels[parent] else 1 - eps
    return p


def dense(P):
    out = {}
    for pat, w in P.items():
        out[pat.labels] = w
    return out


def test_pullback_matches_action():
    sigma = uniform_random(40, 2, 0)
    x = np.random.default_rng(1).integers(0, 3, size=40)
    cb = ball(2, 2)
    for v in (0, 13, 39):
        pat = pullback_pattern(x, sigma, v, 2)
        assert pat.labels == tuple(int(x[act(sigma, w, v)]) for w in cb.words)
    assert np.array_equal(pullback_rows(x, sigma, 0)[:, 0], x)


def test_constant_state_gives_point_mass():
    sigma = uniform_random(25, 2, 2)
    P = empirical_marginal(np.ones(25, int), sigma, 2)
    assert len(P) == 1 and P.weights[0] == 1.0 and P.patterns[0].tolist() == [1] * 17


def test_swap_example():
    sigma = SoficMap.from_permutations([[1, 0]])
    P = empirical_marginal([1, 0], sigma, 1)
    assert dense(P) == {(0, 1, 1): 0.5, (1, 0, 0): 0.5}
    assert P.counts.tolist() == [1, 1]


@settings(max_examples=40)
@given(st.integers(0, 10**6), st.integers(1, 3))
def test_marginal_consistency(seed, R):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 60))
    sigma = uniform_random(n, 2, seed)
    x = rng.integers(0, 2, size=n)
    P = empirical_marginal(x, sigma, R, q=2)
    assert abs(P.weights.sum() - 1) <= 1e-12 and P.counts.sum() == n
    lower = P.truncate(R - 1)
    direct = empirical_marginal(x, sigma, R - 1, q=2)
    assert np.array_equal(lower.patterns, direct.patterns)
    assert np.allclose(lower.weights, direct.weights)
    assert np.array_equal(lower.counts, direct.counts)


def test_pattern_counts_agree_with_marginal():
    sigma = uniform_random(30, 2, 3)
    x = np.random.default_rng(4).integers(0, 2, size=30)
    counts = pattern_counts(x, sigma, 1)
    P = empirical_marginal(x, sigma, 1, q=2)
    for row, c in zip(P.patterns, P.counts):
        assert counts[row.tobytes()] == c


def test_tree_marginal_examples():
    assert np.allclose(markov_tree_marginal(0.3, 2, 0).weights, 0.5)
    P = markov_tree_marginal(0.1, 2, 1)
    assert P.weight_of([1, 1, 1, 1, 1]) == pytest.approx(0.5 * 0.9**4)
    assert P.weight_of([1, 0, 0, 0, 0]) == pytest.approx(0.5 * 0.1**4)


@pytest.mark.parametrize("r,R", [(1, 3), (2, 1), (2, 2), (3, 1)])
@pytest.mark.parametrize("eps", [0.05, 0.3, 0.5])
def test_tree_marginal_against_generative_oracle(r, R, eps):
    P = markov_tree_marginal(eps, r, R)
    assert abs(P.weights.sum() - 1) <= 1e-12
    pick = np.random.default_rng(R).choice(len(P), size=min(len(P), 300), replace=False)
    for k in pick:
        labels = tuple(int(a) for a in P.patterns[k])
        assert P.weights[k] == pytest.approx(tree_probability(eps, r, R, labels), rel=1e-12)
    if R >= 1:
        lower = P.truncate(R - 1)
        assert np.allclose(lower.weights, markov_tree_marginal(eps, r, R - 1).weights)


def test_tv_examples():
    P = markov_tree_marginal(0.2, 2, 1)
    assert tv_distance(P, P) == 0.0
    a = PatternDistribution(0, 2, 2, [[0]], [1.0])
    b = PatternDistribution(0, 2, 2, [[1]], [1.0])
    assert tv_distance(a, b) == 1.0
    with pytest.raises(InvalidInputError):
        tv_distance(P, markov_tree_marginal(0.2, 2, 0))


def test_tv_against_dense_oracle():
    rng = np.random.default_rng(5)
    rows = all_patterns(2, 1, 2)
    for _ in range(50):
        pw = rng.dirichlet(np.ones(32)) * (rng.random(32) < 0.4)
        qw = rng.dirichlet(np.ones(32))
        if pw.sum() == 0:
            continue
        pw /= pw.sum()
        keep = pw > 0
        P = PatternDistribution(1, 2, 2, rows[keep], pw[keep])
        Q = PatternDistribution(1, 2, 2, rows, qw)
        assert tv_distance(P, Q) == pytest.approx(0.5 * np.abs(pw - qw).sum(), abs=1e-12)


def test_tv_to_markov_tree_matches_full_enumeration():
    sigma = uniform_random(300, 2, 6)
    x = np.random.default_rng(7).integers(0, 2, size=300)
    for R, eps in [(1, 0.3), (2, 0.45)]:
        P = empirical_marginal(x, sigma, R, q=2)
        assert tv_to_markov_tree(P, eps) == pytest.approx(tv_distance(P, markov_tree_marginal(eps, 2, R)), abs=1e-12)


def test_tail_mass_against_series():
    for r in (1, 2, 3, 5):
        for R in (0, 1, 2, 4):
            series = sum((2 / 3) * ((2 * r - 1) / (3 * r)) ** (s - 1) for s in range(R + 1, 400))
            assert tail_mass(r, R) == pytest.approx(series, rel=1e-12)
    assert tail_mass(2, 3) == pytest.approx((4 / 3) * 0.5**3)


def test_dbar_bounds():
    P = markov_tree_marginal(0.2, 2, 1)
    assert dbar_bounds(P, P) == (0.0, pytest.approx(tail_mass(2, 1)))
    a = PatternDistribution(0, 2, 2, [[0]], [1.0])
    b = PatternDistribution(0, 2, 2, [[1]], [1.0])
    assert dbar_bounds(a, b) == (1.0, 3.0)
    rng = np.random.default_rng(8)
    rows = all_patterns(2, 1, 2)
    for _ in range(100):
        P = PatternDistribution(1, 2, 2, rows, rng.dirichlet(np.ones(32)))
        Q = PatternDistribution(1, 2, 2, rows, rng.dirichlet(np.ones(32)))
        lo, hi = dbar_bounds(P, Q)
        assert 0 <= lo <= hi <= 3


def test_gibbs_defect_examples():
    for eps in (0.1, 0.3, 0.5):
        P = markov_tree_marginal(eps, 2, 2)
        assert gibbs_defect(P, ising_from_epsilon(eps)) <= 1e-10
    point = PatternDistribution(1, 2, 2, [[1] * 5], [1.0])
    assert gibbs_defect(point, ising_from_epsilon(0.5)) == pytest.approx(0.5)
    assert gibbs_defect(uniform_product_marginal(2, 1), ising_from_epsilon(0.5)) == pytest.approx(0.0, abs=1e-14)
    # radius 1 only sees the root marginal, which stays symmetric; radius 2 sees the mismatch
    assert gibbs_defect(markov_tree_marginal(0.1, 2, 1), ising_from_epsilon(0.3)) < 1e-12
    assert gibbs_defect(markov_tree_marginal(0.1, 2, 2), ising_from_epsilon(0.3)) > 0.01
    with pytest.raises(InvalidInputError):
        gibbs_defect(markov_tree_marginal(0.1, 2, 0), ising_from_epsilon(0.1))


def test_json_round_trip(tmp_path):
    P = markov_tree_marginal(0.3, 2, 1)
    Q = PatternDistribution.from_json(P.to_json())
    assert np.array_equal(P.patterns, Q.patterns) and np.allclose(P.weights, Q.weights)
    P.save(tmp_path / "p.json")
    assert tv_distance(P, PatternDistribution.load(tmp_path / "p.json")) < 1e-15


def test_validation():
    with pytest.raises(InvalidInputError):
        PatternDistribution(0, 2, 2, [[0], [1]], [0.5, 0.4])
    with pytest.raises(InvalidInputError):
        PatternDistribution(1, 2, 2, [[0, 0]], [1.0])
    with pytest.raises(InvalidInputError):
        PatternDistribution(0, 2, 2, [[2]], [1.0])


def test_single_site_marginal_of_joinings():
    from soficglauber.analysis import joining_marginal

    prod = joining_marginal("product", 0.2, 2, 1)
    diag = joining_marginal("diagonal", 0.2, 2, 1)
    base = markov_tree_marginal(0.2, 2, 1)
    for J in (prod, diag):
        for c in (0, 1):
            assert tv_distance(J.single_site_marginal(c), base) < 1e-12
    assert all(a // 2 == a % 2 for row in diag.patterns for a in row)
    assert len(prod) == 4**5 and len(list(itertools.islice(prod.items(), 3))) == 3
