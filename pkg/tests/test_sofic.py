import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from soficglauber.errors import InvalidInputError, ResourceLimitError
from soficglauber.freegroup import GroupWord, ball, reduce
from soficglauber.sofic import (
    SoficMap,
    act,
    are_switching_neighbors,
    defective_vertices,
    delta_estimate,
    disagreements,
    identity_map,
    local_defect,
    switching,
    uniform_random,
)


def cycle(n):
    return SoficMap.from_permutations([np.roll(np.arange(n), -1)])


def naive_ball_ok(sigma, v, R):
    """Compare labelled edge sets of the ball around v with those of the Cayley ball."""
    cb = ball(sigma.r, R)
    phi = {w: act(sigma, w, v) for w in cb.words}
    if len(set(phi.values())) != len(cb):
        return False
    image = set(phi.values())
    seen = set()
    for u in image:
        for i in range(sigma.r):
            w = int(sigma.forward[i, u])
            if w in image:
                seen.add((u, i, w))
    expected = set()
    for w in cb.words:
        for i in range(sigma.r):
            nxt = GroupWord.generator(i, sigma.r) * w
            if nxt in cb.index:
                expected.add((phi[w], i, phi[nxt]))
    return seen == expected


def test_n_one_is_identity():
    s = uniform_random(1, 3, 0)
    assert s.forward.tolist() == [[0], [0], [0]]


def test_seeded_determinism():
    assert uniform_random(50, 2, 9) == uniform_random(50, 2, 9)
    assert uniform_random(50, 2, 9) != uniform_random(50, 2, 10)


def test_uniformity_on_sym5():
    perms = {p: k for k, p in enumerate(itertools.permutations(range(5)))}
    counts = np.zeros(120)
    for seed in range(10_000):
        counts[perms[tuple(uniform_random(5, 1, seed).forward[0].tolist())]] += 1
    freq = counts / 10_000
    se = math.sqrt((1 / 120) * (1 - 1 / 120) / 10_000)
    assert np.all(np.abs(freq - 1 / 120) <= 4 * se)
    assert chisquare(counts).pvalue > 1e-3


def test_invalid_inputs():
    with pytest.raises(InvalidInputError):
        uniform_random(0, 2)
    with pytest.raises(InvalidInputError):
        SoficMap.from_permutations([[0, 0, 1]])


def test_act_examples():
    s = cycle(5)
    g = GroupWord.generator(0, 1)
    assert act(s, g, 0) == 1
    assert act(s, g.inverse(), 0) == 4
    assert act(s, GroupWord.identity(1), 3) == 3


@settings(max_examples=60)
@given(st.integers(0, 10**6), st.lists(st.integers(0, 3), max_size=12), st.lists(st.integers(0, 3), max_size=12))
def test_act_is_homomorphism(seed, a, b):
    s = uniform_random(30, 2, seed)
    g, h = reduce(a, 2), reduce(b, 2)
    for v in (0, 7, 29):
        assert act(s, g * h, v) == act(s, g, act(s, h, v))


def test_defect_examples():
    assert local_defect(identity_map(10, 2), 1) == 1.0
    # a self-loop already breaks the radius-0 ball: s v = v but s != e
    assert local_defect(identity_map(10, 2), 0) == 1.0
    s = uniform_random(500, 2, 6)
    assert local_defect(s, 0) == s.self_loop_vertices.size / 500
    for R in (1, 2, 4):
        assert local_defect(cycle(2 * R + 2), R) == 0.0
        # at n = 2R + 1 the two boundary words of the path are joined by an edge
        assert local_defect(cycle(2 * R + 1), R) == 1.0


def test_defect_matches_naive_isomorphism_check():
    s = uniform_random(10_000, 2, 3)
    mask = defective_vertices(s, 2)
    picks = np.random.default_rng(4).choice(10_000, size=100, replace=False)
    for v in picks:
        assert mask[v] == (not naive_ball_ok(s, int(v), 2))
    small = uniform_random(12, 2, 5)
    for R in (1, 2):
        mask = defective_vertices(small, R)
        assert [not naive_ball_ok(small, v, R) for v in range(12)] == mask.tolist()


def test_defect_monotone_in_radius():
    s = uniform_random(2000, 2, 11)
    d = [local_defect(s, R) for R in range(6)]
    assert all(a <= b for a, b in zip(d, d[1:]))


def test_delta_estimate_examples():
    rep = delta_estimate(cycle(20), R_max=6)
    assert rep.delta_by_radius == (0.0,) * 7
    assert rep.delta_estimate == pytest.approx(9 * (2 / 3) ** 6, abs=1e-12)
    assert rep.delta_estimate == pytest.approx(0.7901, abs=1e-4)
    assert delta_estimate(cycle(7), R_max=0).delta_estimate == 9.0
    rep = delta_estimate(identity_map(10, 2))
    assert rep.delta_by_radius == (1.0,) * 7
    assert rep.delta_estimate == pytest.approx(6 + 9 * (2 / 3) ** 6) and rep.is_upper_bound


def test_delta_estimate_shrinks_with_n():
    small = np.mean([delta_estimate(uniform_random(1000, 2, s)).delta_estimate for s in range(20)])
    large = np.mean([delta_estimate(uniform_random(10_000, 2, s)).delta_estimate for s in range(20)])
    assert large < small


def test_delta_estimate_cap():
    with pytest.raises(ResourceLimitError):
        delta_estimate(uniform_random(10, 3, 0), R_max=12, cap=10**5)


def test_switching_involution_and_disagreements():
    s = uniform_random(20, 2, 1)
    t = switching(s, 1, 3, 8)
    assert switching(t, 1, 3, 8) == s
    assert len(disagreements(s, t)) == 2
    assert are_switching_neighbors(s, t)
    with pytest.raises(InvalidInputError):
        switching(s, 0, 4, 4)


@pytest.mark.parametrize("n,r", [(4, 1), (5, 2), (6, 2)])
def test_switching_neighbor_count(n, r):
    s = uniform_random(n, r, 2)
    nbrs = {switching(s, g, j, k) for g in range(r) for j in range(n) for k in range(j + 1, n)}
    assert len(nbrs) == r * n * (n - 1) // 2
    assert all(are_switching_neighbors(s, t) for t in nbrs)


def test_text_round_trip(tmp_path):
    s = uniform_random(17, 3, 4)
    assert SoficMap.from_text(s.to_text()) == s
    s.save(tmp_path / "s.txt")
    assert SoficMap.load(tmp_path / "s.txt") == s
    with pytest.raises(InvalidInputError):
        SoficMap.from_text("3 1\n0 1\n")
