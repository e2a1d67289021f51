"""f-invariant thresholds for Ising chains, joinings, good-model counts and bisections."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import kernels
from .empirical import (
    PatternDistribution,
    all_patterns,
    markov_tree_weights,
)
from .errors import InvalidInputError, ResourceLimitError
from .freegroup import ball_size
from .sofic import SoficMap, ball_images, switching, uniform_random
from .spin import GIBBS_STATE_CAP, check_enumeration, check_epsilon

SCHEMA_VERSION = 1
P_STAR = 0.7632
BRUTE_FORCE_MAX_N = 24


def binary_entropy(epsilon: float) -> float:
    if epsilon in (0.0, 1.0):
        return 0.0
    return -(epsilon * math.log(epsilon) + (1.0 - epsilon) * math.log(1.0 - epsilon))


def f_ising(epsilon: float, r: int) -> float:
    """f-invariant of the Ising chain: log 2 + r (H(epsilon) - log 2)."""
    check_epsilon(epsilon)
    if r < 1:
        raise InvalidInputError(f"rank must be >= 1, got {r}")
    return math.log(2.0) + r * (binary_entropy(epsilon) - math.log(2.0))


def eps_f(r: int, tol: float = 1e-10) -> float:
    """Root of f_ising(., r) in (0, 1/2) by bisection.

    f is increasing on (0, 1/2] with f(0+) = (1 - r) log 2, so a root exists
    only for r >= 2.
    """
    if r < 2:
        raise InvalidInputError(f"f_ising(., {r}) > 0 on (0, 1/2]; no root for r < 2")
    target = math.log(2.0) * (r - 1) / r
    lo, hi = 0.0, 0.5
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if binary_entropy(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def eps_f_asymptote(r: int) -> float:
    return 0.5 - math.sqrt(math.log(2.0) / (2 * r))


def eps_c_asymptotic(r: int) -> float:
    """Large-r asymptote 1/2 - P*/sqrt(2r); not an exact finite-r value."""
    if r < 1:
        raise InvalidInputError(f"rank must be >= 1, got {r}")
    return 0.5 - P_STAR / math.sqrt(2 * r)


@dataclass(frozen=True)
class ThresholdReport:
    r: int
    eps_f: float
    eps_f_asymptote: float
    eps_c_asymptote: float
    p_star: float = P_STAR
    eps_c_is_asymptotic: bool = True
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        return asdict(self)


def threshold_report(r: int) -> ThresholdReport:
    return ThresholdReport(r, eps_f(r), eps_f_asymptote(r), eps_c_asymptotic(r))


# -- joinings -----------------------------------------------------------------


def joining_marginal(kind: str, epsilon: float, r: int, R: int) -> PatternDistribution:
    """Ball marginal of the product or diagonal self-joining of Is_epsilon.

    Paired symbols are encoded a * 2 + b.
    """
    check_epsilon(epsilon)
    if kind == "product":
        rows = all_patterns(r, R, 4)
        w = markov_tree_weights(epsilon, r, rows // 2) * markov_tree_weights(epsilon, r, rows % 2)
        return PatternDistribution(R, r, 4, rows, w, merged=True)
    if kind == "diagonal":
        base = all_patterns(r, R, 2)
        w = markov_tree_weights(epsilon, r, base)
        return PatternDistribution(R, r, 4, base * 3, w, merged=True)
    raise InvalidInputError(f"unknown joining kind {kind!r}")


# -- good models --------------------------------------------------------------


def enumerate_good_models(
    sigma: SoficMap,
    Q: PatternDistribution,
    R: int | None = None,
    eta: float = 0.1,
    q: int | None = None,
    cap: int = GIBBS_STATE_CAP,
) -> int:
    """Number of microstates x with TV(empirical_marginal(x, sigma, R), Q) < eta."""
    R = Q.radius if R is None else R
    if R != Q.radius or Q.r != sigma.r:
        raise InvalidInputError("target marginal must have the requested radius and sigma's rank")
    q = Q.q if q is None else q
    n = sigma.n
    check_enumeration(n, q, cap)
    tv = good_model_distances(sigma, Q, q)
    return int((tv < eta).sum())


def good_model_distances(sigma: SoficMap, Q: PatternDistribution, q: int | None = None, chunk: int = 4096) -> np.ndarray:
    """TV distance to Q of every microstate's empirical marginal, by state index."""
    q = Q.q if q is None else q
    n = sigma.n
    B = ball_size(sigma.r, Q.radius)
    if q**B >= 2**62:
        raise ResourceLimitError("pattern codes overflow 64 bits")
    powers = q ** np.arange(B - 1, -1, -1, dtype=np.int64)
    qcodes = Q.patterns.astype(np.int64) @ powers
    order = np.argsort(qcodes)
    qcodes, qw = qcodes[order], Q.weights[order]
    img = ball_images(sigma, Q.radius)  # (B, n)
    N = q**n
    out = np.empty(N)
    vpow = q ** np.arange(n, dtype=np.int64)
    for lo in range(0, N, chunk):
        idx = np.arange(lo, min(N, lo + chunk), dtype=np.int64)
        X = (idx[:, None] // vpow[None, :]) % q  # (m, n)
        codes = np.einsum("mbn,b->mn", X[:, img], powers)  # (m, n)
        codes.sort(axis=1)
        for j in range(idx.shape[0]):
            u, c = np.unique(codes[j], return_counts=True)
            p = c / n
            pos = np.searchsorted(qcodes, u)
            pos = np.minimum(pos, max(qcodes.shape[0] - 1, 0))
            qv = np.where((qcodes.shape[0] > 0) & (qcodes[pos] == u), qw[pos], 0.0)
            out[lo + j] = min(1.0, np.clip(p - qv, 0.0, None).sum())
    return out


# -- bisections ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Bisection:
    side: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.side, dtype=np.int64)
        if s.ndim != 1 or s.size == 0 or not np.isin(s, (0, 1)).all():
            raise InvalidInputError("a bisection side vector must be a non-empty 0/1 sequence")
        ones = int(s.sum())
        if abs((s.size - ones) - ones) > 1:
            raise InvalidInputError(f"unbalanced parts: {s.size - ones} vs {ones}")
        s.setflags(write=False)
        object.__setattr__(self, "side", s)

    def __eq__(self, other) -> bool:
        return isinstance(other, Bisection) and np.array_equal(self.side, other.side)


def cut_size(sigma: SoficMap, b: Bisection) -> int:
    """Edges (v, sigma^{s_i} v) whose ends lie on different sides."""
    side = b.side if isinstance(b, Bisection) else Bisection(b).side
    if side.shape[0] != sigma.n:
        raise InvalidInputError("bisection length does not match sigma")
    return int((side[sigma.forward] != side[None, :]).sum())


def _edge_list(sigma: SoficMap) -> tuple[np.ndarray, np.ndarray]:
    u = np.tile(np.arange(sigma.n, dtype=np.int64), sigma.r)
    w = sigma.forward.reshape(-1).astype(np.int64)
    keep = u != w
    return np.ascontiguousarray(u[keep]), np.ascontiguousarray(w[keep])


def brute_force_mcut(sigma: SoficMap, max_n: int = BRUTE_FORCE_MAX_N) -> int:
    if sigma.n > max_n:
        raise ResourceLimitError(f"brute-force mcut is capped at n <= {max_n}, got {sigma.n}")
    eu, ew = _edge_list(sigma)
    return int(kernels.brute_mcut(sigma.n, eu, ew))


def local_search_mcut(sigma: SoficMap, restarts: int = 20, seed=None) -> tuple[int, Bisection]:
    """Best of ``restarts`` steepest pairwise-swap descents from random bisections.

    A swap exchanges one vertex from each side and is taken only if it
    strictly lowers the cut; among the best swaps the lexicographically
    smallest (a, b) wins.
    """
    if restarts < 1:
        raise InvalidInputError("need at least one restart")
    n = sigma.n
    rng = np.random.default_rng(seed)
    nbr = np.ascontiguousarray(sigma.neighbors)
    best_cut, best_side = None, None
    for _ in range(restarts):
        perm = rng.permutation(n)
        side = np.zeros(n, dtype=np.int64)
        side[perm[: n // 2]] = 1
        cut = int(kernels.swap_descent(nbr, side))
        if best_cut is None or cut < best_cut:
            best_cut, best_side = cut, side.copy()
    return best_cut, Bisection(best_side)


def balancing_flips(plus: int, n: int) -> int:
    """Fewest symbol flips that bring the plus count to a balanced value."""
    lo, hi = n // 2, n - n // 2
    if plus > hi:
        return plus - hi
    if plus < lo:
        return lo - plus
    return 0


def bisect_from_microstate(x) -> Bisection:
    """Balance a binary microstate by flipping the lowest-indexed majority vertices."""
    x = np.asarray(x, dtype=np.int64)
    if x.ndim != 1 or x.size == 0 or not np.isin(x, (0, 1)).all():
        raise InvalidInputError("bisect_from_microstate needs a binary microstate")
    n = x.size
    plus = int(x.sum())
    k = balancing_flips(plus, n)
    y = x.copy()
    if k:
        majority = 1 if plus > n - n // 2 else 0
        y[np.flatnonzero(x == majority)[:k]] = 1 - majority
    return Bisection(y)


def switching_effect(sigma: SoficMap | None, trials: int, seed=None, n: int = 12, r: int = 2) -> int:
    """Largest |mcut(sigma) - mcut(sigma')| over random switchings sigma ~ sigma'.

    With ``sigma=None`` each trial draws a fresh uniform sigma of size n.
    """
    rng = np.random.default_rng(seed)
    worst = 0
    for _ in range(trials):
        s = uniform_random(n, r, rng) if sigma is None else sigma
        if s.n > BRUTE_FORCE_MAX_N:
            raise ResourceLimitError(f"switching_effect uses brute force; n <= {BRUTE_FORCE_MAX_N}")
        gen = int(rng.integers(s.r))
        j, k = (int(v) for v in rng.choice(s.n, size=2, replace=False))
        delta = abs(brute_force_mcut(s) - brute_force_mcut(switching(s, gen, j, k)))
        worst = max(worst, delta)
    return worst


def edge_disagreement(x, sigma: SoficMap) -> float:
    """Fraction of the rn edges whose endpoints carry different symbols."""
    x = np.asarray(x)
    return float((x[sigma.forward] != x[None, :]).sum() / (sigma.r * sigma.n))

