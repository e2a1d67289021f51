"""Pullback patterns, ball-marginal distributions and their distances.

A pattern is a labelling of the Cayley ball B(e, R) listed in the ball's
breadth-first order.  Distributions over patterns are stored sparsely as a
lexicographically sorted array of unique rows plus a weight per row.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidInputError, ResourceLimitError
from .freegroup import DEFAULT_BALL_CAP, ball, ball_size
from .sofic import SoficMap, ball_images
from .spin import Interaction, check_epsilon

PATTERN_ENUM_CAP = 2**22
_DIGITS = "0123456789abcdefghijklmnopqrstuvwxyz"


@dataclass(frozen=True)
class Pattern:
    radius: int
    labels: tuple[int, ...]

    def __str__(self) -> str:
        return "".join(_DIGITS[a] for a in self.labels)


def _merge_rows(rows: np.ndarray, weights: np.ndarray):
    """Sorted unique rows with summed weights."""
    if rows.shape[0] == 0:
        return rows, weights
    base = int(rows.max()) + 1
    B = rows.shape[1]
    if B * math.log2(max(base, 2)) < 62:
        # lexicographic order equals the order of base-`base` codes
        codes = rows.astype(np.int64) @ (base ** np.arange(B - 1, -1, -1, dtype=np.int64))
        _, first, inv = np.unique(codes, return_index=True, return_inverse=True)
        uniq = rows[first]
    else:
        uniq, inv = np.unique(rows, axis=0, return_inverse=True)
    return uniq, np.bincount(inv.ravel(), weights=weights, minlength=uniq.shape[0])


class PatternDistribution:
    """Probability weights on patterns of one radius."""

    def __init__(self, radius: int, r: int, q: int, patterns, weights, counts=None, *, merged: bool = False):
        rows = np.asarray(patterns, dtype=np.uint8)
        w = np.asarray(weights, dtype=float)
        B = ball_size(r, radius)
        if rows.ndim != 2 or rows.shape[1] != B or rows.shape[0] != w.shape[0]:
            raise InvalidInputError(f"patterns must be an (m, {B}) array with one weight per row")
        if rows.size and rows.max() >= q:
            raise InvalidInputError(f"pattern symbols must lie in 0..{q - 1}")
        if np.any(w < 0):
            raise InvalidInputError("weights must be nonnegative")
        if not merged:
            rows, w = _merge_rows(rows, w)
        if abs(w.sum() - 1.0) > 1e-12:
            raise InvalidInputError(f"weights sum to {w.sum()!r}, not 1")
        self.radius = radius
        self.r = r
        self.q = q
        self.patterns = rows
        self.weights = w
        self.counts = counts

    def __len__(self) -> int:
        return self.patterns.shape[0]

    def __repr__(self) -> str:
        return f"PatternDistribution(radius={self.radius}, r={self.r}, q={self.q}, support={len(self)})"

    def items(self):
        for row, w in zip(self.patterns, self.weights):
            yield Pattern(self.radius, tuple(int(a) for a in row)), float(w)

    def weight_of(self, pattern) -> float:
        labels = np.asarray(pattern.labels if isinstance(pattern, Pattern) else pattern, dtype=np.uint8)
        hit = np.flatnonzero((self.patterns == labels[None, :]).all(axis=1))
        return float(self.weights[hit[0]]) if hit.size else 0.0

    def truncate(self, R: int) -> PatternDistribution:
        """Marginal on the smaller ball B(e, R)."""
        if not 0 <= R <= self.radius:
            raise InvalidInputError(f"cannot truncate radius {self.radius} to {R}")
        B = ball_size(self.r, R)
        rows, w = _merge_rows(self.patterns[:, :B], self.weights)
        counts = None
        if self.counts is not None:
            _, c = _merge_rows(self.patterns[:, :B], self.counts.astype(float))
            counts = c.astype(np.int64)
        return PatternDistribution(R, self.r, self.q, rows, w, counts, merged=True)

    def single_site_marginal(self, coordinate: int) -> PatternDistribution:
        """For paired alphabets q = qa * qb: coordinate 0 keeps a, 1 keeps b."""
        qb = int(round(math.sqrt(self.q)))
        if qb * qb != self.q:
            raise InvalidInputError("single_site_marginal needs a square alphabet")
        rows = self.patterns // qb if coordinate == 0 else self.patterns % qb
        rows, w = _merge_rows(rows.astype(np.uint8), self.weights)
        return PatternDistribution(self.radius, self.r, qb, rows, w, merged=True)

    # -- serialization -------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "radius": self.radius,
            "r": self.r,
            "q": self.q,
            "weights": {
                "".join(_DIGITS[a] for a in row): float(w) for row, w in zip(self.patterns.tolist(), self.weights)
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> PatternDistribution:
        keys = list(d["weights"])
        rows = np.array([[_DIGITS.index(c) for c in k] for k in keys], dtype=np.uint8)
        rows = rows.reshape(len(keys), ball_size(d["r"], d["radius"]))
        return cls(d["radius"], d["r"], d["q"], rows, [d["weights"][k] for k in keys])

    @classmethod
    def from_json(cls, text: str) -> PatternDistribution:
        return cls.from_dict(json.loads(text))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> PatternDistribution:
        return cls.from_json(Path(path).read_text())


def pullback_rows(x, sigma: SoficMap, R: int, vertices=None, cap: int = DEFAULT_BALL_CAP) -> np.ndarray:
    """Row j is the pattern read from basepoint vertices[j]."""
    x = np.asarray(x)
    img = ball_images(sigma, R, vertices, cap)
    return x[img].T.astype(np.uint8)


def pullback_pattern(x, sigma: SoficMap, v: int, R: int) -> Pattern:
    if not 0 <= v < sigma.n:
        raise InvalidInputError(f"vertex {v} outside 0..{sigma.n - 1}")
    row = pullback_rows(x, sigma, R, [v])[0]
    return Pattern(R, tuple(int(a) for a in row))


def empirical_marginal(x, sigma: SoficMap, R: int, q: int | None = None) -> PatternDistribution:
    x = np.asarray(x, dtype=np.int64)
    if x.shape != (sigma.n,):
        raise InvalidInputError("microstate length does not match sigma")
    if q is None:
        q = max(2, int(x.max()) + 1)
    rows = pullback_rows(x, sigma, R)
    uniq, counts = np.unique(rows, axis=0, return_counts=True)
    return PatternDistribution(R, sigma.r, q, uniq, counts / sigma.n, counts.astype(np.int64), merged=True)


def markov_tree_weights(epsilon: float, r: int, patterns) -> np.ndarray:
    """Is_epsilon probability of each binary pattern row."""
    check_epsilon(epsilon)
    rows = np.asarray(patterns)
    R = _radius_of(r, rows.shape[1])
    cb = ball(r, R)
    agree = (rows[:, 1:] == rows[:, cb.parent[1:]]).sum(axis=1)
    edges = rows.shape[1] - 1
    return 0.5 * (1.0 - epsilon) ** agree * epsilon ** (edges - agree)


def _radius_of(r: int, B: int) -> int:
    R = 0
    while ball_size(r, R) < B:
        R += 1
    if ball_size(r, R) != B:
        raise InvalidInputError(f"{B} is not a ball size for rank {r}")
    return R


def all_patterns(r: int, R: int, q: int, cap: int = PATTERN_ENUM_CAP) -> np.ndarray:
    B = ball_size(r, R)
    if q**B > cap:
        raise ResourceLimitError(f"{q}^{B} patterns exceed the enumeration cap {cap}")
    idx = np.arange(q**B, dtype=np.int64)
    # first ball element is the most significant digit, so rows come out sorted
    powers = q ** np.arange(B - 1, -1, -1, dtype=np.int64)
    return ((idx[:, None] // powers[None, :]) % q).astype(np.uint8)


def markov_tree_marginal(epsilon: float, r: int, R: int, cap: int = PATTERN_ENUM_CAP) -> PatternDistribution:
    """Exact B(e, R) marginal of the Ising Markov chain Is_epsilon on the tree."""
    check_epsilon(epsilon)
    rows = all_patterns(r, R, 2, cap)
    w = markov_tree_weights(epsilon, r, rows)
    return PatternDistribution(R, r, 2, rows, w, merged=True)


def uniform_product_marginal(r: int, R: int, q: int = 2, cap: int = PATTERN_ENUM_CAP) -> PatternDistribution:
    rows = all_patterns(r, R, q, cap)
    return PatternDistribution(R, r, q, rows, np.full(rows.shape[0], 1.0 / rows.shape[0]), merged=True)


def _check_compatible(P: PatternDistribution, Q: PatternDistribution) -> None:
    if P.radius != Q.radius or P.r != Q.r:
        raise InvalidInputError(f"radius/rank mismatch: ({P.radius}, {P.r}) vs ({Q.radius}, {Q.r})")


def tv_distance(P: PatternDistribution, Q: PatternDistribution) -> float:
    _check_compatible(P, Q)
    rows = np.concatenate([P.patterns, Q.patterns])
    signed = np.concatenate([P.weights, -Q.weights])
    _, diff = _merge_rows(rows, signed)
    return float(min(1.0, 0.5 * np.abs(diff).sum()))


def tv_to_markov_tree(P: PatternDistribution, epsilon: float) -> float:
    """TV(P, Is_epsilon marginal) using only the support of P.

    Equal to ``tv_distance(P, markov_tree_marginal(...))`` but never
    enumerates the full pattern space, so it works at any radius.
    """
    Q = markov_tree_weights(epsilon, P.r, P.patterns)
    return float(min(1.0, np.clip(P.weights - Q, 0.0, None).sum()))


def tail_mass(r: int, R: int) -> float:
    """sum over |gamma| > R of (3r)^{-|gamma|}, in closed form."""
    rho = (2 * r - 1) / (3 * r)
    return (2 * r / (2 * r - 1)) * rho ** (R + 1) / (1 - rho)


def dbar_bounds(P: PatternDistribution, Q: PatternDistribution) -> tuple[float, float]:
    """Bounds on the transportation distance between any extensions of P and Q.

    Lower: f = (3r)^{-R} 1{pattern in A} is 1-Lipschitz for every pattern set
    A, and the best A recovers TV.  Upper: glue the optimal TV coupling of
    the ball marginals; agreeing balls are at distance <= tail(R), the rest
    at most the diameter 3.
    """
    tv = tv_distance(P, Q)
    lower = (3 * P.r) ** (-P.radius) * tv
    upper = min(3.0, 3.0 * tv + tail_mass(P.r, P.radius))
    return lower, upper


def root_kernel(phi: Interaction, neighbor_labels: np.ndarray) -> np.ndarray:
    """Heat-bath law at the root given its 2r neighbours, one row per pattern."""
    E = phi.h[None, :] + phi.J[:, neighbor_labels].sum(axis=2).T
    W = np.exp(-(E - E.min(axis=1, keepdims=True)))
    return W / W.sum(axis=1, keepdims=True)


def resample_root(P: PatternDistribution, phi: Interaction) -> PatternDistribution:
    """P after re-randomising the root symbol with the heat-bath kernel."""
    if P.radius < 1:
        raise InvalidInputError("root resampling needs radius >= 1")
    if phi.q != P.q:
        raise InvalidInputError("interaction alphabet does not match the patterns")
    C = root_kernel(phi, P.patterns[:, 1 : 1 + 2 * P.r].astype(np.int64))
    rows = np.repeat(P.patterns, phi.q, axis=0)
    rows[:, 0] = np.tile(np.arange(phi.q, dtype=np.uint8), P.patterns.shape[0])
    w = (P.weights[:, None] * C).ravel()
    w = w / w.sum()
    return PatternDistribution(P.radius, P.r, P.q, rows, w)


def gibbs_defect(P: PatternDistribution, phi: Interaction, r: int | None = None) -> float:
    """TV between the radius-(R-1) marginals of P and of P with its root resampled.

    Zero for the radius-R marginal of any Gibbs measure for ``phi``.
    """
    if P.radius < 1:
        raise InvalidInputError("gibbs_defect needs patterns of radius >= 1")
    if r is not None and r != P.r:
        raise InvalidInputError("rank does not match the pattern distribution")
    Q = resample_root(P, phi)
    return tv_distance(P.truncate(P.radius - 1), Q.truncate(P.radius - 1))


def pattern_counts(x, sigma: SoficMap, R: int) -> dict[bytes, int]:
    """Basepoint count per pattern, keyed by the pattern's bytes."""
    rows = pullback_rows(x, sigma, R)
    uniq, counts = np.unique(rows, axis=0, return_counts=True)
    return {row.tobytes(): int(c) for row, c in zip(uniq, counts)}
