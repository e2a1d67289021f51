"""Homomorphisms F_r -> Sym(n), their local defect, and switchings."""
from __future__ import annotations

import io
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from . import kernels
from .errors import InvalidInputError
from .freegroup import DEFAULT_BALL_CAP, GroupWord, ball, ball_size


@dataclass(frozen=True, eq=False)
class SoficMap:
    """A homomorphism sigma: F_r -> Sym(n), stored as r permutations.

    ``forward[i][v]`` is sigma^{s_i} v and ``inverse[i]`` its inverse.  Fixed
    points and repeated images are allowed; they show up as self-loops and
    multi-edges in the graph of sigma.
    """

    n: int
    r: int
    forward: np.ndarray
    inverse: np.ndarray

    @classmethod
    def from_permutations(cls, forward) -> SoficMap:
        fwd = np.array(forward, dtype=np.int64, copy=True)
        if fwd.ndim != 2 or fwd.shape[0] < 1 or fwd.shape[1] < 1:
            raise InvalidInputError("forward must be a non-empty r x n array")
        r, n = fwd.shape
        inv = np.empty_like(fwd)
        for i in range(r):
            if not np.array_equal(np.sort(fwd[i]), np.arange(n)):
                raise InvalidInputError(f"forward[{i}] is not a permutation of 0..{n - 1}")
            inv[i, fwd[i]] = np.arange(n)
        fwd.setflags(write=False)
        inv.setflags(write=False)
        return cls(n=n, r=r, forward=fwd, inverse=inv)

    @cached_property
    def neighbors(self) -> np.ndarray:
        """(2r, n) table: row ``l`` is the permutation of letter ``l``."""
        tab = np.empty((2 * self.r, self.n), dtype=np.int64)
        tab[0::2] = self.forward
        tab[1::2] = self.inverse
        tab.setflags(write=False)
        return tab

    @cached_property
    def self_loop_vertices(self) -> np.ndarray:
        return np.flatnonzero((self.forward == np.arange(self.n)).any(axis=0))

    def has_self_loops(self) -> bool:
        return self.self_loop_vertices.size > 0

    def __eq__(self, other) -> bool:
        return isinstance(other, SoficMap) and np.array_equal(self.forward, other.forward)

    def __hash__(self) -> int:
        return hash(self.forward.tobytes())

    # -- serialization -------------------------------------------------
    def to_text(self) -> str:
        buf = io.StringIO()
        buf.write(f"{self.n} {self.r}\n")
        for row in self.forward:
            buf.write(" ".join(map(str, row.tolist())) + "\n")
        return buf.getvalue()

    @classmethod
    def from_text(cls, text: str) -> SoficMap:
        lines = [ln for ln in text.strip().splitlines() if ln.strip()]
        try:
            n, r = map(int, lines[0].split())
            rows = [list(map(int, ln.split())) for ln in lines[1 : 1 + r]]
        except (ValueError, IndexError) as exc:
            raise InvalidInputError(f"malformed SoficMap text: {exc}") from exc
        if len(rows) != r or any(len(row) != n for row in rows):
            raise InvalidInputError(f"expected {r} rows of {n} integers")
        return cls.from_permutations(rows)

    def save(self, path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path) -> SoficMap:
        return cls.from_text(Path(path).read_text())


def uniform_random(n: int, r: int, seed=None) -> SoficMap:
    """r independent uniform permutations of {0..n-1}, seeded."""
    if n < 1 or r < 1:
        raise InvalidInputError(f"need n >= 1 and r >= 1, got n={n}, r={r}")
    rng = np.random.default_rng(seed)
    return SoficMap.from_permutations([rng.permutation(n) for _ in range(r)])


def identity_map(n: int, r: int) -> SoficMap:
    return SoficMap.from_permutations(np.tile(np.arange(n), (r, 1)))


def act(sigma: SoficMap, gamma: GroupWord, v: int) -> int:
    """sigma^gamma v; the rightmost letter of gamma is applied first."""
    if not 0 <= v < sigma.n:
        raise InvalidInputError(f"vertex {v} outside 0..{sigma.n - 1}")
    if gamma.r != sigma.r:
        raise InvalidInputError("word rank does not match sigma")
    nbr = sigma.neighbors
    for letter in reversed(gamma.letters):
        v = int(nbr[letter, v])
    return v


def ball_images(sigma: SoficMap, R: int, vertices=None, cap: int = DEFAULT_BALL_CAP) -> np.ndarray:
    """Array ``img[k, j] = sigma^{gamma_k} vertices[j]`` over the Cayley ball."""
    cb = ball(sigma.r, R, cap)
    vs = np.arange(sigma.n) if vertices is None else np.asarray(vertices, dtype=np.int64)
    nbr = sigma.neighbors
    img = np.empty((len(cb), vs.shape[0]), dtype=np.int64)
    img[0] = vs
    for k in range(1, len(cb)):
        img[k] = nbr[cb.letter[k], img[cb.parent[k]]]
    return img


def local_defect(sigma: SoficMap, R: int, cap: int = DEFAULT_BALL_CAP) -> float:
    """Fraction of vertices whose labelled radius-R ball is not the Cayley ball.

    The edge labels pin down the only candidate isomorphism,
    gamma -> sigma^gamma v, so the test is that this map is injective on
    B(e, R) and that no edge leaving a boundary word lands back inside the
    image.
    """
    return float(defective_vertices(sigma, R, cap).mean())


def defective_vertices(sigma: SoficMap, R: int, cap: int = DEFAULT_BALL_CAP) -> np.ndarray:
    """Boolean mask of vertices whose radius-R ball differs from the Cayley ball."""
    cb = ball(sigma.r, R, cap)
    return kernels.ball_defect_mask(
        np.ascontiguousarray(sigma.neighbors), cb.parent, cb.letter, cb.boundary_start
    )


@dataclass(frozen=True)
class DefectReport:
    """Profile of delta_R for R = 0..r_max and the resulting Delta estimate.

    ``delta_estimate`` minimises 9 (2/3)^R + 6 delta_R over the evaluated radii
    only, so it is an upper bound on the infimum over all R.
    """

    delta_by_radius: tuple[float, ...]
    delta_estimate: float
    r_max: int
    argmin_radius: int
    is_upper_bound: bool = True

    def to_dict(self) -> dict:
        return {
            "delta_by_radius": list(self.delta_by_radius),
            "delta_estimate": self.delta_estimate,
            "r_max": self.r_max,
            "argmin_radius": self.argmin_radius,
            "is_upper_bound": self.is_upper_bound,
        }


def default_r_max(r: int, max_ball: int = 10**4) -> int:
    """6 for rank 2, otherwise the largest R <= 6 whose ball fits in max_ball."""
    R = 0
    while R < 6 and ball_size(r, R + 1) <= max_ball:
        R += 1
    return R


def defect_objective(delta_R: float, R: int) -> float:
    return 9.0 * (2.0 / 3.0) ** R + 6.0 * delta_R


def delta_estimate(sigma: SoficMap, R_max: int | None = None, cap: int = DEFAULT_BALL_CAP) -> DefectReport:
    if R_max is None:
        R_max = default_r_max(sigma.r)
    if R_max < 0:
        raise InvalidInputError(f"R_max must be >= 0, got {R_max}")
    ball(sigma.r, R_max, cap)  # fail early on the cap
    deltas = []
    for R in range(R_max + 1):
        d = local_defect(sigma, R, cap)
        deltas.append(d)
        if d >= 1.0:
            # delta_R is nondecreasing; the rest of the profile is 1
            deltas.extend([1.0] * (R_max - R))
            break
    values = [defect_objective(d, R) for R, d in enumerate(deltas)]
    best = int(np.argmin(values))
    return DefectReport(tuple(deltas), float(values[best]), R_max, best)


def switching(sigma: SoficMap, gen: int, j: int, k: int) -> SoficMap:
    """Exchange the images of j and k under generator ``gen``."""
    if j == k:
        raise InvalidInputError("a switching needs two distinct vertices")
    if not (0 <= gen < sigma.r and 0 <= j < sigma.n and 0 <= k < sigma.n):
        raise InvalidInputError("generator or vertex out of range")
    fwd = sigma.forward.copy()
    fwd[gen, j], fwd[gen, k] = fwd[gen, k], fwd[gen, j]
    return SoficMap.from_permutations(fwd)


def disagreements(a: SoficMap, b: SoficMap) -> list[tuple[int, int]]:
    """(generator, vertex) pairs where the forward permutations differ."""
    gens, verts = np.nonzero(a.forward != b.forward)
    return list(zip(gens.tolist(), verts.tolist()))


def are_switching_neighbors(a: SoficMap, b: SoficMap) -> bool:
    d = disagreements(a, b)
    return len(d) == 2 and d[0][0] == d[1][0]
