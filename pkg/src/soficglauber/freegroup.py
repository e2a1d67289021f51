"""Reduced words and Cayley balls in the free group of rank r.

Letters are integers: generator ``i`` (0-based) is letter ``2*i`` and its
inverse is letter ``2*i + 1``, so ``letter ^ 1`` inverts a letter.  Words are
stored in written order, left to right; the rightmost letter acts first.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidInputError, ResourceLimitError

DEFAULT_BALL_CAP = 10**7


def inverse_letter(letter: int) -> int:
    return letter ^ 1


def letter_name(letter: int) -> str:
    gen = letter // 2 + 1
    return f"s{gen}" if letter % 2 == 0 else f"s{gen}^-1"


def reduce(letters: Iterable[int], r: int) -> GroupWord:
    """Freely reduce a raw letter sequence.

    >>> reduce([0, 1], 2).letters
    ()
    >>> reduce([0, 2, 3], 2).letters
    (0,)
    """
    if r < 1:
        raise InvalidInputError(f"rank must be >= 1, got {r}")
    stack: list[int] = []
    for raw in letters:
        letter = int(raw)
        if not 0 <= letter < 2 * r:
            raise InvalidInputError(f"letter {raw!r} outside the {2 * r}-symbol alphabet")
        if stack and stack[-1] == letter ^ 1:
            stack.pop()
        else:
            stack.append(letter)
    return GroupWord(tuple(stack), r)


@dataclass(frozen=True)
class GroupWord:
    letters: tuple[int, ...]
    r: int

    def __post_init__(self):
        for a, b in zip(self.letters, self.letters[1:]):
            if a == b ^ 1:
                raise InvalidInputError(f"word {self.letters} is not reduced")

    def __len__(self) -> int:
        return len(self.letters)

    def __mul__(self, other: GroupWord) -> GroupWord:
        if other.r != self.r:
            raise InvalidInputError("cannot multiply words of different rank")
        return reduce(self.letters + other.letters, self.r)

    def inverse(self) -> GroupWord:
        return GroupWord(tuple(l ^ 1 for l in reversed(self.letters)), self.r)

    @classmethod
    def identity(cls, r: int) -> GroupWord:
        return cls((), r)

    @classmethod
    def generator(cls, i: int, r: int, inverse: bool = False) -> GroupWord:
        if not 0 <= i < r:
            raise InvalidInputError(f"generator index {i} outside 0..{r - 1}")
        return cls((2 * i + int(inverse),), r)

    def __str__(self) -> str:
        return " ".join(letter_name(l) for l in self.letters) or "e"


def ball_size(r: int, R: int) -> int:
    """Number of reduced words of length at most R."""
    if R <= 0:
        return 1
    return 1 + sum(2 * r * (2 * r - 1) ** (s - 1) for s in range(1, R + 1))


@dataclass(frozen=True)
class CayleyBall:
    """All reduced words of length <= radius in breadth-first order.

    ``parent[k]`` is the index of the word obtained by deleting the leftmost
    (last-applied) letter of word ``k`` and ``letter[k]`` is that deleted
    letter, so ``word[k] = letter[k] * word[parent[k]]``.  The root has
    parent and letter -1.
    """

    r: int
    radius: int
    words: tuple[GroupWord, ...]
    parent: np.ndarray
    letter: np.ndarray
    length: np.ndarray
    index: dict = field(repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.words)

    def level_start(self, s: int) -> int:
        """Index of the first word of length s."""
        return 0 if s <= 0 else ball_size(self.r, s - 1)

    @property
    def boundary_start(self) -> int:
        return self.level_start(self.radius)

    def tree_edges(self) -> np.ndarray:
        """(child, parent) index pairs of the |B|-1 tree edges."""
        kids = np.arange(1, len(self.words))
        return np.stack([kids, self.parent[1:]], axis=1)


_BALL_CACHE: dict[tuple[int, int], CayleyBall] = {}


def ball(r: int, R: int, cap: int = DEFAULT_BALL_CAP) -> CayleyBall:
    if r < 1 or R < 0:
        raise InvalidInputError(f"need r >= 1 and R >= 0, got r={r}, R={R}")
    size = ball_size(r, R)
    if size > cap:
        raise ResourceLimitError(f"ball(r={r}, R={R}) has {size} elements, cap is {cap}")
    key = (r, R)
    if key in _BALL_CACHE:
        return _BALL_CACHE[key]

    words: list[tuple[int, ...]] = [()]
    parent = [-1]
    letter = [-1]
    frontier = [0]
    for _ in range(R):
        nxt = []
        for k in frontier:
            w = words[k]
            for l in range(2 * r):
                if w and l == w[0] ^ 1:
                    continue
                words.append((l,) + w)
                parent.append(k)
                letter.append(l)
                nxt.append(len(words) - 1)
        frontier = nxt

    gws = tuple(GroupWord(w, r) for w in words)
    cb = CayleyBall(
        r=r,
        radius=R,
        words=gws,
        parent=_frozen(np.array(parent, dtype=np.int64)),
        letter=_frozen(np.array(letter, dtype=np.int64)),
        length=_frozen(np.array([len(w) for w in words], dtype=np.int64)),
        index={w: i for i, w in enumerate(gws)},
    )
    if size <= 100_000:
        _BALL_CACHE[key] = cb
    return cb


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def word(letters: Sequence[int], r: int) -> GroupWord:
    """Shorthand for ``reduce``."""
    return reduce(letters, r)
