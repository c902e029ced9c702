"""Nonautonomous sequence space: alphabets, words, points, metric and cylinders.

A point of the space at level ``k`` is a one-sided sequence whose ``j``-th
symbol is drawn from ``{1, ..., m(k + j)}``.  Symbols are 1-based throughout.
The metric is ``d(a, b) = exp(-|a ^ b|)`` where ``|a ^ b|`` is the length of
the longest common prefix, using the natural logarithm.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

# Snap -log(eps) to the nearest integer when it is this close, so that radii
# given as exp(-r) land on the integer ladder despite rounding in exp/log.
_LOG_SNAP = 1e-9


class RankClampWarning(UserWarning):
    """Issued when a Bowen ball is the whole space but the rank formula says otherwise."""


@dataclass(frozen=True)
class EventuallyPeriodic:
    """A sequence given by a finite head followed by a repeating period."""

    head: tuple = ()
    period: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "head", tuple(self.head))
        object.__setattr__(self, "period", tuple(self.period))
        if len(self.period) == 0:
            raise ValueError("period must be non-empty")

    def __getitem__(self, k: int):
        if k < 0:
            raise IndexError(f"negative level {k}")
        if k < len(self.head):
            return self.head[k]
        return self.period[(k - len(self.head)) % len(self.period)]

    def level_class(self, k: int) -> int:
        """Representative level in ``[0, len(head) + len(period))`` for ``k``."""
        h = len(self.head)
        if k < h:
            return k
        return h + (k - h) % len(self.period)

    @property
    def n_classes(self) -> int:
        return len(self.head) + len(self.period)


@dataclass(frozen=True)
class AlphabetSeq(EventuallyPeriodic):
    """Alphabet sizes ``m(k) >= 2``, eventually periodic in ``k``."""

    def __post_init__(self):
        super().__post_init__()
        vals = self.head + self.period
        for v in vals:
            if int(v) != v or v < 2:
                raise ValueError(f"alphabet sizes must be integers >= 2, got {v!r}")
        object.__setattr__(self, "head", tuple(int(v) for v in self.head))
        object.__setattr__(self, "period", tuple(int(v) for v in self.period))

    @classmethod
    def constant(cls, size: int) -> "AlphabetSeq":
        return cls((), (size,))

    @classmethod
    def periodic(cls, sizes: Sequence[int]) -> "AlphabetSeq":
        return cls((), tuple(sizes))

    def __call__(self, k: int) -> int:
        return self[k]

    def sizes(self, level: int, n: int) -> list[int]:
        """``[m(level), ..., m(level + n - 1)]``."""
        return [self[level + j] for j in range(n)]

    @property
    def max_size(self) -> int:
        return max(self.head + self.period)


@dataclass(frozen=True)
class Word:
    """A finite word at a given level: ``symbols[j]`` lies in ``{1..m(level + j)}``."""

    level: int
    symbols: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(int(s) for s in self.symbols))
        if self.level < 0:
            raise ValueError("level must be non-negative")

    def __len__(self) -> int:
        return len(self.symbols)

    def check(self, m: AlphabetSeq) -> "Word":
        """Raise ``ValueError`` if some symbol is outside its level's alphabet."""
        for j, s in enumerate(self.symbols):
            if not 1 <= s <= m(self.level + j):
                raise ValueError(
                    f"symbol {s} at depth {j} outside alphabet of size {m(self.level + j)}"
                )
        return self

    def curtail(self, n: int) -> "Word":
        if n > len(self):
            raise ValueError(f"cannot curtail a word of length {len(self)} to {n}")
        return Word(self.level, self.symbols[:n])

    def extend(self, symbol: int) -> "Word":
        return Word(self.level, self.symbols + (symbol,))

    def is_prefix_of(self, other: "Word") -> bool:
        return (
            self.level == other.level
            and len(self) <= len(other)
            and other.symbols[: len(self)] == self.symbols
        )


@dataclass(frozen=True)
class PointPrefix:
    """A point known through a finite prefix and an optional repeating tail.

    ``symbol(d)`` is defined for every ``d`` when ``tail`` is non-empty and
    only for ``d < len(prefix)`` otherwise (e.g. a sampled path).
    """

    level: int
    prefix: tuple[int, ...] = ()
    tail: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(int(s) for s in self.prefix))
        object.__setattr__(self, "tail", tuple(int(s) for s in self.tail))

    @property
    def depth(self) -> float:
        """Number of resolvable symbols (``inf`` with a repeating tail)."""
        return math.inf if self.tail else len(self.prefix)

    def symbol(self, d: int) -> int:
        if d < len(self.prefix):
            return self.prefix[d]
        if not self.tail:
            raise IndexError(f"point resolved only to depth {len(self.prefix)}, asked {d}")
        return self.tail[(d - len(self.prefix)) % len(self.tail)]

    def symbols(self, n: int) -> np.ndarray:
        """The first ``n`` symbols as an integer array."""
        if n <= len(self.prefix):
            return np.asarray(self.prefix[:n], dtype=np.int64)
        return np.asarray([self.symbol(d) for d in range(n)], dtype=np.int64)

    def curtail(self, n: int) -> Word:
        return Word(self.level, tuple(int(s) for s in self.symbols(n)))

    def check(self, m: AlphabetSeq, n: int | None = None) -> "PointPrefix":
        if n is None:
            n = len(self.prefix) + len(self.tail) * m.n_classes
        self.curtail(n).check(m)
        return self


@dataclass(frozen=True)
class BallSpec:
    """Bowen ball ``B_n(center, eps)`` (open) or its closed counterpart."""

    center: PointPrefix
    n: int
    eps: float
    closed: bool = False

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("n must be non-negative")
        if not self.eps > 0:
            raise ValueError("eps must be positive")


class NetRelation(enum.Enum):
    DISJOINT = "disjoint"
    U_CONTAINS_V = "u_contains_v"
    V_CONTAINS_U = "v_contains_u"
    EQUAL = "equal"


def meet_length(a: PointPrefix, b: PointPrefix, max_depth: int) -> float:
    """Length of the longest common prefix of ``a`` and ``b``.

    Returns ``math.inf`` when the two agree on the first ``max_depth`` symbols,
    meaning the comparison could not separate them.
    """
    if a.level != b.level:
        raise ValueError("points live at different levels")
    for d in range(max_depth):
        if a.symbol(d) != b.symbol(d):
            return d
    return math.inf


def metric(a: PointPrefix, b: PointPrefix, max_depth: int = 64) -> float:
    """``exp(-|a ^ b|)``; returns 0 when no disagreement occurs within ``max_depth``."""
    return math.exp(-meet_length(a, b, max_depth))


def shift(w: PointPrefix | Word):
    """Drop the first symbol and move one level up."""
    if isinstance(w, Word):
        if len(w) == 0:
            raise ValueError("cannot shift the empty word")
        return Word(w.level + 1, w.symbols[1:])
    if w.prefix:
        return PointPrefix(w.level + 1, w.prefix[1:], w.tail)
    if not w.tail:
        raise ValueError("cannot shift a point with no resolvable symbols")
    return PointPrefix(w.level + 1, (), w.tail[1:] + w.tail[:1])


def neg_log_radius(eps: float) -> float:
    """``-log(eps)``, snapped to an integer when within rounding distance."""
    r = -math.log(eps)
    nearest = round(r)
    if abs(r - nearest) < _LOG_SNAP:
        return float(nearest)
    return r


def bowen_ball_rank(spec: BallSpec) -> int:
    """Rank of the cylinder equal to the Bowen ball in the shift.

    Open ball: ``n + floor(-log eps + 1) - 1``.  Closed ball:
    ``n + ceil(-log eps) - 1``.  Once the radius reaches the diameter 1 of
    the metric the ball is the whole space: the rank is clamped to 0 and a
    :class:`RankClampWarning` is issued if the formula said otherwise.
    For ``n = 0`` the Bowen distance vanishes and the ball is the whole space.
    """
    if spec.n == 0:
        return 0
    r = neg_log_radius(spec.eps)
    # the metric has diameter 1, so these balls are the whole space
    whole = r <= 0 if spec.closed else r < 0
    if whole:
        formula = spec.n + (math.ceil(r) if spec.closed else math.floor(r + 1)) - 1
        if formula != 0:
            warnings.warn(f"ball rank {formula} clamped to 0: radius reaches the diameter", RankClampWarning, stacklevel=2)
        return 0
    if spec.closed:
        return spec.n + math.ceil(r) - 1
    return spec.n + math.floor(r + 1) - 1


def net_relation(u: Word, v: Word) -> NetRelation:
    """Containment relation between the cylinders ``[u]`` and ``[v]``."""
    if u.level != v.level:
        raise ValueError("cylinders at different levels")
    n = min(len(u), len(v))
    if u.symbols[:n] != v.symbols[:n]:
        return NetRelation.DISJOINT
    if len(u) == len(v):
        return NetRelation.EQUAL
    # the shorter word names the larger cylinder
    return NetRelation.U_CONTAINS_V if len(u) < len(v) else NetRelation.V_CONTAINS_U


def count_admissible(m: AlphabetSeq, level: int, n: int) -> int:
    """Number of words of length ``n`` at ``level`` (exact integer)."""
    return math.prod(m.sizes(level, n))


def word_digits(m: AlphabetSeq, level: int, length: int) -> np.ndarray:
    """All words of a given length in lexicographic order, as 0-based digits.

    Returns an array of shape ``(count, length)``; row ``i`` holds the word
    whose mixed-radix index is ``i`` (first symbol most significant).
    """
    sizes = m.sizes(level, length)
    if length == 0:
        return np.zeros((1, 0), dtype=np.int64)
    grids = np.indices(sizes, dtype=np.int64)
    return grids.reshape(length, -1).T


def iter_words(m: AlphabetSeq, level: int, length: int) -> Iterator[Word]:
    for row in word_digits(m, level, length):
        yield Word(level, tuple(int(d) + 1 for d in row))


def word_index(m: AlphabetSeq, w: Word) -> int:
    """Lexicographic index of ``w`` among words of its length and level."""
    idx = 0
    for j, s in enumerate(w.symbols):
        idx = idx * m(w.level + j) + (s - 1)
    return idx


def word_from_index(m: AlphabetSeq, level: int, length: int, idx: int, prefix: Sequence[int] = ()) -> Word:
    """Inverse of :func:`word_index` for words extending ``prefix``."""
    a = len(prefix)
    syms = []
    for j in reversed(range(a, length)):
        size = m(level + j)
        syms.append(idx % size + 1)
        idx //= size
    if idx:
        raise ValueError("index out of range")
    return Word(level, tuple(prefix) + tuple(reversed(syms)))


def uniform_mass(m: AlphabetSeq, w: Word):
    """Mass of ``[w]`` under the uniform product measure, as an exact fraction."""
    from fractions import Fraction

    return Fraction(1, count_admissible(m, w.level, len(w)))


def is_prefix_free(words: Sequence[Word]) -> bool:
    ws = sorted(words, key=lambda w: (w.symbols, len(w)))
    for a, b in zip(ws, ws[1:]):
        if a.is_prefix_of(b):
            return False
    return True


def is_complete(m: AlphabetSeq, words: Sequence[Word], level: int = 0) -> bool:
    """True when the cylinders cover the whole space at ``level`` (no gaps)."""
    if not words or any(w.level != level for w in words):
        return False
    # nested members add nothing to the union; keep the maximal cylinders
    outer = {w for w in words if not any(v != w and v.is_prefix_of(w) for v in words)}
    return sum(uniform_mass(m, w) for w in outer) == 1


@dataclass(frozen=True)
class CylinderCover:
    """A finite family of cylinders at a common level."""

    words: tuple[Word, ...]
    level: int = 0
    meta: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "words", tuple(self.words))
        for w in self.words:
            if w.level != self.level:
                raise ValueError("all cylinders in a cover must share the level")

    def __len__(self) -> int:
        return len(self.words)

    def __iter__(self):
        return iter(self.words)

    @property
    def ranks(self) -> list[int]:
        return [len(w) for w in self.words]

    def is_disjoint(self) -> bool:
        return is_prefix_free(self.words) and len(set(self.words)) == len(self.words)

    def is_complete(self, m: AlphabetSeq) -> bool:
        return is_complete(m, self.words, self.level)
