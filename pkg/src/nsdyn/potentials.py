"""Potential sequences on the sequence space and their Birkhoff sums.

A potential of depth ``D`` at level ``k`` is a table ``f_k`` indexed by the
first ``D`` symbols of a point, i.e. an array of shape
``(m(k), ..., m(k + D - 1))``.  Depth 1 is the first-coordinate case, where
``f_k(w) = a[k][w_0 - 1]``.  Tables are eventually periodic in ``k``.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy.special import logsumexp

from .seqspace import AlphabetSeq, PointPrefix, count_admissible, word_digits

POLICIES = ("lower", "upper", "midpoint")


class PotentialSeq:
    """Eventually periodic sequence of potential tables of fixed depth."""

    def __init__(self, m: AlphabetSeq, depth: int, head: Sequence, period: Sequence):
        if depth < 1:
            raise ValueError("depth must be at least 1")
        if len(period) == 0:
            raise ValueError("period must be non-empty")
        self.m = m
        self.depth = int(depth)
        self.head = tuple(np.asarray(t, dtype=float) for t in head)
        self.period = tuple(np.asarray(t, dtype=float) for t in period)
        self._validate()

    # construction helpers

    @classmethod
    def first_coord(cls, m: AlphabetSeq, head: Sequence = (), period: Sequence = ()) -> "PotentialSeq":
        """First-coordinate potential from rows ``a[k] = (a_k1, ..., a_km(k))``."""
        return cls(m, 1, head, period)

    @classmethod
    def constant(cls, m: AlphabetSeq, c: float = 0.0) -> "PotentialSeq":
        rows = [np.full(m(k), float(c)) for k in range(m.n_classes)]
        return cls(m, 1, rows[: len(m.head)], rows[len(m.head):])

    @classmethod
    def from_function(
        cls,
        m: AlphabetSeq,
        depth: int,
        fn: Callable[[int, tuple], float],
        head_len: int = 0,
        period_len: int | None = None,
    ) -> "PotentialSeq":
        """Tabulate ``fn(k, symbols)`` with 1-based ``symbols`` of length ``depth``.

        ``period_len`` defaults to the alphabet period; it must be compatible
        with it so that table shapes repeat.
        """
        if period_len is None:
            period_len = len(m.period)
        head_len = max(head_len, len(m.head))

        def table(k):
            shape = tuple(m.sizes(k, depth))
            out = np.empty(shape)
            for idx in np.ndindex(*shape):
                out[idx] = fn(k, tuple(i + 1 for i in idx))
            return out

        head = [table(k) for k in range(head_len)]
        period = [table(k) for k in range(head_len, head_len + period_len)]
        return cls(m, depth, head, period)

    def _validate(self):
        for k in range(self.n_check_levels):
            expected = tuple(self.m.sizes(k, self.depth))
            got = self.table(k).shape
            if got != expected:
                raise ValueError(f"table at level {k} has shape {got}, expected {expected}")
            if not np.all(np.isfinite(self.table(k))):
                raise ValueError(f"table at level {k} has non-finite entries")

    @property
    def n_check_levels(self) -> int:
        """Levels that determine every table and shape by periodicity."""
        h = max(len(self.head), len(self.m.head))
        return h + math.lcm(len(self.period), len(self.m.period)) + self.depth

    @property
    def is_first_coord(self) -> bool:
        return self.depth == 1

    @property
    def kind(self) -> str:
        return "first_coord" if self.is_first_coord else "depth"

    def table(self, k: int) -> np.ndarray:
        if k < len(self.head):
            return self.head[k]
        return self.period[(k - len(self.head)) % len(self.period)]

    def value(self, k: int, symbols: Sequence[int]) -> float:
        """``f_k`` at a point whose first ``depth`` symbols are ``symbols``."""
        return float(self.table(k)[tuple(int(s) - 1 for s in symbols[: self.depth])])

    @property
    def sup_norm(self) -> float:
        return max(float(np.max(np.abs(t))) for t in self.head + self.period)

    @cached_property
    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(repr((self.m, self.depth, len(self.head), len(self.period))).encode())
        for t in self.head + self.period:
            h.update(np.ascontiguousarray(t).tobytes())
        return h.hexdigest()

    def __hash__(self):
        return hash(self.fingerprint)

    def __eq__(self, other):
        return isinstance(other, PotentialSeq) and self.fingerprint == other.fingerprint

    def __repr__(self):
        return f"PotentialSeq(kind={self.kind}, depth={self.depth}, m={self.m})"

    def shifted_tables(self, level: int, n: int) -> list[np.ndarray]:
        return [self.table(level + j) for j in range(n)]

    def map_tables(self, fn: Callable[[np.ndarray], np.ndarray], depth: int | None = None) -> "PotentialSeq":
        """Apply ``fn`` to every stored table, keeping the periodic structure."""
        return PotentialSeq(
            self.m,
            self.depth if depth is None else depth,
            [fn(t) for t in self.head],
            [fn(t) for t in self.period],
        )


def birkhoff_sum(f: PotentialSeq, w: PointPrefix, n: int) -> float:
    """``S_n f(w) = sum_{j<n} f_{k+j}(shift^j w)`` with ``k = w.level``."""
    if n == 0:
        return 0.0
    syms = w.symbols(n + f.depth - 1)
    total = 0.0
    for j in range(n):
        total += float(f.table(w.level + j)[tuple(syms[j: j + f.depth] - 1)])
    return total


def word_sums(f: PotentialSeq, level: int, n: int, length: int, prefix: Sequence[int] = ()) -> np.ndarray:
    """``S_n f`` for every word of ``length`` symbols, in lexicographic order.

    Only words starting with ``prefix`` (1-based symbols) are listed.
    ``length`` must be at least ``n + depth - 1`` so the sum is determined.
    """
    if length < n + f.depth - 1:
        raise ValueError("words too short to determine the Birkhoff sum")
    a = len(prefix)
    if a > length:
        raise ValueError("prefix longer than the words")
    ext = word_digits(f.m, level + a, length - a)
    digits = np.empty((ext.shape[0], length), dtype=np.int64)
    digits[:, :a] = np.asarray(prefix, dtype=np.int64) - 1
    digits[:, a:] = ext
    out = np.zeros(digits.shape[0])
    for j in range(n):
        out += f.table(level + j)[tuple(digits[:, j + i] for i in range(f.depth))]
    return out


def cylinder_extremes(
    f: PotentialSeq, level: int, n: int, rank: int, how: str, prefix: Sequence[int] = ()
) -> np.ndarray:
    """``sup`` or ``inf`` of ``S_n f`` over each rank-``rank`` cylinder.

    Computed exactly by enumerating every extension that can still influence
    the sum.  Returns one value per word of length ``rank`` extending
    ``prefix``, in lexicographic order.
    """
    if how not in ("sup", "inf"):
        raise ValueError("how must be 'sup' or 'inf'")
    length = max(rank, n + f.depth - 1) if n > 0 else rank
    n_rank = count_admissible(f.m, level + len(prefix), rank - len(prefix))
    if n == 0:
        return np.zeros(n_rank)
    sums = word_sums(f, level, n, length, prefix).reshape(n_rank, -1)
    return sums.max(axis=1) if how == "sup" else sums.min(axis=1)


@dataclass(frozen=True)
class EnvelopePair:
    """First-coordinate lower and upper envelopes of a potential."""

    lower: PotentialSeq
    upper: PotentialSeq


def _row_extreme(t: np.ndarray, fn) -> np.ndarray:
    if t.ndim == 1:
        return t.copy()
    return fn(t.reshape(t.shape[0], -1), axis=1)


def envelopes(f: PotentialSeq) -> EnvelopePair:
    """Pointwise inf and sup of ``f_k`` over each first-symbol cylinder."""
    if f.is_first_coord:
        return EnvelopePair(f, f)
    lower = f.map_tables(lambda t: _row_extreme(t, np.min), depth=1)
    upper = f.map_tables(lambda t: _row_extreme(t, np.max), depth=1)
    return EnvelopePair(lower, upper)


def reduce_to_first_coord(f: PotentialSeq, policy: str = "midpoint") -> PotentialSeq:
    """Pick first-coordinate values ``a[k][i]`` between the two envelopes."""
    if policy not in POLICIES:
        raise ValueError(f"policy must be one of {POLICIES}, got {policy!r}")
    if f.is_first_coord:
        return f
    env = envelopes(f)
    if policy == "lower":
        return env.lower
    if policy == "upper":
        return env.upper
    return PotentialSeq(
        f.m,
        1,
        [(a + b) / 2 for a, b in zip(env.lower.head, env.upper.head)],
        [(a + b) / 2 for a, b in zip(env.lower.period, env.upper.period)],
    )


@dataclass(frozen=True)
class SBVReport:
    """Envelope gap of Birkhoff sums over cylinders, for ``n = 1..n_max``.

    ``gaps[n-1]`` is ``max_u sup_[u] S_n f^* - inf_[u] S_n f_*`` over words
    ``u`` of length ``n``; ``bound`` is their maximum.
    """

    bound: float
    gaps: tuple[float, ...]
    tail_nonincreasing: bool


def sbv_bound(f: PotentialSeq, n_max: int, level: int = 0) -> SBVReport:
    """Strong bounded variation constant observed up to ``n_max``.

    Both envelopes depend on the first coordinate only, so on ``[u]`` the gap
    is the sum of envelope oscillations along ``u`` and its maximum over
    words is the sum of the per-level maxima; no enumeration is needed.
    ``tail_nonincreasing`` reports whether the per-step increments are
    non-increasing over the second half of the range, which is what a
    summable oscillation looks like.  This is evidence, not a decision.
    """
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    env = envelopes(f)
    inc = np.array([float(np.max(env.upper.table(level + j) - env.lower.table(level + j))) for j in range(n_max)])
    gaps = np.cumsum(inc)
    tail = inc[len(inc) // 2:]
    return SBVReport(
        bound=float(gaps.max()),
        gaps=tuple(float(g) for g in gaps),
        tail_nonincreasing=bool(np.all(np.diff(tail) <= 1e-12)),
    )


def level_log_partition(a: PotentialSeq, level: int, n: int) -> np.ndarray:
    """``log sum_i exp(a[k][i])`` for ``k = level, ..., level + n - 1``."""
    if not a.is_first_coord:
        raise ValueError("expects a first-coordinate potential")
    h = len(a.head)
    q = len(a.period)
    head_vals = [float(logsumexp(t)) for t in a.head]
    period_vals = [float(logsumexp(t)) for t in a.period]
    out = np.empty(n)
    for j in range(n):
        k = level + j
        out[j] = head_vals[k] if k < h else period_vals[(k - h) % q]
    return out
