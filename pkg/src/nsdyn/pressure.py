"""Topological pressure on the nonautonomous shift.

Covers the capacity sequence ``s_n``, spanning and separated sums at a Bowen
radius, the depth-limited Bowen outer measure and packing content computed by
dynamic programming over the prefix tree, a bisection for their critical
exponent, rank uniformization of cylinder covers and a homogeneity check of
the capacity restricted to a cylinder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.special import logsumexp

from .potentials import (
    PotentialSeq,
    cylinder_extremes,
    level_log_partition,
    reduce_to_first_coord,
    word_sums,
)
from .seqspace import (
    AlphabetSeq,
    BallSpec,
    CylinderCover,
    PointPrefix,
    Word,
    bowen_ball_rank,
    count_admissible,
    iter_words,
    word_from_index,
)

MAX_TREE_DEPTH = 14


class DepthBoundError(ValueError):
    """Requested prefix-tree depth exceeds what the exact DP supports."""


class CoverError(ValueError):
    """A cylinder family is not a finite disjoint complete cover."""


def _check_alphabet(m: AlphabetSeq, f: PotentialSeq):
    if f.m != m:
        raise ValueError("potential was built for a different alphabet sequence")


# capacity sequence


@dataclass(frozen=True)
class PressureEstimate:
    """Finite-horizon pressure data over a window ``[N_lo, N_hi]``.

    ``s_values[n - 1]`` is ``s_n``.  The brackets are the smallest and
    largest ``s_n`` inside the window, i.e. the window's tail infimum and tail
    supremum seen from ``N_lo``.  ``cauchy_gap`` is the largest distance of a
    window value from ``s_{N_hi}``.
    """

    s_values: np.ndarray
    window: tuple[int, int]
    liminf_bracket: float
    limsup_bracket: float
    cauchy_gap: float

    @property
    def tail_inf(self) -> np.ndarray:
        """``min_{n <= n' <= N_hi} s_{n'}`` for each ``n``."""
        return np.minimum.accumulate(self.s_values[::-1])[::-1]

    @property
    def tail_sup(self) -> np.ndarray:
        return np.maximum.accumulate(self.s_values[::-1])[::-1]

    def to_csv(self) -> str:
        lines = ["n,s_n,tail_inf,tail_sup"]
        for n, (s, lo, hi) in enumerate(zip(self.s_values, self.tail_inf, self.tail_sup), start=1):
            lines.append(f"{n},{float(s)!r},{float(lo)!r},{float(hi)!r}")
        return "\n".join(lines) + "\n"


def estimate_from_values(s_values: np.ndarray, N_lo: int | None = None) -> PressureEstimate:
    """Window brackets for a precomputed sequence ``s_1, ..., s_{N_hi}``."""
    s_values = np.asarray(s_values, dtype=float)
    N_hi = len(s_values)
    if N_hi < 1:
        raise ValueError("need at least one value")
    if N_lo is None:
        N_lo = max(1, N_hi // 2)
    if not 1 <= N_lo <= N_hi:
        raise ValueError(f"window {N_lo}..{N_hi} is empty or out of range")
    win = s_values[N_lo - 1:]
    return PressureEstimate(
        s_values=s_values,
        window=(N_lo, N_hi),
        liminf_bracket=float(win.min()),
        limsup_bracket=float(win.max()),
        cauchy_gap=float(np.max(np.abs(win - s_values[-1]))),
    )


def sn_sequence(
    m: AlphabetSeq,
    f: PotentialSeq,
    N_hi: int,
    policy: str = "midpoint",
    N_lo: int | None = None,
    level: int = 0,
) -> PressureEstimate:
    """``s_n = (1/n) sum_{j<n} log sum_i exp(a[j][i])`` for ``n = 1..N_hi``.

    Deeper potentials are first reduced to first-coordinate values between
    their envelopes according to ``policy``.
    """
    _check_alphabet(m, f)
    a = reduce_to_first_coord(f, policy)
    logz = level_log_partition(a, level, N_hi)
    s = np.cumsum(logz) / np.arange(1, N_hi + 1)
    return estimate_from_values(s, N_lo)


# spanning and separated sums


def _bowen_sum(f: PotentialSeq, n: int, eps: float, how: str, level: int) -> float:
    if n == 0:
        return 1.0
    # separation at radius eps means differing on the first `rank` symbols,
    # where rank is the closed Bowen ball rank
    rank = bowen_ball_rank(BallSpec(PointPrefix(level, (), (1,)), n, eps, closed=True))
    vals = cylinder_extremes(f, level, n, rank, how)
    return float(np.exp(vals).sum())


def spanning_Q(m: AlphabetSeq, f: PotentialSeq, n: int, eps: float, level: int = 0) -> float:
    """Minimal weight of an ``(n, eps)``-spanning set, ``sum exp(S_n f)``.

    Every point must be within Bowen distance ``<= eps`` of the set, so the
    set needs one point in each cylinder of the closed-ball rank; the
    cheapest choice takes the infimum of ``S_n f`` on each.
    """
    _check_alphabet(m, f)
    return _bowen_sum(f, n, eps, "inf", level)


def separated_P(m: AlphabetSeq, f: PotentialSeq, n: int, eps: float, level: int = 0) -> float:
    """Maximal weight of an ``(n, eps)``-separated set, ``sum exp(S_n f)``.

    Two points are separated (Bowen distance ``> eps``) exactly when they lie
    in different cylinders of the closed-ball rank, so a maximal set holds
    one point per cylinder, placed where ``S_n f`` is largest.
    """
    _check_alphabet(m, f)
    return _bowen_sum(f, n, eps, "sup", level)


# depth-limited outer measures


@dataclass(frozen=True)
class OuterMeasureResult:
    """Value of a depth-limited Bowen measure or packing content.

    ``cover`` holds the optimizing antichain: a cover of the target for the
    Bowen measure, a packing inside the target for the packing content.
    """

    kind: str
    s: float
    N: int
    depth_max: int
    log_value: float
    cover: CylinderCover = field(compare=False)

    @property
    def value(self) -> float:
        return math.exp(self.log_value) if self.log_value < 709 else math.inf


@lru_cache(maxsize=512)
def _rank_sums(f: PotentialSeq, level: int, prefix: tuple, rank: int, how: str) -> np.ndarray:
    out = cylinder_extremes(f, level, rank, rank, how, prefix)
    out.setflags(write=False)
    return out


def _ancestor_sum(f: PotentialSeq, target: Word, r: int, how: str) -> float:
    return float(cylinder_extremes(f, target.level, r, r, how, target.symbols[:r])[0])


def _tree_dp(
    m: AlphabetSeq,
    f: PotentialSeq,
    s: float,
    N: int,
    depth_max: int,
    target: Word | None,
    bound: str,
    kind: str,
) -> OuterMeasureResult:
    _check_alphabet(m, f)
    if depth_max > MAX_TREE_DEPTH:
        raise DepthBoundError(f"depth_max={depth_max} exceeds the supported {MAX_TREE_DEPTH}")
    if N < 0:
        raise ValueError("N must be non-negative")
    if bound not in ("upper", "lower"):
        raise ValueError("bound must be 'upper' or 'lower'")
    if target is None:
        target = Word(0, ())
    target.check(m)
    how = "sup" if bound == "upper" else "inf"
    bowen = kind == "bowen"
    lvl, pre, a = target.level, target.symbols, len(target)
    blocked = math.inf if bowen else -math.inf
    better = np.minimum if bowen else np.maximum

    values: dict[int, np.ndarray] = {}
    take: dict[int, np.ndarray] = {}
    for r in range(depth_max, a - 1, -1):
        if r >= N:
            own = -r * s + _rank_sums(f, lvl, pre, r, how)
        else:
            own = np.full(count_admissible(m, lvl + a, r - a), blocked)
        if r == depth_max:
            values[r] = own
            take[r] = np.ones(own.shape, dtype=bool)
            continue
        child = values[r + 1].reshape(own.size, m(lvl + r))
        with np.errstate(invalid="ignore"):
            child = logsumexp(child, axis=1)
        child = np.where(np.isnan(child), blocked, child)
        values[r] = better(own, child)
        take[r] = (own <= child) if bowen else (own >= child)

    log_value = float(values[a][0]) if depth_max >= a else blocked
    ancestor = None
    if bowen:
        for r in range(N, min(a, depth_max + 1)):
            w = -r * s + _ancestor_sum(f, target, r, how)
            if w < log_value:
                log_value, ancestor = w, r

    words: list[Word] = []
    if ancestor is not None:
        words = [target.curtail(ancestor)]
    elif math.isfinite(log_value):
        stack = [(a, 0)]
        while stack:
            r, idx = stack.pop()
            if take[r][idx]:
                if r >= N:
                    words.append(word_from_index(m, lvl, r, idx, pre))
                continue
            size = m(lvl + r)
            stack.extend((r + 1, idx * size + c) for c in reversed(range(size)))
    cover = CylinderCover(tuple(words), lvl)
    return OuterMeasureResult(kind, float(s), N, depth_max, log_value, cover)


def bowen_outer_measure(
    m: AlphabetSeq,
    f: PotentialSeq,
    s: float,
    N: int,
    depth_max: int,
    target: Word | None = None,
    bound: str = "upper",
) -> OuterMeasureResult:
    """Infimum over prefix-free cylinder covers of ``[target]`` with ranks in
    ``[N, depth_max]`` of ``sum exp(-rank * s + S(u))``.

    ``S(u)`` is the sup of the Birkhoff sum over ``[u]`` (``bound="upper"``)
    or its inf (``bound="lower"``).  Solved exactly by a bottom-up pass:
    each node keeps the cheaper of itself and the total of its children.
    """
    return _tree_dp(m, f, s, N, depth_max, target, bound, "bowen")


def packing_content(
    m: AlphabetSeq,
    f: PotentialSeq,
    s: float,
    N: int,
    depth_max: int,
    target: Word | None = None,
    bound: str = "upper",
) -> OuterMeasureResult:
    """Supremum over prefix-free families of cylinders inside ``[target]``
    with ranks in ``[N, depth_max]`` of ``sum exp(-rank * s + S(u))``."""
    return _tree_dp(m, f, s, N, depth_max, target, bound, "packing")


@dataclass(frozen=True)
class CriticalResult:
    """Bracket ``[lo, hi]`` for the critical exponent of a depth-limited measure.

    ``determined`` is false when the depth trend was flat or the initial
    bracket did not straddle a sign change; ``reason`` says which.
    """

    lo: float
    hi: float
    determined: bool
    reason: str = ""
    evaluations: int = 0

    @property
    def estimate(self) -> float:
        return 0.5 * (self.lo + self.hi)


def depth_trend(
    measure_fn: Callable[..., OuterMeasureResult],
    m: AlphabetSeq,
    f: PotentialSeq,
    s: float,
    N: int,
    depth_max: int,
    target: Word | None = None,
    bound: str = "upper",
) -> float:
    """``log value(N, depth_max) - log value(N - 2, depth_max - 2)``.

    Moving the whole rank window two steps deeper makes the value grow when
    ``s`` is below the critical exponent and shrink when above.
    """
    hi = measure_fn(m, f, s, N, depth_max, target, bound).log_value
    lo = measure_fn(m, f, s, N - 2, depth_max - 2, target, bound).log_value
    if math.isinf(hi) and math.isinf(lo) and hi == lo:
        return 0.0
    return hi - lo


def _default_bracket(f: PotentialSeq, levels: int) -> tuple[float, float]:
    low = reduce_to_first_coord(f, "lower")
    up = reduce_to_first_coord(f, "upper")
    lo = float(level_log_partition(low, 0, levels).min())
    hi = float(level_log_partition(up, 0, levels).max())
    return lo - 1.0, hi + 1.0


def critical_s(
    measure_fn: Callable[..., OuterMeasureResult],
    m: AlphabetSeq,
    f: PotentialSeq,
    N: int,
    depth_max: int,
    target: Word | None = None,
    tol: float = 1e-3,
    bracket: tuple[float, float] | None = None,
    bound: str = "upper",
    flat_tol: float = 1e-12,
) -> CriticalResult:
    """Bisect on ``s`` using the sign of :func:`depth_trend`.

    A positive trend means ``s`` is below the critical exponent.  A trend
    within ``flat_tol`` of zero stops the search as undetermined at this
    depth, unless the sign flips across that point.
    """
    if N < 2 or depth_max < N:
        raise ValueError("need 2 <= N <= depth_max to shift the rank window")
    lo, hi = bracket if bracket is not None else _default_bracket(f, f.n_check_levels + depth_max)
    evals = 0

    def sign(s):
        nonlocal evals
        evals += 1
        t = depth_trend(measure_fn, m, f, s, N, depth_max, target, bound)
        if abs(t) <= flat_tol:
            return 0
        return 1 if t > 0 else -1

    s_lo, s_hi = sign(lo), sign(hi)
    if s_lo <= 0 or s_hi >= 0:
        return CriticalResult(lo, hi, False, "initial bracket does not straddle a sign change", evals)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        sm = sign(mid)
        if sm == 0:
            # a single flat point is the crossing itself if the trend
            # changes sign around it; a flat stretch is undetermined
            a, b = mid - tol / 4, mid + tol / 4
            if sign(a) > 0 and sign(b) < 0:
                return CriticalResult(a, b, True, "", evals)
            return CriticalResult(mid, mid, False, f"flat depth trend at s={mid!r}", evals)
        if sm > 0:
            lo = mid
        else:
            hi = mid
    return CriticalResult(lo, hi, True, "", evals)


# rank uniformization


@dataclass(frozen=True)
class RankCertificate:
    """Fixed rank whose uniform cover sum compares with the given cover sum.

    ``direction="lower"``: ``uniform_sum <= cover_sum``.
    ``direction="upper"``: ``uniform_sum >= cover_sum``.
    """

    direction: str
    rank: int
    cover_sum: float
    uniform_sum: float
    uniform_sums: dict = field(compare=False)


def _word_weight(f: PotentialSeq, w: Word, s: float) -> float:
    if f.is_first_coord:
        # exactly rounded, so equal covers give bitwise-equal sums
        sup = math.fsum(float(f.table(w.level + j)[c - 1]) for j, c in enumerate(w.symbols))
    else:
        sup = cylinder_extremes(f, w.level, len(w), len(w), "sup", w.symbols)[0]
    return math.exp(-len(w) * s + sup)


def weighted_cover_sum(f: PotentialSeq, words, s: float) -> float:
    """``sum exp(-|u| s + sup_[u] S_|u| f)`` over the given words."""
    return math.fsum(_word_weight(f, w, s) for w in words)


def uniform_cover_sum(f: PotentialSeq, level: int, n: int, s: float) -> float:
    """Weighted sum over all cylinders of rank ``n``."""
    if f.is_first_coord:
        return weighted_cover_sum(f, iter_words(f.m, level, n), s)
    sums = cylinder_extremes(f, level, n, n, "sup")
    return math.fsum(np.exp(-n * s + sums).tolist())


def rank_uniformize(cover: CylinderCover, f: PotentialSeq, s: float, direction: str) -> RankCertificate:
    """Replace a mixed-rank cover by a single rank with a certified inequality.

    Scans ranks from the cover's smallest to its largest and returns the first
    one satisfying the inequality for ``direction``.  Requires a first-
    coordinate potential and a disjoint complete cover.
    """
    if direction not in ("lower", "upper"):
        raise ValueError("direction must be 'lower' or 'upper'")
    if not f.is_first_coord:
        raise ValueError("rank uniformization needs a first-coordinate potential")
    if len(cover) == 0 or not cover.is_disjoint():
        raise CoverError("cover is empty or its cylinders overlap")
    if not cover.is_complete(f.m):
        raise CoverError("cover leaves part of the space uncovered")
    total = weighted_cover_sum(f, cover.words, s)
    ranks = cover.ranks
    sums = {}
    for n in range(min(ranks), max(ranks) + 1):
        u = uniform_cover_sum(f, cover.level, n, s)
        sums[n] = u
        if (direction == "lower" and u <= total) or (direction == "upper" and u >= total):
            return RankCertificate(direction, n, total, u, sums)
    raise CoverError(f"no rank in [{min(ranks)}, {max(ranks)}] satisfies the {direction} inequality")


# homogeneity


@dataclass(frozen=True)
class HomogeneityReport:
    """Capacity on ``[u]`` against the full capacity, for ``n = 1..N_hi``.

    ``difference[n - 1] = s_n - s_n[u]`` is non-negative.  ``envelope_const``
    is a constant ``C`` with ``difference <= C / n`` for every ``n``.
    """

    restricted: np.ndarray
    full: np.ndarray
    difference: np.ndarray
    max_tail_difference: float
    envelope_const: float


def homogeneity_check(
    m: AlphabetSeq,
    f: PotentialSeq,
    u: Word,
    N_hi: int,
    policy: str = "midpoint",
    N_lo: int | None = None,
) -> HomogeneityReport:
    """Capacity ``s_n`` counted only over words passing through ``[u]``."""
    _check_alphabet(m, f)
    u.check(m)
    a = reduce_to_first_coord(f, policy)
    logz = level_log_partition(a, u.level, N_hi)
    own = np.array([a.table(u.level + j)[s - 1] for j, s in enumerate(u.symbols)], dtype=float)
    n = np.arange(1, N_hi + 1)
    full_tot = np.cumsum(logz)
    restricted_tot = np.empty(N_hi)
    k = len(u)
    for i in range(N_hi):
        if i + 1 <= k:
            restricted_tot[i] = own[: i + 1].sum()
        else:
            restricted_tot[i] = own.sum() + logz[k: i + 1].sum()
    full = full_tot / n
    restricted = restricted_tot / n
    diff = full - restricted
    if N_lo is None:
        N_lo = max(1, N_hi // 2)
    const = float(np.sum(logz[:k] - own)) if k else 0.0
    const = max(const, float(np.max(diff * n)))
    return HomogeneityReport(
        restricted=restricted,
        full=full,
        difference=diff,
        max_tail_difference=float(np.max(np.abs(diff[N_lo - 1:]))),
        envelope_const=const,
    )


def restricted_capacity_by_enumeration(f: PotentialSeq, u: Word, n: int) -> float:
    """Brute-force ``s_n`` over words through ``[u]`` (small ``n`` only)."""
    if n >= len(u):
        sums = word_sums(f, u.level, n, n + f.depth - 1, u.symbols)
    else:
        sums = word_sums(f, u.level, n, max(len(u), n + f.depth - 1), u.symbols)
    return float(logsumexp(sums)) / n
