"""Nonautonomous expanding circle maps, their symbolic coding and expansiveness.

``IntervalNDS`` is the sequence ``T_k(x) = m(k) x mod 1`` on ``[0, 1)``.  By
default distances are measured on the circle, ``min(|x - y|, 1 - |x - y|)``,
which makes every ``T_k`` continuous; ``metric="interval"`` uses ``|x - y|``.
Orbits of grid points are computed exactly on integer numerators over a
common denominator, and coding uses exact rationals, because floating-point
iteration of an expanding map loses ``log2 m`` bits per step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .potentials import PotentialSeq
from .seqspace import AlphabetSeq, PointPrefix, Word, meet_length, shift

METRICS = ("circle", "interval")


@dataclass(frozen=True)
class IntervalNDS:
    """Sequence of maps ``x -> m(k) x mod 1`` on ``[0, 1)``."""

    m: AlphabetSeq
    metric: str = "circle"

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValueError(f"metric must be one of {METRICS}")

    def step(self, k: int, x):
        """``T_k(x)``; exact for ``Fraction`` input."""
        y = self.m(k) * x
        return y - math.floor(y)

    def orbit(self, x, k: int, n: int) -> list:
        out = [x]
        for j in range(n - 1):
            out.append(self.step(k + j, out[-1]))
        return out

    def dist(self, x, y):
        d = abs(x - y)
        return min(d, 1 - d) if self.metric == "circle" else d


@dataclass(frozen=True)
class ShiftNDS:
    """The shift on the nonautonomous sequence space, as a dynamical system."""

    m: AlphabetSeq
    max_depth: int = 256

    def dist(self, a: PointPrefix, b: PointPrefix) -> float:
        return math.exp(-meet_length(a, b, self.max_depth))


def _num_dist(a: np.ndarray, b: np.ndarray, den: int, metric: str) -> np.ndarray:
    """Distance between numerators ``a/den`` and ``b/den``, as floats."""
    d = np.abs(a - b)
    if metric == "circle":
        d = np.minimum(d, den - d)
    return d / den


def grid_orbits(sys: IntervalNDS, num: np.ndarray, den: int, k: int, n: int) -> np.ndarray:
    """Exact orbit numerators: ``out[..., j]`` is ``T^j(num/den) * den``."""
    num = np.asarray(num, dtype=np.int64)
    if sys.m.max_size * den >= 2**62:
        raise OverflowError("grid denominator too large for exact integer orbits")
    out = np.empty(num.shape + (n,), dtype=np.int64)
    cur = num % den
    for j in range(n):
        out[..., j] = cur
        cur = (cur * sys.m(k + j)) % den
    return out


def bowen_metric_nds(sys, x, y, k: int, n: int) -> float:
    """``max_{j<n} d(T^j x, T^j y)`` starting from level ``k``.

    Interval points are handled in exact rational arithmetic; shift points are
    :class:`PointPrefix` objects at level ``k``.
    """
    if n == 0:
        return 0.0
    if isinstance(sys, ShiftNDS):
        best = 0.0
        for _ in range(n):
            best = max(best, sys.dist(x, y))
            x, y = shift(x), shift(y)
        return best
    fx, fy = Fraction(x), Fraction(y)
    best = Fraction(0)
    for j in range(n):
        best = max(best, sys.dist(fx, fy))
        fx, fy = sys.step(k + j, fx), sys.step(k + j, fy)
    return float(best)


# expansiveness


@dataclass(frozen=True)
class FalsifierReport:
    """Outcome of searching for a pair that stays ``delta``-close for ``J`` steps.

    ``separation_index[i]`` is the first ``j <= J`` with
    ``d(T^j x_i, T^j y_i) > delta`` for pair ``i``, or ``-1`` if none.
    ``verdict`` is ``"counterexample"`` when some pair never separates and
    ``"no counterexample"`` otherwise; the latter is only evidence up to the
    searched horizon and grid.
    """

    verdict: str
    delta: float
    J: int
    n_pairs: int
    separation_index: np.ndarray = field(repr=False)
    witnesses: tuple = ()


def _falsifier_shift(sys: ShiftNDS, delta, J, pairs, samples, seed, level):
    if pairs is None:
        rng = np.random.default_rng(seed)
        pairs = []
        length = J + 64
        sizes = np.array(sys.m.sizes(level, length))
        for _ in range(samples):
            a = rng.integers(0, sizes) + 1
            b = rng.integers(0, sizes) + 1
            pairs.append((PointPrefix(level, a.tolist()), PointPrefix(level, b.tolist())))
    idx = np.full(len(pairs), -1, dtype=np.int64)
    witnesses = []
    for i, (a, b) in enumerate(pairs):
        depth = min(a.depth, b.depth, sys.max_depth)
        if meet_length(a, b, int(depth)) == math.inf:
            continue  # indistinguishable at this resolution, not a pair of distinct points
        x, y = a, b
        for j in range(J + 1):
            if math.exp(-meet_length(x, y, int(min(x.depth, y.depth, sys.max_depth)))) > delta:
                idx[i] = j
                break
            x, y = shift(x), shift(y)
        else:
            witnesses.append((a, b))
    return pairs, idx, witnesses


def expansiveness_falsifier(
    sys,
    delta: float,
    J: int,
    grid: int = 420,
    pairs: Sequence | None = None,
    samples: int = 1000,
    seed: int = 0,
    level: int = 0,
) -> FalsifierReport:
    """Search for distinct points whose orbits stay within ``delta`` up to ``J``.

    For interval systems the default search covers all pairs of the grid
    ``{i / grid}``; explicit ``pairs`` of rationals or floats can be supplied
    instead.  For the shift, ``samples`` random pairs are drawn unless
    ``pairs`` of :class:`PointPrefix` are given.
    """
    if isinstance(sys, ShiftNDS):
        pairs, idx, witnesses = _falsifier_shift(sys, delta, J, pairs, samples, seed, level)
        verdict = "counterexample" if witnesses else "no counterexample"
        return FalsifierReport(verdict, delta, J, len(pairs), idx, tuple(witnesses[:10]))

    if pairs is None:
        den = grid
        ii, jj = np.triu_indices(grid, k=1)
        orb = grid_orbits(sys, np.arange(grid), den, level, J + 1)
        idx = np.full(ii.size, -1, dtype=np.int64)
        for lo in range(0, ii.size, 200_000):
            sl = slice(lo, lo + 200_000)
            d = _num_dist(orb[ii[sl]], orb[jj[sl]], den, sys.metric)
            hit = d > delta
            first = np.where(hit.any(axis=1), hit.argmax(axis=1), -1)
            idx[sl] = first
        bad = np.flatnonzero(idx < 0)
        witnesses = tuple((Fraction(int(ii[b]), den), Fraction(int(jj[b]), den)) for b in bad[:10])
        verdict = "counterexample" if bad.size else "no counterexample"
        return FalsifierReport(verdict, delta, J, int(ii.size), idx, witnesses)

    idx = np.full(len(pairs), -1, dtype=np.int64)
    witnesses = []
    for i, (x, y) in enumerate(pairs):
        fx, fy = Fraction(x), Fraction(y)
        if fx == fy:
            continue
        for j in range(J + 1):
            if sys.dist(fx, fy) > delta:
                idx[i] = j
                break
            fx, fy = sys.step(level + j, fx), sys.step(level + j, fy)
        else:
            witnesses.append((Fraction(x), Fraction(y)))
    verdict = "counterexample" if witnesses else "no counterexample"
    return FalsifierReport(verdict, delta, J, len(pairs), idx, tuple(witnesses[:10]))


# generators from nets


@dataclass(frozen=True)
class CoverSeq:
    """Open balls of radius ``delta / 2`` around a net, the same at every level.

    ``lebesgue_number`` is the ``eps`` used to build the net: every ball of
    radius ``eps`` lies inside one member.
    """

    centers: tuple[Fraction, ...]
    radius: Fraction
    lebesgue_number: Fraction
    delta: Fraction

    def __len__(self):
        return len(self.centers)


def generator_from_net(sys: IntervalNDS, delta: float, eps: float) -> CoverSeq:
    """Cover by balls of radius ``delta/2`` centred on a ``(delta/2 - eps)``-net.

    Requires ``0 < eps < delta/4``.  The net is the evenly spaced set of the
    fewest points whose ``(delta/2 - eps)``-balls cover ``[0, 1)``.
    """
    d, e = Fraction(delta), Fraction(eps)
    if not 0 < e < d / 4:
        raise ValueError(f"need 0 < eps < delta/4, got eps={eps}, delta={delta}")
    r = d / 2 - e
    count = math.ceil(1 / (2 * r))
    centers = tuple(Fraction(2 * i + 1, 2 * count) for i in range(count))
    return CoverSeq(centers, d / 2, e, d)


def lebesgue_check(sys: IntervalNDS, cover: CoverSeq, grid: int = 4096) -> bool:
    """Every grid point's ``eps``-ball sits inside some member ball."""
    xs = [Fraction(i, grid) for i in range(grid)]
    for x in xs:
        if not any(sys.dist(x, c) + cover.lebesgue_number <= cover.radius for c in cover.centers):
            return False
    return True


def _closed_arcs(sys: IntervalNDS, c: Fraction, r: Fraction) -> list[tuple[Fraction, Fraction]]:
    lo, hi = c - r, c + r
    if sys.metric == "interval" or (lo >= 0 and hi <= 1):
        return [(max(lo, Fraction(0)), min(hi, Fraction(1)))]
    if hi - lo >= 1:
        return [(Fraction(0), Fraction(1))]
    if lo < 0:
        return [(Fraction(0), hi), (lo + 1, Fraction(1))]
    return [(lo, Fraction(1)), (Fraction(0), hi - 1)]


def _intersect(a, b):
    out = []
    for lo1, hi1 in a:
        for lo2, hi2 in b:
            lo, hi = max(lo1, lo2), min(hi1, hi2)
            if lo <= hi:
                out.append((lo, hi))
    return out


def _preimage(arcs, size: int):
    return [((lo + i) / size, (hi + i) / size) for lo, hi in arcs for i in range(size)]


def _diameter_bound(sys: IntervalNDS, arcs) -> Fraction:
    """Length of the shortest arc (or interval) containing the set."""
    lo = min(a for a, _ in arcs)
    hi = max(b for _, b in arcs)
    span = hi - lo
    if sys.metric == "interval":
        return span
    pts = sorted(arcs)
    gaps = [pts[0][0] + 1 - max(b for _, b in arcs)]
    reach = pts[0][1]
    for a, b in pts[1:]:
        if a > reach:
            gaps.append(a - reach)
        reach = max(reach, b)
    return min(span, 1 - max(gaps))


@dataclass(frozen=True)
class GeneratorReport:
    """Diameters of ``closure(U_0) & T^-1 closure(U_1) & ... & T^-J closure(U_J)``
    for member sequences chosen along sampled orbits."""

    J: int
    diameters: tuple[float, ...]
    bound: float
    passed: bool


def generator_check(
    sys: IntervalNDS, cover: CoverSeq, J: int, samples: int = 50, seed: int = 0, level: int = 0
) -> GeneratorReport:
    """Spot-check that deep intersections along orbits shrink.

    For each sample a random point ``x`` fixes the members (the one whose
    centre is closest to ``T^j x``), the intersection is computed exactly as a
    union of intervals, and its diameter is compared with
    ``4 / (m(k) ... m(k + J - 1))``.
    """
    rng = np.random.default_rng(seed)
    diams = []
    for _ in range(samples):
        x = Fraction(int(rng.integers(0, 2**53)), 2**53)
        orbit = sys.orbit(x, level, J + 1)
        members = [min(cover.centers, key=lambda c: sys.dist(y, c)) for y in orbit]
        acc = _closed_arcs(sys, members[J], cover.radius)
        for j in range(J - 1, -1, -1):
            acc = _intersect(_closed_arcs(sys, members[j], cover.radius), _preimage(acc, sys.m(level + j)))
        diams.append(float(_diameter_bound(sys, acc)))
    bound = 4.0 / math.prod(sys.m.sizes(level, J))
    return GeneratorReport(J, tuple(diams), bound, all(d <= bound for d in diams))


# uniform expansiveness modulus


@dataclass(frozen=True)
class SUEModulus:
    """Smallest ``N`` per ``eps`` with ``d_N(x, y) < delta => d(x, y) < eps``
    on the tested pairs, at every level class; ``None`` if not found by
    ``N_max``."""

    delta: float
    moduli: dict


def sue_modulus(
    sys,
    delta: float,
    eps_list: Sequence[float],
    grid: int = 64,
    offsets: int = 2048,
    N_max: int = 64,
) -> SUEModulus:
    """Estimate the modulus of strong uniform expansiveness.

    For interval systems, base points ``i / grid`` are paired with every
    point at distance ``t`` on an exact rational offset grid of ``[eps, 1/2]``
    (plus ``t = eps`` itself); each pair needs ``N`` past its first index with
    ``d >= delta``.  For the shift, pairs are classified by the position of
    their first disagreement, which determines every distance involved.
    """
    out = {}
    for eps in eps_list:
        worst = 1
        for k in range(sys.m.n_classes):
            if isinstance(sys, ShiftNDS):
                n_needed = _sue_shift(sys, delta, eps, N_max, k)
            else:
                n_needed = _sue_interval(sys, delta, eps, grid, offsets, N_max, k)
            if n_needed is None:
                worst = None
                break
            worst = max(worst, n_needed)
        out[eps] = worst
    return SUEModulus(delta, out)


def _sue_shift(sys: ShiftNDS, delta, eps, N_max, level):
    p_max = math.floor(-math.log(eps) + 1e-12) + 1
    worst = 1
    for p in range(p_max + 1):
        a = PointPrefix(level, (1,) * p + (1,), (1,))
        b = PointPrefix(level, (1,) * p + (2,), (1,))
        if sys.dist(a, b) < eps:
            continue
        for n in range(1, N_max + 1):
            if bowen_metric_nds(sys, a, b, level, n) >= delta:
                worst = max(worst, n)
                break
        else:
            return None
    return worst


def _sue_interval(sys: IntervalNDS, delta, eps, grid, offsets, N_max, level):
    e = Fraction(eps).limit_denominator(10**6)
    # common denominator holding the base grid, the offset grid and eps
    den = math.lcm(grid, 2 * offsets, e.denominator)
    base = np.arange(grid) * (den // grid)
    top = den // 2 if sys.metric == "circle" else den - 1
    lo = -(-e.numerator * den // e.denominator)
    t = np.unique(np.concatenate([[lo], np.linspace(lo, top, offsets).round().astype(np.int64)]))
    t = t[(t >= lo) & (t <= top)]
    x = np.repeat(base, t.size)
    y = x + np.tile(t, base.size)
    if sys.metric == "interval":
        keep = y < den
        x, y = x[keep], y[keep]
    ox = grid_orbits(sys, x, den, level, N_max)
    oy = grid_orbits(sys, y, den, level, N_max)
    worst = 1
    for lo_i in range(0, x.size, 100_000):
        sl = slice(lo_i, lo_i + 100_000)
        d = _num_dist(ox[sl], oy[sl], den, sys.metric)
        hit = d >= delta
        if not hit.any(axis=1).all():
            return None
        worst = max(worst, int(hit.argmax(axis=1).max()) + 1)
    return worst


# coding


def _as_fraction(x) -> Fraction:
    fx = Fraction(x)
    if not 0 <= fx < 1:
        raise ValueError(f"point {x} outside [0, 1)")
    return fx


def encode(sys: IntervalNDS, x, n: int, level: int = 0) -> Word:
    """Itinerary ``w_j = floor(m(k+j) T^j x) + 1`` for ``j < n``, exactly."""
    fx = _as_fraction(x)
    num, den = fx.numerator, fx.denominator
    syms = []
    for j in range(n):
        size = sys.m(level + j)
        q, num = divmod(size * num, den)
        syms.append(q + 1)
    return Word(level, tuple(syms))


def _decode_parts(sys: IntervalNDS, w: Word) -> tuple[int, int]:
    num, den = 0, 1
    for j, s in enumerate(w.symbols):
        size = sys.m(w.level + j)
        num = num * size + (s - 1)
        den *= size
    return num, den


def decode(sys: IntervalNDS, w: Word, exact: bool = False):
    """Left endpoint ``sum_j (w_j - 1) / (m(k) ... m(k+j))`` of the cylinder
    interval of ``w``; the true point lies within :func:`decode_error_bound`."""
    w.check(sys.m)
    num, den = _decode_parts(sys, w)
    val = Fraction(num, den)
    return val if exact else float(val)


def decode_error_bound(sys: IntervalNDS, w: Word) -> Fraction:
    return Fraction(1, math.prod(sys.m.sizes(w.level, len(w))))


def semiconjugacy_residual(sys: IntervalNDS, w: Word, J: int, guard: int = 30) -> float:
    """``max_{j<=J} d(decode(shift^j w), T^j decode(w))`` on the circle.

    Both sides are evaluated exactly, so any nonzero residual exposes a
    mismatch between the coding and the maps (e.g. misaligned levels).
    """
    if len(w) < J + guard:
        raise ValueError(f"word of length {len(w)} shorter than J + guard = {J + guard}")
    x = decode(sys, w, exact=True)
    worst = Fraction(0)
    y, v = x, w
    for j in range(J + 1):
        d = abs(decode(sys, v, exact=True) - y)
        worst = max(worst, min(d, 1 - d))
        y = sys.step(w.level + j, y)
        v = shift(v)
    return float(worst)


# pressure from orbits


@dataclass(frozen=True)
class OrbitPressure:
    """Spanning and separated sums of an interval system at ``(n, eps)``.

    ``Q`` is the weight of a greedy spanning set (an upper estimate of the
    infimum) and ``P`` of a greedy separated set (a lower estimate of the
    supremum).  Both are exact counts for constant potentials when
    ``arc_only`` is true, up to one point from wrapping around the circle.
    """

    n: int
    eps: float
    Q: float
    P: float
    count_Q: int
    count_P: int
    grid: int
    arc_only: bool

    @property
    def rate_Q(self) -> float:
        return math.log(self.Q) / self.n

    @property
    def rate_P(self) -> float:
        return math.log(self.P) / self.n


def _itinerary_sums(sys: IntervalNDS, f: PotentialSeq, num: np.ndarray, den: int, level: int, n: int) -> np.ndarray:
    length = n + f.depth - 1
    orb = grid_orbits(sys, num, den, level, length)
    digits = np.empty(orb.shape, dtype=np.int64)
    for j in range(length):
        digits[:, j] = (orb[:, j] * sys.m(level + j)) // den
    out = np.zeros(num.shape[0])
    for j in range(n):
        out += f.table(level + j)[tuple(digits[:, j + i] for i in range(f.depth))]
    return out


def pressure_via_orbits(
    sys: IntervalNDS,
    f: PotentialSeq,
    n: int,
    eps: float,
    level: int = 0,
    resolution: int = 64,
) -> OrbitPressure:
    """``(Q_n, P_n)`` from spanning and separated sets in the Bowen metric.

    Works on the exact grid ``{i / D}`` with ``D = m(k)...m(k+n-1) * R``, fine
    enough that the Bowen ball has about ``resolution`` grid points per
    side.  The potential is evaluated through the itinerary of each point.
    Uses the circle metric, where ``d_n(x, y)`` depends only on ``y - x``.
    """
    if sys.metric != "circle":
        raise ValueError("orbit pressure uses the translation-invariant circle metric")
    if f.m != sys.m:
        raise ValueError("potential and system use different alphabets")
    if n < 1:
        raise ValueError("n must be at least 1")
    mult = math.prod(sys.m.sizes(level, n))
    R = max(1, math.ceil(resolution / (eps * sys.m(level + n - 1))))
    den = mult * R
    offs = np.arange(den, dtype=np.int64)
    orb = grid_orbits(sys, offs, den, level, n)
    g = _num_dist(orb, 0, den, "circle").max(axis=1)
    close = g <= eps
    # half-width of the arc of offsets around 0 that stay eps-close
    c = int(np.argmin(close)) - 1 if not close.all() else den
    arc_only = c >= den // 2 or not close[c + 1: den - c].any()

    # spanning: consecutive closed arcs [x - c, x + c]
    width = 2 * c + 1
    count_q = -(-den // width)
    centers = (np.arange(count_q, dtype=np.int64) * width + c) % den

    # separated: greedy in increasing position, checking every chosen point
    if arc_only:
        step = c + 1
        count_p = (den - 1 - c) // step + 1
        chosen = np.arange(count_p, dtype=np.int64) * step
    else:
        chosen_list: list[int] = []
        for x in range(den):
            if chosen_list:
                diff = (x - np.asarray(chosen_list)) % den
                if close[diff].any():
                    continue
            chosen_list.append(x)
        chosen = np.asarray(chosen_list, dtype=np.int64)
        count_p = chosen.size
    Q = float(np.exp(_itinerary_sums(sys, f, centers, den, level, n)).sum())
    P = float(np.exp(_itinerary_sums(sys, f, chosen, den, level, n)).sum())
    return OrbitPressure(n, eps, Q, P, int(count_q), int(count_p), den, bool(arc_only))
