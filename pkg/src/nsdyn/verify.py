"""Invariant suite run by ``nsdyn verify`` against a configuration.

Each property is a small self-contained check on the configured space and
potential.  ``fault="gibbs"`` replaces the equilibrium measure by one whose
normalizing denominator is perturbed, which the Gibbs property must catch.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import logsumexp

from .bernoulli import (
    BernoulliSpec,
    equilibrium_from_potential,
    equilibrium_identity_residual,
    gibbs_log_ratios,
    pressure_proxy,
    rng_for,
    sample_path,
)
from .config import RunConfig
from .expansive import IntervalNDS, decode, encode, semiconjugacy_residual
from .potentials import birkhoff_sum, envelopes, reduce_to_first_coord, word_sums
from .pressure import (
    CoverError,
    bowen_outer_measure,
    packing_content,
    rank_uniformize,
    sn_sequence,
    uniform_cover_sum,
    weighted_cover_sum,
)
from .seqspace import BallSpec, CylinderCover, PointPrefix, RankClampWarning, Word, bowen_ball_rank, shift

FAULTS = ("gibbs",)


@dataclass(frozen=True)
class PropertyResult:
    name: str
    passed: bool
    detail: str


def _ball_rank(cfg: RunConfig, fault):
    center = PointPrefix(0, (), (1,))
    for n in range(0, 6):
        for r in range(0, 4):
            eps = math.exp(-r)
            for closed in (False, True):
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", RankClampWarning)
                    rank = bowen_ball_rank(BallSpec(center, n, eps, closed))
                # a point first differing from the centre at position p is in
                # the ball iff its Bowen distance passes the radius test
                for p in range(0, n + r + 2):
                    other = PointPrefix(0, (1,) * p + (2,), (1,))
                    d = 0.0
                    x, y = center, other
                    for _ in range(n):
                        d = max(d, math.exp(-_meet(x, y, p + 2)))
                        x, y = shift(x), shift(y)
                    inside = d <= eps if closed else d < eps
                    if inside != (p >= rank):
                        return False, f"n={n} r={r} closed={closed} p={p}: rank {rank} disagrees"
    return True, "rank formulas match membership"


def _meet(a, b, depth):
    for d in range(depth):
        if a.symbol(d) != b.symbol(d):
            return d
    return math.inf


def _capacity(cfg: RunConfig, fault):
    a = reduce_to_first_coord(cfg.f, cfg.run["policy"])
    est = sn_sequence(cfg.m, cfg.f, 8, cfg.run["policy"])
    for n in range(1, 9):
        brute = float(logsumexp(word_sums(a, 0, n, n))) / n
        if abs(brute - est.s_values[n - 1]) > 1e-12:
            return False, f"n={n}: product formula {est.s_values[n - 1]!r} vs enumeration {brute!r}"
    return True, "product formula matches enumeration for n <= 8"


def _envelope_sandwich(cfg: RunConfig, fault):
    env = envelopes(cfg.f)
    rng = rng_for(cfg.run["seed"], 17)
    for _ in range(200):
        n = int(rng.integers(1, 12))
        syms = [int(rng.integers(1, cfg.m(j) + 1)) for j in range(n + cfg.f.depth)]
        w = PointPrefix(0, syms)
        lo, mid, hi = (birkhoff_sum(g, w, n) for g in (env.lower, cfg.f, env.upper))
        if not lo - 1e-12 <= mid <= hi + 1e-12:
            return False, f"{syms[:n]}: {lo} <= {mid} <= {hi} fails"
    return True, "200 sampled points sandwiched"


def _all_antichains(m, prefix: Word, lo: int, hi: int):
    """Every prefix-free family of words of length in [lo, hi] extending prefix."""
    here = []
    if len(prefix) >= lo:
        here.append([prefix])
    if len(prefix) == hi:
        return here + [[]]
    parts = [[]]
    for c in range(1, m(prefix.level + len(prefix)) + 1):
        sub = _all_antichains(m, prefix.extend(c), lo, hi)
        parts = [p + s for p in parts for s in sub]
    return here + parts


def _outer_measure(cfg: RunConfig, fault):
    m, f = cfg.m, cfg.f
    depth = 3
    if m.max_size > 3:
        return True, "skipped (alphabets larger than 3)"
    fams = _all_antichains(m, Word(0, ()), 1, depth)
    for s in (0.0, 0.5, 1.3):
        for N in (1, 2):
            sums = []
            for fam in fams:
                if any(len(w) < N for w in fam):
                    continue
                sums.append((fam, weighted_cover_sum(f, fam, s) if fam else 0.0))
            covers = [v for fam, v in sums if fam and CylinderCover(tuple(fam)).is_complete(m)]
            b = bowen_outer_measure(m, f, s, N, depth).value
            p = packing_content(m, f, s, N, depth).value
            if not math.isclose(b, min(covers), rel_tol=1e-12):
                return False, f"s={s} N={N}: bowen DP {b!r} vs brute force {min(covers)!r}"
            if not math.isclose(p, max(v for _, v in sums), rel_tol=1e-12):
                return False, f"s={s} N={N}: packing DP {p!r} vs brute force"
    return True, f"DP matches {len(fams)} enumerated families at depth {depth}"


def _random_cover(m, rng, w: Word, depth: int) -> list[Word]:
    if len(w) == depth or (len(w) > 0 and rng.random() < 0.45):
        return [w]
    return [v for c in range(1, m(w.level + len(w)) + 1) for v in _random_cover(m, rng, w.extend(c), depth)]


def _rank_uniformize(cfg: RunConfig, fault):
    m = cfg.m
    a = reduce_to_first_coord(cfg.f, cfg.run["policy"])
    rng = rng_for(cfg.run["seed"], 23)
    for _ in range(30):
        words = _random_cover(m, rng, Word(0, ()), 4)
        cover = CylinderCover(tuple(words))
        s = float(rng.normal())
        try:
            lo = rank_uniformize(cover, a, s, "lower")
            hi = rank_uniformize(cover, a, s, "upper")
        except CoverError as exc:
            return False, str(exc)
        total = weighted_cover_sum(a, words, s)
        if not uniform_cover_sum(a, 0, lo.rank, s) <= total <= uniform_cover_sum(a, 0, hi.rank, s):
            return False, f"certificate fails on re-summation for {words}"
    return True, "30 random covers certified"


def faulty_equilibrium(cfg: RunConfig, bump: float = 0.01) -> BernoulliSpec:
    """Equilibrium weights divided by a denominator inflated by ``bump``;
    the last symbol absorbs the missing mass."""
    a = reduce_to_first_coord(cfg.f, cfg.run["policy"])

    def vec(t):
        p = np.exp(t - logsumexp(t) - bump)
        p[-1] = 1.0 - p[:-1].sum()
        return p

    return BernoulliSpec([vec(t) for t in a.head], [vec(t) for t in a.period])


def _equilibrium(cfg: RunConfig, fault):
    a = reduce_to_first_coord(cfg.f, cfg.run["policy"])
    mu = equilibrium_from_potential(cfg.m, cfg.f, cfg.run["policy"])
    worst = max(abs(equilibrium_identity_residual(mu, a, k)) for k in range(a.n_check_levels))
    return worst <= 1e-12, f"max identity residual {worst:.3e}"


def _gibbs(cfg: RunConfig, fault):
    a = reduce_to_first_coord(cfg.f, cfg.run["policy"])
    mu = faulty_equilibrium(cfg) if fault == "gibbs" else equilibrium_from_potential(cfg.m, cfg.f, cfg.run["policy"])
    proxy = pressure_proxy(a)
    n = cfg.run["gibbs_n"]
    worst = 0.0
    for i in range(20):
        omega = sample_path(mu, cfg.run["seed"], n, task=i)
        lr = gibbs_log_ratios(mu, a, omega, n, proxy)
        worst = max(worst, float(np.max(np.abs(np.expm1(lr)))))
    return worst <= 1e-10, f"max |ratio - 1| = {worst:.3e} over 20 paths, n <= {n}"


def _coding(cfg: RunConfig, fault):
    sys_ = IntervalNDS(cfg.m, cfg.system["metric"])
    rng = rng_for(cfg.run["seed"], 29)
    J, guard = cfg.system["J"], cfg.system["guard"]
    worst = 0.0
    for _ in range(50):
        x = Fraction(int(rng.integers(0, 2**53)), 2**53)
        w = encode(sys_, x, J + guard)
        worst = max(worst, semiconjugacy_residual(sys_, w, J, guard))
        if not 0 <= x - decode(sys_, w, exact=True) < Fraction(1, math.prod(cfg.m.sizes(0, J + guard))):
            return False, f"roundtrip outside the cylinder for x={x}"
    return worst <= 1e-9, f"max residual {worst:.3e}"


PROPERTIES = {
    "ball_rank": _ball_rank,
    "capacity": _capacity,
    "envelope_sandwich": _envelope_sandwich,
    "outer_measure_dp": _outer_measure,
    "rank_uniformize": _rank_uniformize,
    "equilibrium_identity": _equilibrium,
    "gibbs": _gibbs,
    "coding": _coding,
}


def run_suite(cfg: RunConfig, names: list[str] | None = None, fault: str | None = None) -> list[PropertyResult]:
    if names is None:
        names = list(PROPERTIES)
    out = []
    for name in names:
        ok, detail = PROPERTIES[name](cfg, fault)
        out.append(PropertyResult(name, bool(ok), detail))
    return out
