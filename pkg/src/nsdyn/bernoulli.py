"""Nonautonomous Bernoulli measures: sampling, local quantities, equilibria.

A Bernoulli measure picks the ``j``-th symbol independently with
probability vector ``p_j``; the vectors are eventually periodic in ``j`` and
their lengths define the alphabet sequence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.special import softmax

from .potentials import PotentialSeq, level_log_partition, reduce_to_first_coord
from .pressure import PressureEstimate, estimate_from_values
from .seqspace import AlphabetSeq, CylinderCover, PointPrefix, Word

NORMALIZATION_TOL = 1e-12


class HypothesisViolation(ValueError):
    """Input breaks a standing assumption, e.g. a zero probability."""


class BernoulliSpec:
    """Eventually periodic sequence of strictly positive probability vectors."""

    def __init__(self, head: Sequence = (), period: Sequence = ()):
        if len(period) == 0:
            raise ValueError("period must be non-empty")
        self.head = tuple(np.asarray(p, dtype=float) for p in head)
        self.period = tuple(np.asarray(p, dtype=float) for p in period)
        for k, p in enumerate(self.head + self.period):
            if p.ndim != 1 or p.size < 2:
                raise ValueError(f"probability vector {k} must be 1-d with at least 2 entries")
            if not np.all(p > 0):
                raise HypothesisViolation(f"probability vector {k} has a non-positive entry: {p.tolist()}")
            if abs(p.sum() - 1.0) > NORMALIZATION_TOL:
                raise ValueError(f"probability vector {k} sums to {p.sum()!r}, not 1")
        self.m = AlphabetSeq(tuple(p.size for p in self.head), tuple(p.size for p in self.period))
        self._log = tuple(np.log(p) for p in self.head + self.period)

    @classmethod
    def constant(cls, p: Sequence[float]) -> "BernoulliSpec":
        return cls((), (p,))

    def _cls(self, k: int) -> int:
        h = len(self.head)
        return k if k < h else h + (k - h) % len(self.period)

    def p(self, k: int) -> np.ndarray:
        return (self.head + self.period)[self._cls(k)]

    def log_p(self, k: int) -> np.ndarray:
        return self._log[self._cls(k)]

    @property
    def vectors(self) -> tuple[np.ndarray, ...]:
        return self.head + self.period

    @property
    def p_star(self) -> float:
        """Smallest probability used anywhere."""
        return float(min(p.min() for p in self.vectors))

    def class_table(self, fill: float = np.nan) -> np.ndarray:
        """Log-probabilities padded into a ``(classes, max_m)`` array."""
        out = np.full((len(self._log), self.m.max_size), fill)
        for c, lp in enumerate(self._log):
            out[c, : lp.size] = lp
        return out

    def classes(self, level: int, n: int) -> np.ndarray:
        return np.array([self._cls(level + j) for j in range(n)], dtype=np.int64)

    def __repr__(self):
        return f"BernoulliSpec(head={[p.tolist() for p in self.head]}, period={[p.tolist() for p in self.period]})"


def entropy_H(p: Sequence[float]) -> float:
    """Shannon entropy in nats."""
    p = np.asarray(p, dtype=float)
    nz = p[p > 0]
    return float(-(nz * np.log(nz)).sum())


def log_cylinder_measure(mu: BernoulliSpec, u: Word) -> float:
    u.check(mu.m)
    return math.fsum(float(mu.log_p(u.level + j)[s - 1]) for j, s in enumerate(u.symbols))


def cylinder_measure(mu: BernoulliSpec, u: Word) -> float:
    """``mu([u]) = prod_j p_{level+j}[u_j]``."""
    return math.exp(log_cylinder_measure(mu, u))


# sampling


def rng_for(seed: int, task: int = 0) -> np.random.Generator:
    """Counter-based generator for the stream ``(seed, task)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(task,))))


def sample_symbols(mu: BernoulliSpec, seed: int, n: int, task: int = 0, level: int = 0) -> np.ndarray:
    """``n`` symbols (1-based) of a ``mu``-typical point, from stream ``(seed, task)``."""
    u = rng_for(seed, task).random(n)
    cls = mu.classes(level, n)
    out = np.empty(n, dtype=np.int64)
    for c in np.unique(cls):
        idx = cls == c
        cdf = np.cumsum(mu.vectors[c])
        out[idx] = np.minimum(np.searchsorted(cdf, u[idx], side="right"), cdf.size - 1) + 1
    return out


def sample_path(mu: BernoulliSpec, seed: int, n: int, task: int = 0, level: int = 0) -> PointPrefix:
    return PointPrefix(level, tuple(sample_symbols(mu, seed, n, task, level).tolist()))


# local quantities along a path


def _neg_log_p(mu: BernoulliSpec, symbols: np.ndarray, level: int) -> np.ndarray:
    table = mu.class_table()
    cls = mu.classes(level, symbols.shape[-1])
    return -table[cls, symbols - 1]


@lru_cache(maxsize=64)
def _flat_tables(f: PotentialSeq, level: int, n: int):
    """All level tables for ``level..level+n-1`` flattened into one vector,
    with per-level offsets and strides for the ``depth`` leading symbols."""
    chunks, offsets, strides = [], np.empty(n, dtype=np.int64), np.empty((n, f.depth), dtype=np.int64)
    pos = 0
    for j in range(n):
        t = f.table(level + j)
        offsets[j] = pos
        strides[j] = np.asarray(t.strides, dtype=np.int64) // t.itemsize
        chunks.append(np.ascontiguousarray(t).ravel())
        pos += t.size
    return np.concatenate(chunks), offsets, strides


def _potential_along(f: PotentialSeq, symbols: np.ndarray, level: int, n: int) -> np.ndarray:
    """``f_{level+j}(shift^j omega)`` for ``j < n``; ``symbols`` may carry a
    leading batch axis."""
    flat, offsets, strides = _flat_tables(f, level, n)
    idx = np.broadcast_to(offsets, symbols.shape[:-1] + (n,)).copy()
    for i in range(f.depth):
        idx += (symbols[..., i: i + n] - 1) * strides[:, i]
    return flat[idx]


def local_entropy_seq(mu: BernoulliSpec, omega: PointPrefix, n: int) -> np.ndarray:
    """``-(1/k) log mu([omega|k])`` for ``k = 1..n``."""
    syms = omega.symbols(n)
    terms = _neg_log_p(mu, syms, omega.level)
    return np.cumsum(terms) / np.arange(1, n + 1)


def local_pressure_seq(mu: BernoulliSpec, f: PotentialSeq, omega: PointPrefix, n: int) -> np.ndarray:
    """``(1/k) (S_k f(omega) - log mu([omega|k]))`` for ``k = 1..n``."""
    syms = omega.symbols(n + f.depth - 1)
    terms = _neg_log_p(mu, syms[:n], omega.level) + _potential_along(f, syms, omega.level, n)
    return np.cumsum(terms) / np.arange(1, n + 1)


def expected_potential(mu: BernoulliSpec, f: PotentialSeq, k: int) -> float:
    """``E_mu f_k``: average of the level-``k`` table under the product measure."""
    t = f.table(k)
    for i in reversed(range(f.depth)):
        t = t @ mu.p(k + i)
    return float(t)


def measure_pressure_estimate(
    mu: BernoulliSpec, f: PotentialSeq | None, N_hi: int, N_lo: int | None = None, level: int = 0
) -> PressureEstimate:
    """Window data for ``(1/n) sum_{j<n} (H(p_j) + E f_j)``; entropy alone if ``f`` is None."""
    terms = np.array([entropy_H(mu.p(level + j)) for j in range(N_hi)])
    if f is not None:
        terms = terms + np.array([expected_potential(mu, f, level + j) for j in range(N_hi)])
    return estimate_from_values(np.cumsum(terms) / np.arange(1, N_hi + 1), N_lo)


@dataclass(frozen=True)
class SampleStats:
    """Monte Carlo check that a local quantity concentrates at its mean.

    ``verdict`` is ``"pass"`` when the sample mean lies within three standard
    errors of ``expected``, ``"fail"`` when it does not, and
    ``"inconclusive"`` when fewer than two finite samples were available.
    """

    seed: int
    n: int
    samples: int
    mean: float
    stderr: float
    expected: float
    distance: float
    verdict: str
    values: np.ndarray = field(compare=False, repr=False)


def lln_diagnostic(
    mu: BernoulliSpec,
    f: PotentialSeq | None,
    n: int,
    samples: int,
    seed: int,
    level: int = 0,
    degenerate_tol: float = 1e-10,
) -> SampleStats:
    """Sample ``samples`` paths and compare the horizon-``n`` local quantity
    (entropy, or pressure when ``f`` is given) to its expectation.

    Sample ``i`` uses the RNG stream ``(seed, i)``, so results do not depend
    on batching.  When all samples coincide (zero variance) the verdict is
    decided by ``degenerate_tol`` instead of the standard error.
    """
    depth = 1 if f is None else f.depth
    table = mu.class_table()
    cls = mu.classes(level, n)
    vals = np.empty(samples)
    for i in range(samples):
        syms = sample_symbols(mu, seed, n + depth - 1, task=i, level=level)
        terms = -table[cls, syms[:n] - 1]
        if f is not None:
            terms = np.concatenate([terms, _potential_along(f, syms, level, n)])
        vals[i] = math.fsum(terms) / n
    # correctly rounded sums on both sides, so a zero-variance case is exact
    mean_terms = [entropy_H(mu.p(level + j)) for j in range(n)]
    if f is not None:
        mean_terms += [expected_potential(mu, f, level + j) for j in range(n)]
    expected = math.fsum(mean_terms) / n
    mean = float(vals.mean()) if samples else math.nan
    distance = abs(mean - expected)
    if samples < 2 or not np.all(np.isfinite(vals)):
        return SampleStats(seed, n, samples, mean, math.nan, expected, distance, "inconclusive", vals)
    stderr = float(vals.std(ddof=1) / math.sqrt(samples))
    if stderr <= degenerate_tol:
        verdict = "pass" if distance <= degenerate_tol else "fail"
    else:
        verdict = "pass" if distance <= 3 * stderr else "fail"
    return SampleStats(seed, n, samples, mean, stderr, expected, distance, verdict, vals)


# equilibrium states


def equilibrium_from_potential(m: AlphabetSeq, f: PotentialSeq, policy: str = "midpoint") -> BernoulliSpec:
    """Bernoulli measure with ``p_j = exp(a_j) / sum_i exp(a_j[i])``."""
    if f.m != m:
        raise ValueError("potential was built for a different alphabet sequence")
    a = reduce_to_first_coord(f, policy)
    return BernoulliSpec([softmax(t) for t in a.head], [softmax(t) for t in a.period])


def equilibrium_identity_residual(mu: BernoulliSpec, a: PotentialSeq, k: int) -> float:
    """``H(p_k) + E_{p_k} a_k - log sum exp(a_k)``, zero for the equilibrium."""
    return entropy_H(mu.p(k)) + float(mu.p(k) @ a.table(k)) - float(level_log_partition(a, k, 1)[0])


def pressure_proxy(f: PotentialSeq, policy: str = "midpoint", level: int = 0) -> Callable[[int], float]:
    """``n -> n s_n = sum_{j<n} log sum_i exp(a_j[i])``."""
    a = reduce_to_first_coord(f, policy)
    cache: dict[int, float] = {0: 0.0}

    def proxy(n: int) -> float:
        if n not in cache:
            cache[n] = float(level_log_partition(a, level, n).sum())
        return cache[n]

    return proxy


def gibbs_log_ratios(
    mu: BernoulliSpec,
    f: PotentialSeq,
    omega: PointPrefix,
    n: int,
    proxy: Callable[[int], float],
) -> np.ndarray:
    """``log mu([omega|k]) + proxy(k) - S_k f(omega)`` for ``k = 1..n``."""
    syms = omega.symbols(n + f.depth - 1)
    logmu = np.cumsum(-_neg_log_p(mu, syms[:n], omega.level))
    sk = np.cumsum(_potential_along(f, syms, omega.level, n))
    prox = np.array([proxy(k) for k in range(1, n + 1)])
    return logmu + prox - sk


def gibbs_ratio(
    mu: BernoulliSpec,
    f: PotentialSeq,
    omega: PointPrefix,
    n: int,
    proxy: Callable[[int], float],
) -> float:
    """``mu([omega|n]) / exp(-proxy(n) + S_n f(omega))``."""
    return math.exp(gibbs_log_ratios(mu, f, omega, n, proxy)[-1])


def gibbs_constant(mu: BernoulliSpec, f: PotentialSeq, n: int, proxy: Callable[[int], float], level: int = 0) -> float:
    """Worst ratio ``max(r, 1/r)`` over all words of length ``n``.

    Exact for first-coordinate potentials, where the log-ratio is a sum of
    per-level terms and its extremes are sums of per-level extremes.
    """
    if not f.is_first_coord:
        raise ValueError("exact Gibbs constant needs a first-coordinate potential")
    hi = lo = proxy(n)
    for j in range(n):
        d = mu.log_p(level + j) - f.table(level + j)
        hi += float(d.max())
        lo += float(d.min())
    return math.exp(max(abs(hi), abs(lo)))


def perturb(mu: BernoulliSpec, cls: int, delta: float) -> BernoulliSpec:
    """Move ``delta`` of mass from the second to the first entry of one vector."""
    vecs = [p.copy() for p in mu.vectors]
    vecs[cls][0] += delta
    vecs[cls][1] -= delta
    h = len(mu.head)
    return BernoulliSpec(vecs[:h], vecs[h:])


@dataclass(frozen=True)
class RestrictedMeasure:
    """``mu`` conditioned on the union ``Theta`` of finitely many cylinders."""

    mu: BernoulliSpec
    theta: tuple[Word, ...]
    mass: float

    def measure(self, u: Word) -> float:
        """``mu([u] & Theta) / mu(Theta)``."""
        total = 0.0
        for w in self.theta:
            if w.is_prefix_of(u):
                total += cylinder_measure(self.mu, u)
            elif u.is_prefix_of(w):
                total += cylinder_measure(self.mu, w)
        return total / self.mass

    def sample_path(self, seed: int, n: int, task: int = 0) -> PointPrefix:
        """Exact sample: pick a piece of ``Theta`` by mass, then continue with ``mu``."""
        rng = rng_for(seed, task)
        weights = np.array([cylinder_measure(self.mu, w) for w in self.theta])
        w = self.theta[int(rng.choice(len(self.theta), p=weights / weights.sum()))]
        rest = max(n - len(w), 0)
        tail = sample_symbols(self.mu, seed, rest, task=task + 1_000_003, level=w.level + len(w))
        syms = w.symbols + tuple(tail.tolist())
        return PointPrefix(w.level, syms[: max(n, len(w))])


def restricted_equilibrium(mu: BernoulliSpec, theta: CylinderCover | Sequence[Word]) -> RestrictedMeasure:
    """Condition ``mu`` on a finite union of cylinders."""
    words = list(theta.words if isinstance(theta, CylinderCover) else theta)
    for w in words:
        w.check(mu.m)
    outer = sorted({w for w in words if not any(v != w and v.is_prefix_of(w) for v in words)},
                   key=lambda w: w.symbols)
    mass = math.fsum(cylinder_measure(mu, w) for w in outer)
    if mass <= 0:
        raise HypothesisViolation("conditioning set has zero measure")
    return RestrictedMeasure(mu, tuple(outer), mass)
