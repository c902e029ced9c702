"""One test per acceptance criterion, at the stated tolerances.

A summary line per criterion is printed at the end of the run (see
``conftest.py``).  Where a criterion asks for exact agreement between values
computed along different floating-point routes, "exactly" is read as a
relative error of at most 1e-12.
"""

import json
import math
import time
import warnings
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from conftest import random_first_coord
from oracles import (
    bowen_distance,
    brute_outer_measures,
    cylinder_sup,
    extensions,
    milp_outer_measures,
    separation_components,
)
from nsdyn import cli
from nsdyn.bernoulli import (
    BernoulliSpec,
    entropy_H,
    equilibrium_from_potential,
    equilibrium_identity_residual,
    gibbs_constant,
    gibbs_log_ratios,
    lln_diagnostic,
    measure_pressure_estimate,
    perturb,
    pressure_proxy,
    sample_path,
)
from nsdyn.expansive import (
    IntervalNDS,
    ShiftNDS,
    decode,
    decode_error_bound,
    encode,
    expansiveness_falsifier,
    pressure_via_orbits,
    semiconjugacy_residual,
)
from nsdyn.potentials import PotentialSeq
from nsdyn.pressure import (
    bowen_outer_measure,
    critical_s,
    homogeneity_check,
    packing_content,
    rank_uniformize,
    separated_P,
    sn_sequence,
    spanning_Q,
)
from nsdyn.seqspace import AlphabetSeq, BallSpec, CylinderCover, PointPrefix, RankClampWarning, Word, bowen_ball_rank

M2 = AlphabetSeq.constant(2)
M23 = AlphabetSeq.periodic([2, 3])
ZERO = PotentialSeq.constant(M2, 0.0)
LOG3 = PotentialSeq.first_coord(M2, [], [[0.0, math.log(2)]])
CONFIGS = Path(__file__).resolve().parent.parent / "configs"
EXACT = 1e-12


def test_criterion_01_constant_pressure_formula(tmp_path):
    est = sn_sequence(M2, LOG3, 200)
    np.testing.assert_allclose(est.s_values, math.log(3), rtol=0, atol=EXACT)
    start = time.perf_counter()
    code = cli.main(["pressure", "--config", str(CONFIGS / "golden_mean_weights.toml"), "--out", str(tmp_path)])
    elapsed = time.perf_counter() - start
    summary = json.loads((tmp_path / "pressure_summary.json").read_text())
    print(f"bracket [{summary['liminf_bracket']!r}, {summary['limsup_bracket']!r}] in {elapsed:.2f}s")
    assert code == 0
    assert abs(summary["liminf_bracket"] - math.log(3)) <= EXACT
    assert abs(summary["limsup_bracket"] - math.log(3)) <= EXACT
    assert elapsed < 1.0


def test_criterion_02_entropy_formula():
    full = sn_sequence(M2, ZERO, 200)
    assert abs(full.liminf_bracket - math.log(2)) <= EXACT
    assert abs(full.limsup_bracket - math.log(2)) <= EXACT
    alt = sn_sequence(M23, PotentialSeq.constant(M23, 0.0), 200)
    limit = (math.log(2) + math.log(3)) / 2
    print(f"s_200 - limit = {alt.s_values[-1] - limit:.2e}, brackets {alt.liminf_bracket}, {alt.limsup_bracket}")
    assert abs(alt.s_values[-1] - limit) <= 5e-3
    assert abs(alt.liminf_bracket - limit) <= 5e-3
    assert abs(alt.limsup_bracket - limit) <= 5e-3


def test_criterion_03_critical_exponents():
    start = time.perf_counter()
    for f, want in ((ZERO, math.log(2)), (LOG3, math.log(3))):
        for fn in (bowen_outer_measure, packing_content):
            res = critical_s(fn, M2, f, 6, 12, tol=1e-3)
            print(f"{fn.__name__}: [{res.lo:.6f}, {res.hi:.6f}] target {want:.6f}")
            assert res.determined
            assert res.lo - 5e-2 <= want <= res.hi + 5e-2
            assert abs(res.estimate - want) <= 5e-2
    assert time.perf_counter() - start < 10.0


def test_criterion_04_outer_measure_oracle_equivalence():
    rng = np.random.default_rng(20240611)
    start = time.perf_counter()
    instances = 0
    for depth in range(1, 6):
        for _ in range(24):
            N = int(rng.integers(0, depth + 1))
            s = float(rng.uniform(-0.5, 1.5))
            if rng.random() < 0.5:
                f = random_first_coord(M2, rng)
            else:
                f = PotentialSeq(M2, 2, [], [rng.normal(size=(2, 2))])
            target = tuple(int(c) for c in rng.integers(1, 3, size=int(rng.integers(0, min(depth, 2) + 1))))
            dp_b = bowen_outer_measure(M2, f, s, N, depth, Word(0, target)).value
            dp_p = packing_content(M2, f, s, N, depth, Word(0, target)).value
            enum_b, enum_p = brute_outer_measures(M2, f, s, N, depth, target)
            assert dp_b == pytest.approx(enum_b, rel=EXACT)
            assert dp_p == pytest.approx(enum_p, rel=EXACT)
            # second, independent route on the whole space: 0/1 programs
            milp_b, milp_p = milp_outer_measures(M2, f, s, N, depth)
            assert bowen_outer_measure(M2, f, s, N, depth).value == pytest.approx(milp_b, rel=EXACT)
            assert packing_content(M2, f, s, N, depth).value == pytest.approx(milp_p, rel=EXACT)
            instances += 1
    elapsed = time.perf_counter() - start
    print(f"{instances} instances in {elapsed:.1f}s")
    assert instances >= 100
    assert elapsed < 30.0


def _random_cover(m, rng, prefix, depth):
    if len(prefix) == depth or (prefix and rng.random() < 0.35):
        return [Word(0, prefix)]
    return [w for c in range(1, m(len(prefix)) + 1) for w in _random_cover(m, rng, prefix + (c,), depth)]


def _resum(f, words, s):
    return math.fsum(math.exp(-len(w) * s + cylinder_sup(f, w)) for w in words)


def test_criterion_05_rank_uniformization():
    rng = np.random.default_rng(77)
    failures = 0
    for _ in range(200):
        m = AlphabetSeq((), tuple(int(k) for k in rng.integers(2, 4, size=int(rng.integers(1, 3)))))
        f = random_first_coord(m, rng)
        cover = CylinderCover(tuple(_random_cover(m, rng, (), int(rng.integers(1, 7)))))
        s = float(rng.uniform(-1, 2))
        total = _resum(f, cover.words, s)
        for direction in ("lower", "upper"):
            cert = rank_uniformize(cover, f, s, direction)
            uniform = _resum(f, [Word(0, w) for w in extensions(m, 0, (), cert.rank)], s)
            ok = math.isclose(cert.cover_sum, total, rel_tol=EXACT) and math.isclose(cert.uniform_sum, uniform, rel_tol=EXACT)
            slack = EXACT * max(total, uniform)
            ok &= uniform <= total + slack if direction == "lower" else uniform >= total - slack
            failures += not ok
    print(f"{failures} failures over 200 covers")
    assert failures == 0


def test_criterion_06_equilibrium_identity():
    rng = np.random.default_rng(6)
    worst_identity = worst_bracket = 0.0
    for _ in range(100):
        m = AlphabetSeq(tuple(int(k) for k in rng.integers(2, 5, size=2)), tuple(int(k) for k in rng.integers(2, 5, size=3)))
        a = random_first_coord(m, rng, scale=2.0)
        mu = equilibrium_from_potential(m, a)
        for k in range(m.n_classes):
            worst_identity = max(worst_identity, abs(equilibrium_identity_residual(mu, a, k)))
        got, want = measure_pressure_estimate(mu, a, 120), sn_sequence(m, a, 120)
        for x, y in ((got.liminf_bracket, want.liminf_bracket), (got.limsup_bracket, want.limsup_bracket)):
            worst_bracket = max(worst_bracket, abs(x - y) / max(abs(y), 1.0))
    print(f"identity residual {worst_identity:.1e}, bracket difference {worst_bracket:.1e}")
    assert worst_identity <= 1e-12
    assert worst_bracket <= EXACT


def test_criterion_07_gibbs_ratio():
    m = M23
    a = PotentialSeq.first_coord(m, [], [[0.0, math.log(2)], [0.3, -0.7, 1.1]])
    mu = equilibrium_from_potential(m, a)
    proxy = pressure_proxy(a)
    n = 1000
    worst = 0.0
    for task in range(100):
        lr = gibbs_log_ratios(mu, a, sample_path(mu, 31, n, task=task), n, proxy)
        worst = max(worst, float(np.max(np.abs(np.expm1(lr)))))
    # one entry moved by 0.01
    bad = perturb(mu, 0, 0.01)
    first_exit = None
    for task in range(100):
        lr = gibbs_log_ratios(bad, a, sample_path(bad, 31, n, task=task), n, proxy)
        hit = np.flatnonzero(np.abs(lr) > math.log(2))
        if hit.size:
            first_exit = int(hit[0]) + 1 if first_exit is None else min(first_exit, int(hit[0]) + 1)
    print(f"equilibrium max |ratio - 1| = {worst:.1e}; perturbed ratio leaves [1/2, 2] at n = {first_exit}; "
          f"worst-case constant at n = {n}: {gibbs_constant(bad, a, n, proxy):.3g}")
    assert worst <= 1e-10
    assert first_exit is not None and first_exit <= n
    assert gibbs_constant(bad, a, n, proxy) > 2


def test_criterion_08_law_of_large_numbers():
    mu = BernoulliSpec.constant([1 / 3, 2 / 3])
    start = time.perf_counter()
    stats = lln_diagnostic(mu, None, 10_000, 1_000, seed=20240611)
    elapsed = time.perf_counter() - start
    print(f"mean {stats.mean!r} H {entropy_H(mu.p(0))!r} stderr {stats.stderr:.2e} in {elapsed:.1f}s")
    assert abs(stats.mean - entropy_H(mu.p(0))) <= 3 * stats.stderr
    assert stats.verdict == "pass"
    assert elapsed < 10.0


def _ball_members(center, n, eps, closed, depth):
    """Positions ``p`` such that points first differing from ``center`` at
    ``p`` lie in the ball, from the Bowen distance itself (``depth`` means
    agreeing on every listed symbol)."""
    inside = []
    for p in range(depth + 1):
        other = center if p == depth else center[:p] + (3 - center[p],) + center[p + 1:]
        d = bowen_distance(center, other, n)
        if (d <= eps) if closed else (d < eps):
            inside.append(p)
    return inside


def test_criterion_09_bowen_balls_are_cylinders():
    depth = 26
    rng = np.random.default_rng(9)
    radii = sorted({float(r) for r in range(7)} | {float(x) for x in np.round(rng.uniform(0, 6, size=12), 3)})
    checked = 0
    for center in (tuple(int(c) for c in rng.integers(1, 3, size=depth)) for _ in range(3)):
        point = PointPrefix(0, center)
        for n in range(21):
            for r in radii:
                eps = math.exp(-r)
                for closed in (False, True):
                    with warnings.catch_warnings():
                        warnings.simplefilter("ignore", RankClampWarning)
                        rank = bowen_ball_rank(BallSpec(point, n, eps, closed))
                    # the ball is the cylinder of that rank: exactly the
                    # points agreeing with the centre on the first `rank` symbols
                    assert _ball_members(center, n, eps, closed, depth) == list(range(rank, depth + 1)), (n, r, closed)
                    checked += 1
    print(f"{checked} (centre, n, r, open/closed) cases")


def test_criterion_10_separated_and_spanning_counts():
    eps = math.exp(-1)
    for n in range(1, 11):
        assert separated_P(M2, ZERO, n, eps) == 2.0**n
        assert spanning_Q(M2, ZERO, n, eps) == 2.0**n
    for n in range(1, 7):
        classes, equivalence = separation_components(M2, n, eps, n + 2)
        assert equivalence and classes == 2**n


def test_criterion_11_homogeneity():
    rep = homogeneity_check(M2, ZERO, Word(0, (1,)), 100)
    n = np.arange(1, 101)
    expected = math.log(2) / n
    # independent route: the words through [1] number 2^(n-1)
    direct = np.log(2.0**n) / n - np.log(2.0 ** (n - 1)) / n
    np.testing.assert_allclose(rep.difference, expected, rtol=EXACT, atol=0)
    np.testing.assert_allclose(direct, expected, rtol=EXACT, atol=0)


def test_criterion_12_coding_semiconjugacy():
    sys = IntervalNDS(M23)
    rng = np.random.default_rng(12)
    J, guard = 20, 30
    start = time.perf_counter()
    worst_residual, worst_roundtrip = 0.0, 0.0
    for _ in range(1000):
        x = Fraction(int(rng.integers(0, 2**53)), 2**53)
        w = encode(sys, x, J + guard)
        worst_residual = max(worst_residual, semiconjugacy_residual(sys, w, J, guard))
        err = abs(decode(sys, w, exact=True) - x)
        assert err <= decode_error_bound(sys, w)
        worst_roundtrip = max(worst_roundtrip, float(err / decode_error_bound(sys, w)))
    elapsed = time.perf_counter() - start
    print(f"residual {worst_residual:.1e}, roundtrip/bound {worst_roundtrip:.3f}, {elapsed:.2f}s")
    assert worst_residual <= 1e-9
    assert elapsed < 5.0


def test_criterion_13_shift_separation_at_the_meet():
    sys = ShiftNDS(M2)
    rng = np.random.default_rng(13)
    J, length = 64, 128
    syms = rng.integers(1, 3, size=(10_000, 2, length))
    pairs = [(PointPrefix(0, a.tolist()), PointPrefix(0, b.tolist())) for a, b in syms]
    rep = expansiveness_falsifier(sys, math.exp(-1), J, pairs=pairs)
    differ = syms[:, 0] != syms[:, 1]
    meets = np.where(differ.any(axis=1), differ.argmax(axis=1), -1)
    print(f"{rep.verdict}; largest meet {meets.max()}")
    assert rep.verdict == "no counterexample"
    assert np.all(meets >= 0) and meets.max() <= J
    np.testing.assert_array_equal(rep.separation_index, meets)


def test_criterion_14_orbit_pressure():
    rep = pressure_via_orbits(IntervalNDS(M2), ZERO, 10, 0.2)
    s_n = float(sn_sequence(M2, ZERO, 10).s_values[-1])
    print(f"(1/n) log P_n = {rep.rate_P:.4f}, log 2 = {math.log(2):.4f}, coded s_n = {s_n:.4f}, "
          f"(1/n) log Q_n = {rep.rate_Q:.4f}")
    assert abs(rep.rate_P - math.log(2)) <= 0.1
    # P_n is at least 2^n times the number of eps-separated points per
    # branch, an offset of about log(2.5)/n = 0.09 at n = 10; this clause is
    # expected to fail at this n
    assert abs(rep.rate_P - s_n) <= 0.05
