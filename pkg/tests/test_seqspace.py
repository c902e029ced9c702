import itertools
import math
import warnings

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import alphabets, points
from nsdyn.seqspace import (
    AlphabetSeq,
    BallSpec,
    CylinderCover,
    NetRelation,
    PointPrefix,
    RankClampWarning,
    Word,
    bowen_ball_rank,
    count_admissible,
    is_complete,
    iter_words,
    meet_length,
    metric,
    net_relation,
    shift,
    uniform_mass,
    word_from_index,
    word_index,
)

M2 = AlphabetSeq.constant(2)
M23 = AlphabetSeq.periodic([2, 3])


def test_alphabet_rejects_small_sizes():
    with pytest.raises(ValueError):
        AlphabetSeq((), (1,))
    with pytest.raises(ValueError):
        AlphabetSeq((), ())


def test_alphabet_head_then_period():
    m = AlphabetSeq((5,), (2, 3))
    assert [m(k) for k in range(6)] == [5, 2, 3, 2, 3, 2]
    assert m.level_class(4) == 2 and m.n_classes == 3


def test_word_check_catches_out_of_range_symbol():
    Word(0, (2, 3)).check(M23)
    with pytest.raises(ValueError):
        Word(0, (3,)).check(M23)


def test_meet_length_examples():
    a = PointPrefix(0, (1, 1, 2), (1,))
    b = PointPrefix(0, (1, 1, 3), (1,))
    assert meet_length(a, b, 50) == 2
    assert meet_length(a, a, 50) == math.inf
    assert meet_length(PointPrefix(0, (2,), (1,)), PointPrefix(0, (1,), (1,)), 50) == 0


def test_meet_length_level_mismatch():
    with pytest.raises(ValueError):
        meet_length(PointPrefix(0, (1,)), PointPrefix(1, (1,)), 1)


def test_metric_examples():
    a = PointPrefix(0, (1, 1, 1), (1,))
    b = PointPrefix(0, (1, 1, 2), (1,))
    assert metric(a, b) == pytest.approx(0.135335, abs=1e-6)
    assert metric(a, a) == 0.0
    assert metric(a, PointPrefix(0, (2,), (1,))) == 1.0


@pytest.mark.parametrize(
    "n, eps, closed, rank",
    [(5, math.exp(-1), False, 6), (5, math.exp(-1), True, 5), (1, 1.0, True, 0), (0, 0.01, False, 0)],
)
def test_bowen_ball_rank_examples(n, eps, closed, rank):
    assert bowen_ball_rank(BallSpec(PointPrefix(0, (), (1,)), n, eps, closed)) == rank


def test_bowen_ball_rank_clamps_when_radius_reaches_diameter():
    c = PointPrefix(0, (), (1,))
    with pytest.warns(RankClampWarning):
        assert bowen_ball_rank(BallSpec(c, 4, 1.0, closed=True)) == 0
    with pytest.warns(RankClampWarning):
        assert bowen_ball_rank(BallSpec(c, 3, 50.0)) == 0
    # an open ball of radius 1 excludes points differing in the first n symbols
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert bowen_ball_rank(BallSpec(c, 3, 1.0)) == 3


def test_ball_spec_validation():
    with pytest.raises(ValueError):
        BallSpec(PointPrefix(0, (1,)), 1, 0.0)
    with pytest.raises(ValueError):
        BallSpec(PointPrefix(0, (1,)), -1, 0.5)


@given(st.integers(0, 30), st.floats(0.01, 8.0))
def test_open_and_closed_ranks_agree_off_the_integers(n, r):
    c = PointPrefix(0, (), (1,))
    eps = math.exp(-r)
    op = bowen_ball_rank(BallSpec(c, n, eps))
    cl = bowen_ball_rank(BallSpec(c, n, eps, closed=True))
    if n == 0:
        assert op == cl == 0
    elif abs(r - round(r)) < 1e-9:
        assert cl == op - 1
    else:
        assert cl == op


@pytest.mark.parametrize(
    "u, v, rel",
    [((1,), (1, 2), NetRelation.U_CONTAINS_V), ((1, 1), (1, 2), NetRelation.DISJOINT), ((2, 1), (2, 1), NetRelation.EQUAL)],
)
def test_net_relation_examples(u, v, rel):
    assert net_relation(Word(0, u), Word(0, v)) == rel


def _extensions(m, w, depth):
    rest = [range(1, m(w.level + j) + 1) for j in range(len(w), depth)]
    return {w.symbols + t for t in itertools.product(*rest)}


@settings(max_examples=60)
@given(alphabets(max_size=3), st.data())
def test_net_relation_matches_set_containment(m, data):
    depth = data.draw(st.integers(1, 6))
    u = Word(0, tuple(data.draw(st.integers(1, m(j))) for j in range(data.draw(st.integers(0, depth)))))
    v = Word(0, tuple(data.draw(st.integers(1, m(j))) for j in range(data.draw(st.integers(0, depth)))))
    eu, ev = _extensions(m, u, depth), _extensions(m, v, depth)
    expected = {
        (True, True): NetRelation.EQUAL,
        (True, False): NetRelation.V_CONTAINS_U,
        (False, True): NetRelation.U_CONTAINS_V,
    }.get((eu <= ev, ev <= eu), NetRelation.DISJOINT)
    assert net_relation(u, v) == expected
    if expected == NetRelation.DISJOINT:
        assert not eu & ev


def test_net_relation_level_mismatch():
    with pytest.raises(ValueError):
        net_relation(Word(0, (1,)), Word(1, (1,)))


def test_shift_examples():
    w = Word(0, (1, 2, 3))
    assert shift(w) == Word(1, (2, 3))
    v = w
    for _ in range(3):
        v = shift(v)
    assert v == Word(3, ())
    p = PointPrefix(0, (1,), (2, 1))
    assert shift(shift(p)).level == 2
    assert shift(shift(p)).symbol(0) == 1
    with pytest.raises(ValueError):
        shift(Word(0, ()))


def test_count_admissible_examples():
    assert count_admissible(M2, 0, 3) == 8
    assert count_admissible(M23, 0, 2) == 6
    assert count_admissible(M23, 5, 0) == 1
    # exact integers, no overflow
    assert count_admissible(M2, 0, 200) == 2**200


@given(alphabets(), st.integers(0, 20), st.integers(0, 30))
def test_count_admissible_recurrence(m, k, n):
    assert count_admissible(m, k, n + 1) == count_admissible(m, k, n) * m(k + n)


@given(alphabets(max_size=3), st.data())
def test_metric_is_an_ultrametric(m, data):
    a, b, c = (data.draw(points(m, length=8)) for _ in range(3))
    dab, dbc, dac = metric(a, b, 8), metric(b, c, 8), metric(a, c, 8)
    assert dac <= max(dab, dbc)
    assert 0.0 <= dab <= 1.0


@given(alphabets(max_size=3), st.integers(0, 4), st.integers(0, 5))
def test_word_index_roundtrip(m, level, length):
    for i, w in enumerate(iter_words(m, level, length)):
        assert word_index(m, w) == i
        assert word_from_index(m, level, length, i) == w


def test_point_curtail_is_a_word():
    p = PointPrefix(1, (3, 1), (2,))
    assert p.curtail(4) == Word(1, (3, 1, 2, 2))
    p.check(M23, 6)


def test_point_without_tail_is_finite():
    p = PointPrefix(0, (1, 2))
    assert p.depth == 2
    with pytest.raises(IndexError):
        p.symbol(2)


def test_uniform_mass_is_exact():
    assert uniform_mass(M23, Word(0, (1, 2, 1))) * 12 == 1


@settings(max_examples=40)
@given(alphabets(max_size=3), st.data())
def test_is_complete_matches_enumeration(m, data):
    depth = 4
    words = data.draw(
        st.lists(
            st.integers(1, 3).flatmap(
                lambda n: st.tuples(*[st.integers(1, m(j)) for j in range(n)])
            ),
            max_size=8,
        )
    )
    fam = [Word(0, w) for w in words]
    covered = set()
    for w in fam:
        covered |= _extensions(m, w, depth)
    full = _extensions(m, Word(0, ()), depth)
    assert is_complete(m, fam) == (bool(fam) and covered == full)


def test_cylinder_cover_properties():
    cover = CylinderCover((Word(0, (1,)), Word(0, (2, 1)), Word(0, (2, 2))))
    assert cover.ranks == [1, 2, 2]
    assert cover.is_disjoint() and cover.is_complete(M2)
    nested = CylinderCover((Word(0, (1,)), Word(0, (1, 2)), Word(0, (2,))))
    assert not nested.is_disjoint() and nested.is_complete(M2)
    with pytest.raises(ValueError):
        CylinderCover((Word(0, (1,)), Word(1, (1,))))
