import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hypershift import Point
from hypershift.errors import InvalidArgument
from hypershift.symbolic import (TransitionStructure, Word, build_cylinder, build_mixed, build_strip,
                                 check_finitely_many_images, check_topological_mixing, is_mixing,
                                 itinerary, transition_structure, words_upto)


def test_word_basics():
    w = Word.of([1, 2, 3])
    assert len(w) == 3 and w[0] == 1 and w[1:] == Word((2, 3)) and str(w + (4,)) == "1-2-3-4"
    with pytest.raises(InvalidArgument):
        Word((0, 1))


@pytest.mark.parametrize("z, n, word, esc", [((0.0, 0.0), 5, (1, 1, 1, 1, 1), None),
                                             ((2 / 3, 2 / 7), 4, (2, 2, 2, 2), None),
                                             ((0.5, 0.1), 3, (), 0)])
def test_itinerary(dyadic, z, n, word, esc):
    it = itinerary(dyadic, Point(*z), n)
    assert it.word.symbols == word and it.escaped_at == esc


def test_itinerary_escape_midway(dyadic):
    it = itinerary(dyadic, Point(0.25, 0.3), 4)
    assert it.word.symbols == (1,) and it.escaped_at == 1


@pytest.mark.parametrize("word, lo, hi", [((1, 1), 0.0, 0.25), ((1, 2), 0.25, 0.375), ((3,), 0.75, 0.875)])
def test_cylinder_examples(dyadic, word, lo, hi):
    c = build_cylinder(dyadic, word)
    assert np.allclose(c.left, lo, atol=1e-15) and np.allclose(c.right, hi, atol=1e-15)


def test_cylinder_rejects_symbols_beyond_truncation(dyadic):
    with pytest.raises(InvalidArgument):
        build_cylinder(dyadic, (21,))
    with pytest.raises(InvalidArgument):
        build_cylinder(dyadic, ())


@pytest.mark.parametrize("word, lo, hi", [((1,), 0.0, 0.25), ((1, 1), 0.0, 0.0625),
                                          ((2, 1), 0.0625, 0.09375)])
def test_strip_examples(dyadic, word, lo, hi):
    s = build_strip(dyadic, word)
    assert np.allclose(s.bottom, lo, atol=1e-15) and np.allclose(s.top, hi, atol=1e-15)


def test_mixed_examples(dyadic):
    r = build_mixed(dyadic, (1,), (1,))
    corners = r.corners()
    assert corners[0] == pytest.approx((0.0, 0.0)) and corners[3] == pytest.approx((0.5, 0.25))
    assert r.diameter() == pytest.approx(0.5)
    r0 = build_mixed(dyadic, (), (4,))
    assert r0.strip is None and np.all(r0.left == dyadic.builtin.left[3])
    assert r.contains(0.2, 0.1) and not r.contains(0.2, 0.3)


def test_transition_structure_of_builtins(dyadic, pert_shear):
    for fam in (dyadic, pert_shear):
        ts = transition_structure(fam)
        assert check_finitely_many_images(ts) == 1 and is_mixing(ts)


@pytest.mark.parametrize("c1, c2", [((1,), (2,)), ((3, 1, 2), (5,)), ((2, 2), (1, 1, 1))])
def test_full_shift_mixing_first_is_length(c1, c2):
    r = check_topological_mixing(TransitionStructure.full_shift(6), c1, c2, 20)
    assert r.mixing and r.first == len(c1)


def test_zero_row_not_mixing():
    m = np.ones((3, 3), int)
    m[1] = 0
    ts = TransitionStructure(m)
    assert not is_mixing(ts)
    assert not check_topological_mixing(ts, (2,), (1,), 12).mixing


def test_period_two_not_mixing():
    ts = TransitionStructure(np.array([[0, 1], [1, 0]]))
    assert not is_mixing(ts)
    assert not check_topological_mixing(ts, (1,), (2,), 20).mixing
    # the parity obstruction: connecting times alternate
    hits = [check_topological_mixing(ts, (1,), (2,), n).first for n in range(1, 6)]
    assert hits[-1] == 5


def test_two_row_patterns():
    m = np.array([[1, 1, 0, 0], [1, 1, 1, 1], [1, 1, 0, 0], [1, 1, 1, 1]])
    assert check_finitely_many_images(TransitionStructure(m)) == 2


def test_transition_matrix_validation():
    with pytest.raises(InvalidArgument):
        TransitionStructure(np.array([[0, 2], [1, 1]]))


def _nested(fam, w, j):
    outer, inner = build_cylinder(fam, w), build_cylinder(fam, w + (j,))
    return np.all(outer.left <= inner.left + 1e-13) and np.all(inner.right <= outer.right + 1e-13)


def _markov(fam, i, w):
    big = build_cylinder(fam, (i,) + w)
    small = build_cylinder(fam, w)
    y = np.linspace(0.0, 1.0, 257)
    b = fam.branch(i)
    for side, target in ((big.left, small.left_at), (big.right, small.right_at)):
        X, Y = b.apply(side, y)
        if not np.allclose(X, target(Y), atol=1e-9):
            return False
    return True


@pytest.mark.parametrize("fam_name", ["dyadic", "pert_shear"])
def test_nesting_and_markov_refinement(request, fam_name):
    fam = request.getfixturevalue(fam_name)
    for w in words_upto(3, 4):
        for j in (1, 4):
            assert _nested(fam, tuple(w), j)
        assert _markov(fam, 2, tuple(w))


@settings(max_examples=40, deadline=None)
@given(word=st.lists(st.integers(1, 6), min_size=1, max_size=5))
def test_width_decay(word):
    from hypershift import make_perturbed_family
    fam = make_perturbed_family(20, 0.1, "geometric", 0.1)
    c = build_cylinder(fam, word)
    bound = fam.branch(word[0]).domain.width_max * fam.K0 ** -(len(word) - 1) * (1 + fam.alpha)
    assert np.all(c.right - c.left <= bound)


@pytest.mark.parametrize("fam_name", ["dyadic", "pert_shear"])
def test_rectangles_shrink_monotonically(request, fam_name):
    fam = request.getfixturevalue(fam_name)
    rng = np.random.default_rng(5)
    for _ in range(4):
        past = tuple(int(s) for s in rng.integers(1, 5, 8))
        fut = tuple(int(s) for s in rng.integers(1, 5, 8))
        d = [build_mixed(fam, past[8 - k:], fut[:k]).diameter() for k in range(1, 9)]
        assert all(b < a for a, b in zip(d, d[1:]))


def test_words_upto_count():
    assert sum(1 for _ in words_upto(3, 3)) == 3 + 9 + 27
    assert list(itertools.islice(words_upto(2, 2), 3)) == [Word((1,)), Word((2,)), Word((1, 1))]
