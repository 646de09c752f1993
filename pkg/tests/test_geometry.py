from fractions import Fraction

import hypothesis.strategies as st
import pytest
from hypothesis import given, settings

from fracbergman.geometry import (
    BETAS,
    CarlesonSquare,
    DyadicIndex,
    Interval,
    Rectangle,
    ScaleRangeError,
    as_beta,
    cell_index,
    dyadic_indices_meeting,
    dyadic_squares_containing,
    find_adjacent_cover,
    find_dyadic_cover,
)

betas = st.sampled_from(BETAS)
scales = st.integers(min_value=-20, max_value=20)
offsets = st.integers(min_value=-10 ** 6, max_value=10 ** 6)
xs = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False)
intervals = st.builds(Interval, xs, st.floats(min_value=1e-3, max_value=1e3))


def test_as_beta_normalizes_float_third():
    assert as_beta(1 / 3) == Fraction(1, 3)
    assert as_beta(0) == 0
    with pytest.raises(ValueError):
        as_beta(0.25)


def test_grid_members_match_hand_values():
    # D^0 at j=0 is [m, m+1); D^{1/3} at j=1 is 2([0,1) + m - 1/3)
    assert DyadicIndex(0, 0, 3).exact_left == 3
    assert DyadicIndex(Fraction(1, 3), 1, 0).exact_left == Fraction(-2, 3)
    assert DyadicIndex(Fraction(1, 3), 0, 0).exact_left == Fraction(1, 3)


def test_carleson_square_halves():
    q = CarlesonSquare(Interval(0.0, 2.0))
    assert q.top().as_tuple() == (0.0, 2.0, 1.0, 2.0)
    assert q.bottom().as_tuple() == (0.0, 2.0, 0.0, 1.0)
    assert q.contains_point(1.0, 1.999) and not q.contains_point(2.0, 1.0)


def test_rectangle_rejects_degenerate():
    with pytest.raises(ValueError):
        Rectangle(1.0, 1.0, 0.0, 1.0)


@given(betas, scales, offsets)
def test_children_tile_parent(beta, j, m):
    idx = DyadicIndex(beta, j, m)
    a, b = idx.children()
    assert a.exact_left == idx.exact_left
    assert a.exact_right == b.exact_left
    assert b.exact_right == idx.exact_right
    assert a.parent() == idx and b.parent() == idx


@given(betas, scales, offsets)
def test_same_scale_cells_are_adjacent(beta, j, m):
    idx = DyadicIndex(beta, j, m)
    assert idx.exact_right == DyadicIndex(beta, j, m + 1).exact_left


@given(betas, scales, offsets, st.integers(min_value=1, max_value=6))
def test_nesting_across_scales(beta, j, m, k):
    idx = DyadicIndex(beta, j, m)
    anc = idx
    for _ in range(k):
        anc = anc.parent()
    assert anc.contains_index(idx)
    assert anc.exact_left <= idx.exact_left and idx.exact_right <= anc.exact_right


@given(xs, betas, scales)
def test_cell_index_locates_point(x, beta, j):
    idx = DyadicIndex(beta, j, cell_index(x, j, beta))
    assert idx.exact_left <= Fraction(x) < idx.exact_right


@given(intervals)
@settings(max_examples=300)
def test_dyadic_cover_postconditions(interval):
    beta, idx = find_dyadic_cover(interval)
    assert beta in BETAS and idx.beta == beta
    assert idx.exact_left <= interval.exact_left
    assert interval.exact_right <= idx.exact_right
    assert Fraction(idx.length) <= 8 * Fraction(interval.length)


def test_dyadic_cover_tie_break():
    # D^0 at scale 0 splits at 1, so the 1/3-grid cell [5/6, 4/3) wins
    beta, idx = find_dyadic_cover(Interval.from_endpoints(0.9, 1.1))
    assert beta == Fraction(1, 3)
    assert (idx.exact_left, idx.exact_right) == (Fraction(5, 6), Fraction(4, 3))


@given(intervals, betas)
@settings(max_examples=300)
def test_adjacent_cover_postconditions(interval, beta):
    i1, i2 = find_adjacent_cover(interval, beta)
    assert i1.j == i2.j and i1.exact_right == i2.exact_left
    assert i1.exact_left <= interval.exact_left and interval.exact_right <= i2.exact_right
    assert interval.length < i1.length <= 2 * interval.length


def test_cover_scale_out_of_range():
    with pytest.raises(ScaleRangeError):
        find_dyadic_cover(Interval(0.0, 2.0 ** -60))


@given(xs, st.floats(min_value=1e-3, max_value=1e2), betas)
def test_squares_containing_point(x, y, beta):
    found = dyadic_squares_containing(x, y, beta, -12, 8)
    for idx in found:
        assert idx.square().contains_point(x, y)
    for a, b in zip(found, found[1:]):
        assert b.contains_index(a)


def test_squares_containing_rejects_boundary():
    with pytest.raises(ValueError):
        dyadic_squares_containing(0.0, 0.0, 0, -2, 2)


def test_indices_meeting_cover_range():
    cells = list(dyadic_indices_meeting(-0.5, 1.5, 0, 0))
    assert [c.m for c in cells] == [-1, 0, 1]
