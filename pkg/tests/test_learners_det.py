import pytest
from hypothesis import given, settings, strategies as st

from mmflearn.learners import BinarySearchState, GridState, grid_point, rprime_det, rprime_det_sp
from mmflearn.learners.deterministic import bs_get_rec, bs_record, grid_record

from oracles import binary_search_trace


@pytest.mark.parametrize('q, expected', [(1, 0.5), (2, 0.25), (3, 0.75), (4, 0.125), (7, 0.875)])
def test_grid_point(q, expected):
    assert grid_point(q, 1.0) == expected


def test_grid_point_enumerates_odd_dyadics_per_depth():
    for h in range(1, 8):
        qs = range(2 ** (h - 1), 2 ** h)
        probes = [grid_point(q, 1.0) for q in qs]
        assert probes == [k / 2 ** h for k in range(1, 2 ** h, 2)]
    with pytest.raises(ValueError):
        grid_point(0, 1.0)


def test_grid_record():
    s = GridState(1.0, 0.9)
    grid_record(s, 0.5, 0.95)
    assert s.ud_ub == 0.5
    s.ud_ub = 0.4
    grid_record(s, 0.5, 0.95)
    assert s.ud_ub == 0.4
    s = GridState(1.0, 0.9)
    grid_record(s, 0.5, 0.5)
    assert s.ud_ub == 1.0
    grid_record(s, 0.5, 0.9)  # met means X >= alpha
    assert s.ud_ub == 0.5


def test_bs_get_rec_and_record():
    s = BinarySearchState(1.0, 0.9)
    assert bs_get_rec(s) == 0.5
    bs_record(s, 0.5, 0.1)
    assert (s.ud_lb, s.ud_ub) == (0.5, 1.0) and bs_get_rec(s) == 0.75
    bs_record(s, 0.25, 0.1)
    assert (s.ud_lb, s.ud_ub) == (0.5, 1.0)
    s = BinarySearchState(1.0, 0.9)
    bs_record(s, 0.5, 0.95)
    assert (s.ud_lb, s.ud_ub) == (0.0, 0.5)
    s.ud_lb = 0.25
    assert bs_get_rec(s) == 0.375


def test_rprime():
    assert rprime_det_sp(3, 5) == 15
    assert rprime_det(1) == 2
    assert rprime_det(3) == 20


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-3, 0.999), st.integers(1, 30))
def test_binary_search_halves_and_contains(w, steps):
    s = BinarySearchState(1.0, 0.5)
    for i in range(steps):
        width = s.ud_ub - s.ud_lb
        x = s.get_ud_rec()
        s.record(x, 1.0 if x >= w else 0.0)
        assert s.ud_ub - s.ud_lb == width / 2
        assert s.ud_lb <= w <= s.ud_ub
    mids, lo, hi = binary_search_trace(w, 1.0, steps)
    assert (s.ud_lb, s.ud_ub) == (lo, hi)


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-3, 1.0), st.integers(1, 200))
def test_grid_upper_bound(w, q_max):
    s = GridState(1.0, 0.5)
    for q in range(1, q_max + 1):
        x = grid_point(q, 1.0)
        s.record(x, 1.0 if x >= w else 0.0)
        assert s.ud_ub >= w
        assert s.ud_ub - w <= 2.0 / (q + 1) + 1e-12

