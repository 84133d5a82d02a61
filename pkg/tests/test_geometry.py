import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from udset.geometry import (Ball, DimensionMismatch, Segment, dist_point_segment,
                            in_neighborhood, subdivide_to_unit_length)

coord = st.floats(-2, 2, allow_nan=False)
pt2 = st.tuples(coord, coord)


def test_distance_midpoint_is_zero():
    s = Segment((-0.3, 0.2), (0.5, -0.1))
    assert dist_point_segment(s.point_at(0.5), s) == pytest.approx(0.0, abs=1e-15)


def test_distance_foot_point():
    assert dist_point_segment((0, 1), Segment((-1, 0), (1, 0))) == 1.0


def test_distance_nearest_endpoint():
    assert dist_point_segment((2, 1), Segment((0, 0), (1, 0))) == pytest.approx(math.sqrt(2), rel=1e-15)


def test_degenerate_segment_is_a_point():
    assert dist_point_segment((3, 4), Segment((0, 0), (0, 0))) == 5.0


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        dist_point_segment((0, 0, 0), Segment((0, 0), (1, 0)))


def test_neighborhood_examples():
    seg = [Segment((-1, 0), (1, 0))]
    assert in_neighborhood((0.2, 0.0), seg, [1e-3])
    assert not in_neighborhood((0, 0), [], [])
    assert not in_neighborhood((0, 0.3), seg, [0.25], closed=False)
    assert in_neighborhood((0, 0.3), seg, [0.3], closed=True)
    assert not in_neighborhood((0, 0.3), seg, [0.3], closed=False)


def test_ball_diameter_and_closedness():
    b = Ball((0, 0), 0.5, closed=False)
    assert b.diameter == 1.0
    assert not b.contains((0.5, 0))
    assert Ball((0, 0), 0.5, closed=True).contains((0.5, 0))


@pytest.mark.parametrize("length,pieces", [(0.7, 1), (1.0, 1), (1.8, 2)])
def test_subdivide_examples(length, pieces):
    s = Segment((-length / 2, 0), (length / 2, 0))
    parts = subdivide_to_unit_length(s)
    assert len(parts) == pieces
    assert all(p.length == pytest.approx(length / pieces, rel=1e-12) for p in parts)


@given(pt2, pt2)
def test_subdivide_concatenates_exactly(a, b):
    s = Segment(a, b)
    parts = subdivide_to_unit_length(s)
    assert parts[0].a == s.a and parts[-1].b == s.b
    assert all(p.b == q.a for p, q in zip(parts, parts[1:]))
    assert all(p.length <= 1 + 1e-12 for p in parts)
    assert len(parts) == max(1, math.ceil(s.length - 1e-12))


@given(pt2, pt2, pt2, pt2)
def test_distance_is_1_lipschitz(x, y, a, b):
    s = Segment(a, b)
    gap = abs(dist_point_segment(x, s) - dist_point_segment(y, s))
    assert gap <= math.dist(x, y) + 1e-12


@given(pt2, pt2, st.floats(0, 1))
def test_points_on_segment_have_zero_distance(a, b, t):
    s = Segment(a, b)
    assert dist_point_segment(s.point_at(t), s) <= 1e-12 * max(1.0, s.length)


@settings(max_examples=50)
@given(pt2, pt2, pt2)
def test_distance_matches_dense_sampling(x, a, b):
    s = Segment(a, b)
    ts = np.linspace(0, 1, 2001)
    P = np.asarray(a) + ts[:, None] * (np.asarray(b) - np.asarray(a))
    brute = np.sqrt(((P - np.asarray(x)) ** 2).sum(axis=1)).min()
    d = dist_point_segment(x, s)
    assert d <= brute + 1e-12
    assert brute - d <= s.length / 2000 + 1e-12
