import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from udset.dense_net import (R_index, R_prefix, build_net, enumerate_R, in_R,
                             net_property_check)


def test_first_point_is_origin():
    assert enumerate_R(2, 0) == (0.0, 0.0)


def test_prefix_in_open_ball_and_injective():
    P = R_prefix(2, 10_000)
    assert len(P) == 10_000
    assert np.all((P ** 2).sum(axis=1) < 1.0)
    assert len(np.unique(P, axis=0)) == len(P)


def test_prefix_min_pairwise_distance_positive():
    P = R_prefix(2, 10_000)
    order = np.lexsort(P.T[::-1])
    Q = P[order]
    # distinct dyadic points: minimal gap is positive; exact duplicates would give 0
    assert np.all(np.any(Q[1:] != Q[:-1], axis=1))


def test_prefix_matches_pointwise_enumeration():
    P = R_prefix(2, 300)
    for i in (0, 1, 7, 50, 299):
        assert tuple(P[i]) == enumerate_R(2, i)


def test_enumeration_order_by_dyadic_level():
    P = R_prefix(2, 500)
    from udset.dense_net import dyadic_exponent
    j = [max(dyadic_exponent(c) for c in p) for p in P]
    assert j == sorted(j)


@given(st.integers(0, 5000))
def test_index_round_trip(i):
    assert R_index(enumerate_R(2, i)) == i


def test_negative_index_rejected():
    with pytest.raises(ValueError):
        enumerate_R(2, -1)


def test_in_R():
    assert in_R((0.5, 0.25))
    assert not in_R((1.0, 0.0))
    assert not in_R((float("nan"), 0.0))
    assert not in_R((0.6, 0.8))  # norm rounds to 1, outside the open ball


@pytest.mark.parametrize("eps", [0.5, 0.2, 0.1])
def test_net_property_full_ball(eps):
    net = build_net(eps)
    assert net_property_check(net, 100_000, seed=1) == 0


def test_eps_two_contains_origin():
    net = build_net(2.0)
    assert any(np.all(p == 0) for p in net.points)
    assert net_property_check(net, 10_000, seed=0) == 0


def test_grid_step_for_half():
    assert build_net(0.5).j == 3


def test_net_points_belong_to_R():
    net = build_net(0.2)
    assert all(in_R(tuple(p)) for p in net.points)


def test_origin_only_net_fails():
    net = build_net(0.1)
    thin = dataclasses.replace(net, points=np.zeros((1, 2)))
    assert net_property_check(thin, 10_000, seed=0) > 0


def test_net_monotone_in_eps():
    net = build_net(0.2)
    looser = dataclasses.replace(net, eps=0.4)
    assert net_property_check(looser, 20_000, seed=3) == 0


def test_deterministic():
    a, b = build_net(0.1), build_net(0.1)
    assert np.array_equal(a.points, b.points) and a.points.tobytes() == b.points.tobytes()


def test_bad_eps():
    with pytest.raises(ValueError):
        build_net(0.0)
    with pytest.raises(ValueError):
        build_net(2.5)


def test_window_net_property():
    net = build_net(0.02, window=((0.0, 0.0), None))
    assert net.window is not None
    assert net_property_check(net, 100_000, seed=2) == 0
    assert all(in_R(tuple(p)) for p in net.points)


def test_window_centre_must_be_grid_node():
    with pytest.raises(ValueError):
        build_net(0.02, window=((1 / 3, 0.0), None))


def test_csv_export(tmp_path):
    net = build_net(1.0)
    net.to_csv(tmp_path / "n.csv")
    lines = (tmp_path / "n.csv").read_text().splitlines()
    assert lines[0] == "x0,x1" and len(lines) == len(net) + 1
