import math

import numpy as np
import pytest

from udset.construction import SetHandle, in_T_lambda
from udset.diffsearch import (abs_linear, condition_ii_margin, directional_quotient,
                              frechet_profile, gateaux_gradient, linear, max_affine, norm_from,
                              search_almost_max, test_function_library)

SCALES = [2.0 ** -j for j in range(2, 12)]


def test_library_lipschitz_constants(tables):
    lib = test_function_library(SetHandle("M", tables, 0.5, 2))
    for f in lib.values():
        assert f.lipschitz_ratio(pairs=10_000, seed=1) <= f.lip * (1 + 1e-9)


def test_dist_to_set_ratio(tables):
    f = test_function_library(SetHandle("T", tables, 0.5, 3))["dist_set"]
    assert f.lip == 1.0 and f.lipschitz_ratio(10_000, seed=2) <= 1 + 1e-9


def test_max_affine_single_piece_is_linear(rng):
    x = rng.uniform(-1, 1, (100, 2))
    f = max_affine([((0.3, -0.4), 0.2)])
    assert np.allclose(f(x), x @ np.array([0.3, -0.4]) + 0.2, rtol=0, atol=1e-15)


@pytest.mark.parametrize("t", [1e-1, 1e-3, 1e-6])
def test_quotient_linear_exact(t):
    g = np.array([0.3, -1.2])
    e = np.array([0.6, 0.8])
    est = directional_quotient(linear(g), (0.1, 0.2), e, t)
    assert est.symmetric == pytest.approx(g @ e, abs=1e-9)
    assert not est.kink


def test_quotient_norm_radial():
    est = directional_quotient(norm_from((0.0, 0.0)), (1.0, 0.0), (1.0, 0.0), 1e-4)
    assert est.value == pytest.approx(1.0, abs=1e-10)


def test_quotient_kink_detected():
    f = abs_linear((1.0, 0.0))
    for t in (1e-2, 1e-4, 1e-6):
        est = directional_quotient(f, (0.0, 0.0), (1.0, 0.0), t)
        assert est.symmetric == 0.0
        assert est.forward == 1.0 and est.backward == -1.0
        assert est.kink


def test_quotient_bounded_by_lip(rng):
    for f in test_function_library().values():
        for _ in range(20):
            x = rng.uniform(-1, 1, 2)
            e = rng.normal(size=2)
            e /= np.linalg.norm(e)
            assert abs(directional_quotient(f, x, e, 1e-5).value) <= f.lip * (1 + 1e-9)


def test_quotient_rejects_bad_t():
    with pytest.raises(ValueError):
        directional_quotient(linear((1, 0)), (0, 0), (1, 0), 0.0)


def test_profile_linear_zero():
    e = np.array([0.6, 0.8])
    p = frechet_profile(linear(2.0 * e), (0.1, -0.3), e, 2.0, SCALES)
    assert max(p.errors) <= 1e-12


def test_profile_abs_off_kink_decays():
    f = abs_linear((1.0, 0.0))
    p = frechet_profile(f, (0.3, 0.1), (1.0, 0.0), 1.0, SCALES)
    assert all(err <= 1e-12 for r, err in zip(p.scales, p.errors) if r < 0.3)


def test_profile_abs_at_kink_stays_large():
    f = abs_linear((1.0, 0.0))
    for D, e in [(0.0, (1, 0)), (1.0, (1, 0)), (0.7, (0.6, 0.8))]:
        p = frechet_profile(f, (0.0, 0.0), e, D, SCALES)
        assert min(p.errors) >= 0.4


def test_profile_validation():
    f = linear((1, 0))
    with pytest.raises(ValueError):
        frechet_profile(f, (0, 0), (1, 0), 1.0, SCALES[:3])
    with pytest.raises(ValueError):
        frechet_profile(f, (0, 0), (1, 0), 1.0, SCALES[::-1])


def test_gradient_of_smooth_function():
    f = norm_from((2.5, 1.0))
    x = np.array([0.1, 0.2])
    g = (x - np.array([2.5, 1.0])) / np.linalg.norm(x - np.array([2.5, 1.0]))
    assert np.allclose(gateaux_gradient(f, x), g, atol=1e-9)


def test_margin_identical_pairs():
    f = norm_from((2.5, 1.0))
    m = condition_ii_margin(f, (0.1, 0.1), (1.0, 0.0), (0.1, 0.1), (1.0, 0.0), [2.0 ** -j for j in range(1, 10)])
    assert m.applicable and m.margin >= 0
    assert m.K_const == 25 * math.sqrt(2.0)


def test_margin_linear_everywhere(rng):
    f = linear((0.3, 0.4))
    ts = [2.0 ** -j for j in range(1, 15)]
    m = condition_ii_margin(f, (0.0, 0.0), (0.0, 1.0), (0.5, 0.1), (0.6, 0.8), ts)
    assert m.applicable and m.margin >= -1e-15


def test_margin_not_applicable_when_radicand_negative():
    f = linear((0.3, 0.4))
    m = condition_ii_margin(f, (0.0, 0.0), (0.6, 0.8), (0.5, 0.1), (0.0, 1.0), [0.5])
    assert not m.applicable and m.margin is None


def test_margin_abs_closed_form():
    # f = |x_1|, x = (0,-1), x' = (0,1), e = e' = (0,1): both increments vanish
    f = abs_linear((1.0, 0.0))
    ts = [2.0 ** -j for j in range(1, 12)]
    m = condition_ii_margin(f, (0.0, -1.0), (0.0, 1.0), (0.0, 1.0), (0.0, 1.0), ts)
    assert m.applicable and m.margin == 0.0
    # with e = (1, 0) at x' = (0.5, 0) the increments are t and |t|; gap D' - D = 1 - 0
    m = condition_ii_margin(f, (0.0, 0.0), (1.0, 0.0), (0.5, 0.0), (1.0, 0.0), ts)
    K = 25 * math.sqrt(2.0)
    # closed form: for t > 0 lhs = 0; for t < 0 lhs = 2|t|
    expect = min(min(K * t, K * t - 2 * t) for t in ts)
    assert m.margin == pytest.approx(expect, rel=1e-12)


@pytest.fixture(scope="module")
def linear_report(tables):
    return search_almost_max(linear((0.6, 0.8)), 0.5, 4, 5, 0, tables)


def test_search_linear_matches_direction_oracle(tables, linear_report):
    g = np.array([0.6, 0.8])
    a, b = tables.chords(4)
    u = b - a
    u = u[np.sqrt((u ** 2).sum(axis=1)) > 0]
    u /= np.sqrt((u ** 2).sum(axis=1))[:, None]
    best = np.abs(u @ g).max()
    assert linear_report.best.estimate == pytest.approx(best, abs=1e-9)
    assert max(linear_report.profile.errors) <= 1e-9


def test_search_steps_are_certified(linear_report):
    steps = linear_report.steps
    assert len(steps) >= 2
    est = [s.estimate for s in steps]
    assert all(b >= a for a, b in zip(est, est[1:]))
    lams = [s.lam for s in steps]
    assert all(b > a for a, b in zip(lams, lams[1:])) and lams[-1] < 1
    for s in steps[1:]:
        c = s.certificate
        assert c is not None and c.alpha < c.eta * c.delta
        assert c.verified == c.total_pairs or c.verified == 2000


def test_search_points_in_T(tables, linear_report):
    from udset.construction import build_tables
    T = build_tables(20, focus=linear_report.focus)
    for s in linear_report.steps:
        assert in_T_lambda(np.array(s.x), s.lam, linear_report.K, T)


def test_search_smooth_profile_decays(tables):
    rep = search_almost_max(norm_from((2.5, 1.0)), 0.5, 4, 3, 0, tables)
    assert rep.profile.decays(1e-6)
    # increments are differences of f-values, exact only up to rounding
    assert all(m.margin >= -1e-12 for _, m in rep.margins if m.applicable)


def test_search_abs_linear(tables):
    rep = search_almost_max(abs_linear((1.0, 0.0)), 0.5, 4, 3, 0, tables)
    x = np.array(rep.best.x)
    assert abs(x[0]) > 0 or min(rep.profile.errors) > 0.1


def test_report_json(linear_report, tmp_path):
    import json
    d = json.loads(linear_report.to_json())
    assert d["K_const"] == 25 * math.sqrt(2 * 1.0)
    assert len(d["steps"]) == len(linear_report.steps)
    linear_report.profile_csv(tmp_path / "p.csv")
    assert (tmp_path / "p.csv").read_text().startswith("rho,error,error_direction")
