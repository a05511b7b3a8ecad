"""Margin formulas, convexity estimates, sandwich and gap measurements."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from linot.bounds import (
    DegenerateConvexity,
    bounds_report,
    delta_threshold,
    estimate_strong_convexity,
    holder_gap_curve,
    psi_bar,
    psi_merigot,
    sandwich_check,
)
from linot.families import AffineMap
from linot.measures import uniform_measure
from linot.solvers import MapProvenance, TransportMap


def cloud(seed, n, d, offset=0.0):
    rng = np.random.default_rng(seed)
    return uniform_measure(rng.normal(size=(n, d)) + offset)


def tmap_from(mu, values):
    return TransportMap(source=mu, values=values, provenance=MapProvenance.EXACT)


def test_convexity_identity_scale_shift():
    mu = cloud(0, 10, 2)
    assert estimate_strong_convexity(tmap_from(mu, mu.points.copy())) == pytest.approx(1.0)
    assert estimate_strong_convexity(tmap_from(mu, 3.0 * mu.points)) == pytest.approx(3.0)
    assert estimate_strong_convexity(
        tmap_from(mu, mu.points + np.array([4.0, -2.0]))
    ) == pytest.approx(1.0)


def test_convexity_needs_two_points():
    mu = uniform_measure([[0.0, 0.0]])
    with pytest.raises(ValueError):
        estimate_strong_convexity(tmap_from(mu, mu.points.copy()))


def test_convexity_clips_at_zero():
    mu = uniform_measure([[0.0], [1.0]])
    crossed = tmap_from(mu, np.array([[10.0], [0.0]]))
    assert estimate_strong_convexity(crossed) == 0.0


def test_psi_merigot_values():
    assert psi_merigot(1.0, 0.0, 1.0) == 0.0
    assert psi_merigot(1.0, 1.0, 1.0) == pytest.approx(2.0)
    assert psi_merigot(1.0, 2.0**15, 1.0) == pytest.approx(4.0 + 2.0**15)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 10.0), st.floats(0.0, 10.0), st.floats(0.1, 5.0), st.floats(0.1, 5.0))
def test_psi_merigot_monotone_in_eps(e1, e2, f_sup, c):
    lo, hi = sorted((e1, e2))
    assert psi_merigot(f_sup, lo, c) <= psi_merigot(f_sup, hi, c) + 1e-12


def test_psi_bar_closed_form():
    # f=1, R=1, K=4, w2=0, id=0: (1 + 2) eps + sqrt(eps)
    for eps in (0.0, 0.25, 1.0):
        expected = 3.0 * eps + np.sqrt(eps)
        assert psi_bar(1.0, eps, 1.0, 4.0, 0.0, 0.0) == pytest.approx(expected)


def test_psi_bar_monotone_and_degenerate():
    assert psi_bar(2.0, 0.2, 3.0, 0.5, 1.0, 1.0) <= psi_bar(2.0, 0.4, 3.0, 0.5, 1.0, 1.0)
    with pytest.raises(DegenerateConvexity):
        psi_bar(1.0, 0.1, 1.0, 0.0, 0.0, 0.0)


def test_delta_threshold():
    assert delta_threshold(0.0, 0.0) == 0.0
    assert delta_threshold(1.0, 2.0) == 12.0
    assert delta_threshold(2.0, 1.0) == delta_threshold(1.0, 2.0)


def test_sandwich_identical_measures():
    sigma = cloud(1, 8, 2)
    mu = cloud(2, 8, 2, offset=0.5)
    lower, upper = sandwich_check(sigma, mu, mu)
    assert abs(lower) < 1e-12 and abs(upper) < 1e-12


def test_sandwich_1d_isometry():
    sigma = cloud(3, 9, 1)
    mu = cloud(4, 9, 1, offset=1.0)
    nu = cloud(5, 9, 1, offset=-1.0)
    lower, upper = sandwich_check(sigma, mu, nu)
    assert abs(lower) < 1e-9
    assert upper >= -1e-9


def test_sandwich_2d_rotated_pair():
    rng = np.random.default_rng(6)
    base = rng.normal(size=(10, 2)) @ np.array([[2.0, 0.0], [0.0, 0.5]])
    mu = uniform_measure(base)
    theta = 1.1
    rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    nu = uniform_measure(base @ rot.T)
    sigma = cloud(7, 10, 2)
    lower, upper = sandwich_check(sigma, mu, nu)
    assert lower > 0
    w2 = np.sqrt(__import__("linot.solvers", fromlist=["solve_exact"]).solve_exact(mu, nu).cost)
    assert upper >= -0.05 * w2


def test_gap_curve_zero_eps():
    rng = np.random.default_rng(8)
    mu = uniform_measure(rng.normal(size=(12, 2)))
    sigma = uniform_measure(rng.uniform(-1, 1, size=(12, 2)))
    curve = holder_gap_curve(
        sigma, mu, (AffineMap.shift([0.5, 0.0]), AffineMap.scale(1.5, dim=2)),
        [0.0], trials=4, seed=0,
    )
    assert curve.gap_mean[0] < 1e-8
    assert np.all(curve.gap_mean >= -1e-9)


def test_gap_curve_monotone_and_bounded():
    from linot.verify import jittered_grid_measure

    rng = np.random.default_rng(9)
    mu = jittered_grid_measure(rng)
    sigma = jittered_grid_measure(rng)
    curve = holder_gap_curve(
        sigma, mu, (AffineMap.shift([1.0, 0.0]), AffineMap.scale(0.7, dim=2)),
        [0.05, 0.1, 0.2], trials=10, seed=1, smoothness=0.35,
    )
    assert np.all(curve.gap_max >= curve.gap_mean)
    assert np.all(curve.gap_mean >= -1e-9)
    # self-consistency: rescale the envelope through the largest point,
    # the smaller perturbations must stay below it
    shape = np.sqrt(curve.eps_values) + curve.eps_values
    c_fit = curve.gap_max[-1] / shape[-1]
    assert np.all(curve.gap_max[:-1] <= c_fit * shape[:-1] + 1e-9)
    assert np.isfinite(curve.bound_values).all()


def test_gap_curve_rejects_unsorted():
    mu = cloud(10, 6, 2)
    with pytest.raises(ValueError):
        holder_gap_curve(
            mu, mu, (AffineMap.shift([0.0, 0.0]), AffineMap.shift([1.0, 0.0])),
            [0.2, 0.1], trials=2, seed=0,
        )


def test_gap_curve_serialization(tmp_path):
    rng = np.random.default_rng(11)
    mu = uniform_measure(rng.normal(size=(8, 2)))
    sigma = uniform_measure(rng.normal(size=(8, 2)))
    curve = holder_gap_curve(
        sigma, mu, (AffineMap.shift([0.3, 0.0]), AffineMap.shift([0.0, 0.3])),
        [0.0, 0.1], trials=2, seed=3,
    )
    csv_path = tmp_path / "curve.csv"
    curve.export_csv(csv_path)
    header = csv_path.read_text().splitlines()[0]
    assert header == "eps,gap_mean,gap_max,bound"
    json_path = tmp_path / "curve.json"
    curve.to_json(json_path)
    import json

    doc = json.loads(json_path.read_text())
    assert set(doc) == {"eps_values", "gap_mean", "gap_max", "bound_values"}


def test_bounds_report_fields():
    sigma = cloud(12, 10, 2)
    mu = cloud(13, 10, 2, offset=1.0)
    nu = cloud(14, 10, 2, offset=-1.0)
    report = bounds_report(sigma, mu, nu, R=4.0, eps=0.1, C_merigot=2.0, cell_width=0.5)
    assert report.psi >= 0 and report.delta >= 0
    assert report.f_sup_mu > 0 and report.f_sup_nu > 0
    if report.K_hat > 0:
        assert report.delta == pytest.approx(
            6.0
            * max(
                psi_bar(report.f_sup_mu, 0.1, 4.0, report.K_hat, report.w2_sigma_mu, report.id_norm_mu),
                psi_bar(report.f_sup_nu, 0.1, 4.0, report.K_hat, report.w2_sigma_mu, report.id_norm_mu),
            )
        )
