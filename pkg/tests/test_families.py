"""Transformation families: sampling bounds, perturbation tubes, datasets."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from linot.families import (
    AffineMap,
    FamilySpec,
    InfeasibleRadius,
    make_two_class_dataset,
    perturb,
    sample_affine,
)
from linot.measures import l2_distance, l2_norm, make_measure, uniform_measure


def circle_template(n=16):
    theta = np.linspace(0, 2 * np.pi, n, endpoint=False)
    return uniform_measure(np.column_stack([np.cos(theta), np.sin(theta)]))


def test_affine_map_kinds():
    assert AffineMap.shift([1.0, 0.0]).kind == "shift"
    assert AffineMap.scale(2.0).kind == "scale"
    blended = AffineMap.shift([1.0]).combine(AffineMap.scale(2.0), 0.5)
    assert blended.kind == "affine"
    assert blended.linear == pytest.approx(1.5)
    with pytest.raises(ValueError):
        AffineMap.scale(0.0)
    with pytest.raises(ValueError):
        AffineMap.shift([0.0]).combine(AffineMap.scale(1.0), 1.5)


def test_sample_affine_huge_radius():
    spec = FamilySpec(template=circle_template(), R=1e6, eps=0.0, count=20, seed=0)
    maps = sample_affine(spec)
    assert len(maps) == 20
    assert all(l2_norm(spec.template, h) <= spec.R for h in maps)


def test_scaling_norm_on_unit_circle():
    mu = circle_template()
    assert l2_norm(mu, AffineMap.scale(2.0, dim=2)) == pytest.approx(2.0, abs=1e-12)


def test_sample_affine_deterministic():
    spec = FamilySpec(template=circle_template(), R=10.0, eps=0.0, count=50, seed=123)
    a = sample_affine(spec)
    b = sample_affine(spec)
    assert all(
        x.linear == y.linear and np.array_equal(x.offset, y.offset)
        for x, y in zip(a, b)
    )


def test_sample_affine_infeasible_radius():
    spec = FamilySpec(
        template=circle_template(),  # ||Id|| = 1
        R=0.1,
        eps=0.0,
        count=5,
        seed=0,
        shift_prob=0.5,
        scale_range=(0.5, 2.0),  # c * 1 > 0.1 for every c in range
    )
    with pytest.raises(InfeasibleRadius):
        sample_affine(spec)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_shift_norm_expansion(seed):
    # ||S_a||^2 = ||a||^2 + 2 a . mean + ||Id||^2
    rng = np.random.default_rng(seed)
    mu = make_measure(rng.normal(size=(6, 2)), rng.random(6) + 0.1)
    a = rng.normal(size=2)
    lhs = l2_norm(mu, AffineMap.shift(a)) ** 2
    rhs = a @ a + 2 * a @ mu.mean() + mu.second_moment()
    assert lhs == pytest.approx(rhs, abs=1e-10)


def test_perturb_zero_eps_is_base():
    mu = circle_template()
    h = AffineMap.shift([1.0, 1.0])
    g = perturb(h, mu, eps=0.0, seed=5)
    assert np.array_equal(g.apply(mu.points), h.apply(mu.points))


def test_perturb_norm_is_exact():
    mu = circle_template()
    h = AffineMap.scale(1.5, dim=2)
    for eps in (0.2, 0.1, 0.05):
        g = perturb(h, mu, eps=eps, seed=7)
        assert l2_norm(mu, g.perturbation) == pytest.approx(eps, abs=1e-10)
        # applying g differs from applying h by exactly eps in L2(mu)
        from linot.measures import MapSamples

        gm = MapSamples(source=mu, values=g.apply(mu.points))
        hm = MapSamples(source=mu, values=h.apply(mu.points))
        assert l2_distance(mu, gm, hm) == pytest.approx(eps, abs=1e-10)


def test_perturb_reproducible():
    mu = circle_template()
    h = AffineMap.shift([0.0, 0.0])
    g1 = perturb(h, mu, eps=0.3, seed=11)
    g2 = perturb(h, mu, eps=0.3, seed=11)
    assert np.array_equal(g1.perturbation.values, g2.perturbation.values)


def test_two_class_dataset_disjoint_templates():
    p = FamilySpec(
        template=circle_template(), R=3.0, eps=0.0, count=6, seed=1, shift_sigma=0.3
    )
    far = uniform_measure(circle_template().points + np.array([30.0, 0.0]))
    q = FamilySpec(template=far, R=35.0, eps=0.0, count=6, seed=2, shift_sigma=0.3)
    ds = make_two_class_dataset(p, q, cross_subsample=4)
    assert len(ds.measures) == 12
    assert set(ds.labels.tolist()) == {-1, 1}
    assert ds.min_cross_w2 > 10.0


def test_two_class_dataset_same_orbit_flags_zero():
    mu = circle_template()
    spec = FamilySpec(template=mu, R=5.0, eps=0.0, count=4, seed=9)
    ds = make_two_class_dataset(spec, spec, cross_subsample=4)
    assert ds.min_cross_w2 == pytest.approx(0.0, abs=1e-6)


def test_two_class_dataset_dim_mismatch():
    p = FamilySpec(template=uniform_measure([[0.0], [1.0]]), R=5.0, eps=0.0, count=2, seed=0)
    q = FamilySpec(template=circle_template(), R=5.0, eps=0.0, count=2, seed=0)
    with pytest.raises(ValueError):
        make_two_class_dataset(p, q)
