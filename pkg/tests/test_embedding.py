"""Embedding geometry: identities on orbit families, distance bounds."""
import numpy as np
import pytest

from linot.embedding import (
    CompositionUndefined,
    MatrixKind,
    SolverConfig,
    compatibility_defect,
    compose,
    composition_gap,
    distance_matrix,
    embed,
    exact_distance_matrix,
    lot_distance,
    midpoint_convexity_defect,
)
from linot.families import AffineMap
from linot.measures import MapSamples, SupportMismatch, l2_distance, pushforward, uniform_measure
from linot.solvers import solve_exact

EXACT = SolverConfig(method="exact")


def cloud(seed, n, d, offset=0.0, spread=1.0):
    rng = np.random.default_rng(seed)
    return uniform_measure(rng.normal(scale=spread, size=(n, d)) + offset)


def test_embed_reference_is_identity():
    sigma = cloud(0, 7, 2)
    e = embed(sigma, sigma, EXACT)
    assert np.allclose(e.values, sigma.points, atol=1e-12)


def test_embed_shift_orbit():
    sigma = cloud(1, 6, 2)
    a = np.array([1.5, -2.0])
    nu = pushforward(sigma, AffineMap.shift(a))
    e = embed(sigma, nu, EXACT)
    assert np.allclose(e.values, sigma.points + a, atol=1e-9)


def test_embed_scale_orbit():
    sigma = cloud(2, 6, 2)
    nu = pushforward(sigma, AffineMap.scale(2.5, dim=2))
    e = embed(sigma, nu, EXACT)
    assert np.allclose(e.values, 2.5 * sigma.points, atol=1e-9)


def test_embed_rejects_zero_weight_reference():
    from linot.measures import make_measure

    sigma = make_measure([[0.0], [1.0]], [1.0, 0.0])
    with pytest.raises(ValueError):
        embed(sigma, sigma, EXACT)


def test_embedding_surrogate_reproduces_target():
    sigma = cloud(3, 8, 2)
    nu = cloud(4, 8, 2, offset=1.0)
    e = embed(sigma, nu, EXACT)
    surrogate = e.surrogate_measure()
    key = lambda m: sorted(
        (tuple(p), round(w, 10)) for p, w in zip(np.round(m.points, 9).tolist(), m.weights)
    )
    assert key(surrogate) == key(nu)


def test_lot_distance_zero_and_shift():
    sigma = cloud(5, 9, 2)
    e = embed(sigma, sigma, EXACT)
    assert lot_distance(e, e) == 0.0
    a1, a2 = np.array([0.5, 0.0]), np.array([2.0, -1.0])
    e1 = embed(sigma, pushforward(sigma, AffineMap.shift(a1)), EXACT)
    e2 = embed(sigma, pushforward(sigma, AffineMap.shift(a2)), EXACT)
    assert lot_distance(e1, e2) == pytest.approx(np.linalg.norm(a1 - a2), abs=1e-9)


def test_lot_distance_reference_mismatch():
    s1, s2 = cloud(6, 5, 1), cloud(7, 5, 1)
    e1 = embed(s1, s1, EXACT)
    e2 = embed(s2, s2, EXACT)
    with pytest.raises(SupportMismatch):
        lot_distance(e1, e2)


def test_lot_lower_bounds_w2():
    sigma = cloud(8, 10, 2)
    for seed in range(5):
        mu = cloud(100 + seed, 10, 2, offset=0.5)
        nu = cloud(200 + seed, 10, 2, offset=-0.5)
        d = lot_distance(embed(sigma, mu, EXACT), embed(sigma, nu, EXACT))
        w2 = np.sqrt(solve_exact(mu, nu).cost)
        assert d >= w2 - 1e-9


def test_lot_detour_upper_bound():
    sigma = cloud(9, 8, 2)
    mu = cloud(10, 8, 2, offset=1.0)
    nu = cloud(11, 8, 2, offset=-1.0)
    d = lot_distance(embed(sigma, mu, EXACT), embed(sigma, nu, EXACT))
    detour = np.sqrt(solve_exact(mu, sigma).cost) + np.sqrt(solve_exact(sigma, nu).cost)
    assert d <= detour + 1e-9


def test_injectivity_proxy():
    sigma = cloud(12, 6, 2)
    mu = cloud(13, 6, 2, offset=0.3)
    e1 = embed(sigma, mu, EXACT)
    e2 = embed(sigma, mu, EXACT)
    assert lot_distance(e1, e2) == 0.0
    key = lambda m: sorted(
        (tuple(p), round(w, 10)) for p, w in zip(np.round(m.points, 9).tolist(), m.weights)
    )
    assert key(e1.surrogate_measure()) == key(e2.surrogate_measure())


def test_pushforward_lipschitz():
    rng = np.random.default_rng(14)
    mu = uniform_measure(rng.normal(size=(7, 2)))
    for _ in range(5):
        g = MapSamples(source=mu, values=rng.normal(size=(7, 2)))
        h = MapSamples(source=mu, values=rng.normal(size=(7, 2)))
        w2 = np.sqrt(solve_exact(pushforward(mu, g), pushforward(mu, h)).cost)
        assert w2 <= l2_distance(mu, g, h) + 1e-9


def test_lot_metric_axioms():
    sigma = cloud(15, 8, 2)
    ms = [cloud(300 + k, 8, 2, offset=k * 0.3) for k in range(3)]
    es = [embed(sigma, m, EXACT) for m in ms]
    d01 = lot_distance(es[0], es[1])
    d10 = lot_distance(es[1], es[0])
    d02 = lot_distance(es[0], es[2])
    d12 = lot_distance(es[1], es[2])
    assert d01 == d10
    assert d02 <= d01 + d12 + 1e-10


def test_distance_matrix_single():
    sigma = cloud(16, 5, 1)
    m = distance_matrix([embed(sigma, sigma, EXACT)])
    assert m.entries.shape == (1, 1) and m.entries[0, 0] == 0.0


def test_distance_matrix_shift_family():
    sigma = cloud(17, 6, 1)
    shifts = [0.0, 1.0, 3.0]
    es = [
        embed(sigma, pushforward(sigma, AffineMap.shift([s])), EXACT, source_id=f"S{s}")
        for s in shifts
    ]
    m = distance_matrix(es)
    expected = np.array([[0.0, 1.0, 3.0], [1.0, 0.0, 2.0], [3.0, 2.0, 0.0]])
    assert np.allclose(m.entries, expected, atol=1e-9)
    assert m.kind == MatrixKind.LOT


def test_distance_matrix_dominates_exact():
    sigma = cloud(18, 8, 2)
    measures = [cloud(400 + k, 8, 2, offset=0.4 * k) for k in range(6)]
    lot = distance_matrix([embed(sigma, m, EXACT) for m in measures])
    exact = exact_distance_matrix(measures)
    assert np.all(lot.entries >= exact.entries - 1e-9)
    assert exact.kind == MatrixKind.EXACT_W2


def test_compose_identities_and_group_law():
    sigma = cloud(19, 6, 2)
    mu = cloud(20, 6, 2, offset=0.5)
    e = embed(sigma, mu, EXACT)
    assert np.array_equal(compose(e, AffineMap.shift([0.0, 0.0])).values, e.values)
    assert np.array_equal(compose(e, AffineMap.scale(1.0, dim=2)).values, e.values)
    a, b = np.array([1.0, 2.0]), np.array([-0.5, 3.0])
    twice = compose(compose(e, AffineMap.shift(a)), AffineMap.shift(b))
    once = compose(e, AffineMap.shift(a + b))
    assert np.allclose(twice.values, once.values, atol=1e-12)


def test_compatibility_defect_shift_scale():
    sigma = cloud(21, 6, 2)
    mu = cloud(22, 6, 2, offset=0.8)
    assert compatibility_defect(sigma, mu, AffineMap.shift([1.0, -1.0]), EXACT) < 1e-9
    assert compatibility_defect(sigma, mu, AffineMap.scale(3.0, dim=2), EXACT) < 1e-9


def test_compatibility_defect_1d_monotone():
    sigma = cloud(23, 8, 1)
    mu = cloud(24, 8, 1, offset=0.2)
    monotone = MapSamples(source=mu, values=mu.points**3 + 2.0 * mu.points)
    assert compatibility_defect(sigma, mu, monotone, EXACT) < 1e-9


def test_compatibility_defect_rotation_positive():
    rng = np.random.default_rng(25)
    sigma = uniform_measure(rng.normal(size=(10, 2)))
    mu = uniform_measure(rng.normal(size=(10, 2)) * np.array([2.5, 0.4]) + 1.0)
    rot = np.array([[0.0, -1.0], [1.0, 0.0]])
    rotated = MapSamples(source=mu, values=mu.points @ rot.T)
    assert compatibility_defect(sigma, mu, rotated, EXACT) > 1e-3


def test_composition_gap_trivial_and_1d():
    sigma = cloud(26, 7, 2)
    mu = cloud(27, 7, 2, offset=0.5)
    assert composition_gap(mu, mu, sigma) < 1e-12
    s1 = cloud(28, 9, 1)
    m1 = cloud(29, 9, 1, offset=1.0)
    n1 = cloud(30, 9, 1, offset=-1.0)
    assert composition_gap(m1, n1, s1) < 1e-9


def test_composition_gap_bounds_lot_excess():
    rng = np.random.default_rng(31)
    sigma = uniform_measure(rng.normal(size=(9, 2)))
    mu = uniform_measure(rng.normal(size=(9, 2)) @ np.array([[1.8, 0.0], [0.0, 0.5]]))
    theta = 0.9
    rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    nu = uniform_measure(mu.points @ rot.T + 0.3)
    gap = composition_gap(mu, nu, sigma)
    assert gap > 0
    d = lot_distance(embed(sigma, mu, EXACT), embed(sigma, nu, EXACT))
    w2 = np.sqrt(solve_exact(mu, nu).cost)
    assert d - w2 <= gap + 1e-9


def test_composition_gap_rejects_non_permutation():
    from linot.measures import make_measure

    mu = make_measure([[0.0], [1.0]], [0.3, 0.7])
    nu = uniform_measure([[2.0], [3.0]])
    sigma = uniform_measure([[0.0], [0.5]])
    with pytest.raises(CompositionUndefined):
        composition_gap(mu, nu, sigma)


def test_midpoint_convexity_defects():
    sigma = cloud(32, 6, 1)
    mu = cloud(33, 6, 1, offset=0.4)
    h = AffineMap.shift([2.0])
    assert midpoint_convexity_defect(sigma, mu, h, h, 0.3, EXACT) < 1e-12
    s2, s4 = AffineMap.shift([2.0]), AffineMap.shift([4.0])
    assert midpoint_convexity_defect(sigma, mu, s2, s4, 0.5, EXACT) < 1e-9
    mixed = midpoint_convexity_defect(
        sigma, mu, AffineMap.shift([1.0]), AffineMap.scale(2.0), 0.5, EXACT
    )
    assert mixed < 1e-9


def test_midpoint_convexity_matches_brute_force_small():
    from linot.solvers import brute_force_oracle, barycentric_map

    rng = np.random.default_rng(34)
    sigma = uniform_measure(rng.normal(size=(5, 2)))
    mu = uniform_measure(rng.normal(size=(5, 2)) + 0.5)
    h1, h2, c = AffineMap.shift([1.0, 0.0]), AffineMap.scale(2.0, dim=2), 0.5
    h = h1.combine(h2, c)
    e1 = barycentric_map(brute_force_oracle(sigma, pushforward(mu, h1)))
    e2 = barycentric_map(brute_force_oracle(sigma, pushforward(mu, h2)))
    em = barycentric_map(brute_force_oracle(sigma, pushforward(mu, h)))
    mix = (1 - c) * e1.values + c * e2.values
    defect = np.sqrt(sigma.weights @ np.einsum("ij,ij->i", mix - em.values, mix - em.values))
    assert defect < 1e-9
    assert midpoint_convexity_defect(sigma, mu, h1, h2, c, EXACT) == pytest.approx(
        defect, abs=1e-9
    )


def test_embedding_csv_and_json(tmp_path):
    from linot.embedding import save_embedding
    import json

    sigma = cloud(35, 4, 2)
    e = embed(sigma, sigma, EXACT, source_id="self")
    path = tmp_path / "e.json"
    save_embedding(e, path, reference_id="ref0")
    doc = json.loads(path.read_text())
    assert doc["reference_id"] == "ref0"
    assert len(doc["values"]) == sigma.size

    m = distance_matrix([e])
    csv_path = tmp_path / "d.csv"
    m.export_csv(csv_path)
    assert csv_path.read_text().startswith(",self")
