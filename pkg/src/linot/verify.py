"""Self-check suites: measured slacks for every bound the library promises.

Each suite runs a randomized batch of instances, measures the relevant
slack, and reports pass/fail against the library's tolerances.  The CLI
``verify`` subcommand serializes the results; the acceptance tests run the
same code at full size.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .bounds import estimate_strong_convexity, holder_gap_curve, sandwich_check
from .embedding import SolverConfig, compatibility_defect, embed, lot_distance
from .families import AffineMap
from .measures import DiscreteMeasure, l2_distance, pushforward, uniform_measure
from .solvers import (
    MapProvenance,
    TransportMap,
    barycentric_map,
    brute_force_oracle,
    cyclic_monotonicity_violations,
    solve_exact,
)


def random_cloud(rng, n: int, dim: int, spread: float = 1.0, offset=0.0) -> DiscreteMeasure:
    return uniform_measure(rng.normal(scale=spread, size=(n, dim)) + offset)


def jittered_grid_measure(rng, grid: int = 7, span: float = 0.35, jitter_frac: float = 0.25) -> DiscreteMeasure:
    """Uniform measure on a perturbed regular grid: a discrete stand-in for
    a smooth positive density on a square, with controlled minimum spacing."""
    axes = np.linspace(-span, span, grid)
    pts = np.column_stack([m.ravel() for m in np.meshgrid(axes, axes)])
    jitter = jitter_frac * 2 * span / (grid - 1)
    return uniform_measure(pts + rng.uniform(-jitter, jitter, size=pts.shape))


def random_affine(rng, dim: int, shift_scale: float = 2.0) -> AffineMap:
    if rng.random() < 0.5:
        return AffineMap.shift(rng.normal(scale=shift_scale, size=dim))
    return AffineMap.scale(float(rng.uniform(0.2, 4.0)), dim=dim)


@dataclass
class SuiteResult:
    name: str
    passed: bool
    details: dict

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "details": self.details}


def oracle_suite(instances: int = 60, seed: int = 0, tol: float = 1e-9) -> SuiteResult:
    """Exact LP cost against exhaustive permutation search."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(instances):
        n = int(rng.integers(1, 7))
        d = int(rng.integers(1, 4))
        a = random_cloud(rng, n, d)
        b = random_cloud(rng, n, d, offset=rng.normal(scale=2.0))
        worst = max(worst, abs(solve_exact(a, b).cost - brute_force_oracle(a, b).cost))
    return SuiteResult(
        "oracle_equivalence", worst < tol, {"instances": instances, "worst_gap": worst}
    )


def isometry_1d_suite(triples: int = 40, seed: int = 1, tol: float = 1e-8) -> SuiteResult:
    """On the line the embedding distance equals W2 exactly."""
    rng = np.random.default_rng(seed)
    config = SolverConfig(method="exact")
    worst = 0.0
    for _ in range(triples):
        n = int(rng.integers(3, 24))
        sigma = random_cloud(rng, n, 1, spread=rng.uniform(0.5, 2.0))
        mu = random_cloud(rng, n, 1, offset=rng.normal(scale=3.0))
        nu = random_cloud(rng, n, 1, offset=rng.normal(scale=3.0))
        d = lot_distance(embed(sigma, mu, config), embed(sigma, nu, config))
        w2 = np.sqrt(solve_exact(mu, nu).cost)
        worst = max(worst, abs(d - w2))
    return SuiteResult(
        "isometry_1d", worst < tol, {"triples": triples, "worst_gap": worst}
    )


def shift_scale_isometry_suite(
    cases: int = 40, seed: int = 2, tol_iso: float = 1e-8, tol_compat: float = 1e-9
) -> SuiteResult:
    """Embedding restricted to shift/scaling orbits preserves distances."""
    rng = np.random.default_rng(seed)
    config = SolverConfig(method="exact")
    worst_iso = 0.0
    worst_compat = 0.0
    for _ in range(cases):
        n = int(rng.integers(4, 20))
        d = int(rng.integers(1, 4))
        sigma = random_cloud(rng, n, d)
        mu = random_cloud(rng, n, d, offset=rng.normal(scale=1.5))
        h1 = random_affine(rng, d)
        h2 = random_affine(rng, d)
        e1 = embed(sigma, pushforward(mu, h1), config)
        e2 = embed(sigma, pushforward(mu, h2), config)
        dist = lot_distance(e1, e2)
        direct = l2_distance(mu, h1, h2)
        worst_iso = max(worst_iso, abs(dist - direct))
        worst_compat = max(worst_compat, compatibility_defect(sigma, mu, h1, config))
    passed = worst_iso < tol_iso and worst_compat < tol_compat
    return SuiteResult(
        "shift_scale_isometry",
        passed,
        {"cases": cases, "worst_isometry_gap": worst_iso, "worst_defect": worst_compat},
    )


def sandwich_suite(
    pairs: int = 30, seed: int = 3, lower_tol: float = 1e-9, upper_rel_tol: float = 0.05
) -> SuiteResult:
    """Embedding distance sandwiched between W2 and W2 plus chaining defect."""
    rng = np.random.default_rng(seed)
    worst_lower = np.inf
    worst_upper_rel = np.inf
    for _ in range(pairs):
        n = int(rng.integers(4, 16))
        sigma = random_cloud(rng, n, 2)
        mu = random_cloud(rng, n, 2, offset=rng.normal(scale=1.0, size=2))
        nu = random_cloud(rng, n, 2, offset=rng.normal(scale=1.0, size=2))
        lower, upper = sandwich_check(sigma, mu, nu)
        w2 = np.sqrt(solve_exact(mu, nu).cost)
        worst_lower = min(worst_lower, lower)
        worst_upper_rel = min(worst_upper_rel, upper / max(w2, 1e-12))
    passed = worst_lower >= -lower_tol and worst_upper_rel >= -upper_rel_tol
    return SuiteResult(
        "sandwich_bounds",
        passed,
        {
            "pairs": pairs,
            "min_lower_slack": worst_lower,
            "min_upper_slack_rel": worst_upper_rel,
        },
    )


def gap_suite(
    seed: int = 4,
    trials: int = 12,
    eps_values=(0.0, 0.05, 0.1, 0.2),
) -> SuiteResult:
    """Gap curve: zero at eps 0, mean increasing along the sweep."""
    rng = np.random.default_rng(seed)
    mu = jittered_grid_measure(rng)
    sigma = jittered_grid_measure(rng)
    curve = holder_gap_curve(
        sigma,
        mu,
        (AffineMap.shift([1.0, 0.0]), AffineMap.scale(0.7, dim=2)),
        eps_values,
        trials=trials,
        seed=seed + 1,
        smoothness=0.35,
    )
    zero_ok = curve.gap_mean[0] < 1e-8
    lower_ok = bool((curve.gap_mean >= -1e-9).all())
    monotone_ok = bool(np.all(np.diff(curve.gap_mean) > 0))
    return SuiteResult(
        "perturbation_gap",
        zero_ok and monotone_ok and lower_ok,
        {
            "eps": list(map(float, curve.eps_values)),
            "gap_mean": list(map(float, curve.gap_mean)),
            "gap_max": list(map(float, curve.gap_max)),
            "fitted_exponent": curve.fitted_exponent(),
        },
    )


def convexity_scaling_suite(seed: int = 5, tol: float = 1e-10) -> SuiteResult:
    """Scaling a map scales the convexity estimate; shifting leaves it alone."""
    rng = np.random.default_rng(seed)
    sigma = random_cloud(rng, 24, 2)
    mu = random_cloud(rng, 24, 2, offset=1.0)
    base = barycentric_map(solve_exact(sigma, mu))
    k0 = estimate_strong_convexity(base)
    worst = 0.0
    for c in (0.5, 2.0, 4.0):
        scaled = TransportMap(
            source=base.source, values=c * base.values, provenance=MapProvenance.EXACT
        )
        worst = max(worst, abs(estimate_strong_convexity(scaled) - c * k0))
    shift = rng.normal(size=2)
    shifted = TransportMap(
        source=base.source, values=base.values + shift, provenance=MapProvenance.EXACT
    )
    worst_shift = abs(estimate_strong_convexity(shifted) - k0)
    passed = worst < tol and worst_shift < tol
    return SuiteResult(
        "convexity_scaling",
        passed,
        {"k0": k0, "worst_scale_gap": worst, "worst_shift_gap": worst_shift},
    )


def monotonicity_suite(cases: int = 25, seed: int = 6) -> SuiteResult:
    """Optimal plans pass the pairwise swap test with zero violations."""
    rng = np.random.default_rng(seed)
    worst_count = 0
    for _ in range(cases):
        n = int(rng.integers(3, 20))
        d = int(rng.integers(1, 4))
        a = random_cloud(rng, n, d)
        b = random_cloud(rng, n, d, offset=rng.normal(scale=1.5))
        count, _ = cyclic_monotonicity_violations(solve_exact(a, b))
        worst_count = max(worst_count, count)
    return SuiteResult(
        "cyclic_monotonicity", worst_count == 0, {"cases": cases, "worst_count": worst_count}
    )


ALL_SUITES = (
    oracle_suite,
    isometry_1d_suite,
    shift_scale_isometry_suite,
    sandwich_suite,
    gap_suite,
    convexity_scaling_suite,
    monotonicity_suite,
)


def run_all(seed: int = 0) -> list:
    results = []
    for k, suite in enumerate(ALL_SUITES):
        results.append(suite(seed=seed + k))
    return results


def write_report(results: list, path) -> bool:
    doc = {
        "passed": all(r.passed for r in results),
        "suites": [r.to_dict() for r in results],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=float)
    return doc["passed"]
