"""Quantitative bounds: convexity estimates, perturbation margins, gap curves.

These routines turn the embedding's approximation guarantees into numbers
that can be measured on concrete instances: a strong-convexity estimate of
the transport potential, the two explicit perturbation margins (one needing
only a density bound, one using the convexity estimate), the 6x separation
threshold they induce, and empirically measured embedding-vs-W2 gap curves.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, asdict

import numpy as np

from . import _kernels
from .embedding import SolverConfig, composition_gap, embed, lot_distance
from .families import perturb
from .measures import DiscreteMeasure, l2_norm, pushforward
from .solvers import TransportMap, solve_exact


class DegenerateConvexity(ValueError):
    """The convexity estimate vanished, making the bound vacuous."""


def estimate_strong_convexity(tmap: TransportMap) -> float:
    """Smallest pairwise alignment quotient of a transport map, clipped at 0.

    For a map that is the gradient of a k-strongly-convex potential the
    quotient (T(x)-T(y))·(x-y)/||x-y||^2 is at least k for every pair, so
    the pairwise minimum is a discrete estimate of the convexity modulus.
    Identity gives 1, a scaling by c gives c, and shifting the targets
    changes nothing.
    """
    if tmap.source.size < 2:
        raise ValueError("need at least two support points")
    q = _kernels.min_alignment_quotient(
        np.ascontiguousarray(tmap.source.points), np.ascontiguousarray(tmap.values)
    )
    return max(float(q), 0.0)


def psi_merigot(f_sup: float, eps: float, C: float) -> float:
    """Perturbation margin under no regularity assumptions.

    C * f_sup^(1/15) * eps^(2/15) + f_sup^(1/2) * eps, where f_sup bounds
    the density and C is the (empirically calibrated) Hoelder constant.
    """
    if min(f_sup, eps) < 0 or C <= 0:
        raise ValueError("f_sup, eps must be nonnegative and C positive")
    return C * f_sup ** (1 / 15) * eps ** (2 / 15) + np.sqrt(f_sup) * eps


def psi_bar(
    f_sup: float,
    eps: float,
    R: float,
    K_hat: float,
    w2_sigma_mu: float,
    id_norm_mu: float,
) -> float:
    """Perturbation margin under regularity, via the convexity estimate.

    (sqrt(4R/K) + 2) * f_sup^(1/2) * eps
    + (4R * f_sup^(1/2) * (W2(sigma, mu) + R + ||Id||) / K)^(1/2) * eps^(1/2).
    """
    if K_hat <= 0:
        raise DegenerateConvexity("convexity estimate is zero; bound is vacuous")
    if R <= 0:
        raise ValueError("R must be positive")
    lin = (np.sqrt(4 * R / K_hat) + 2) * np.sqrt(f_sup) * eps
    root = np.sqrt(4 * R * np.sqrt(f_sup) * (w2_sigma_mu + R + id_norm_mu) / K_hat)
    return float(lin + root * np.sqrt(eps))


def delta_threshold(psi_mu: float, psi_nu: float) -> float:
    """Separation needed between two perturbed families: six times the margin."""
    if min(psi_mu, psi_nu) < 0:
        raise ValueError("margins must be nonnegative")
    return 6.0 * max(psi_mu, psi_nu)


@dataclass(frozen=True)
class BoundsReport:
    """Inputs and outputs of the separation-threshold computation.

    ``K_hat`` is a discrete estimate (pairwise quotient minimum), not the
    true convexity modulus; ``C_merigot`` is user-supplied.
    """

    eps: float
    R: float
    f_sup_mu: float
    f_sup_nu: float
    K_hat: float
    C_merigot: float
    w2_sigma_mu: float
    id_norm_mu: float
    psi: float
    psi_bar: float
    delta: float

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True)


def bounds_report(
    sigma: DiscreteMeasure,
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    R: float,
    eps: float,
    C_merigot: float = 1.0,
    cell_width: float = 1.0,
) -> BoundsReport:
    """Assemble the margin report for a pair of class templates.

    The density sups come from the histogram estimator at ``cell_width``;
    the convexity estimate and W2 use the transport from the reference to
    the first template.  ``delta`` uses the regularity margin when the
    convexity estimate is positive and falls back to the plain margin
    otherwise.
    """
    from .measures import density_sup_estimate
    from .solvers import barycentric_map

    f_mu = density_sup_estimate(mu, cell_width)
    f_nu = density_sup_estimate(nu, cell_width)
    plan = solve_exact(sigma, mu)
    k_hat = estimate_strong_convexity(barycentric_map(plan))
    w2 = float(np.sqrt(plan.cost))
    id_norm = float(np.sqrt(mu.second_moment()))
    psi_mu = psi_merigot(f_mu, eps, C_merigot)
    psi_nu = psi_merigot(f_nu, eps, C_merigot)
    psi = max(psi_mu, psi_nu)
    if k_hat > 0:
        pb_mu = psi_bar(f_mu, eps, R, k_hat, w2, id_norm)
        pb_nu = psi_bar(f_nu, eps, R, k_hat, w2, id_norm)
        pb = max(pb_mu, pb_nu)
        delta = delta_threshold(pb_mu, pb_nu)
    else:
        pb = float("inf")
        delta = delta_threshold(psi_mu, psi_nu)
    return BoundsReport(
        eps=eps,
        R=R,
        f_sup_mu=f_mu,
        f_sup_nu=f_nu,
        K_hat=k_hat,
        C_merigot=C_merigot,
        w2_sigma_mu=w2,
        id_norm_mu=id_norm,
        psi=float(psi),
        psi_bar=float(pb),
        delta=float(delta),
    )


@dataclass(frozen=True)
class GapCurve:
    """Measured embedding-distance-minus-W2 gaps across perturbation sizes."""

    eps_values: np.ndarray
    gap_mean: np.ndarray
    gap_max: np.ndarray
    bound_values: np.ndarray

    def export_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["eps", "gap_mean", "gap_max", "bound"])
            for row in zip(self.eps_values, self.gap_mean, self.gap_max, self.bound_values):
                writer.writerow([repr(float(v)) for v in row])

    def to_json(self, path) -> None:
        doc = {
            "eps_values": self.eps_values.tolist(),
            "gap_mean": self.gap_mean.tolist(),
            "gap_max": self.gap_max.tolist(),
            "bound_values": self.bound_values.tolist(),
        }
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)

    def fitted_exponent(self) -> float:
        """Log-log slope of max gap against eps, over the positive entries."""
        mask = (self.eps_values > 0) & (self.gap_max > 1e-12)
        if mask.sum() < 2:
            return float("nan")
        slope, _ = np.polyfit(
            np.log(self.eps_values[mask]), np.log(self.gap_max[mask]), 1
        )
        return float(slope)


def holder_gap_curve(
    sigma: DiscreteMeasure,
    mu: DiscreteMeasure,
    family_base: tuple,
    eps_values,
    trials: int,
    seed: int,
    smoothness: float = 1.0,
    config: SolverConfig | None = None,
) -> GapCurve:
    """Measure the embedding-vs-W2 gap along a perturbation sweep.

    Each trial fixes a pair of displacement fields around the two base
    maps; the sweep rescales the same fields to every eps, so eps is a
    controlled variable and the curves are comparable across the sweep.
    ``bound_values`` carries the theoretical envelope computed from the
    estimated convexity modulus.
    """
    config = config or SolverConfig(method="exact")
    h1, h2 = family_base
    eps_values = np.asarray(list(eps_values), dtype=float)
    if np.any(np.diff(eps_values) < 0):
        raise ValueError("eps_values must be sorted ascending")
    seeds = np.random.SeedSequence(seed).generate_state(2 * trials)
    gap_mean = np.zeros(len(eps_values))
    gap_max = np.zeros(len(eps_values))
    for k, eps in enumerate(eps_values):
        gaps = np.zeros(trials)
        for t in range(trials):
            g1 = perturb(h1, mu, eps, smoothness, seed=int(seeds[2 * t]))
            g2 = perturb(h2, mu, eps, smoothness, seed=int(seeds[2 * t + 1]))
            m1 = pushforward(mu, g1)
            m2 = pushforward(mu, g2)
            w2 = float(np.sqrt(config.solve(m1, m2).cost))
            d = lot_distance(embed(sigma, m1, config), embed(sigma, m2, config))
            gaps[t] = d - w2
        gap_mean[k] = gaps.mean()
        gap_max[k] = gaps.max()

    # theoretical envelope from the estimated constants (reported, not asserted)
    from .solvers import barycentric_map

    plan = solve_exact(sigma, mu)
    k_hat = estimate_strong_convexity(barycentric_map(plan))
    radius = max(l2_norm(mu, h1), l2_norm(mu, h2))
    if k_hat > 0:
        w2sm = float(np.sqrt(plan.cost))
        id_norm = float(np.sqrt(mu.second_moment()))
        c_lin = np.sqrt(4 * radius / k_hat) + 1
        c_root = np.sqrt(4 * radius * (w2sm + radius + id_norm) / k_hat)
        bounds = 2 * (c_lin + 1) * eps_values + 2 * c_root * np.sqrt(eps_values)
    else:
        bounds = np.full_like(eps_values, np.inf)
    return GapCurve(
        eps_values=eps_values,
        gap_mean=gap_mean,
        gap_max=gap_max,
        bound_values=bounds,
    )


def sandwich_check(
    sigma: DiscreteMeasure, mu: DiscreteMeasure, nu: DiscreteMeasure
) -> tuple:
    """Slacks of the two-sided W2 bound on the embedding distance.

    Returns ``(lower_slack, upper_slack)`` where the lower slack is the
    embedding distance minus W2 (nonnegative up to solver precision) and
    the upper slack is W2 plus the composition defect minus the embedding
    distance (nonnegative up to the nearest-neighbor composition error).
    """
    config = SolverConfig(method="exact")
    e_mu = embed(sigma, mu, config)
    e_nu = embed(sigma, nu, config)
    d = lot_distance(e_mu, e_nu)
    w2 = float(np.sqrt(solve_exact(mu, nu).cost))
    gap = composition_gap(mu, nu, sigma)
    return d - w2, w2 + gap - d
