"""Embedding of measures into the weighted-L2 space of a fixed reference.

A measure ``nu`` is represented by the transport map that carries the
reference ``sigma`` onto it, evaluated on sigma's support.  Distances
between embedded measures are then plain weighted Euclidean distances:
N expensive transport solves buy N^2 cheap pairwise distances.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .families import AffineMap
from .measures import (
    DiscreteMeasure,
    MapSamples,
    SupportMismatch,
    pushforward,
)
from .solvers import (
    TransportMap,
    TransportPlan,
    barycentric_map,
    median_cost,
    solve_exact,
    solve_sinkhorn,
)


class CompositionUndefined(ValueError):
    """Transport maps could not be chained (plan was not a permutation)."""


@dataclass(frozen=True)
class SolverConfig:
    """How transport plans are computed when embedding.

    ``method`` is "exact", "sinkhorn", or "auto" (exact up to
    ``exact_cap`` support points, entropic beyond).  A ``reg`` of None
    means 1e-2 times the median squared distance of the instance.
    """

    method: str = "auto"
    reg: Optional[float] = None
    max_iters: int = 5000
    tol: float = 1e-9
    exact_cap: int = 300

    def solve(self, sigma: DiscreteMeasure, nu: DiscreteMeasure) -> TransportPlan:
        method = self.method
        if method == "auto":
            method = (
                "exact" if max(sigma.size, nu.size) <= self.exact_cap else "sinkhorn"
            )
        if method == "exact":
            return solve_exact(sigma, nu)
        if method == "sinkhorn":
            reg = self.reg if self.reg is not None else 1e-2 * median_cost(sigma, nu)
            return solve_sinkhorn(sigma, nu, reg, self.max_iters, self.tol)
        raise ValueError(f"unknown solver method {self.method!r}")

    @staticmethod
    def from_dict(doc: dict) -> "SolverConfig":
        return SolverConfig(
            method=doc.get("method", "auto"),
            reg=doc.get("reg"),
            max_iters=int(doc.get("max_iters", 5000)),
            tol=float(doc.get("tol", 1e-9)),
            exact_cap=int(doc.get("exact_cap", 300)),
        )


@dataclass(frozen=True)
class Embedding:
    """A measure seen through the reference: map values on sigma's support."""

    reference: DiscreteMeasure
    values: np.ndarray
    source_id: str = ""

    def __post_init__(self):
        if len(self.values) != self.reference.size:
            raise SupportMismatch("embedding values must align with the reference")

    def as_samples(self) -> MapSamples:
        return MapSamples(source=self.reference, values=self.values)

    def flat(self) -> np.ndarray:
        """Feature vector of length dim * support size, row-major."""
        return self.values.ravel()

    def surrogate_measure(self) -> DiscreteMeasure:
        """Pushforward of the reference through the embedding map."""
        return pushforward(self.reference, self.as_samples())


class MatrixKind(str, Enum):
    LOT = "LOT"
    EXACT_W2 = "ExactW2"


@dataclass(frozen=True)
class DistanceMatrix:
    labels: list
    entries: np.ndarray
    kind: MatrixKind

    def __post_init__(self):
        e = self.entries
        assert e.shape[0] == e.shape[1] == len(self.labels)
        assert np.abs(e - e.T).max() <= 1e-12
        assert np.abs(np.diag(e)).max() == 0.0

    def export_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([""] + list(self.labels))
            for label, row in zip(self.labels, self.entries):
                writer.writerow([label] + [repr(float(v)) for v in row])


def _same_reference(e1: Embedding, e2: Embedding) -> None:
    if e1.reference is e2.reference:
        return
    if not np.array_equal(e1.reference.points, e2.reference.points) or not np.array_equal(
        e1.reference.weights, e2.reference.weights
    ):
        raise SupportMismatch("embeddings use different references")


def embed(
    sigma: DiscreteMeasure,
    nu: DiscreteMeasure,
    config: SolverConfig | None = None,
    source_id: str = "",
) -> Embedding:
    """Embed ``nu``: barycentric map of the plan from the reference to it.

    Embedding the reference itself returns the identity samples.
    """
    if np.any(sigma.weights <= 0):
        raise ValueError("reference must not carry zero-weight atoms")
    config = config or SolverConfig()
    plan = config.solve(sigma, nu)
    tmap = barycentric_map(plan)
    return Embedding(reference=sigma, values=tmap.values, source_id=source_id)


def lot_distance(e1: Embedding, e2: Embedding) -> float:
    """Weighted L2 distance between two embeddings of the same reference."""
    _same_reference(e1, e2)
    diff = e1.values - e2.values
    return float(np.sqrt(e1.reference.weights @ np.einsum("ij,ij->i", diff, diff)))


def distance_matrix(embeddings: list, kind: MatrixKind = MatrixKind.LOT) -> DistanceMatrix:
    """All pairwise embedding distances; one solve per measure happened upstream."""
    n = len(embeddings)
    entries = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d = lot_distance(embeddings[i], embeddings[j])
            entries[i, j] = entries[j, i] = d
    labels = [e.source_id or str(i) for i, e in enumerate(embeddings)]
    return DistanceMatrix(labels=labels, entries=entries, kind=kind)


def exact_distance_matrix(measures: list, labels: list | None = None) -> DistanceMatrix:
    """Pairwise exact W2 matrix: the expensive quadratic-cost baseline."""
    n = len(measures)
    entries = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d = float(np.sqrt(solve_exact(measures[i], measures[j]).cost))
            entries[i, j] = entries[j, i] = d
    return DistanceMatrix(
        labels=labels or [str(i) for i in range(n)],
        entries=entries,
        kind=MatrixKind.EXACT_W2,
    )


def compose(e: Embedding, h: AffineMap) -> Embedding:
    """Apply an affine map after the embedding map, pointwise."""
    return Embedding(
        reference=e.reference,
        values=h.apply(e.values),
        source_id=f"{h!r}*{e.source_id}" if e.source_id else repr(h),
    )


def compatibility_defect(
    sigma: DiscreteMeasure,
    mu: DiscreteMeasure,
    h,
    config: SolverConfig | None = None,
) -> float:
    """How far embedding-then-mapping is from mapping-then-embedding.

    Exactly zero (up to solver precision) for shifts and scalings, and for
    monotone maps in one dimension; positive for e.g. rotations.
    """
    config = config or SolverConfig()
    e_mu = embed(sigma, mu, config)
    pushed = pushforward(mu, h)
    e_pushed = embed(sigma, pushed, config)
    if isinstance(h, AffineMap):
        composed = compose(e_mu, h)
    else:
        # a sampled map on mu's support: transport mu's samples through it
        e_vals = e_mu.values
        composed_vals = _evaluate_samples_at(h, mu, e_vals)
        composed = Embedding(reference=sigma, values=composed_vals)
    return lot_distance(e_pushed, composed)


def _evaluate_samples_at(h: MapSamples, mu: DiscreteMeasure, query: np.ndarray) -> np.ndarray:
    """Evaluate a sampled map at query points by nearest-support lookup."""
    if not isinstance(h, MapSamples):
        raise TypeError("expected MapSamples")
    d2 = (
        np.einsum("ij,ij->i", query, query)[:, None]
        + np.einsum("ij,ij->i", h.source.points, h.source.points)[None, :]
        - 2.0 * query @ h.source.points.T
    )
    return h.values[np.argmin(d2, axis=1)]


def _exact_permutation_map(src: DiscreteMeasure, dst: DiscreteMeasure) -> TransportMap:
    plan = solve_exact(src, dst)
    if not plan.is_permutation():
        raise CompositionUndefined(
            "exact plan is not a permutation; transport maps cannot be chained"
        )
    return barycentric_map(plan)


def composition_gap(
    mu: DiscreteMeasure, nu: DiscreteMeasure, sigma: DiscreteMeasure
) -> float:
    """Norm of the defect of chaining transports through the reference.

    Computes how far the direct map mu -> nu is from the composite
    (sigma -> nu) after (mu -> sigma), measured in L2 of mu.  The
    composite's outer map is evaluated off its native support by nearest
    support point.  Requires permutation plans, hence uniform equal-size
    supports.
    """
    direct = _exact_permutation_map(mu, nu)
    to_sigma = _exact_permutation_map(mu, sigma)
    from_sigma = _exact_permutation_map(sigma, nu)
    outer_at = _evaluate_samples_at(
        from_sigma.as_samples(), sigma, to_sigma.values
    )
    diff = direct.values - outer_at
    return float(np.sqrt(mu.weights @ np.einsum("ij,ij->i", diff, diff)))


def midpoint_convexity_defect(
    sigma: DiscreteMeasure,
    mu: DiscreteMeasure,
    h1: AffineMap,
    h2: AffineMap,
    c: float,
    config: SolverConfig | None = None,
) -> float:
    """Defect of the embedded affine interpolation.

    Compares the convex combination of the embeddings of h1- and
    h2-pushforwards against the embedding of the pushforward under the
    combined map (1-c) h1 + c h2.
    """
    config = config or SolverConfig()
    h = h1.combine(h2, c)
    e1 = embed(sigma, pushforward(mu, h1), config)
    e2 = embed(sigma, pushforward(mu, h2), config)
    e_mix = embed(sigma, pushforward(mu, h), config)
    mix_values = (1 - c) * e1.values + c * e2.values
    diff = mix_values - e_mix.values
    return float(np.sqrt(sigma.weights @ np.einsum("ij,ij->i", diff, diff)))


def save_embedding(e: Embedding, path, reference_id: str = "") -> None:
    doc = {
        "reference_id": reference_id,
        "source_id": e.source_id,
        "values": e.values.tolist(),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)
