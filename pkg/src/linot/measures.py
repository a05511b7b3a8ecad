"""Discrete probability measures on R^d and weighted-L2 geometry.

A measure is a finite weighted point cloud.  Everything downstream
(transport solvers, embeddings, bounds) works on these objects, so the
invariants are enforced eagerly here: weights are nonnegative, sum to one,
and every point lives in the same dimension.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)

# Tolerance used when two coordinates count as "the same point".
MERGE_DECIMALS = 12


class SupportMismatch(ValueError):
    """A map was sampled on a different support than the measure's."""


class NegativeWeight(ValueError):
    """A weight below zero was supplied."""


class EmptySupport(ValueError):
    """A measure needs at least one atom."""


class DimensionMismatch(ValueError):
    """Points of differing dimension were mixed."""


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2:
        raise DimensionMismatch(f"points must be (N, d), got shape {pts.shape}")
    return pts


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class DiscreteMeasure:
    """Probability measure supported on finitely many points of R^d.

    Attributes
    ----------
    points : (N, d) float array
    weights : (N,) float array, nonnegative, summing to one
    """

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if len(self.points) == 0:
            raise EmptySupport("measure needs a nonempty support")
        if len(self.points) != len(self.weights):
            raise DimensionMismatch("points and weights length mismatch")
        if np.any(self.weights < 0):
            raise NegativeWeight("weights must be nonnegative")
        if abs(float(self.weights.sum()) - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1 (use make_measure to renormalize)")

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def size(self) -> int:
        return self.points.shape[0]

    def is_uniform(self, tol: float = 1e-12) -> bool:
        return bool(np.all(np.abs(self.weights - 1.0 / self.size) <= tol))

    def mean(self) -> np.ndarray:
        return self.weights @ self.points

    def second_moment(self) -> float:
        """Weighted mean of squared norms, i.e. ||Id||^2 in L2 of this measure."""
        return float(self.weights @ np.einsum("ij,ij->i", self.points, self.points))

    def to_json_dict(self) -> dict:
        return {
            "dim": self.dim,
            "points": self.points.tolist(),
            "weights": self.weights.tolist(),
        }

    @staticmethod
    def from_json_dict(doc: dict) -> "DiscreteMeasure":
        mu = make_measure(doc["points"], doc["weights"])
        if mu.dim != int(doc["dim"]):
            raise DimensionMismatch(
                f"declared dim {doc['dim']} but points have dim {mu.dim}"
            )
        return mu


@dataclass(frozen=True)
class MapSamples:
    """A map R^d -> R^d known only through its values on a measure's support.

    ``values[i]`` is the image of ``source.points[i]``.
    """

    source: DiscreteMeasure
    values: np.ndarray

    def __post_init__(self):
        vals = _freeze(_as_points(self.values))
        object.__setattr__(self, "values", vals)
        if len(vals) != self.source.size:
            raise SupportMismatch("values must align with the source support")


def make_measure(points, weights=None) -> DiscreteMeasure:
    """Build a DiscreteMeasure, renormalizing weights to sum to one.

    Renormalization is silent apart from a debug log entry; unnormalized
    masses are routine when measures come from image intensities.
    """
    pts = _as_points(points)
    if len(pts) == 0:
        raise EmptySupport("no points given")
    if weights is None:
        w = np.full(len(pts), 1.0 / len(pts))
    else:
        w = np.asarray(weights, dtype=float)
        if w.ndim != 1 or len(w) != len(pts):
            raise DimensionMismatch("weights must be a vector matching points")
        if np.any(w < 0):
            raise NegativeWeight("weights must be nonnegative")
        total = float(w.sum())
        if total <= 0:
            raise ValueError("total weight must be positive")
        if abs(total - 1.0) > 1e-12:
            log.debug("renormalizing weights (sum was %.17g)", total)
        w = w / total
    return DiscreteMeasure(points=_freeze(pts), weights=_freeze(w))


def uniform_measure(points) -> DiscreteMeasure:
    return make_measure(points, None)


def _map_values(mu: DiscreteMeasure, g) -> np.ndarray:
    """Values of g on mu's support; g is MapSamples, an affine map, or callable."""
    if isinstance(g, MapSamples):
        if g.source.size != mu.size or not np.array_equal(g.source.points, mu.points):
            raise SupportMismatch("map sampled on a different support")
        return g.values
    if hasattr(g, "apply"):
        return _as_points(g.apply(mu.points))
    if callable(g):
        return _as_points(np.apply_along_axis(g, 1, mu.points))
    raise TypeError(f"cannot interpret {type(g).__name__} as a map")


def pushforward(mu: DiscreteMeasure, g) -> DiscreteMeasure:
    """Image measure of mu under g: atoms move to g(x_i), weights follow.

    Points that land on the same location (after rounding coordinates to
    ``MERGE_DECIMALS`` decimals) are merged with summed weights, so the
    result is again a bona fide discrete measure.
    """
    vals = _map_values(mu, g)
    if vals.shape[1] != mu.dim:
        raise DimensionMismatch("map values must have the measure's dimension")
    key = np.round(vals, MERGE_DECIMALS) + 0.0  # +0.0 folds -0.0 into 0.0
    # stable dedup: first occurrence keeps its coordinates
    _, first_idx, inverse = np.unique(
        key, axis=0, return_index=True, return_inverse=True
    )
    merged_pts = vals[np.sort(first_idx)]
    # np.unique sorts groups; remap group ids to first-occurrence order
    order = np.argsort(first_idx)
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    merged_w = np.zeros(len(first_idx))
    np.add.at(merged_w, rank[inverse], mu.weights)
    return DiscreteMeasure(points=_freeze(merged_pts), weights=_freeze(merged_w))


def l2_norm(mu: DiscreteMeasure, f) -> float:
    """sqrt of the mu-weighted sum of squared values of f."""
    vals = _map_values(mu, f)
    return float(np.sqrt(mu.weights @ np.einsum("ij,ij->i", vals, vals)))


def l2_distance(mu: DiscreteMeasure, f, g) -> float:
    """Weighted L2 distance between two maps sampled on mu's support."""
    diff = _map_values(mu, f) - _map_values(mu, g)
    return float(np.sqrt(mu.weights @ np.einsum("ij,ij->i", diff, diff)))


def identity_map(mu: DiscreteMeasure) -> MapSamples:
    return MapSamples(source=mu, values=mu.points.copy())


def density_sup_estimate(mu: DiscreteMeasure, cell_width: float) -> float:
    """Histogram estimate of the density sup: max cell mass / cell volume.

    The measure is binned into axis-aligned cubes of side ``cell_width``;
    the estimate is the largest mass-per-volume over occupied cells.  The
    cell width is a modelling choice exposed to the caller.
    """
    if cell_width <= 0:
        raise ValueError("cell_width must be positive")
    cells = np.floor(mu.points / cell_width).astype(np.int64)
    _, inverse = np.unique(cells, axis=0, return_inverse=True)
    masses = np.zeros(inverse.max() + 1)
    np.add.at(masses, inverse, mu.weights)
    return float(masses.max() / cell_width**mu.dim)


def save_measure(mu: DiscreteMeasure, path) -> None:
    with open(path, "w") as fh:
        json.dump(mu.to_json_dict(), fh)


def load_measure(path) -> DiscreteMeasure:
    with open(path) as fh:
        return DiscreteMeasure.from_json_dict(json.load(fh))
