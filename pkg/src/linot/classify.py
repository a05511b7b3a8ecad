"""Linear classification on embedded measures: LDA, PCA, max-margin.

Two-class only.  LDA is the workhorse classifier, PCA supplies the
raw-feature baseline at matched dimension, and the hard-margin program
certifies linear separability constructively (a maximal-margin hyperplane
or a proof of infeasibility).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .measures import DimensionMismatch


class SingularCovariance(ValueError):
    """Pooled covariance is singular; raise shrinkage or reduce dimension."""


class ModelKind(str, Enum):
    LDA = "LDA"
    HARD_MARGIN = "HardMargin"


@dataclass(frozen=True)
class FeatureMatrix:
    rows: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        rows = np.atleast_2d(np.asarray(self.rows, dtype=float))
        labels = np.asarray(self.labels)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "labels", labels)
        if len(rows) != len(labels):
            raise DimensionMismatch("rows and labels length mismatch")
        if not np.all(np.isin(labels, (-1, 1))):
            raise ValueError("labels must be -1 or +1")

    @property
    def feature_dim(self) -> int:
        return self.rows.shape[1]

    def split(self) -> tuple:
        pos = self.rows[self.labels == 1]
        neg = self.rows[self.labels == -1]
        return pos, neg


@dataclass(frozen=True)
class LinearModel:
    weights: np.ndarray
    bias: float
    kind: ModelKind
    margin: Optional[float] = None

    def decision(self, rows: np.ndarray) -> np.ndarray:
        return rows @ self.weights - self.bias

    def predict(self, rows: np.ndarray) -> np.ndarray:
        return np.where(self.decision(rows) > 0, 1, -1)


@dataclass(frozen=True)
class EvalReport:
    train_error: Optional[float] = None
    test_error: Optional[float] = None
    margin: Optional[float] = None
    per_trial: list = field(default_factory=list)
    mean: Optional[float] = None
    stddev: Optional[float] = None

    def to_json_dict(self) -> dict:
        return {
            "train_error": self.train_error,
            "test_error": self.test_error,
            "margin": self.margin,
            "per_trial": list(self.per_trial),
            "mean": self.mean,
            "stddev": self.stddev,
        }


def lda_fit(x: FeatureMatrix, shrinkage: float = 1e-3) -> LinearModel:
    """Two-class Fisher discriminant with shrunk pooled covariance.

    The within-class covariance is blended with a trace-scaled identity:
    (1 - s) * Cov + s * (trace(Cov)/d) * I.  At shrinkage 0 a singular
    covariance raises SingularCovariance; at shrinkage 1 the direction is
    the raw mean difference (nearest centroid).  The bias places the
    decision boundary at the projected midpoint, shifted by the log ratio
    of class priors.
    """
    if not 0.0 <= shrinkage <= 1.0:
        raise ValueError("shrinkage must lie in [0, 1]")
    pos, neg = x.split()
    if len(pos) == 0 or len(neg) == 0:
        raise ValueError("both classes must be present")
    mean_pos = pos.mean(axis=0)
    mean_neg = neg.mean(axis=0)
    centered = np.vstack([pos - mean_pos, neg - mean_neg])
    n = len(centered)
    cov = centered.T @ centered / max(n - 2, 1)
    d = x.feature_dim
    tr = float(np.trace(cov))
    target = (tr / d) if tr > 0 else 1.0
    shrunk = (1 - shrinkage) * cov + shrinkage * target * np.eye(d)
    diff = mean_pos - mean_neg
    try:
        cf = np.linalg.cholesky(shrunk)
    except np.linalg.LinAlgError:
        raise SingularCovariance(
            "pooled covariance is singular at this shrinkage; increase it"
        ) from None
    w = np.linalg.solve(cf.T, np.linalg.solve(cf, diff))
    prior_pos = len(pos) / len(x.rows)
    prior_neg = 1.0 - prior_pos
    bias = float(w @ (mean_pos + mean_neg) / 2.0 - np.log(prior_pos / prior_neg))
    return LinearModel(weights=w, bias=bias, kind=ModelKind.LDA)


@dataclass(frozen=True)
class PCAProjection:
    mean: np.ndarray
    components: np.ndarray  # (k, d)

    def apply(self, x: FeatureMatrix) -> FeatureMatrix:
        projected = (x.rows - self.mean) @ self.components.T
        return FeatureMatrix(rows=projected, labels=x.labels)


def fit_pca(x: FeatureMatrix, k: int) -> PCAProjection:
    """Principal components of the rows; test data reuses the training fit."""
    if k > min(len(x.rows), x.feature_dim):
        raise ValueError("k exceeds the available rank")
    mean = x.rows.mean(axis=0)
    _, _, vt = np.linalg.svd(x.rows - mean, full_matrices=False)
    return PCAProjection(mean=mean, components=vt[:k])


def pca_project(x: FeatureMatrix, k: int) -> FeatureMatrix:
    return fit_pca(x, k).apply(x)


def explained_variances(x: FeatureMatrix) -> np.ndarray:
    _, s, _ = np.linalg.svd(x.rows - x.rows.mean(axis=0), full_matrices=False)
    return s**2 / max(len(x.rows) - 1, 1)


def hard_margin_separate(x: FeatureMatrix) -> Optional[LinearModel]:
    """Maximum-margin separating hyperplane, or None when inseparable.

    Solves min 1/2 ||w||^2 subject to y_i (w . x_i - b) >= 1; the returned
    margin is 1/||w||, the distance from the hyperplane to the closest
    training row.
    """
    import cvxpy as cp

    pos, neg = x.split()
    if len(pos) == 0 or len(neg) == 0:
        raise ValueError("both classes must be present")
    y = x.labels.astype(float)
    w = cp.Variable(x.feature_dim)
    b = cp.Variable()
    problem = cp.Problem(
        cp.Minimize(0.5 * cp.sum_squares(w)),
        [cp.multiply(y, x.rows @ w - b) >= 1],
    )
    problem.solve(solver=cp.CLARABEL)
    if problem.status in ("infeasible", "infeasible_inaccurate"):
        return None
    if problem.status not in ("optimal", "optimal_inaccurate"):
        return None
    weights = np.asarray(w.value).ravel()
    margin = 1.0 / float(np.linalg.norm(weights))
    return LinearModel(
        weights=weights, bias=float(b.value), kind=ModelKind.HARD_MARGIN, margin=margin
    )


def evaluate(model: LinearModel, x: FeatureMatrix) -> EvalReport:
    """Zero-one error of the model on a labeled feature matrix."""
    if x.feature_dim != len(model.weights):
        raise DimensionMismatch("feature dimension does not match the model")
    predictions = model.predict(x.rows)
    error = float(np.mean(predictions != x.labels))
    return EvalReport(test_error=error, margin=model.margin)


def aggregate(per_trial_errors) -> EvalReport:
    errors = [float(e) for e in per_trial_errors]
    arr = np.asarray(errors)
    return EvalReport(
        per_trial=errors,
        mean=float(arr.mean()),
        stddev=float(arr.std(ddof=0)),
    )


def lda_scatter_coordinates(model: LinearModel, x: FeatureMatrix) -> np.ndarray:
    """Two display coordinates per row: the LDA axis and its best companion.

    The first coordinate is the discriminant value w . x; the second is the
    projection onto the leading within-class principal direction orthogonal
    to w, so the plot shows the decision axis against the dominant residual
    spread.
    """
    if model.kind != ModelKind.LDA:
        raise ValueError("scatter coordinates need a fitted LDA model")
    w = model.weights / np.linalg.norm(model.weights)
    pos, neg = x.split()
    centered = np.vstack(
        [pos - pos.mean(axis=0), neg - neg.mean(axis=0)]
    )
    # deflate the discriminant direction, then take the top principal axis
    residual = centered - np.outer(centered @ w, w)
    _, s, vt = np.linalg.svd(residual, full_matrices=False)
    second = vt[0]
    first_coord = x.rows @ model.weights
    second_coord = x.rows @ second
    return np.column_stack([first_coord, second_coord])
