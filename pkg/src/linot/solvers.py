"""Optimal transport between discrete measures under squared Euclidean cost.

Four routes are provided:

* ``solve_exact`` — linear programming.  Uniform equal-size instances take
  an assignment-solver fast path (with LP duals recovered from the optimal
  matching); everything else goes through a sparse transportation LP.
* ``solve_sinkhorn`` — entropic regularization, log-domain iterations,
  followed by a rounding step so the returned plan is exactly feasible.
* ``solve_1d`` — monotone rearrangement by cdf matching on the line.
* ``brute_force_oracle`` — exhaustive permutation search, the independent
  reference the exact solver is tested against.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from itertools import permutations
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linear_sum_assignment, linprog

from . import _kernels
from .measures import (
    DimensionMismatch,
    DiscreteMeasure,
    MapSamples,
    identity_map,
    l2_distance,
)

MARGINAL_TOL = 1e-9


class AtomSplitRequired(ValueError):
    """1D cdf matching would have to split a source atom across targets."""


class SolverFailure(RuntimeError):
    """The LP backend reported failure on a feasible instance."""


class MapProvenance(str, Enum):
    EXACT = "Exact"
    BARYCENTRIC = "Barycentric"
    ONE_DIM = "OneDim"


def cost_matrix(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances between two point arrays."""
    xx = np.einsum("ij,ij->i", x, x)
    yy = np.einsum("ij,ij->i", y, y)
    c = xx[:, None] + yy[None, :] - 2.0 * (x @ y.T)
    np.maximum(c, 0.0, out=c)
    return c


@dataclass(frozen=True)
class TransportPlan:
    """A coupling between two discrete measures.

    ``rows``, ``cols`` and ``masses`` are parallel arrays of the nonzero
    plan entries.  ``cost`` is the squared-cost objective of the plan and
    ``dual_potentials`` the LP duals (source, target) when the solver
    produced them.
    """

    source: DiscreteMeasure
    target: DiscreteMeasure
    rows: np.ndarray
    cols: np.ndarray
    masses: np.ndarray
    cost: float
    dual_potentials: Optional[tuple] = None
    converged: bool = True

    @property
    def entries(self) -> list:
        return list(zip(self.rows.tolist(), self.cols.tolist(), self.masses.tolist()))

    def row_sums(self) -> np.ndarray:
        out = np.zeros(self.source.size)
        np.add.at(out, self.rows, self.masses)
        return out

    def col_sums(self) -> np.ndarray:
        out = np.zeros(self.target.size)
        np.add.at(out, self.cols, self.masses)
        return out

    def is_permutation(self, tol: float = 1e-12) -> bool:
        """True when every source atom sends all its mass to a single target."""
        if len(self.rows) != self.source.size:
            return False
        if len(set(self.rows.tolist())) != self.source.size:
            return False
        if len(set(self.cols.tolist())) != self.target.size:
            return False
        return bool(
            np.all(np.abs(self.masses - self.source.weights[self.rows]) <= tol)
        )

    def to_dense(self) -> np.ndarray:
        dense = np.zeros((self.source.size, self.target.size))
        dense[self.rows, self.cols] = self.masses
        return dense

    def export_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["i", "j", "mass"])
            for i, j, m in zip(self.rows, self.cols, self.masses):
                writer.writerow([int(i), int(j), repr(float(m))])


@dataclass(frozen=True)
class TransportMap:
    """A map defined on the source support: values[i] = T(source.points[i])."""

    source: DiscreteMeasure
    values: np.ndarray
    provenance: MapProvenance

    def __post_init__(self):
        if len(self.values) != self.source.size:
            raise DimensionMismatch("map values must align with source support")

    def as_samples(self) -> MapSamples:
        return MapSamples(source=self.source, values=self.values)


def validate_plan(plan: TransportPlan, tol: float = MARGINAL_TOL) -> None:
    """Raise AssertionError when a plan violates the coupling invariants."""
    assert np.all(plan.masses >= 0), "negative mass in plan"
    assert np.abs(plan.row_sums() - plan.source.weights).max() <= tol
    assert np.abs(plan.col_sums() - plan.target.weights).max() <= tol
    c = cost_matrix(plan.source.points, plan.target.points)
    recomputed = float(plan.masses @ c[plan.rows, plan.cols])
    assert abs(recomputed - plan.cost) <= 1e-9 * max(1.0, abs(plan.cost))


def _check_dims(sigma: DiscreteMeasure, nu: DiscreteMeasure) -> None:
    if sigma.dim != nu.dim:
        raise DimensionMismatch(
            f"source dim {sigma.dim} != target dim {nu.dim}"
        )


def _duals_from_matching(c: np.ndarray, perm: np.ndarray) -> tuple:
    """LP duals for an optimal assignment via shortest-path potentials.

    Feasibility u_i + v_j <= c_ij with equality on the matching is
    equivalent to v being a potential for the arc lengths
    l(j'' -> j) = c[inv(j''), j] - c[inv(j''), j'']; an optimal matching
    admits no negative cycle, so Bellman-Ford relaxation converges.
    """
    n = c.shape[0]
    inv = np.empty(n, dtype=np.int64)
    inv[perm] = np.arange(n)
    lengths = c[inv, :] - c[inv, perm[inv]][:, None]
    v = np.zeros(n)
    for _ in range(n):
        relaxed = np.minimum(v, (v[:, None] + lengths).min(axis=0))
        if np.array_equal(relaxed, v):
            break
        v = relaxed
    u = c[np.arange(n), perm] - v[perm]
    return u, v


def solve_exact(sigma: DiscreteMeasure, nu: DiscreteMeasure) -> TransportPlan:
    """Optimal coupling for squared Euclidean cost; ``cost`` is W2 squared.

    Deterministic: ties between optimal vertices are resolved by the
    backend's fixed pivoting order.
    """
    _check_dims(sigma, nu)
    c = cost_matrix(sigma.points, nu.points)
    n, m = c.shape

    if n == m and sigma.is_uniform() and nu.is_uniform():
        rows, cols = linear_sum_assignment(c)
        mass = np.full(n, 1.0 / n)
        cost = float(c[rows, cols].mean())
        u, v = _duals_from_matching(c, cols)
        return TransportPlan(
            source=sigma,
            target=nu,
            rows=rows.astype(np.int64),
            cols=cols.astype(np.int64),
            masses=mass,
            cost=cost,
            dual_potentials=(u, v),
        )

    cols_idx = np.arange(n * m)
    a_rows = sp.csr_matrix(
        (np.ones(n * m), (np.repeat(np.arange(n), m), cols_idx)), shape=(n, n * m)
    )
    a_cols = sp.csr_matrix(
        (np.ones(n * m), (np.tile(np.arange(m), n), cols_idx)), shape=(m, n * m)
    )
    res = linprog(
        c.ravel(),
        A_eq=sp.vstack([a_rows, a_cols], format="csr"),
        b_eq=np.concatenate([sigma.weights, nu.weights]),
        bounds=(0, None),
        method="highs",
    )
    if not res.success:
        raise SolverFailure(f"transportation LP failed: {res.message}")
    plan = res.x.reshape(n, m)
    np.maximum(plan, 0.0, out=plan)
    rows, cols = np.nonzero(plan)
    masses = plan[rows, cols]
    cost = float(masses @ c[rows, cols])
    marg = res.eqlin.marginals
    return TransportPlan(
        source=sigma,
        target=nu,
        rows=rows.astype(np.int64),
        cols=cols.astype(np.int64),
        masses=masses,
        cost=cost,
        dual_potentials=(marg[:n].copy(), marg[n:].copy()),
    )


def brute_force_oracle(sigma: DiscreteMeasure, nu: DiscreteMeasure, max_size: int = 8) -> TransportPlan:
    """Globally optimal permutation plan by exhaustive enumeration.

    Only defined for uniform measures of equal support size (where an
    optimal coupling is a permutation); kept deliberately independent of
    the LP machinery so it can serve as its oracle.
    """
    _check_dims(sigma, nu)
    n = sigma.size
    if n != nu.size or not (sigma.is_uniform() and nu.is_uniform()):
        raise ValueError("oracle requires uniform measures of equal size")
    if n > max_size:
        raise ValueError(f"oracle limited to supports of size <= {max_size}")
    c = cost_matrix(sigma.points, nu.points)
    idx = np.arange(n)
    best_cost = np.inf
    best_perm = idx
    for perm in permutations(range(n)):
        p = np.asarray(perm)
        cst = c[idx, p].sum()
        if cst < best_cost:
            best_cost = cst
            best_perm = p
    return TransportPlan(
        source=sigma,
        target=nu,
        rows=idx.astype(np.int64),
        cols=best_perm.astype(np.int64),
        masses=np.full(n, 1.0 / n),
        cost=float(best_cost / n),
        dual_potentials=None,
    )


def _round_to_feasible(plan: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Rescale rows then columns, then add the residual outer product.

    Standard rounding onto the transportation polytope: after it the plan
    satisfies both marginals exactly (up to float rounding).
    """
    rs = plan.sum(axis=1)
    x = np.divide(a, rs, out=np.ones_like(a), where=rs > 0)
    plan = plan * np.minimum(1.0, x)[:, None]
    cs = plan.sum(axis=0)
    y = np.divide(b, cs, out=np.ones_like(b), where=cs > 0)
    plan = plan * np.minimum(1.0, y)[None, :]
    ra = np.maximum(a - plan.sum(axis=1), 0.0)
    rb = np.maximum(b - plan.sum(axis=0), 0.0)
    total = ra.sum()
    if total > 0:
        plan = plan + np.outer(ra, rb) / total
    np.maximum(plan, 0.0, out=plan)
    return plan


def solve_sinkhorn(
    sigma: DiscreteMeasure,
    nu: DiscreteMeasure,
    reg: float,
    max_iters: int = 5000,
    tol: float = 1e-9,
) -> TransportPlan:
    """Entropic plan, rounded to exact marginal feasibility.

    The iterations run in the log domain for stability.  Because the
    returned plan is feasible, its cost always upper-bounds the exact
    optimum.  ``converged`` is False when the marginal residual still
    exceeded ``tol`` after ``max_iters``.
    """
    _check_dims(sigma, nu)
    if reg <= 0:
        raise ValueError("reg must be positive")
    c = cost_matrix(sigma.points, nu.points)
    loga = np.log(np.maximum(sigma.weights, 1e-300))
    logb = np.log(np.maximum(nu.weights, 1e-300))
    f, g, _, err = _kernels.sinkhorn_potentials(c, loga, logb, reg, max_iters, tol)
    plan = np.exp((f[:, None] + g[None, :] - c) / reg)
    plan = _round_to_feasible(plan, sigma.weights, nu.weights)
    rows, cols = np.nonzero(plan)
    masses = plan[rows, cols]
    return TransportPlan(
        source=sigma,
        target=nu,
        rows=rows.astype(np.int64),
        cols=cols.astype(np.int64),
        masses=masses,
        cost=float(masses @ c[rows, cols]),
        dual_potentials=None,
        converged=bool(err < tol),
    )


def median_cost(sigma: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    return float(np.median(cost_matrix(sigma.points, nu.points)))


def solve_1d(sigma: DiscreteMeasure, nu: DiscreteMeasure, tol: float = 1e-12) -> TransportMap:
    """Monotone rearrangement on the line via cdf matching.

    Works whenever the cdf levels line up so that every source atom maps
    into a single target atom; otherwise raises AtomSplitRequired and the
    caller must refine the supports.
    """
    _check_dims(sigma, nu)
    if sigma.dim != 1:
        raise DimensionMismatch("solve_1d requires 1-dimensional measures")
    src_order = np.argsort(sigma.points[:, 0], kind="stable")
    tgt_order = np.argsort(nu.points[:, 0], kind="stable")
    src_w = sigma.weights[src_order]
    tgt_w = nu.weights[tgt_order]
    values = np.empty((sigma.size, 1))
    j = 0
    tgt_hi = tgt_w[0]
    src_lo = 0.0
    for pos, i in enumerate(src_order):
        src_hi = src_lo + src_w[pos]
        # advance target bins fully below the source interval
        while tgt_hi <= src_lo + tol and j + 1 < len(tgt_order):
            j += 1
            tgt_hi += tgt_w[j]
        if src_hi > tgt_hi + tol:
            raise AtomSplitRequired(
                "source atom straddles a target cdf boundary; refine supports"
            )
        values[i] = nu.points[tgt_order[j]]
        src_lo = src_hi
    return TransportMap(source=sigma, values=values, provenance=MapProvenance.ONE_DIM)


def barycentric_map(plan: TransportPlan) -> TransportMap:
    """Conditional-mean map of a plan: values[i] = sum_j m_ij y_j / w_i."""
    w = plan.source.weights
    if np.any(w <= 0):
        raise ValueError("barycentric map undefined for zero-weight source atoms")
    values = np.zeros((plan.source.size, plan.target.dim))
    np.add.at(values, plan.rows, plan.masses[:, None] * plan.target.points[plan.cols])
    values /= w[:, None]
    provenance = (
        MapProvenance.EXACT if plan.is_permutation() else MapProvenance.BARYCENTRIC
    )
    return TransportMap(source=plan.source, values=values, provenance=provenance)


def map_cost(tmap: TransportMap) -> float:
    """Root transport cost of a map: its weighted L2 distance to identity."""
    return l2_distance(tmap.source, tmap.as_samples(), identity_map(tmap.source))


def cyclic_monotonicity_violations(plan: TransportPlan, tol: float = 1e-9) -> tuple:
    """Count pairwise swap-test failures on the plan's support.

    Zero violations certify pairwise optimality; an exact solver's output
    must pass, so this doubles as a solver self-check.  Returns
    ``(count, worst_cost_improvement)``.
    """
    keep = plan.masses > 1e-12
    x = np.ascontiguousarray(plan.source.points[plan.rows[keep]])
    y = np.ascontiguousarray(plan.target.points[plan.cols[keep]])
    count, worst = _kernels.monotonicity_scan(x, y, tol)
    return int(count), float(worst)
