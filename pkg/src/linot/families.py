"""Shift/scaling families, their bounded subsets, and perturbation tubes.

The two building blocks are shifts ``x -> x + a`` and scalings
``x -> c x`` with ``c > 0``.  Affine combinations of those (still with a
positive linear part) arise when testing convexity of embedded orbits, so
the map type stores a general ``(linear, offset)`` pair and remembers
which named family it came from.

The separability theory is stated for convex families of maps; the finite
samples drawn here are representatives of such a family, not a convex set
themselves.  Experiments built on them certify separability of the
sampled orbits only.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .measures import DiscreteMeasure, MapSamples, l2_norm, pushforward
from .solvers import solve_exact


class InfeasibleRadius(ValueError):
    """The requested norm bound admits no map from the configured ranges."""


@dataclass(frozen=True)
class AffineMap:
    """Map x -> linear * x + offset with positive linear part.

    ``kind`` is "shift" (linear == 1), "scale" (offset == 0), or "affine"
    for proper combinations of the two.
    """

    linear: float
    offset: np.ndarray

    def __post_init__(self):
        if self.linear <= 0:
            raise ValueError("linear part must be positive")
        off = np.atleast_1d(np.asarray(self.offset, dtype=float))
        off.setflags(write=False)
        object.__setattr__(self, "offset", off)

    @staticmethod
    def shift(a) -> "AffineMap":
        a = np.atleast_1d(np.asarray(a, dtype=float))
        return AffineMap(linear=1.0, offset=a)

    @staticmethod
    def scale(c: float, dim: int = 1) -> "AffineMap":
        if c <= 0:
            raise ValueError("scaling factor must be positive")
        return AffineMap(linear=float(c), offset=np.zeros(dim))

    @property
    def kind(self) -> str:
        if self.linear == 1.0:
            return "shift"
        if not self.offset.any():
            return "scale"
        return "affine"

    @property
    def in_shift_scale_family(self) -> bool:
        return self.kind in ("shift", "scale")

    def apply(self, points: np.ndarray) -> np.ndarray:
        return self.linear * np.atleast_2d(points) + self.offset[None, :]

    def combine(self, other: "AffineMap", c: float) -> "AffineMap":
        """Pointwise convex combination (1 - c) * self + c * other."""
        if not 0.0 <= c <= 1.0:
            raise ValueError("combination weight must lie in [0, 1]")
        linear = (1 - c) * self.linear + c * other.linear
        if linear <= 0:
            raise ValueError("combined map has non-positive linear part")
        return AffineMap(linear=linear, offset=(1 - c) * self.offset + c * other.offset)

    def __repr__(self):
        if self.kind == "shift":
            return f"Shift({np.array2string(self.offset, precision=4)})"
        if self.kind == "scale":
            return f"Scale({self.linear:.4g})"
        return f"Affine({self.linear:.4g}, {np.array2string(self.offset, precision=4)})"


@dataclass(frozen=True)
class PerturbedMap:
    """A base shift/scaling plus a displacement field of prescribed norm."""

    base: AffineMap
    perturbation: MapSamples
    eps_norm: float

    def __post_init__(self):
        actual = l2_norm(self.perturbation.source, self.perturbation)
        if abs(actual - self.eps_norm) > 1e-10:
            raise ValueError(
                f"perturbation norm {actual:.3e} != declared {self.eps_norm:.3e}"
            )

    def apply(self, points: np.ndarray) -> np.ndarray:
        if not np.array_equal(points, self.perturbation.source.points):
            raise ValueError("perturbed map only defined on its native support")
        return self.base.apply(points) + self.perturbation.values


@dataclass(frozen=True)
class FamilySpec:
    """Sampling recipe for a bounded, perturbed shift/scaling family."""

    template: DiscreteMeasure
    R: float
    eps: float
    count: int
    seed: int
    shift_prob: float = 0.5
    scale_range: tuple = (0.25, 4.0)
    shift_sigma: float = 1.0
    smoothness: float = 1.0

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be at least 1")
        if self.R <= 0:
            raise ValueError("R must be positive")
        if self.eps < 0:
            raise ValueError("eps must be nonnegative")


def sample_affine(spec: FamilySpec) -> list:
    """Draw shifts/scalings with map norm at most ``spec.R``, reproducibly.

    Scalings have norm c * ||Id|| in L2 of the template, so the feasible
    c-interval is computed directly; shifts are drawn by rejection.
    """
    rng = np.random.default_rng(spec.seed)
    mu = spec.template
    id_norm = np.sqrt(mu.second_moment())
    c_lo, c_hi = spec.scale_range
    c_max = spec.R / id_norm if id_norm > 0 else np.inf
    scaling_feasible = c_max >= c_lo
    if not scaling_feasible and spec.shift_prob < 1.0:
        raise InfeasibleRadius(
            f"no scaling in [{c_lo}, {c_hi}] satisfies c*||Id|| <= R={spec.R}"
        )
    maps = []
    for _ in range(spec.count):
        if rng.random() < spec.shift_prob:
            h = _sample_shift(rng, mu, spec.R, spec.shift_sigma)
        else:
            c = rng.uniform(c_lo, min(c_hi, c_max))
            h = AffineMap.scale(c, dim=mu.dim)
        maps.append(h)
    return maps


def _sample_shift(rng, mu: DiscreteMeasure, radius: float, sigma: float) -> AffineMap:
    for _ in range(1000):
        a = rng.normal(scale=sigma, size=mu.dim)
        h = AffineMap.shift(a)
        if l2_norm(mu, h) <= radius:
            return h
    raise InfeasibleRadius(
        f"could not draw a shift with ||S_a|| <= R={radius}; "
        "template norm may already exceed R"
    )


def perturb(
    h: AffineMap,
    mu: DiscreteMeasure,
    eps: float,
    smoothness: float = 1.0,
    seed: int = 0,
    n_bumps: int = 3,
) -> PerturbedMap:
    """Attach a smooth random displacement field of exact norm ``eps``.

    The field is a mixture of Gaussian bumps whose widths scale with
    ``smoothness`` times the support spread; it is rescaled so that its
    weighted L2 norm equals ``eps`` to float precision.
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    rng = np.random.default_rng(seed)
    pts = mu.points
    if eps == 0:
        field = np.zeros_like(pts)
    else:
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        spread = float(np.max(hi - lo))
        width = max(smoothness * 0.5 * spread, 1e-9)
        field = np.zeros_like(pts)
        for _ in range(n_bumps):
            center = rng.uniform(lo, hi)
            amp = rng.normal(size=mu.dim)
            d2 = np.einsum("ij,ij->i", pts - center, pts - center)
            field += amp[None, :] * np.exp(-d2 / (2 * width**2))[:, None]
        norm = l2_norm(mu, MapSamples(source=mu, values=field))
        if norm == 0:
            # all bumps cancelled; fall back to a constant unit field
            field = np.ones_like(pts)
            norm = l2_norm(mu, MapSamples(source=mu, values=field))
        field = field * (eps / norm)
    samples = MapSamples(source=mu, values=field)
    return PerturbedMap(base=h, perturbation=samples, eps_norm=eps)


@dataclass(frozen=True)
class TwoClassDataset:
    measures: list
    labels: np.ndarray
    min_cross_w2: Optional[float]
    maps_pos: list = field(default_factory=list)
    maps_neg: list = field(default_factory=list)


def make_two_class_dataset(
    spec_p: FamilySpec, spec_q: FamilySpec, cross_subsample: int = 10
) -> TwoClassDataset:
    """Generate the +1/-1 orbit families and probe their W2 separation.

    Class +1 contains pushforwards of ``spec_p.template`` under sampled
    perturbed maps, class -1 the same for ``spec_q``.  The minimum exact
    W2 over a ``cross_subsample`` x ``cross_subsample`` grid of
    cross-class pairs is reported for comparison with the separation
    threshold.
    """
    if spec_p.template.dim != spec_q.template.dim:
        raise ValueError("templates must share dimension")
    measures, labels, maps_pos, maps_neg = [], [], [], []
    for label, spec in ((1, spec_p), (-1, spec_q)):
        bases = sample_affine(spec)
        seeds = np.random.SeedSequence(spec.seed).generate_state(spec.count)
        for k, base in enumerate(bases):
            g = perturb(
                base, spec.template, spec.eps, spec.smoothness, seed=int(seeds[k])
            )
            measures.append(pushforward(spec.template, g))
            labels.append(label)
            (maps_pos if label == 1 else maps_neg).append(g)
    labels = np.asarray(labels)
    pos = [m for m, l in zip(measures, labels) if l == 1][:cross_subsample]
    neg = [m for m, l in zip(measures, labels) if l == -1][:cross_subsample]
    min_w2 = None
    if pos and neg:
        min_w2 = min(
            np.sqrt(solve_exact(p, q).cost) for p in pos for q in neg
        )
    return TwoClassDataset(
        measures=measures,
        labels=labels,
        min_cross_w2=min_w2,
        maps_pos=maps_pos,
        maps_neg=maps_neg,
    )
