"""Digit classification protocol: embed images, train LDA, sweep train size.

The pipeline mirrors the two-digit benchmark: a pool of images per class
is augmented (random rescale and shift), converted to measures, and
embedded against a bell-curve reference support.  For every training size
a number of trials draw disjoint train/test splits from the pool, fit LDA
on the flattened embedding vectors, and record the test error.  A PCA
baseline classifies the raw pixel vectors reduced to the embedding
dimension.
"""
from __future__ import annotations

import json
import logging
import os
import time
from dataclasses import dataclass, field

import numpy as np

from .classify import (
    FeatureMatrix,
    aggregate,
    evaluate,
    fit_pca,
    lda_fit,
    lda_scatter_coordinates,
)
from .datasets import (
    AugmentSpec,
    GaussianRefSpec,
    augment_all,
    image_to_measure,
    load_idx,
    select_reference_support,
)
from .embedding import SolverConfig, embed
from .svg import emit_svg_scatter

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DigitExperimentConfig:
    images_path: str
    labels_path: str
    classes: tuple = (1, 2)
    train_sizes: tuple = (40, 60, 80, 100)
    test_per_class: int = 100
    trials: int = 20
    pool_per_class: int = 250
    augment: AugmentSpec = field(default_factory=lambda: AugmentSpec(0.4, 1.2, seed=7))
    reference: GaussianRefSpec = field(default_factory=GaussianRefSpec)
    solver: SolverConfig = field(
        default_factory=lambda: SolverConfig(method="sinkhorn", tol=1e-6, max_iters=2000)
    )
    shrinkage: float = 1e-3
    mass_floor: float = 0.0
    seed: int = 0

    @staticmethod
    def from_dict(doc: dict) -> "DigitExperimentConfig":
        aug = doc.get("augment", {})
        ref = doc.get("reference", {})
        return DigitExperimentConfig(
            images_path=doc["images"],
            labels_path=doc["labels"],
            classes=tuple(doc.get("classes", (1, 2))),
            train_sizes=tuple(doc.get("train_sizes", (40, 60, 80, 100))),
            test_per_class=int(doc.get("test_per_class", 100)),
            trials=int(doc.get("trials", 20)),
            pool_per_class=int(doc.get("pool_per_class", 250)),
            augment=AugmentSpec(
                scale_min=float(aug.get("scale_min", 0.4)),
                scale_max=float(aug.get("scale_max", 1.2)),
                seed=int(aug.get("seed", 7)),
            ),
            reference=GaussianRefSpec(
                grid_shape=tuple(ref.get("grid_shape", (28, 28))),
                std=float(ref.get("std", 4.0)),
                target_size=int(ref.get("target_size", 70)),
            ),
            solver=SolverConfig.from_dict(doc.get("solver", {"method": "sinkhorn", "tol": 1e-6, "max_iters": 2000})),
            shrinkage=float(doc.get("shrinkage", 1e-3)),
            mass_floor=float(doc.get("mass_floor", 0.0)),
            seed=int(doc.get("seed", 0)),
        )


def _build_pool(config: DigitExperimentConfig):
    """Load, filter, augment, and embed the per-class image pools."""
    images = load_idx(config.images_path, config.labels_path)
    by_class = {c: [] for c in config.classes}
    for img in images:
        if img.label in by_class and len(by_class[img.label]) < config.pool_per_class:
            by_class[img.label].append(img)
    for c, pool in by_class.items():
        if len(pool) < config.pool_per_class:
            raise ValueError(
                f"class {c}: only {len(pool)} images, need {config.pool_per_class}"
            )
    flat = [img for c in config.classes for img in by_class[c]]
    flat = augment_all(flat, config.augment)
    labels = np.array([img.label for img in flat])

    reference = select_reference_support(config.reference)
    t0 = time.perf_counter()
    features = np.empty((len(flat), reference.size * reference.dim))
    for k, img in enumerate(flat):
        mu = image_to_measure(img, config.mass_floor)
        features[k] = embed(reference, mu, config.solver).flat()
    log.info("embedded %d images in %.1f s", len(flat), time.perf_counter() - t0)
    raw = np.stack([img.pixels for img in flat])
    return features, raw, labels, reference


def _two_class_labels(labels: np.ndarray, classes: tuple) -> np.ndarray:
    return np.where(labels == classes[0], 1, -1)


def run_digit_experiment(config: DigitExperimentConfig, out_dir=None) -> dict:
    """Full protocol; returns the report dictionary (also written to disk)."""
    features, raw, labels, reference = _build_pool(config)
    signed = _two_class_labels(labels, config.classes)
    class_idx = {
        +1: np.nonzero(signed == 1)[0],
        -1: np.nonzero(signed == -1)[0],
    }
    need = max(config.train_sizes) + config.test_per_class
    for c, idx in class_idx.items():
        if len(idx) < need:
            raise ValueError(f"pool too small for class {c}: {len(idx)} < {need}")

    report = {
        "train_sizes": list(config.train_sizes),
        "trials": config.trials,
        "test_per_class": config.test_per_class,
        "embedding_dim": int(reference.size * reference.dim),
        "lot": {},
        "pca": {},
    }
    scatter_jobs = {}
    root = np.random.SeedSequence(config.seed)
    for n_train in config.train_sizes:
        lot_errors, pca_errors = [], []
        trial_seeds = root.spawn(len(config.train_sizes))[
            config.train_sizes.index(n_train)
        ].generate_state(config.trials)
        for trial in range(config.trials):
            rng = np.random.default_rng(trial_seeds[trial])
            train_idx, test_idx = [], []
            for c in (+1, -1):
                chosen = rng.choice(
                    class_idx[c], size=n_train + config.test_per_class, replace=False
                )
                train_idx.append(chosen[:n_train])
                test_idx.append(chosen[n_train:])
            train_idx = np.concatenate(train_idx)
            test_idx = np.concatenate(test_idx)

            lot_train = FeatureMatrix(features[train_idx], signed[train_idx])
            lot_test = FeatureMatrix(features[test_idx], signed[test_idx])
            model = lda_fit(lot_train, config.shrinkage)
            lot_errors.append(evaluate(model, lot_test).test_error)

            raw_train = FeatureMatrix(raw[train_idx], signed[train_idx])
            raw_test = FeatureMatrix(raw[test_idx], signed[test_idx])
            k = min(report["embedding_dim"], len(train_idx))
            projector = fit_pca(raw_train, k)
            pca_model = lda_fit(projector.apply(raw_train), config.shrinkage)
            pca_errors.append(evaluate(pca_model, projector.apply(raw_test)).test_error)

            if trial == 0 and n_train in (min(config.train_sizes), max(config.train_sizes)):
                scatter_jobs[n_train] = (model, lot_test)
        report["lot"][str(n_train)] = aggregate(lot_errors).to_json_dict()
        report["pca"][str(n_train)] = aggregate(pca_errors).to_json_dict()
        log.info(
            "N=%d: lot %.4f +- %.4f | pca %.4f",
            n_train,
            report["lot"][str(n_train)]["mean"],
            report["lot"][str(n_train)]["stddev"],
            report["pca"][str(n_train)]["mean"],
        )

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "digit_report.json"), "w") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
        for n_train, (model, lot_test) in scatter_jobs.items():
            coords = lda_scatter_coordinates(model, lot_test)
            emit_svg_scatter(
                coords,
                lot_test.labels,
                os.path.join(out_dir, f"lda_scatter_n{n_train}.svg"),
                title=f"Discriminant coordinates of test data (train {n_train}/class)",
            )
    return report
