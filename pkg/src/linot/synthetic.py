"""Synthetic handwritten-style digit corpus, written in IDX format.

Renders the digits "1" and "2" as jittered parametric strokes on a 28x28
grid, so image experiments can run end to end on machines without the
real data.  Style parameters (slant, bow, flags, serifs, loops, taper,
elastic warp) are drawn per image from wide ranges, giving the classes
enough internal diversity that small training sets do not cover them.
Generation is fully seeded; corpora are bit-reproducible.
"""
from __future__ import annotations

import numpy as np

from .datasets import ImageGrid, write_idx

GRID = 28


def _render_path(path: np.ndarray, thickness, taper: np.ndarray) -> np.ndarray:
    """Distance-field rendering of a polyline with per-node intensity."""
    cols, rows = np.meshgrid(np.arange(GRID), np.arange(GRID))
    pixels = np.column_stack([cols.ravel(), rows.ravel()]).astype(float)
    d2 = (
        np.einsum("ij,ij->i", pixels, pixels)[:, None]
        + np.einsum("ij,ij->i", path, path)[None, :]
        - 2.0 * pixels @ path.T
    )
    nearest = d2.argmin(axis=1)
    intensity = taper[nearest] * np.exp(
        -d2[np.arange(len(pixels)), nearest] / (2.0 * thickness**2)
    )
    intensity[intensity < 0.12] = 0.0
    peak = intensity.max()
    if peak > 0:
        intensity = intensity / peak
    return intensity.reshape(GRID, GRID)


def _densify(control: np.ndarray, samples_per_edge: int = 18) -> np.ndarray:
    parts = []
    for a, b in zip(control[:-1], control[1:]):
        t = np.linspace(0.0, 1.0, samples_per_edge, endpoint=False)[:, None]
        parts.append(a[None, :] * (1 - t) + b[None, :] * t)
    parts.append(control[-1:])
    return np.vstack(parts)


def _elastic_warp(path: np.ndarray, rng, amplitude: float) -> np.ndarray:
    """Smooth low-frequency displacement of the whole path."""
    t = np.linspace(0.0, 1.0, len(path))
    warped = path.astype(float).copy()
    for axis in range(2):
        phase = rng.uniform(0, 2 * np.pi, size=2)
        freq = rng.uniform(0.6, 2.2, size=2)
        warped[:, axis] += amplitude * (
            rng.normal(scale=0.6) * np.sin(2 * np.pi * freq[0] * t + phase[0])
            + rng.normal(scale=0.4) * np.sin(2 * np.pi * freq[1] * t + phase[1])
        )
    return warped


def _draw_one(rng) -> np.ndarray:
    """A "1": near-vertical stroke; often a head flag, sometimes a base bar."""
    top_y = rng.uniform(3.5, 8.0)
    bottom_y = rng.uniform(20.0, 24.5)
    center_x = rng.uniform(11.0, 17.0)
    slant = rng.uniform(-3.5, 4.5)
    bow = rng.uniform(-2.2, 2.2)
    t = np.linspace(0.0, 1.0, 36)
    x = center_x + slant * (t - 0.5) + bow * np.sin(np.pi * t)
    y = top_y + (bottom_y - top_y) * t
    path = np.column_stack([x, y])
    if rng.random() < 0.8:  # head flag, from barely-there to a strong hook
        flag_len = rng.uniform(1.5, 6.5)
        angle = rng.uniform(0.35, 1.25)
        fx = x[0] - flag_len * np.cos(angle)
        fy = y[0] + flag_len * np.sin(angle)
        path = np.vstack([_densify(np.array([[fx, fy], [x[0], y[0]]])), path])
    if rng.random() < 0.45:  # base serif of varying length and tilt
        half = rng.uniform(1.5, 4.5)
        tilt = rng.uniform(-1.0, 1.0)
        base = np.array(
            [[x[-1] - half, y[-1] + tilt], [x[-1] + half, y[-1] - tilt]]
        )
        path = np.vstack([path, _densify(base)])
    return path


def _draw_two(rng) -> np.ndarray:
    """A "2": top arc, descender (sometimes looped), bottom bar."""
    cx = rng.uniform(12.0, 16.0)
    top_cy = rng.uniform(7.5, 11.0)
    rad = rng.uniform(2.8, 5.6)
    squash = rng.uniform(0.75, 1.25)
    theta = np.linspace(np.pi * rng.uniform(0.75, 1.05), -np.pi * rng.uniform(0.05, 0.25), 26)
    arc_x = cx + rad * np.cos(theta)
    arc_y = top_cy - rad * squash * np.sin(theta)
    end = np.array([arc_x[-1], arc_y[-1]])
    bottom_y = rng.uniform(20.0, 24.0)
    foot_x = rng.uniform(6.5, 11.5)
    sag = rng.uniform(-1.5, 2.5)
    mid = np.array(
        [
            end,
            [
                0.5 * (end[0] + foot_x) + rng.uniform(-2.0, 2.0),
                0.5 * (end[1] + bottom_y) + sag,
            ],
            [foot_x, bottom_y],
        ]
    )
    descender = _densify(mid)
    if rng.random() < 0.25:  # small loop at the base
        loop_r = rng.uniform(0.8, 1.8)
        phi = np.linspace(0, 1.5 * np.pi, 12)
        loop = np.column_stack(
            [foot_x + loop_r * np.sin(phi), bottom_y - loop_r * (1 - np.cos(phi))]
        )
        descender = np.vstack([descender, loop])
    bar_len = rng.uniform(5.0, 11.0)
    bar_tilt = rng.uniform(-1.2, 1.2)
    bar = np.array([[foot_x, bottom_y], [foot_x + bar_len, bottom_y + bar_tilt]])
    return np.vstack([np.column_stack([arc_x, arc_y]), descender, _densify(bar)])


def synth_digit(label: int, rng) -> ImageGrid:
    if label == 1:
        path = _draw_one(rng)
    elif label == 2:
        path = _draw_two(rng)
    else:
        raise ValueError("only digits 1 and 2 are synthesized")
    path = _elastic_warp(path, rng, amplitude=rng.uniform(0.4, 1.6))
    path = path + rng.normal(scale=0.3, size=path.shape)
    thickness = rng.uniform(0.6, 1.5)
    # intensity taper: strokes fade toward one end for some writers
    t = np.linspace(0.0, 1.0, len(path))
    taper = 1.0 - rng.uniform(0.0, 0.5) * (t if rng.random() < 0.5 else 1 - t)
    grid = _render_path(path, thickness, taper)
    return ImageGrid(width=GRID, height=GRID, pixels=grid.ravel(), label=label)


def generate_corpus(per_class: int, seed: int, labels=(1, 2)) -> list:
    """Alternating-label corpus of stroke digits, seeded and reproducible."""
    rng = np.random.default_rng(seed)
    images = []
    for _ in range(per_class):
        for label in labels:
            images.append(synth_digit(label, rng))
    return images


def write_corpus(per_class: int, seed: int, images_path, labels_path) -> None:
    images = generate_corpus(per_class, seed)
    write_idx(images, images_path, labels_path)
