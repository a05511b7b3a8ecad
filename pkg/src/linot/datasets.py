"""Image ingestion: IDX files, image-to-measure conversion, augmentation.

Images are grayscale grids; converting one to a measure keeps each pixel
above the mass floor as an atom at the pixel center, weighted by its
intensity.  The augmentation applies a random rescale plus an integer
random shift, keeping the glyph inside the frame.
"""
from __future__ import annotations

import logging
import struct
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .measures import DiscreteMeasure, EmptySupport, make_measure

log = logging.getLogger(__name__)

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


class BadMagic(ValueError):
    """IDX file did not start with the expected magic number."""


class TruncatedFile(ValueError):
    """IDX file ended before the declared payload."""


class CountMismatch(ValueError):
    """Image and label files disagree on the number of items."""


@dataclass(frozen=True)
class ImageGrid:
    """A grayscale image with intensities in [0, 1], row-major."""

    width: int
    height: int
    pixels: np.ndarray
    label: int

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=float).ravel()
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)
        if len(px) != self.width * self.height:
            raise ValueError("pixel count must equal width * height")

    def grid(self) -> np.ndarray:
        return self.pixels.reshape(self.height, self.width)


@dataclass(frozen=True)
class AugmentSpec:
    scale_min: float = 0.4
    scale_max: float = 1.2
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.scale_min <= self.scale_max:
            raise ValueError("need 0 < scale_min <= scale_max")


def _read_be32(buf: bytes, offset: int) -> int:
    if offset + 4 > len(buf):
        raise TruncatedFile("header ends early")
    return struct.unpack_from(">I", buf, offset)[0]


def load_idx(images_path, labels_path) -> list:
    """Parse the classic big-endian IDX pair into labeled images.

    Pixel bytes are mapped to [0, 1] by dividing by 255.
    """
    with open(images_path, "rb") as fh:
        raw = fh.read()
    magic = _read_be32(raw, 0)
    if magic != IDX_IMAGES_MAGIC:
        raise BadMagic(f"image file magic 0x{magic:08x} != 0x{IDX_IMAGES_MAGIC:08x}")
    count = _read_be32(raw, 4)
    height = _read_be32(raw, 8)
    width = _read_be32(raw, 12)
    need = 16 + count * height * width
    if len(raw) < need:
        raise TruncatedFile(f"image payload is {len(raw) - 16} bytes, need {need - 16}")
    pixels = np.frombuffer(raw, dtype=np.uint8, count=count * height * width, offset=16)
    pixels = pixels.reshape(count, height * width).astype(float) / 255.0

    with open(labels_path, "rb") as fh:
        raw_labels = fh.read()
    magic = _read_be32(raw_labels, 0)
    if magic != IDX_LABELS_MAGIC:
        raise BadMagic(f"label file magic 0x{magic:08x} != 0x{IDX_LABELS_MAGIC:08x}")
    label_count = _read_be32(raw_labels, 4)
    if label_count != count:
        raise CountMismatch(f"{count} images but {label_count} labels")
    if len(raw_labels) < 8 + count:
        raise TruncatedFile("label payload ends early")
    labels = np.frombuffer(raw_labels, dtype=np.uint8, count=count, offset=8)

    return [
        ImageGrid(width=width, height=height, pixels=pixels[i], label=int(labels[i]))
        for i in range(count)
    ]


def write_idx(images: list, images_path, labels_path) -> None:
    """Write labeled images back out in IDX format (intensities -> bytes)."""
    count = len(images)
    if count == 0:
        raise EmptySupport("nothing to write")
    height, width = images[0].height, images[0].width
    with open(images_path, "wb") as fh:
        fh.write(struct.pack(">IIII", IDX_IMAGES_MAGIC, count, height, width))
        for img in images:
            byts = np.clip(np.rint(img.pixels * 255.0), 0, 255).astype(np.uint8)
            fh.write(byts.tobytes())
    with open(labels_path, "wb") as fh:
        fh.write(struct.pack(">II", IDX_LABELS_MAGIC, count))
        fh.write(bytes(int(img.label) for img in images))


def image_to_measure(img: ImageGrid, mass_floor: float = 0.0) -> DiscreteMeasure:
    """Atoms at centers of pixels brighter than the floor, intensity-weighted.

    Coordinates are (column, row) in grid units.
    """
    grid = img.grid()
    rows, cols = np.nonzero(grid > mass_floor)
    if len(rows) == 0:
        raise EmptySupport("image has no pixel above the mass floor")
    points = np.column_stack([cols.astype(float), rows.astype(float)])
    return make_measure(points, grid[rows, cols])


def _bilinear_resize(grid: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Center-aligned bilinear resample; exact copy when sizes match."""
    in_h, in_w = grid.shape
    if (out_h, out_w) == (in_h, in_w):
        return grid.copy()
    r = (np.arange(out_h) + 0.5) * in_h / out_h - 0.5
    c = (np.arange(out_w) + 0.5) * in_w / out_w - 0.5
    r0 = np.floor(r).astype(int)
    c0 = np.floor(c).astype(int)
    fr = (r - r0)[:, None]
    fc = (c - c0)[None, :]
    r0c = np.clip(r0, 0, in_h - 1)
    r1c = np.clip(r0 + 1, 0, in_h - 1)
    c0c = np.clip(c0, 0, in_w - 1)
    c1c = np.clip(c0 + 1, 0, in_w - 1)
    top = grid[np.ix_(r0c, c0c)] * (1 - fc) + grid[np.ix_(r0c, c1c)] * fc
    bottom = grid[np.ix_(r1c, c0c)] * (1 - fc) + grid[np.ix_(r1c, c1c)] * fc
    return top * (1 - fr) + bottom * fr


def _glyph_bbox(grid: np.ndarray) -> tuple:
    rows, cols = np.nonzero(grid > 0)
    if len(rows) == 0:
        raise EmptySupport("blank image")
    return rows.min(), rows.max(), cols.min(), cols.max()


def rescale_and_place(
    img: ImageGrid, scale: float, row_off: int, col_off: int
) -> ImageGrid:
    """Deterministic augmentation core: resize, then paste at an offset.

    The glyph's bounding box is placed with its top-left corner at
    (row_off, col_off) inside an empty frame of the original size; the
    total pixel mass is renormalized to the input's.
    """
    grid = img.grid()
    total = grid.sum()
    out_h = max(1, int(round(img.height * scale)))
    out_w = max(1, int(round(img.width * scale)))
    resized = _bilinear_resize(grid, out_h, out_w)
    r0, r1, c0, c1 = _glyph_bbox(resized)
    block = resized[r0 : r1 + 1, c0 : c1 + 1]
    frame = np.zeros((img.height, img.width))
    bh, bw = block.shape
    if row_off < 0 or col_off < 0 or row_off + bh > img.height or col_off + bw > img.width:
        raise ValueError("offset places the glyph outside the frame")
    frame[row_off : row_off + bh, col_off : col_off + bw] = block
    mass = frame.sum()
    if mass > 0 and total > 0:
        frame *= total / mass
    return ImageGrid(
        width=img.width, height=img.height, pixels=frame.ravel(), label=img.label
    )


def augment(img: ImageGrid, spec: AugmentSpec, seed: Optional[int] = None) -> ImageGrid:
    """Random rescale in [scale_min, scale_max] plus random in-frame shift.

    Scales that would push the glyph beyond the frame are clamped (and
    logged).  Shifts are integer-pixel, uniform over the positions that
    keep the glyph fully inside.
    """
    rng = np.random.default_rng(spec.seed if seed is None else seed)
    scale = float(rng.uniform(spec.scale_min, spec.scale_max))
    grid = img.grid()
    r0, r1, c0, c1 = _glyph_bbox(grid)
    glyph_h, glyph_w = r1 - r0 + 1, c1 - c0 + 1
    max_scale = min(img.height / glyph_h, img.width / glyph_w)
    for _ in range(64):
        out_h = max(1, int(round(img.height * scale)))
        out_w = max(1, int(round(img.width * scale)))
        resized = _bilinear_resize(grid, out_h, out_w)
        rr0, rr1, cc0, cc1 = _glyph_bbox(resized)
        if rr1 - rr0 + 1 <= img.height and cc1 - cc0 + 1 <= img.width:
            break
        log.debug("clamping scale %.3f (glyph larger than frame)", scale)
        scale = min(scale * 0.95, max_scale)
    bh, bw = rr1 - rr0 + 1, cc1 - cc0 + 1
    row_off = int(rng.integers(0, img.height - bh + 1))
    col_off = int(rng.integers(0, img.width - bw + 1))
    return rescale_and_place(img, scale, row_off, col_off)


def augment_all(images: list, spec: AugmentSpec) -> list:
    """Augment a batch with per-image seeds derived from the spec seed."""
    seeds = np.random.SeedSequence(spec.seed).generate_state(len(images))
    return [augment(img, spec, seed=int(s)) for img, s in zip(images, seeds)]


@dataclass(frozen=True)
class GaussianRefSpec:
    """Reference support: grid points near the center, bell-curve weighted."""

    grid_shape: tuple = (28, 28)
    std: float = 4.0
    center: Optional[tuple] = None
    truncation_radius: Optional[float] = None
    target_size: int = 70


@dataclass(frozen=True)
class UniformGridSpec:
    """Reference support: a uniformly weighted regular grid over a box."""

    box: tuple = ((0.0, 27.0), (0.0, 27.0))
    resolution: int = 5


def select_reference_support(spec) -> DiscreteMeasure:
    """Build the reference measure from its spec.

    Gaussian: the ``target_size`` grid points closest to the center (or all
    points within ``truncation_radius`` when given), weighted by an
    isotropic bell curve.  UniformGrid: a regular grid with equal weights.
    """
    if isinstance(spec, UniformGridSpec):
        axes = [np.linspace(lo, hi, spec.resolution) for lo, hi in spec.box]
        mesh = np.meshgrid(*axes, indexing="ij")
        points = np.column_stack([m.ravel() for m in mesh])
        return make_measure(points, None)
    if isinstance(spec, GaussianRefSpec):
        h, w = spec.grid_shape
        cols, rows = np.meshgrid(np.arange(w), np.arange(h))
        points = np.column_stack([cols.ravel().astype(float), rows.ravel().astype(float)])
        center = (
            np.asarray(spec.center, dtype=float)
            if spec.center is not None
            else np.array([(w - 1) / 2.0, (h - 1) / 2.0])
        )
        d2 = np.einsum("ij,ij->i", points - center, points - center)
        if spec.truncation_radius is not None:
            keep = np.nonzero(d2 <= spec.truncation_radius**2)[0]
            if len(keep) == 0:
                raise EmptySupport("no grid point within the truncation radius")
        else:
            order = np.lexsort((np.arange(len(points)), d2))
            keep = np.sort(order[: spec.target_size])
            if len(keep) == 0:
                raise EmptySupport("target size is zero")
        weights = np.exp(-d2[keep] / (2 * spec.std**2))
        return make_measure(points[keep], weights)
    raise TypeError(f"unknown reference spec {type(spec).__name__}")


def reference_from_config(doc: dict) -> DiscreteMeasure:
    kind = doc.get("kind", "gaussian")
    if kind in ("gaussian", "gaussian_grid"):
        return select_reference_support(
            GaussianRefSpec(
                grid_shape=tuple(doc.get("grid_shape", (28, 28))),
                std=float(doc.get("std", 4.0)),
                center=tuple(doc["center"]) if "center" in doc else None,
                truncation_radius=doc.get("truncation_radius"),
                target_size=int(doc.get("target_size", 70)),
            )
        )
    if kind in ("uniform_grid", "grid"):
        return select_reference_support(
            UniformGridSpec(
                box=tuple(tuple(b) for b in doc.get("box", ((0.0, 27.0), (0.0, 27.0)))),
                resolution=int(doc.get("resolution", 5)),
            )
        )
    raise ValueError(f"unknown reference kind {kind!r}")
