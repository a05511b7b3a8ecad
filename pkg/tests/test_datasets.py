"""IDX parsing, image-to-measure conversion, augmentation, references."""
import struct

import numpy as np
import pytest

from linot.datasets import (
    AugmentSpec,
    BadMagic,
    CountMismatch,
    GaussianRefSpec,
    ImageGrid,
    TruncatedFile,
    UniformGridSpec,
    augment,
    augment_all,
    image_to_measure,
    load_idx,
    rescale_and_place,
    select_reference_support,
    write_idx,
)
from linot.measures import EmptySupport


def write_fixture(tmp_path, pixel_bytes=(0, 128, 255, 17, 64, 200), magic_img=0x803, magic_lab=0x801, labels=(7,), count=None):
    count = count if count is not None else len(labels)
    img_path = tmp_path / "images-idx3-ubyte"
    lab_path = tmp_path / "labels-idx1-ubyte"
    with open(img_path, "wb") as fh:
        fh.write(struct.pack(">IIII", magic_img, count, 2, 3))
        fh.write(bytes(pixel_bytes))
    with open(lab_path, "wb") as fh:
        fh.write(struct.pack(">II", magic_lab, len(labels)))
        fh.write(bytes(labels))
    return img_path, lab_path


def test_load_idx_fixture_exact_pixels(tmp_path):
    img_path, lab_path = write_fixture(tmp_path)
    images = load_idx(img_path, lab_path)
    assert len(images) == 1
    img = images[0]
    assert (img.height, img.width) == (2, 3)
    assert img.label == 7
    expected = np.array([0, 128, 255, 17, 64, 200]) / 255.0
    assert np.array_equal(img.pixels, expected)


def test_load_idx_bad_magic(tmp_path):
    img_path, lab_path = write_fixture(tmp_path, magic_img=0x804)
    with pytest.raises(BadMagic):
        load_idx(img_path, lab_path)
    img_path2, lab_path2 = write_fixture(tmp_path, magic_lab=0x99)
    with pytest.raises(BadMagic):
        load_idx(img_path2, lab_path2)


def test_load_idx_truncated(tmp_path):
    img_path, lab_path = write_fixture(tmp_path, pixel_bytes=(0, 1, 2))
    with pytest.raises(TruncatedFile):
        load_idx(img_path, lab_path)


def test_load_idx_count_mismatch(tmp_path):
    img_path, lab_path = write_fixture(tmp_path, labels=(1, 2), count=1)
    with pytest.raises(CountMismatch):
        load_idx(img_path, lab_path)


def test_write_idx_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    imgs = [
        ImageGrid(width=4, height=4, pixels=rng.integers(0, 256, 16) / 255.0, label=k % 3)
        for k in range(5)
    ]
    ip, lp = tmp_path / "i", tmp_path / "l"
    write_idx(imgs, ip, lp)
    back = load_idx(ip, lp)
    for a, b in zip(imgs, back):
        assert np.array_equal(a.pixels, b.pixels)
        assert a.label == b.label


def test_image_to_measure_single_pixel():
    pixels = np.zeros(28 * 28)
    pixels[5 * 28 + 12] = 0.8  # row 5, col 12
    img = ImageGrid(width=28, height=28, pixels=pixels, label=1)
    mu = image_to_measure(img)
    assert mu.size == 1
    assert np.array_equal(mu.points[0], [12.0, 5.0])
    assert mu.weights[0] == 1.0


def test_image_to_measure_two_pixels_and_floor():
    pixels = np.zeros(9)
    pixels[0] = 0.5
    pixels[8] = 0.5
    pixels[4] = 0.01
    img = ImageGrid(width=3, height=3, pixels=pixels, label=0)
    mu = image_to_measure(img, mass_floor=0.05)
    assert mu.size == 2
    assert np.allclose(mu.weights, [0.5, 0.5])
    assert abs(mu.weights.sum() - 1.0) < 1e-12


def test_image_to_measure_rejects_blank():
    img = ImageGrid(width=2, height=2, pixels=np.zeros(4), label=0)
    with pytest.raises(EmptySupport):
        image_to_measure(img)


def test_rescale_identity_is_bit_exact():
    rng = np.random.default_rng(1)
    pixels = np.zeros((8, 8))
    pixels[2:6, 3:5] = rng.random((4, 2)) + 0.1
    img = ImageGrid(width=8, height=8, pixels=pixels.ravel(), label=1)
    out = rescale_and_place(img, scale=1.0, row_off=2, col_off=3)
    assert np.array_equal(out.pixels, img.pixels)


def test_rescale_half_preserves_mass():
    pixels = np.zeros((8, 8))
    pixels[3:5, 3:5] = 1.0  # centered 2x2 block
    img = ImageGrid(width=8, height=8, pixels=pixels.ravel(), label=2)
    out = rescale_and_place(img, scale=0.5, row_off=1, col_off=1)
    assert abs(out.pixels.sum() - img.pixels.sum()) <= 0.01 * img.pixels.sum()


def test_augment_deterministic_and_in_frame():
    rng = np.random.default_rng(2)
    pixels = np.zeros((28, 28))
    pixels[10:18, 12:16] = rng.random((8, 4))
    img = ImageGrid(width=28, height=28, pixels=pixels.ravel(), label=1)
    spec = AugmentSpec(scale_min=0.4, scale_max=1.2, seed=5)
    a = augment(img, spec)
    b = augment(img, spec)
    assert np.array_equal(a.pixels, b.pixels)
    batch1 = augment_all([img] * 4, spec)
    batch2 = augment_all([img] * 4, spec)
    for x, y in zip(batch1, batch2):
        assert np.array_equal(x.pixels, y.pixels)


def test_augment_clamps_large_scale():
    pixels = np.zeros((28, 28))
    pixels[2:26, 2:26] = 1.0  # nearly frame-filling glyph
    img = ImageGrid(width=28, height=28, pixels=pixels.ravel(), label=1)
    spec = AugmentSpec(scale_min=2.0, scale_max=2.0, seed=0)
    out = augment(img, spec)
    assert out.pixels.reshape(28, 28).sum() > 0  # glyph present, stayed in frame


def test_gaussian_reference_default_size():
    sigma = select_reference_support(GaussianRefSpec())
    assert abs(sigma.size - 70) <= 10
    assert sigma.dim == 2
    assert np.all(sigma.weights > 0)


def test_uniform_grid_reference():
    sigma = select_reference_support(UniformGridSpec(box=((0, 4), (0, 4)), resolution=5))
    assert sigma.size == 25
    assert np.allclose(sigma.weights, 1 / 25)


def test_gaussian_reference_truncation_empty():
    with pytest.raises(EmptySupport):
        select_reference_support(GaussianRefSpec(truncation_radius=0.0))


def test_embedding_feature_dim_matches_support():
    from linot.embedding import SolverConfig, embed
    from linot.measures import uniform_measure

    sigma = select_reference_support(GaussianRefSpec(target_size=70))
    rng = np.random.default_rng(3)
    nu = uniform_measure(rng.uniform(0, 27, size=(30, 2)))
    e = embed(sigma, nu, SolverConfig(method="sinkhorn", reg=1.0, tol=1e-6))
    assert e.flat().shape == (140,)


def test_synthetic_corpus_reproducible(tmp_path):
    from linot.synthetic import generate_corpus

    a = generate_corpus(3, seed=11)
    b = generate_corpus(3, seed=11)
    assert len(a) == 6
    assert sorted(img.label for img in a) == [1, 1, 1, 2, 2, 2]
    for x, y in zip(a, b):
        assert np.array_equal(x.pixels, y.pixels)
    mu = image_to_measure(a[0])
    assert abs(mu.weights.sum() - 1.0) < 1e-12
