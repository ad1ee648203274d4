import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image as PILImage

from focuscorr.image_core import (
    AffineTransform,
    ImageError,
    Rect,
    affine_warp,
    crop,
    distortion_norm,
    left_third,
    load_image,
    save_image,
)


def test_load_pgm_p5_scales_to_unit_range(tmp_path):
    path = tmp_path / "tiny.pgm"
    path.write_bytes(b"P5\n2 2\n255\n" + bytes([0, 255, 255, 0]))
    np.testing.assert_array_equal(load_image(path), [[0.0, 1.0], [1.0, 0.0]])


def test_load_pgm_p2_with_comment(tmp_path):
    path = tmp_path / "ascii.pgm"
    path.write_text("P2\n# comment\n3 1\n10\n0 5 10\n")
    np.testing.assert_allclose(load_image(path), [[0.0, 0.5, 1.0]])


def test_load_png_dimensions(tmp_path):
    path = tmp_path / "g.png"
    PILImage.fromarray(np.zeros((48, 64), dtype=np.uint8)).save(path)
    assert load_image(path).shape == (48, 64)


def test_load_color_png_uses_luma_weights(tmp_path):
    path = tmp_path / "rgb.png"
    rgb = np.zeros((2, 2, 3), dtype=np.uint8)
    rgb[..., 0] = 255
    PILImage.fromarray(rgb).save(path)
    np.testing.assert_allclose(load_image(path), 0.299)


def test_truncated_pgm_is_unreadable(tmp_path):
    path = tmp_path / "cut.pgm"
    path.write_bytes(b"P5\n4 4\n255\n" + bytes(5))
    with pytest.raises(ImageError, match="unreadable.*cut.pgm"):
        load_image(path)


def test_truncated_png_is_unreadable(tmp_path):
    full = tmp_path / "full.png"
    PILImage.fromarray(np.arange(64 * 64, dtype=np.uint32).reshape(64, 64).astype(np.uint8)).save(full)
    cut = tmp_path / "cut.png"
    cut.write_bytes(full.read_bytes()[:60])
    with pytest.raises(ImageError, match="unreadable"):
        load_image(cut)


def test_unsupported_format(tmp_path):
    path = tmp_path / "x.jpg"
    path.write_bytes(b"nope")
    with pytest.raises(ImageError, match="unsupported.*x.jpg"):
        load_image(path)


@pytest.mark.parametrize("suffix", [".png", ".pgm"])
def test_save_load_round_trip(tmp_path, rng, suffix):
    img = np.round(rng.uniform(0, 1, (9, 7)) * 255) / 255
    path = save_image(img, tmp_path / f"a{suffix}")
    np.testing.assert_allclose(load_image(path), img, atol=1e-12)


def test_crop_left_third():
    img = np.zeros((30, 100))
    assert crop(img, left_third(100, 30)).shape == (30, 33)


def test_crop_full_extent_is_identity(rng):
    img = rng.uniform(size=(5, 6))
    np.testing.assert_array_equal(crop(img, Rect(0, 0, 6, 5)), img)


def test_crop_out_of_bounds():
    with pytest.raises(ImageError):
        crop(np.zeros((5, 6)), Rect(1, 0, 6, 5))


@given(
    st.integers(0, 10), st.integers(0, 10), st.integers(1, 10), st.integers(1, 10),
    st.integers(0, 10), st.integers(0, 10), st.integers(1, 10), st.integers(1, 10),
)
def test_nested_crops_equal_intersection_crop(x0, y0, w0, h0, x1, y1, w1, h1):
    img = np.arange(20 * 20, dtype=float).reshape(20, 20)
    outer = Rect(x0, y0, w0, h0)
    inner = Rect(x1, y1, w1, h1)
    inter = outer.intersect(inner)
    if inter.width == 0 or inter.height == 0:
        return
    # the inner crop expressed relative to the outer one
    rel = Rect(inter.x - x0, inter.y - y0, inter.width, inter.height)
    np.testing.assert_array_equal(crop(crop(img, outer), rel), crop(img, inter))


def test_identity_warp_is_exact(rng):
    img = rng.uniform(size=(12, 10))
    np.testing.assert_array_equal(affine_warp(img, AffineTransform.identity()), img)


def test_integer_translation_warp(rng):
    img = rng.uniform(size=(8, 9))
    out = affine_warp(img, AffineTransform.shift(2, -1), fill=-1.0)
    np.testing.assert_array_equal(out[0:7, 2:], img[1:8, 0:7])
    assert np.all(out[:, :2] == -1.0)
    assert np.all(out[7, :] == -1.0)


def test_singular_warp_rejected():
    with pytest.raises(ImageError, match="singular"):
        affine_warp(np.zeros((4, 4)), AffineTransform(np.zeros((2, 2)), (0, 0)))


def test_warp_round_trip_interior(rng):
    from scipy import ndimage as ndi

    img = ndi.gaussian_filter(rng.uniform(size=(64, 64)), 3.0)
    t = AffineTransform.rotation(0.21, center=(31.5, 31.5))
    back = affine_warp(affine_warp(img, t, 0.0), t.inverse(), 0.0)
    interior = np.s_[16:48, 16:48]
    assert np.max(np.abs(back[interior] - img[interior])) < 2 / 255


def test_rotation_warp_distortion_norm():
    t = AffineTransform.rotation(0.21, center=(10, 10))
    assert distortion_norm(t) == pytest.approx(2 * np.sin(0.105), abs=1e-12)
    assert distortion_norm(t) == pytest.approx(0.2095, abs=5e-4)


def test_distortion_norm_identity():
    assert distortion_norm(np.eye(2)) == 0.0


def test_distortion_norm_reproduces_reported_matrix():
    # Frobenius would give 0.264
    assert distortion_norm([[0.92, -0.20], [0.08, 0.87]]) == pytest.approx(0.24, abs=0.005)


def test_distortion_norm_small_rotation_bound():
    c, s = np.cos(0.1), np.sin(0.1)
    value = distortion_norm([[c, -s], [s, c]])
    # brute force: largest singular value as sqrt of the largest eigenvalue of M^T M
    m = np.array([[c - 1, -s], [s, c - 1]])
    brute = np.sqrt(max(np.linalg.eigvalsh(m.T @ m)))
    assert value == pytest.approx(brute, abs=1e-12)
    assert value == pytest.approx(0.0999, abs=1e-4)
    assert value < 0.1
    assert np.degrees(0.1) < 6.0


@settings(max_examples=50)
@given(st.floats(0.0, np.pi))
def test_rotation_distortion_closed_form(theta):
    c, s = np.cos(theta), np.sin(theta)
    assert distortion_norm([[c, -s], [s, c]]) == pytest.approx(2 * np.sin(theta / 2), abs=1e-12)
