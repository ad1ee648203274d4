import numpy as np
import pytest

from focuscorr import synth
from focuscorr.image_core import AffineTransform, ImageError, affine_warp, distortion_norm, load_image, load_mask
from focuscorr.whitening import orientation_operator


def test_frozen_sea_identity_poses():
    spec = synth.SceneSpec(sea_memory=1.0, poses=(AffineTransform.identity(),) * 4)
    frames, _ = synth.generate(spec)
    for fr in frames[1:]:
        np.testing.assert_array_equal(fr, frames[0])


def test_rerandomized_sea_decorrelates():
    spec = synth.SceneSpec(boat=None, poses=(AffineTransform.identity(),) * 4)
    frames, _ = synth.generate(spec)
    for a, b in zip(frames, frames[1:]):
        assert abs(np.corrcoef(a.ravel(), b.ravel())[0, 1]) < 0.05


def test_sea_memory_sets_lag_correlation():
    spec = synth.SceneSpec(boat=None, sea_memory=0.6, sea_contrast=0.02, poses=(AffineTransform.identity(),) * 2)
    (a, b), _ = synth.generate(spec)
    assert np.corrcoef(a.ravel(), b.ravel())[0, 1] == pytest.approx(0.6, abs=0.03)


def test_default_scene_hard_case():
    spec = synth.default_scene_spec()
    assert spec.n_frames == 13
    np.testing.assert_array_equal(spec.timestamps, np.arange(13.0))
    _, truth = synth.generate(spec)
    assert truth.distortion_norms()[-1] == pytest.approx(0.24, abs=0.005)
    assert truth.distortion_norms()[0] == 0.0


def test_rocking_zero_amplitude():
    for p in synth.rocking_poses(0.0, 3.0, 2.0, 6.0):
        np.testing.assert_array_equal(p.linear, np.eye(2))


def test_rocking_schedule_values():
    poses = synth.rocking_poses(0.1, 3.0, 4.0, 3.0)
    angles = np.array([np.arctan2(p.linear[1, 0], p.linear[0, 0]) for p in poses])
    assert len(poses) == 13
    t = np.arange(13) / 4.0
    np.testing.assert_allclose(angles, 0.1 * np.sin(2 * np.pi * t / 3.0), atol=1e-12)
    assert angles[6] == pytest.approx(0.0, abs=1e-12)  # t = 1.5 s, half period
    assert np.abs(angles).max() <= 0.1 + 1e-12
    assert np.abs(angles).max() == pytest.approx(0.1, abs=0.005)


def test_rocking_drift():
    poses = synth.rocking_poses(0.0, 1.0, 1.0, 2.0, drift=(1.5, -1.0))
    np.testing.assert_allclose(poses[2].translation, [3.0, -2.0])


def test_rocking_invalid():
    with pytest.raises(ValueError):
        synth.rocking_poses(0.1, 0.0, 1.0, 1.0)


def test_generate_deterministic():
    spec = synth.pair_spec(0.05, (3, 1), seed=9)
    a, _ = synth.generate(spec)
    b, _ = synth.generate(spec)
    for x, y in zip(a, b):
        assert x.tobytes() == y.tobytes()
    c, _ = synth.generate(synth.replace(spec, seed=10))
    assert not np.array_equal(a[0], c[0])


def test_ground_truth_reconstructs_frames():
    spec = synth.pair_spec(0.08, (5, -2), seed=1)
    frames, truth = synth.generate(spec)
    sea_frames, _ = synth.generate(synth.replace(spec, boat=None))
    boat_img, _ = synth.render_boat(spec)
    for k, (fr, mask) in enumerate(zip(frames, truth.masks)):
        pose = spec.poses[k]
        t = AffineTransform.about(pose.linear, spec.boat_center, pose.translation)
        boat_k = affine_warp(boat_img, t, fill=spec.sea_level)
        rebuilt = np.clip(np.where(mask, boat_k, sea_frames[k]), 0, 1)
        np.testing.assert_array_equal(rebuilt, fr)
        assert tuple(truth.shifts[k]) == tuple(pose.translation)


def test_truth_distortion_relative_to_first_frame():
    spec = synth.pair_spec(0.1, (0, 0))
    _, truth = synth.generate(spec)
    assert truth.distortion_norms()[1] == pytest.approx(2 * np.sin(0.05), abs=1e-9)
    assert distortion_norm(truth.distortions[1]) == truth.distortion_norms()[1]


def test_boat_too_large():
    spec = synth.SceneSpec(width=64, height=64, boat=synth.BoatSpec(length=80))
    with pytest.raises(ImageError, match="does not fit"):
        synth.generate(spec)


def test_boat_shifted_out_of_frame():
    with pytest.raises(ImageError, match="does not fit"):
        synth.generate(synth.pair_spec(0.0, (120, 0)))


def test_invalid_sea_memory():
    with pytest.raises(ImageError, match="sea_memory"):
        synth.generate(synth.SceneSpec(sea_memory=1.5))


def test_whitened_sea_is_white():
    spec = synth.SceneSpec(boat=None, poses=(AffineTransform.identity(),))
    (frame,), _ = synth.generate(spec)
    field = orientation_operator(frame)
    field = field - field.mean(axis=(1, 2), keepdims=True)
    energy = np.sum(field * field)
    # the central-difference stencil adds one pixel of support to the
    # sea's own correlation length, so lag 1 is still correlated
    for lag in range(2, 9):
        for axis in (1, 2):
            r = np.sum(field * np.roll(field, lag, axis=axis)) / energy
            assert r < 0.1
            assert abs(r) < 0.15


def test_write_scene_roundtrip(tmp_path):
    spec = synth.pair_spec(0.05, (4, 2), seed=3)
    out = synth.write_scene(spec, tmp_path / "scene")
    frames, truth = synth.generate(spec)
    rows = synth.read_truth(out / "truth.tsv")
    assert len(rows) == 2
    assert rows[1]["shift"] == (4.0, 2.0)
    np.testing.assert_allclose(rows[1]["linear"], truth.distortions[1].linear, atol=1e-6)
    np.testing.assert_array_equal(load_mask(rows[1]["mask"]), truth.masks[1])
    img = load_image(out / "frame_001.png")
    assert np.abs(img - frames[1]).max() <= 0.5 / 255 + 1e-12
    manifest = (out / "manifest.tsv").read_text().splitlines()
    assert manifest == ["frame_000.png\t0.000000", "frame_001.png\t1.000000"]
    again = synth.spec_from_dict(__import__("json").loads((out / "scene.json").read_text()))
    assert again == spec
