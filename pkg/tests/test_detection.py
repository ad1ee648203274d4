import math

import numpy as np
import pytest

from focuscorr import detection, synth
from focuscorr.correlation import FOCUSED_METHODS, METHODS, MatchingSurface, noise_floor
from focuscorr.detection import (
    CROP,
    DetectionConfig,
    SnrSeries,
    detect,
    detect_sequence,
    estimate_thresholds,
    series_to_csv,
    snr_series,
    verdicts_to_csv,
)
from focuscorr.image_core import ImageError, left_third


def impulse_surface(target_snr, shape=(64, 64), shift=(0, 0)):
    """A surface with a single peak whose SNR is exactly ``target_snr``."""
    n = shape[0] * shape[1]
    # peak h over zeros: snr = n / sqrt(n - 1); add a constant to lower it
    surf = np.zeros(shape)
    surf[shift[1] % shape[0], shift[0] % shape[1]] = 1.0
    base = MatchingSurface.from_surface(surf, "x")
    # snr(h + c) = (1 + c) / std; solve for c
    c = target_snr * base.stdev - 1.0
    return surf + c


@pytest.fixture
def stub_surfaces(monkeypatch):
    values = {}

    def fake(method, f, g, cfg=None):
        return MatchingSurface.from_surface(impulse_surface(values[method]), method)

    monkeypatch.setattr(detection, "compute_surface", fake)
    return values


def pair(rotation_deg=0.0, shift=(0, 0), seed=0, boat=True, dt=2.0):
    spec = synth.pair_spec(np.deg2rad(rotation_deg), shift, seed=seed, boat=boat, dt=dt)
    frames, truth = synth.generate(spec)
    return frames, truth


def test_stub_surface_snr():
    s = MatchingSurface.from_surface(impulse_surface(7.5), "x")
    assert s.snr == pytest.approx(7.5)


def test_before_t_sea_never_present(stub_surfaces):
    stub_surfaces.update({m: 50.0 for m in FOCUSED_METHODS})
    v = detect(np.zeros((8, 8)), np.zeros((8, 8)), 0.5)
    assert not v.present
    assert v.best_snr == pytest.approx(50.0)


def test_threshold_rule(stub_surfaces):
    stub_surfaces.update({FOCUSED_METHODS[0]: 6.0, FOCUSED_METHODS[1]: 7.5})
    v = detect(np.zeros((8, 8)), np.zeros((8, 8)), 1.5)
    assert v.present
    assert v.best_method == FOCUSED_METHODS[1]
    stub_surfaces.update({FOCUSED_METHODS[1]: 6.9})
    assert not detect(np.zeros((8, 8)), np.zeros((8, 8)), 1.5).present


def test_late_pair_is_low_confidence(stub_surfaces):
    stub_surfaces.update({m: 9.0 for m in FOCUSED_METHODS})
    v = detect(np.zeros((8, 8)), np.zeros((8, 8)), 4.0)
    assert v.present and v.low_confidence


def test_synthetic_rotated_boat_detected():
    (f, g), _ = pair(3.0, (8, 2), seed=1)
    v = detect(f, g, 2.0)
    assert v.present
    assert abs(v.peak_shift[0] - 8) <= 1 and abs(v.peak_shift[1] - 2) <= 1
    # verdict consistency from its own fields
    assert v.best_snr == max(r.snr for r in v.per_method)
    assert v.present == (v.best_snr > 7 and v.dt > 1)
    assert {r.method for r in v.per_method} == set(FOCUSED_METHODS)


def test_boatless_pair_not_detected():
    (f, g), _ = pair(boat=False, seed=2)
    v = detect(f, g, 2.0)
    assert not v.present
    assert v.best_snr < 7


def test_detect_errors():
    with pytest.raises(ImageError, match="mismatch"):
        detect(np.zeros((8, 8)), np.zeros((8, 9)), 2.0)
    with pytest.raises(ValueError, match="positive"):
        detect(np.zeros((8, 8)), np.zeros((8, 8)), 0.0)


@pytest.mark.parametrize(
    "kw", [{"t_sea": 3.0, "t_max": 3.0}, {"t_sea": 0.0}, {"snr_sea": 1.0}, {"consecutive": 0}]
)
def test_config_validation(kw):
    with pytest.raises(ValueError):
        DetectionConfig(**kw)


def test_sequence_consecutive_rule(stub_surfaces, monkeypatch):
    snrs = iter([9.0, 3.0, 9.0, 9.0])

    def fake_detect(f, g, dt, cfg):
        s = next(snrs)
        return detection.DetectionVerdict(s > cfg.snr_sea, "m", s, (0, 0), (), dt)

    frames = [np.zeros((8, 8))] * 5
    times = [0.0, 1.2, 1.6, 2.0, 2.4]
    monkeypatch.setattr(detection, "detect", fake_detect)
    present, verdicts = detect_sequence(frames, times, DetectionConfig(consecutive=2))
    assert present and len(verdicts) == 4
    snrs = iter([9.0, 3.0, 9.0, 3.0])
    present, _ = detect_sequence(frames, times, DetectionConfig(consecutive=2))
    assert not present


def test_sequence_ignores_low_confidence_pairs(stub_surfaces):
    stub_surfaces.update({m: 9.0 for m in FOCUSED_METHODS})
    frames = [np.zeros((8, 8))] * 2
    present, verdicts = detect_sequence(frames, [0.0, 5.0])
    assert verdicts[0].present and verdicts[0].low_confidence
    assert not present


def test_series_identical_frames():
    frames = [np.random.default_rng(1).uniform(size=(48, 48))] * 4
    s = snr_series(frames, [0, 1, 2, 3])
    for m in METHODS:
        np.testing.assert_allclose(s.values[m], s.values[m][0])
        assert s.values[m][0] > 7
    np.testing.assert_array_equal(s.timestamps, [1, 2, 3])


def test_series_errors():
    with pytest.raises(ImageError, match="two frames"):
        snr_series([np.zeros((8, 8))], [0.0])
    with pytest.raises(ImageError, match="increasing"):
        snr_series([np.zeros((8, 8))] * 2, [1.0, 1.0])


def test_rocking_series_periodic():
    poses = synth.rocking_poses(0.1, 4.0, 2.0, 8.0)
    spec = synth.SceneSpec(seed=7, poses=tuple(poses), fps=2.0)
    frames, truth = synth.generate(spec)
    series = snr_series(frames, truth.timestamps, methods=(METHODS[2], METHODS[3]))
    best = series.best()
    angles = np.array([abs(np.arctan2(t.linear[1, 0], t.linear[0, 0])) for t in truth.distortions[1:]])
    still = angles < 1e-6
    tilted = angles > 0.09
    assert still.sum() == 4 and tilted.sum() == 4
    assert best[still].min() > best[tilted].max()


def test_boatless_crop_series_below_threshold():
    spec = synth.SceneSpec(seed=4, boat=None, poses=(synth.AffineTransform.identity(),) * 5)
    frames, truth = synth.generate(spec)
    region = left_third(spec.width, spec.height)
    series = snr_series(frames, truth.timestamps, region=region)
    assert series.region == CROP
    assert series.n_pixels == region.width * region.height
    assert series.best().max() < 7


def test_estimate_thresholds_on_synthetic_sea():
    spec = synth.SceneSpec(seed=5, boat=None, poses=(synth.AffineTransform.identity(),) * 5)
    frames, truth = synth.generate(spec)
    series = snr_series(frames, truth.timestamps)
    t_sea, snr_sea = estimate_thresholds(series)
    assert t_sea == 1.0
    assert math.ceil(noise_floor(series.n_pixels)) <= snr_sea < 7


def test_estimate_thresholds_slow_sea():
    # strongly remembered sea: the first pairs still correlate
    spec = synth.SceneSpec(seed=5, boat=None, sea_memory=0.4, poses=(synth.AffineTransform.identity(),) * 8)
    frames, truth = synth.generate(spec)
    series = snr_series(frames, truth.timestamps)
    t_sea, snr_sea = estimate_thresholds(series)
    assert 3.0 <= t_sea <= 5.0
    assert snr_sea < 7


def test_estimate_thresholds_large_frame_bound():
    n = 512 * 512
    assert noise_floor(n) == pytest.approx(5.0, abs=0.01)
    series = SnrSeries([1, 2, 3], {"m": [4.1, 4.3, 4.0]}, n_pixels=n)
    t_sea, snr_sea = estimate_thresholds(series)
    assert t_sea == 1.0
    assert snr_sea >= 5.0


def test_estimate_thresholds_degenerate():
    series = SnrSeries([1, 2, 3], {"m": [60.0, 60.0, 60.0]}, n_pixels=4096)
    with pytest.raises(ValueError, match="never decorrelates"):
        estimate_thresholds(series)
    with pytest.raises(ValueError, match="too short"):
        estimate_thresholds(SnrSeries([1, 2, 3], {"m": [60.0, 60.0, 4.0]}, n_pixels=4096))
    # constant frames give no surface at all
    with pytest.raises(ValueError):
        snr_series([np.full((16, 16), 0.5)] * 3, [0, 1, 2])


def test_series_csv_format():
    s = SnrSeries([1.0, 2.0], {"a": [5.0, 6.5], "b": [1.0, 2.0]}, region=CROP)
    text = series_to_csv(s)
    lines = text.splitlines()
    assert lines[0] == "timestamp,method,region,snr"
    assert lines[1] == "1.000000,a,crop,5.000000"
    assert len(lines) == 5


def test_verdict_csv_format(stub_surfaces):
    stub_surfaces.update({FOCUSED_METHODS[0]: 8.0, FOCUSED_METHODS[1]: 7.5})
    v = detect(np.zeros((64, 64)), np.zeros((64, 64)), 2.0)
    lines = verdicts_to_csv([v]).splitlines()
    assert lines[0] == "dt,method,snr,shift_x,shift_y,present"
    assert lines[1] == f"2.000000,{FOCUSED_METHODS[0]},8.000000,0,0,true"
