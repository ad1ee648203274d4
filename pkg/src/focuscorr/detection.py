"""Ship-presence decisions from pairs and sequences of frames.

A boat is reported when a focused correlation surface between a frame
and a later one has SNR above ``snr_sea`` and the frames are more than
``t_sea`` seconds apart (by then the sea pattern no longer matches).
Pairs further apart than ``t_max`` are still evaluated but flagged as
low confidence: the boat may have rotated beyond what focusing tolerates.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .correlation import FOCUSED_METHODS, METHODS, MatchingSurface, compute_surface, noise_floor
from .focusing import FocusConfig
from .image_core import ImageError, Rect, as_image, crop

FULL = "full"
CROP = "crop"


@dataclass(frozen=True)
class DetectionConfig:
    snr_sea: float = 7.0
    t_sea: float = 1.0
    t_max: float = 3.0
    focus: FocusConfig = field(default_factory=FocusConfig)
    # exceedance needed in this many consecutive pairs of a sequence
    consecutive: int = 1

    def __post_init__(self):
        if not 0 < self.t_sea < self.t_max:
            raise ValueError(f"need 0 < t_sea < t_max, got t_sea={self.t_sea}, t_max={self.t_max}")
        if not self.snr_sea > 1:
            raise ValueError(f"snr_sea must exceed 1, got {self.snr_sea}")
        if self.consecutive < 1:
            raise ValueError("consecutive must be >= 1")


@dataclass(frozen=True)
class MethodResult:
    method: str
    snr: float
    shift: tuple[int, int]


@dataclass(frozen=True)
class DetectionVerdict:
    present: bool
    best_method: str
    best_snr: float
    peak_shift: tuple[int, int]
    per_method: tuple[MethodResult, ...]
    dt: float
    low_confidence: bool = False
    surfaces: dict[str, MatchingSurface] = field(default_factory=dict, repr=False, compare=False)


def _decide(best_snr: float, dt: float, cfg: DetectionConfig) -> bool:
    return best_snr > cfg.snr_sea and dt > cfg.t_sea


def detect(f, g, dt: float, cfg: DetectionConfig | None = None) -> DetectionVerdict:
    """Run both focused correlations on ``(f, g)`` and apply the threshold rule."""
    cfg = DetectionConfig() if cfg is None else cfg
    f = as_image(f)
    g = as_image(g)
    if f.shape != g.shape:
        raise ImageError(f"dimension mismatch: {f.shape} vs {g.shape}")
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    surfaces = {m: compute_surface(m, f, g, cfg.focus) for m in FOCUSED_METHODS}
    results = tuple(MethodResult(m, s.snr, s.peak_shift) for m, s in surfaces.items())
    # first method wins a tie, keeping the choice deterministic
    best = max(results, key=lambda r: r.snr)
    return DetectionVerdict(
        present=_decide(best.snr, dt, cfg),
        best_method=best.method,
        best_snr=best.snr,
        peak_shift=best.shift,
        per_method=results,
        dt=float(dt),
        low_confidence=dt > cfg.t_max,
        surfaces=surfaces,
    )


def detect_sequence(frames, timestamps, cfg: DetectionConfig | None = None) -> tuple[bool, list[DetectionVerdict]]:
    """Compare every later frame with frame 0.

    The sequence verdict is positive when ``cfg.consecutive`` successive
    pairs inside ``(t_sea, t_max]`` are individually positive.
    """
    cfg = DetectionConfig() if cfg is None else cfg
    frames, timestamps = _check_sequence(frames, timestamps)
    verdicts = [detect(frames[0], fr, t - timestamps[0], cfg) for fr, t in zip(frames[1:], timestamps[1:])]
    run = 0
    present = False
    for v in verdicts:
        run = run + 1 if (v.present and not v.low_confidence) else 0
        if run >= cfg.consecutive:
            present = True
            break
    return present, verdicts


def _check_sequence(frames, timestamps):
    frames = [as_image(f) for f in frames]
    timestamps = np.asarray(timestamps, dtype=np.float64)
    if len(frames) < 2:
        raise ImageError("need at least two frames")
    if timestamps.shape != (len(frames),):
        raise ImageError("one timestamp per frame is required")
    if np.any(np.diff(timestamps) <= 0):
        raise ImageError("timestamps must be strictly increasing")
    shape = frames[0].shape
    for f in frames[1:]:
        if f.shape != shape:
            raise ImageError(f"dimension mismatch: {shape} vs {f.shape}")
    return frames, timestamps


# ---------------------------------------------------------------- SNR series


@dataclass
class SnrSeries:
    """SNR of each later frame against frame 0, per method.

    ``values[method]`` aligns with ``timestamps``; ``n_pixels`` is the
    size of the surfaces (it sets the noise floor).
    """

    timestamps: np.ndarray
    values: dict[str, np.ndarray]
    region: str = FULL
    n_pixels: int = 0

    def __post_init__(self):
        self.timestamps = np.asarray(self.timestamps, dtype=np.float64)
        if np.any(np.diff(self.timestamps) <= 0):
            raise ValueError("timestamps must be strictly increasing")
        self.values = {m: np.asarray(v, dtype=np.float64) for m, v in self.values.items()}

    def best(self) -> np.ndarray:
        return np.max(np.vstack(list(self.values.values())), axis=0)

    def rows(self):
        for i, t in enumerate(self.timestamps):
            for m, v in self.values.items():
                yield t, m, self.region, v[i]


def snr_series(frames, timestamps, cfg: DetectionConfig | None = None, region: Rect | None = None,
               methods=METHODS, on_surface=None) -> SnrSeries:
    """SNR of frames ``1..n`` against frame 0 for each method, optionally on a crop.

    ``on_surface(k, method, surface)`` is called for every surface computed,
    ``k`` being the index of the later frame.
    """
    cfg = DetectionConfig() if cfg is None else cfg
    frames, timestamps = _check_sequence(frames, timestamps)
    if region is not None:
        frames = [crop(f, region) for f in frames]
    values = {m: [] for m in methods}
    for k, fr in enumerate(frames[1:], start=1):
        for m in methods:
            surface = compute_surface(m, frames[0], fr, cfg.focus)
            values[m].append(surface.snr)
            if on_surface is not None:
                on_surface(k, m, surface)
    return SnrSeries(
        timestamps[1:] - timestamps[0],
        values,
        CROP if region is not None else FULL,
        frames[0].size,
    )


def estimate_thresholds(boatless: SnrSeries, margin: float = 1.25) -> tuple[float, float]:
    """Derive ``(t_sea, snr_sea)`` from a series measured on sea only.

    ``t_sea`` is the first time from which every later SNR (best over
    methods) stays below ``margin * sqrt(2 ln N)``; ``snr_sea`` is the
    larger of the highest SNR seen from then on and ``ceil(sqrt(2 ln N))``.
    """
    if boatless.timestamps.size < 2:
        raise ValueError("series too short to estimate thresholds")
    n = boatless.n_pixels
    if n < 2:
        raise ValueError("series does not record its surface size")
    floor = noise_floor(n)
    bound = margin * floor
    best = boatless.best()
    below = best < bound
    # suffix_ok[i]: all values from i on are below the bound
    suffix_ok = np.flip(np.logical_and.accumulate(np.flip(below)))
    if not suffix_ok.any():
        raise ValueError("sea never decorrelates within the series")
    first = int(np.argmax(suffix_ok))
    if first == boatless.timestamps.size - 1:
        raise ValueError("series too short: only its last sample is below the sea bound")
    t_sea = float(boatless.timestamps[first])
    snr_sea = max(float(best[first:].max()), float(math.ceil(floor)))
    return t_sea, snr_sea


# -------------------------------------------------------------------- CSV


def series_to_csv(series_list, path=None) -> str:
    """``timestamp,method,region,snr`` rows for one or more series."""
    if isinstance(series_list, SnrSeries):
        series_list = [series_list]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["timestamp", "method", "region", "snr"])
    for s in series_list:
        for t, m, r, v in s.rows():
            w.writerow([f"{t:.6f}", m, r, f"{v:.6f}"])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def verdicts_to_csv(verdicts, path=None) -> str:
    """``dt,method,snr,shift_x,shift_y,present`` rows, one per method per verdict."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["dt", "method", "snr", "shift_x", "shift_y", "present"])
    for v in verdicts:
        for r in v.per_method:
            w.writerow([f"{v.dt:.6f}", r.method, f"{r.snr:.6f}", r.shift[0], r.shift[1], str(v.present).lower()])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text
