"""Matching surfaces and their signal-to-noise statistic.

Every method returns a :class:`MatchingSurface` whose peak is the best
candidate shift. Dissimilarity measures (SSD, SAD) are negated so the
peak convention is the same for all of them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .focusing import FocusConfig, focus_field, focus_image
from .image_core import ImageError, as_image
from .spectral import cross_correlate, cross_correlate_fields, shift_grids
from .whitening import orientation_operator, phase_operator

ORIENTATION = "orientation"
PHASE = "phase"
FOCUSED_ORIENTATION = "focused_orientation"
FOCUSED_PHASE = "focused_phase"
S0 = "s0"
SSD = "ssd"
SAD = "sad"

# the four methods compared in sequence experiments
METHODS = (ORIENTATION, PHASE, FOCUSED_ORIENTATION, FOCUSED_PHASE)
FOCUSED_METHODS = (FOCUSED_ORIENTATION, FOCUSED_PHASE)

# direct O(N^2) SAD is refused above this many pixels
SAD_MAX_PIXELS = 64 * 64


class ConstantSurfaceError(ValueError):
    """The surface has zero spread, so its SNR is undefined."""


@dataclass(frozen=True)
class MatchingSurface:
    """A correlation surface indexed by circular shift, with its peak statistics.

    ``peak_shift`` is ``(dx, dy)``. For SSD/SAD ``surface`` holds the
    negated dissimilarity.
    """

    surface: np.ndarray = field(repr=False)
    peak_shift: tuple[int, int]
    peak_value: float
    stdev: float
    method: str

    @classmethod
    def from_surface(cls, surface, method: str) -> MatchingSurface:
        surface = np.asarray(surface, dtype=np.float64)
        peak_value = float(surface.max())
        dx, dy = shift_grids(surface.shape)
        # ties: smallest |s|, then lexicographic on (dx, dy)
        rows, cols = np.nonzero(surface == peak_value)
        cand = sorted(
            (int(dx[r, c]) ** 2 + int(dy[r, c]) ** 2, int(dx[r, c]), int(dy[r, c]))
            for r, c in zip(rows, cols)
        )
        _, px, py = cand[0]
        return cls(surface, (px, py), peak_value, float(surface.std()), method)

    @property
    def snr(self) -> float:
        return snr(self)


def snr(s: MatchingSurface) -> float:
    """Peak value over the standard deviation of all surface values."""
    if not s.stdev > 0:
        raise ConstantSurfaceError(f"{s.method} surface is constant; SNR undefined")
    return s.peak_value / s.stdev


def _pair(f, g) -> tuple[np.ndarray, np.ndarray]:
    f = as_image(f)
    g = as_image(g)
    if f.shape != g.shape:
        raise ImageError(f"dimension mismatch: {f.shape} vs {g.shape}")
    return f, g


def surface_s0(f, g) -> MatchingSurface:
    """Plain cross-correlation."""
    f, g = _pair(f, g)
    return MatchingSurface.from_surface(cross_correlate(f, g), S0)


def ssd_surface(f, g) -> np.ndarray:
    """Circular sum of squared differences via ``sum f^2 + sum g^2 - 2 S0``."""
    f, g = _pair(f, g)
    return np.sum(f * f) + np.sum(g * g) - 2.0 * cross_correlate(f, g)


def surface_ssd(f, g) -> MatchingSurface:
    """SSD dissimilarity, negated; the peak is the SSD minimum."""
    return MatchingSurface.from_surface(-ssd_surface(f, g), SSD)


def sad_surface(f, g) -> np.ndarray:
    """Direct circular sum of absolute differences ``sum_x |f(x - s) - g(x)|``."""
    f, g = _pair(f, g)
    if f.size > SAD_MAX_PIXELS:
        raise ImageError(f"SAD is evaluated directly; image of {f.size} px exceeds {SAD_MAX_PIXELS}")
    h, w = f.shape
    out = np.empty((h, w))
    for dy in range(h):
        for dx in range(w):
            out[dy, dx] = np.abs(np.roll(f, (dy, dx), axis=(0, 1)) - g).sum()
    return out


def surface_sad(f, g) -> MatchingSurface:
    return MatchingSurface.from_surface(-sad_surface(f, g), SAD)


def surface_orientation(f, g) -> MatchingSurface:
    """Orientation correlation: scalar-product correlation of unit gradient fields."""
    f, g = _pair(f, g)
    s = cross_correlate_fields(orientation_operator(f), orientation_operator(g))
    return MatchingSurface.from_surface(s, ORIENTATION)


def surface_phase(f, g) -> MatchingSurface:
    """Phase correlation of the phase-whitened periodic components."""
    f, g = _pair(f, g)
    return MatchingSurface.from_surface(cross_correlate(phase_operator(f), phase_operator(g)), PHASE)


def surface_focused_orientation(f, g, cfg: FocusConfig | None = None, focus_both: bool = False) -> MatchingSurface:
    """Orientation correlation with the first field focused.

    ``focus_both`` also focuses the second field (off by default).
    """
    f, g = _pair(f, g)
    cfg = FocusConfig() if cfg is None else cfg
    a = focus_field(orientation_operator(f), cfg)
    b = orientation_operator(g)
    if focus_both:
        b = focus_field(b, cfg)
    return MatchingSurface.from_surface(cross_correlate_fields(a, b), FOCUSED_ORIENTATION)


def surface_focused_phase(f, g, cfg: FocusConfig | None = None, focus_both: bool = False) -> MatchingSurface:
    """Phase correlation with the first whitened image focused."""
    f, g = _pair(f, g)
    cfg = FocusConfig() if cfg is None else cfg
    a = focus_image(phase_operator(f), cfg)
    b = phase_operator(g)
    if focus_both:
        b = focus_image(b, cfg)
    return MatchingSurface.from_surface(cross_correlate(a, b), FOCUSED_PHASE)


def compute_surface(method: str, f, g, cfg: FocusConfig | None = None) -> MatchingSurface:
    """Dispatch on a method tag."""
    if method == ORIENTATION:
        return surface_orientation(f, g)
    if method == PHASE:
        return surface_phase(f, g)
    if method == FOCUSED_ORIENTATION:
        return surface_focused_orientation(f, g, cfg)
    if method == FOCUSED_PHASE:
        return surface_focused_phase(f, g, cfg)
    if method == S0:
        return surface_s0(f, g)
    if method == SSD:
        return surface_ssd(f, g)
    if method == SAD:
        return surface_sad(f, g)
    raise ValueError(f"unknown method {method!r}")


def noise_floor(n_pixels: int) -> float:
    """Expected SNR of a whitened surface with no common content, ``sqrt(2 ln N)``."""
    return float(np.sqrt(2.0 * np.log(n_pixels)))
