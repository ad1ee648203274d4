"""Spatially varying Gaussian blur ("focusing").

The blur width grows linearly with the distance from a focus point::

    sigma(x) = min(epsilon * |x - focus|, sigma_max)

so the neighbourhood of the focus stays sharp while the periphery is
progressively smoothed. The variable-width convolution is approximated
with a stack of ``levels`` global blurs evenly spaced in sigma over
``[0, sigma_max]``; each pixel linearly interpolates between the two
levels that bracket its own sigma.

Global blurs are circular (the inputs are whitened images that are
correlated circularly) and use a Gaussian truncated at ``TRUNCATE``
sigmas and renormalised to unit sum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .image_core import ImageError, as_image

DEFAULT_EPSILON = 0.06
DEFAULT_LEVELS = 16
TRUNCATE = 4.0


@dataclass(frozen=True)
class FocusConfig:
    """Parameters of the focusing blur.

    ``focus`` is ``(x, y)`` in pixels; ``None`` means the image centre.
    ``sigma_max`` of ``None`` means ``epsilon`` times half the image
    diagonal, i.e. no cap inside the frame when the focus is central.
    """

    epsilon: float = DEFAULT_EPSILON
    focus: tuple[float, float] | None = None
    levels: int = DEFAULT_LEVELS
    sigma_max: float | None = None

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.levels < 2:
            raise ValueError(f"levels must be >= 2, got {self.levels}")
        if self.sigma_max is not None and self.sigma_max <= 0:
            raise ValueError(f"sigma_max must be > 0, got {self.sigma_max}")

    def resolve(self, shape) -> tuple[np.ndarray, float]:
        """Concrete ``(focus, sigma_max)`` for an image of ``shape``."""
        h, w = shape
        if self.focus is None:
            focus = np.array([(w - 1) / 2.0, (h - 1) / 2.0])
        else:
            focus = np.asarray(self.focus, dtype=np.float64)
            if not (0 <= focus[0] <= w - 1 and 0 <= focus[1] <= h - 1):
                raise ImageError(f"focus {tuple(focus)} outside image of size {w}x{h}")
        sigma_max = self.sigma_max
        if sigma_max is None:
            sigma_max = max(self.epsilon * np.hypot(w, h) / 2.0, 1e-6)
        return focus, float(sigma_max)


def sigma_at(x, cfg: FocusConfig, focus=None, sigma_max=None) -> np.ndarray | float:
    """Blur width at pixel(s) ``x`` (``(x, y)`` pairs, last axis of size 2).

    ``focus`` and ``sigma_max`` default to the config values; with a
    ``None`` focus in the config they must be given explicitly (see
    :meth:`FocusConfig.resolve`).
    """
    focus = cfg.focus if focus is None else focus
    if focus is None:
        raise ValueError("config has no explicit focus; resolve it against an image first")
    cap = cfg.sigma_max if sigma_max is None else sigma_max
    d = np.linalg.norm(np.asarray(x, dtype=np.float64) - np.asarray(focus, dtype=np.float64), axis=-1)
    sigma = cfg.epsilon * d
    if cap is not None:
        sigma = np.minimum(sigma, cap)
    return float(sigma) if np.ndim(sigma) == 0 else sigma


def sigma_map(shape, cfg: FocusConfig) -> np.ndarray:
    """Per-pixel sigma for an image of ``shape``."""
    focus, sigma_max = cfg.resolve(shape)
    h, w = shape
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    d = np.hypot(xx - focus[0], yy - focus[1])
    return np.minimum(cfg.epsilon * d, sigma_max)


def gaussian_kernel1d(sigma: float, truncate: float = TRUNCATE) -> np.ndarray:
    """Sampled Gaussian on ``[-r, r]`` with ``r = ceil(truncate * sigma)``, unit sum."""
    if sigma <= 0:
        return np.ones(1)
    radius = int(np.ceil(truncate * sigma))
    t = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (t / sigma) ** 2)
    return k / k.sum()


def _kernel_transfer(sigma: float, n: int) -> np.ndarray:
    """DFT of the truncated kernel wrapped onto a circle of length ``n``."""
    k = gaussian_kernel1d(sigma)
    radius = (k.size - 1) // 2
    wrapped = np.zeros(n)
    np.add.at(wrapped, np.arange(-radius, radius + 1) % n, k)
    return np.fft.fft(wrapped)


def circular_blur(img, sigma: float) -> np.ndarray:
    """Separable circular Gaussian blur of a 2-D (or stacked ``(..., H, W)``) array."""
    arr = np.asarray(img, dtype=np.float64)
    if sigma <= 0:
        return arr.copy()
    h, w = arr.shape[-2:]
    transfer = _kernel_transfer(sigma, h)[:, None] * _kernel_transfer(sigma, w)[None, :]
    return np.fft.ifft2(np.fft.fft2(arr, axes=(-2, -1)) * transfer, axes=(-2, -1)).real


def blur_levels(cfg: FocusConfig, sigma_max: float) -> np.ndarray:
    return np.linspace(0.0, sigma_max, cfg.levels)


def _focus_stack(arr: np.ndarray, cfg: FocusConfig) -> np.ndarray:
    """Focus the trailing ``(H, W)`` axes of ``arr``."""
    shape = arr.shape[-2:]
    if cfg.epsilon == 0:
        return arr.copy()
    sig = sigma_map(shape, cfg)
    _, sigma_max = cfg.resolve(shape)
    levels = blur_levels(cfg, sigma_max)
    step = levels[1] - levels[0]
    pos = np.clip(sig / step, 0.0, cfg.levels - 1)
    lower = np.minimum(np.floor(pos).astype(int), cfg.levels - 2)
    frac = pos - lower

    out = np.zeros_like(arr)
    spectrum = np.fft.fft2(arr, axes=(-2, -1))
    h, w = shape
    for k, sigma in enumerate(levels):
        use_lo = lower == k
        use_hi = lower == k - 1
        if not (use_lo.any() or use_hi.any()):
            continue
        if sigma == 0:
            blurred = arr
        else:
            transfer = _kernel_transfer(sigma, h)[:, None] * _kernel_transfer(sigma, w)[None, :]
            blurred = np.fft.ifft2(spectrum * transfer, axes=(-2, -1)).real
        weight = np.where(use_lo, 1.0 - frac, 0.0) + np.where(use_hi, frac, 0.0)
        out += weight * blurred
    # pixels exactly at the focus keep their value bit-for-bit
    exact = sig == 0
    if exact.any():
        out[..., exact] = arr[..., exact]
    return out


def focus_image(img, cfg: FocusConfig) -> np.ndarray:
    """Blur ``img`` with a width that grows with the distance from the focus."""
    return _focus_stack(as_image(img), cfg)


def focus_field(field, cfg: FocusConfig) -> np.ndarray:
    """Focus each channel of a ``(2, H, W)`` vector field independently.

    Vectors are not renormalised afterwards: where neighbouring
    orientations disagree the blurred vector gets shorter.
    """
    field = np.asarray(field, dtype=np.float64)
    if field.ndim != 3 or field.shape[0] != 2:
        raise ImageError(f"expected a (2, H, W) field, got {field.shape}")
    return _focus_stack(field, cfg)
