"""Whitening operators applied to images before correlation.

* :func:`orientation_operator` -- unit gradient vectors, a ``(2, H, W)``
  field with channel 0 = x component, channel 1 = y component.
* :func:`phase_operator` -- keeps only the Fourier phase.
* :func:`normalized_operator` -- local zero-mean, unit-variance windows.

Featureless pixels (no gradient, no local variance) map to zero so they
carry no weight in a correlation.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage as ndi

from .image_core import ImageError, as_image
from .spectral import periodic_smooth_decompose

# relative to the image's value range
FLAT_EPSILON = 1e-8


def _value_range(img: np.ndarray) -> float:
    return float(img.max() - img.min())


def image_gradient(img) -> tuple[np.ndarray, np.ndarray]:
    """Central differences inside, one-sided differences on the border."""
    img = as_image(img)
    if min(img.shape) < 3:
        raise ImageError(f"image too small for a gradient: {img.shape}")
    gy, gx = np.gradient(img)
    return gx, gy


def orientation_operator(img) -> np.ndarray:
    """Unit gradient field ``grad f / |grad f|``, zero where the gradient vanishes."""
    img = as_image(img)
    gx, gy = image_gradient(img)
    mag = np.hypot(gx, gy)
    flat = mag <= FLAT_EPSILON * _value_range(img)
    safe = np.where(flat, 1.0, mag)
    field = np.stack([gx / safe, gy / safe])
    field[:, flat] = 0.0
    return field


def phase_operator(img, decompose: bool = True) -> np.ndarray:
    """Phase-only whitening of the periodic component of ``img``.

    Returns the real image whose spectrum is ``F(p) / |F(p)|`` (zero bins
    stay zero), ``p`` being the periodic part of ``img``. The result has
    unit energy when no bin vanishes. ``decompose=False`` whitens ``img``
    itself, for inputs that are already periodic.
    """
    periodic = periodic_smooth_decompose(img)[0] if decompose else as_image(img)
    spec = np.fft.fft2(periodic)
    mag = np.abs(spec)
    tiny = mag <= 1e-12 * max(float(mag.max()), 1e-300)
    unit = np.where(tiny, 0.0, spec / np.where(tiny, 1.0, mag))
    return np.fft.ifft2(unit).real


def _window_sums(img: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-pixel sum, sum of squares and count over an ``n x n`` window
    truncated at the image border."""
    ones = np.ones_like(img)
    size = (n, n)
    # uniform_filter with constant 0 outside, rescaled by the window size
    count = ndi.uniform_filter(ones, size=size, mode="constant") * n * n
    s1 = ndi.uniform_filter(img, size=size, mode="constant") * n * n
    s2 = ndi.uniform_filter(img * img, size=size, mode="constant") * n * n
    return s1, s2, np.round(count)


def normalized_operator(img, n: int) -> np.ndarray:
    """Local standardisation ``(f - mean_n) / std_n`` over an ``n x n`` window.

    Windows are truncated at the border. Pixels whose local standard
    deviation is below ``FLAT_EPSILON`` of the value range map to zero.
    """
    img = as_image(img)
    if n % 2 == 0 or n < 3 or n > min(img.shape):
        raise ImageError(f"window side must be odd and in [3, {min(img.shape)}], got {n}")
    # centring first limits cancellation in E[x^2] - E[x]^2
    img = img - np.median(img)
    s1, s2, count = _window_sums(img, n)
    mean = s1 / count
    var = np.maximum(s2 / count - mean * mean, 0.0)
    std = np.sqrt(var)
    flat = std <= FLAT_EPSILON * _value_range(img)
    out = (img - mean) / np.where(flat, 1.0, std)
    out[flat] = 0.0
    return out
