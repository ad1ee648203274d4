"""Discrete Fourier transforms, border handling and circular correlation.

Conventions
-----------
* ``dft2`` is the unnormalised forward transform, ``idft2`` carries the
  ``1/N`` factor (numpy's default pair).
* Correlation surfaces are circular. Index ``[0, 0]`` of a surface is the
  zero shift; index ``[r, c]`` stands for the signed shift returned by
  :func:`signed_shift`, which lies in ``[-W/2, W/2) x [-H/2, H/2)``.
* ``cross_correlate(a, b)[s] = sum_x a(x - s) * b(x)``, so if ``b`` is
  ``a`` circularly shifted by ``s0`` the peak sits at ``s0``.
"""

from __future__ import annotations

import numpy as np

from .image_core import ImageError, as_image

# imaginary residue tolerated when a real result is requested
REAL_TOLERANCE = 1e-8


def dft2(img) -> np.ndarray:
    """Unnormalised 2-D DFT of a real or complex grid."""
    return np.fft.fft2(np.asarray(img))


def idft2(spec, real: bool = True) -> np.ndarray:
    """Inverse of :func:`dft2`.

    With ``real=True`` the imaginary residue is dropped if it is below
    ``REAL_TOLERANCE`` relative to the largest magnitude; otherwise an
    :class:`ImageError` is raised.
    """
    out = np.fft.ifft2(np.asarray(spec))
    if not real:
        return out
    scale = max(float(np.max(np.abs(out))), 1.0) if out.size else 1.0
    residue = float(np.max(np.abs(out.imag))) if out.size else 0.0
    if residue > REAL_TOLERANCE * scale:
        raise ImageError(f"inverse transform is not real (imaginary residue {residue:.3g})")
    return out.real.copy()


def periodic_smooth_decompose(img) -> tuple[np.ndarray, np.ndarray]:
    """Split ``img`` into a periodic part and a smooth part, ``img = p + s``.

    The smooth component solves a discrete Poisson problem whose source
    is the wrap-around jump across opposite borders, so ``p`` has no
    border discontinuity when tiled. The mean of ``img`` stays in ``p``.
    """
    u = as_image(img)
    h, w = u.shape
    v = np.zeros_like(u)
    du = u[-1, :] - u[0, :]
    v[0, :] += du
    v[-1, :] -= du
    du = u[:, -1] - u[:, 0]
    v[:, 0] += du
    v[:, -1] -= du

    cos_h = np.cos(2.0 * np.pi * np.fft.fftfreq(h))
    cos_w = np.cos(2.0 * np.pi * np.fft.fftfreq(w))
    denom = 2.0 * (cos_h[:, None] + cos_w[None, :] - 2.0)
    denom[0, 0] = 1.0
    s_hat = np.fft.fft2(v) / denom
    s_hat[0, 0] = 0.0
    smooth = np.fft.ifft2(s_hat).real
    return u - smooth, smooth


def _check_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ImageError(f"dimension mismatch: {a.shape} vs {b.shape}")


def cross_correlate(a, b, padded: bool = False) -> np.ndarray:
    """Circular cross-correlation ``S(s) = sum_x a(x - s) b(x)``.

    With ``padded=True`` both inputs are zero-padded to twice their size
    first, which yields the linear (non-wrapping) correlation; the
    surface then has the padded shape.
    """
    a = as_image(a)
    b = as_image(b)
    _check_same_shape(a, b)
    if padded:
        h, w = a.shape
        a = np.pad(a, ((0, h), (0, w)))
        b = np.pad(b, ((0, h), (0, w)))
    return np.fft.ifft2(np.conj(np.fft.fft2(a)) * np.fft.fft2(b)).real


def cross_correlate_fields(a, b) -> np.ndarray:
    """Circular correlation of two vector fields with the scalar product.

    ``a`` and ``b`` are ``(2, H, W)`` arrays (x-channel, y-channel); the
    result is the sum of the per-channel correlations.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 3 or a.shape[0] != 2:
        raise ImageError(f"expected a (2, H, W) field, got {a.shape}")
    _check_same_shape(a, b)
    fa = np.fft.fft2(a, axes=(-2, -1))
    fb = np.fft.fft2(b, axes=(-2, -1))
    return np.fft.ifft2(np.sum(np.conj(fa) * fb, axis=0)).real


def signed_shift(index, shape) -> tuple[int, int]:
    """Convert a surface index ``(row, col)`` to a signed ``(dx, dy)`` shift."""
    r, c = int(index[0]), int(index[1])
    h, w = shape
    dx = c - w if c >= w - w // 2 else c
    dy = r - h if r >= h - h // 2 else r
    return dx, dy


def shift_grids(shape) -> tuple[np.ndarray, np.ndarray]:
    """Signed ``dx`` and ``dy`` for every index of a surface of ``shape``."""
    h, w = shape
    dx = np.arange(w)
    dx = np.where(dx >= w - w // 2, dx - w, dx)
    dy = np.arange(h)
    dy = np.where(dy >= h - h // 2, dy - h, dy)
    return np.broadcast_to(dx[None, :], shape), np.broadcast_to(dy[:, None], shape)
