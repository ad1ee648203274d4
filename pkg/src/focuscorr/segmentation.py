"""Sea/ship separation in image space.

After detection, the second frame is shifted back by the peak shift and
the two unit-gradient fields are compared pixel by pixel; the cosine
between them (the matchability map) is high on the rigid boat and
random on the re-textured sea.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage as ndi

from .image_core import ImageError, as_image, normalize_for_display
from .whitening import orientation_operator

DEFAULT_COS_THRESHOLD = 0.4
DEFAULT_MIN_AREA_FRACTION = 0.005

_SQUARE = np.ones((3, 3), dtype=bool)


def align(g, s_max) -> np.ndarray:
    """Circularly shift ``g`` so that ``out(x) = g(x + s_max)``; ``s_max`` is ``(dx, dy)``."""
    g = as_image(g)
    dx, dy = int(s_max[0]), int(s_max[1])
    h, w = g.shape
    if abs(dx) > w // 2 or abs(dy) > h // 2:
        raise ImageError(f"shift {s_max} exceeds half the image extent {w}x{h}")
    return np.roll(g, (-dy, -dx), axis=(0, 1))


def wrap_band(shape, s_max) -> np.ndarray:
    """Pixels of ``align(g, s_max)`` that came round from the opposite border."""
    h, w = shape
    dx, dy = int(s_max[0]), int(s_max[1])
    band = np.zeros((h, w), dtype=bool)
    if dx > 0:
        band[:, w - dx :] = True
    elif dx < 0:
        band[:, :-dx] = True
    if dy > 0:
        band[h - dy :, :] = True
    elif dy < 0:
        band[:-dy, :] = True
    return band


def matchability(f, g_aligned) -> np.ndarray:
    """Per-pixel cosine between the unit gradients of ``f`` and ``g_aligned``.

    Values lie in ``[-1, 1]``; pixels where either gradient vanishes are 0.
    """
    f = as_image(f)
    g_aligned = as_image(g_aligned)
    if f.shape != g_aligned.shape:
        raise ImageError(f"dimension mismatch: {f.shape} vs {g_aligned.shape}")
    a = orientation_operator(f)
    b = orientation_operator(g_aligned)
    return np.clip(np.sum(a * b, axis=0), -1.0, 1.0)


@dataclass(frozen=True)
class Cleanup:
    """Post-processing of the thresholded map; each stage can be switched off."""

    opening: bool = True
    closing: bool = True
    min_area_fraction: float = DEFAULT_MIN_AREA_FRACTION


RAW = Cleanup(opening=False, closing=False, min_area_fraction=0.0)


def threshold(cos_map, cos_threshold: float = DEFAULT_COS_THRESHOLD) -> np.ndarray:
    """Raw mask of pixels whose orientations differ by less than ``arccos(cos_threshold)``."""
    if not -1.0 < cos_threshold < 1.0:
        raise ValueError(f"cos_threshold must lie in (-1, 1), got {cos_threshold}")
    return np.asarray(cos_map) > cos_threshold


def remove_small_components(mask, min_area: int) -> np.ndarray:
    if min_area <= 1 or not mask.any():
        return mask.copy()
    labels, n = ndi.label(mask, structure=_SQUARE)
    sizes = np.bincount(labels.ravel(), minlength=n + 1)
    keep = sizes >= min_area
    keep[0] = False
    return keep[labels]


def segment(cos_map, cos_threshold: float = DEFAULT_COS_THRESHOLD, cleanup: Cleanup = Cleanup(),
            exclude=None) -> np.ndarray:
    """Threshold a matchability map and clean the result.

    Stages: ``map > cos_threshold``; 3x3 opening (drops the isolated
    speckle that random sea orientations pass through the threshold);
    3x3 closing; removal of 8-connected components smaller than
    ``min_area_fraction`` of the frame; finally pixels in ``exclude``
    (e.g. the :func:`wrap_band`) are cleared.
    """
    mask = threshold(cos_map, cos_threshold)
    if cleanup.opening:
        mask = ndi.binary_opening(mask, structure=_SQUARE, border_value=0)
    if cleanup.closing:
        # pad so the closing does not eat into objects touching the border
        padded = np.pad(mask, 1, mode="edge")
        mask = ndi.binary_closing(padded, structure=_SQUARE)[1:-1, 1:-1]
    min_area = int(np.ceil(cleanup.min_area_fraction * mask.size))
    mask = remove_small_components(mask, min_area)
    if exclude is not None:
        mask = mask & ~np.asarray(exclude, dtype=bool)
    return mask


def iou(a, b) -> float:
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    union = np.count_nonzero(a | b)
    if union == 0:
        return 1.0
    return np.count_nonzero(a & b) / union


@dataclass
class Segmentation:
    shift: tuple[int, int]
    map: np.ndarray
    raw_mask: np.ndarray
    mask: np.ndarray


def segment_pair(f, g, s_max, cos_threshold: float = DEFAULT_COS_THRESHOLD, cleanup: Cleanup = Cleanup()) -> Segmentation:
    """Align ``g`` by ``s_max``, build the matchability map and segment it."""
    f = as_image(f)
    g_al = align(g, s_max)
    cmap = matchability(f, g_al)
    band = wrap_band(f.shape, s_max)
    raw = threshold(cmap, cos_threshold) & ~band
    mask = segment(cmap, cos_threshold, cleanup, exclude=band)
    return Segmentation((int(s_max[0]), int(s_max[1])), cmap, raw, mask)


def composite(f, g, cos_map, mask, gap: int = 4) -> np.ndarray:
    """Side-by-side panel: first frame, second frame, map (rescaled from
    ``[-1, 1]``), mask. Panels are separated by ``gap`` white columns."""
    f = as_image(f)
    g = as_image(g)
    panels = [
        normalize_for_display(f),
        normalize_for_display(g),
        (np.clip(cos_map, -1.0, 1.0) + 1.0) / 2.0,
        np.asarray(mask, dtype=np.float64),
    ]
    h = f.shape[0]
    sep = np.ones((h, gap))
    row = []
    for i, p in enumerate(panels):
        if i:
            row.append(sep)
        row.append(p)
    return np.hstack(row)
