"""Focused phase and orientation correlation for detecting and segmenting
rigid objects (ships) against a decorrelating background (sea)."""

from .correlation import (
    MatchingSurface,
    snr,
    surface_focused_orientation,
    surface_focused_phase,
    surface_orientation,
    surface_phase,
    surface_s0,
    surface_sad,
    surface_ssd,
)
from .detection import DetectionConfig, DetectionVerdict, SnrSeries, detect, estimate_thresholds, snr_series
from .focusing import FocusConfig, focus_field, focus_image, sigma_at
from .image_core import AffineTransform, Rect, affine_warp, crop, distortion_norm, load_image, save_image
from .segmentation import align, iou, matchability, segment, segment_pair
from .whitening import normalized_operator, orientation_operator, phase_operator

__version__ = "0.1.0"
