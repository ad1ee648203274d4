"""Image carriers, raster I/O, cropping and affine warping.

Images are plain 2-D ``float64`` numpy arrays indexed ``[row, col]``
(``[y, x]``) with nominal values in ``[0, 1]``. Masks are 2-D boolean
arrays. Vectors and shifts that cross module boundaries are given in
``(x, y)`` order.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np
from PIL import Image as PILImage
from scipy import ndimage as ndi

# ITU-R BT.601 luma weights
LUMA_WEIGHTS = (0.299, 0.587, 0.114)


class ImageError(ValueError):
    """Raised for malformed images, unreadable files and bad geometry."""


class Rect(NamedTuple):
    """Axis-aligned pixel rectangle, ``x``/``y`` is the top-left corner."""

    x: int
    y: int
    width: int
    height: int

    def intersect(self, other: Rect) -> Rect:
        x0, y0 = max(self.x, other.x), max(self.y, other.y)
        x1 = min(self.x + self.width, other.x + other.width)
        y1 = min(self.y + self.height, other.y + other.height)
        return Rect(x0, y0, max(0, x1 - x0), max(0, y1 - y0))


def as_image(data) -> np.ndarray:
    """Validate ``data`` as an image and return it as a float64 array."""
    img = np.asarray(data, dtype=np.float64)
    if img.ndim != 2 or img.size == 0:
        raise ImageError(f"expected a non-empty 2-D array, got shape {img.shape}")
    if not np.all(np.isfinite(img)):
        raise ImageError("image contains NaN or Inf values")
    return img


@dataclass(frozen=True, eq=False)
class AffineTransform:
    """``x -> linear @ x + translation`` acting on ``(x, y)`` pixel coordinates."""

    linear: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        lin = np.array(self.linear, dtype=np.float64).reshape(2, 2)
        tr = np.array(self.translation, dtype=np.float64).reshape(2)
        lin.setflags(write=False)
        tr.setflags(write=False)
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "translation", tr)

    def __eq__(self, other):
        if not isinstance(other, AffineTransform):
            return NotImplemented
        return np.array_equal(self.linear, other.linear) and np.array_equal(self.translation, other.translation)

    def __hash__(self):
        return hash((self.linear.tobytes(), self.translation.tobytes()))

    @classmethod
    def identity(cls) -> AffineTransform:
        return cls(np.eye(2), np.zeros(2))

    @classmethod
    def shift(cls, dx: float, dy: float) -> AffineTransform:
        return cls(np.eye(2), (dx, dy))

    @classmethod
    def rotation(cls, angle: float, center=(0.0, 0.0)) -> AffineTransform:
        """Counter-clockwise rotation (in ``(x, y)`` coordinates) about ``center``."""
        c, s = np.cos(angle), np.sin(angle)
        return cls.about(np.array([[c, -s], [s, c]]), center)

    @classmethod
    def about(cls, linear, center, shift=(0.0, 0.0)) -> AffineTransform:
        """Apply ``linear`` about ``center`` and then translate by ``shift``."""
        lin = np.asarray(linear, dtype=np.float64)
        ctr = np.asarray(center, dtype=np.float64)
        return cls(lin, ctr + np.asarray(shift, dtype=np.float64) - lin @ ctr)

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.linear))

    def inverse(self) -> AffineTransform:
        if abs(self.det) < 1e-12:
            raise ImageError("affine transform is singular")
        inv = np.linalg.inv(self.linear)
        return AffineTransform(inv, -inv @ self.translation)

    def compose(self, other: AffineTransform) -> AffineTransform:
        """Return ``self ∘ other`` (``other`` is applied first)."""
        return AffineTransform(
            self.linear @ other.linear, self.linear @ other.translation + self.translation
        )

    def apply(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64)
        return pts @ self.linear.T + self.translation


# --------------------------------------------------------------------------- I/O


def load_image(path) -> np.ndarray:
    """Read a PNG or PGM file as a luminance image scaled to ``[0, 1]``.

    Colour inputs are reduced with the BT.601 weights in ``LUMA_WEIGHTS``.
    Integer rasters are divided by their maximum representable value
    (``maxval`` for PGM, ``2**bits - 1`` otherwise).
    """
    path = Path(path)
    if not path.is_file():
        raise ImageError(f"unreadable file: {path} (does not exist)")
    suffix = path.suffix.lower()
    if suffix in (".pgm", ".pnm"):
        return _read_pgm(path)
    if suffix != ".png":
        raise ImageError(f"unsupported format: {path}")
    try:
        with PILImage.open(path) as im:
            im.load()
            arr = np.asarray(im)
            mode = im.mode
    except Exception as exc:  # PIL raises a zoo of exception types
        raise ImageError(f"unreadable file: {path} ({exc})") from exc
    if mode in ("RGBA", "LA", "PA"):
        arr = arr[..., :-1]
    if mode == "P":
        with PILImage.open(path) as im:
            arr = np.asarray(im.convert("RGB"))
    if arr.dtype == np.bool_:
        scale = 1.0
    elif np.issubdtype(arr.dtype, np.integer):
        scale = float(np.iinfo(arr.dtype).max)
        if mode in ("I;16", "I;16B", "I;16L", "I"):
            scale = 65535.0
    else:
        scale = 1.0
    arr = arr.astype(np.float64) / scale
    if arr.ndim == 3:
        if arr.shape[2] == 1:
            arr = arr[..., 0]
        else:
            arr = arr[..., :3] @ np.asarray(LUMA_WEIGHTS)
    return as_image(arr)


def _read_pgm(path: Path) -> np.ndarray:
    raw = path.read_bytes()
    tokens: list[bytes] = []
    pos = 0
    # header: magic, width, height, maxval; '#' starts a comment
    while len(tokens) < 4:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if pos >= len(raw):
            raise ImageError(f"unreadable file: {path} (truncated header)")
        if raw[pos : pos + 1] == b"#":
            while pos < len(raw) and raw[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        tokens.append(raw[start:pos])
    magic = tokens[0]
    if magic not in (b"P2", b"P5"):
        raise ImageError(f"unsupported format: {path} (magic {magic!r})")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise ImageError(f"unreadable file: {path} (bad header)") from exc
    if width <= 0 or height <= 0 or not 0 < maxval < 65536:
        raise ImageError(f"unreadable file: {path} (bad header values)")
    count = width * height
    if magic == b"P5":
        pos += 1  # single whitespace byte after maxval
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        body = raw[pos : pos + count * dtype.itemsize]
        if len(body) < count * dtype.itemsize:
            raise ImageError(f"unreadable file: {path} (truncated pixel data)")
        data = np.frombuffer(body, dtype=dtype).astype(np.float64)
    else:
        try:
            data = np.array(raw[pos:].split(), dtype=np.float64)
        except ValueError as exc:
            raise ImageError(f"unreadable file: {path} (bad pixel data)") from exc
        if data.size < count:
            raise ImageError(f"unreadable file: {path} (truncated pixel data)")
        data = data[:count]
    return as_image(data.reshape(height, width) / maxval)


def _to_uint8(img: np.ndarray) -> np.ndarray:
    return np.round(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)


def save_image(img, path) -> Path:
    """Write an image with values in ``[0, 1]`` as 8-bit PNG or binary PGM."""
    path = Path(path)
    data = _to_uint8(as_image(img))
    suffix = path.suffix.lower()
    if suffix in (".pgm", ".pnm"):
        h, w = data.shape
        path.write_bytes(b"P5\n%d %d\n255\n" % (w, h) + data.tobytes())
    elif suffix == ".png":
        PILImage.fromarray(data, mode="L").save(path)
    else:
        raise ImageError(f"unsupported format: {path}")
    return path


def save_mask(mask, path) -> Path:
    """Write a boolean mask as a 0/255 PNG (or PGM)."""
    return save_image(np.asarray(mask, dtype=bool).astype(np.float64), path)


def load_mask(path) -> np.ndarray:
    return load_image(path) >= 0.5


def normalize_for_display(values) -> np.ndarray:
    """Linearly rescale an arbitrary real grid to ``[0, 1]``."""
    v = np.asarray(values, dtype=np.float64)
    lo, hi = float(v.min()), float(v.max())
    if hi - lo <= 0:
        return np.zeros_like(v)
    return (v - lo) / (hi - lo)


def save_grid_csv(values, path) -> Path:
    """Raw CSV dump of a 2-D grid, one image row per line."""
    path = Path(path)
    np.savetxt(path, np.asarray(values, dtype=np.float64), delimiter=",", fmt="%.10g")
    return path


# ------------------------------------------------------------------ geometry


def crop(img, region: Rect) -> np.ndarray:
    """Return the sub-image covered by ``region`` (a :class:`Rect`)."""
    img = np.asarray(img)
    region = Rect(*region)
    h, w = img.shape[:2]
    if (
        region.width <= 0
        or region.height <= 0
        or region.x < 0
        or region.y < 0
        or region.x + region.width > w
        or region.y + region.height > h
    ):
        raise ImageError(f"crop region {tuple(region)} outside image of size {w}x{h}")
    return img[region.y : region.y + region.height, region.x : region.x + region.width].copy()


def left_third(width: int, height: int) -> Rect:
    """The boat-free reference strip: the left third of a ``width x height`` frame."""
    return Rect(0, 0, width // 3, height)


def affine_warp(img, t: AffineTransform, fill: float = 0.0) -> np.ndarray:
    """Resample ``img`` so that ``out(x) = img(t^-1(x))`` with bilinear interpolation.

    Samples falling outside the input take the constant ``fill``.
    """
    img = as_image(img)
    inv = t.inverse()
    h, w = img.shape
    # map_coordinates works in (row, col) = (y, x): swap axes of the matrix
    swap = np.array([[0.0, 1.0], [1.0, 0.0]])
    matrix = swap @ inv.linear @ swap
    offset = swap @ inv.translation
    if np.allclose(inv.linear, np.eye(2)) and np.allclose(inv.translation, np.round(inv.translation)):
        return _integer_shift(img, -np.round(inv.translation).astype(int), fill)
    return ndi.affine_transform(
        img, matrix, offset=offset, output_shape=(h, w), order=1, mode="constant", cval=fill
    )


def _integer_shift(img: np.ndarray, shift_xy, fill: float) -> np.ndarray:
    dx, dy = int(shift_xy[0]), int(shift_xy[1])
    h, w = img.shape
    out = np.full_like(img, fill)
    if abs(dx) >= w or abs(dy) >= h:
        return out
    src = img[max(0, -dy) : h - max(0, dy), max(0, -dx) : w - max(0, dx)]
    out[max(0, dy) : max(0, dy) + src.shape[0], max(0, dx) : max(0, dx) + src.shape[1]] = src
    return out


def distortion_norm(t) -> float:
    """Spectral norm of ``linear - I``: the strength of an affine distortion.

    Accepts an :class:`AffineTransform` or a bare 2x2 matrix.
    """
    linear = t.linear if isinstance(t, AffineTransform) else np.asarray(t, dtype=np.float64)
    return float(np.linalg.norm(linear - np.eye(2), ord=2))
