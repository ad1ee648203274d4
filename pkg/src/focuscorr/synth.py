"""Synthetic maritime scenes with ground truth.

A scene is a rigid textured boat composited over a sea texture that
decorrelates from frame to frame. The sea is Gaussian noise smoothed to
a correlation length ``sea_corr_length`` and evolved as an AR(1) mix
with coefficient ``sea_memory``; the boat is a fixed textured hull
re-posed in every frame.

Poses are boat-centred: a pose ``(C, s)`` maps a point ``x`` of the
frame-0 boat to ``C (x - c) + c + s`` where ``c`` is the boat centre,
so ``s`` is the displacement of the boat centre and ``C`` its
distortion.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import ndimage as ndi

from .image_core import AffineTransform, ImageError, affine_warp, distortion_norm, save_image, save_mask

# a strong hull distortion (|C - I| = 0.24), beyond what focusing tolerates
HARD_CASE_MATRIX = ((0.92, -0.20), (0.08, 0.87))


@dataclass(frozen=True)
class BoatSpec:
    length: float = 84.0
    beam: float = 30.0
    contrast: float = 0.1
    texture_contrast: float = 0.1
    deck_contrast: float = 0.1
    texture_corr_length: float = 0.8
    texture_seed: int = 1
    # (x, y); None = frame centre
    center: tuple[float, float] | None = None


@dataclass(frozen=True)
class SceneSpec:
    width: int = 256
    height: int = 256
    seed: int = 0
    sea_corr_length: float = 0.8
    sea_memory: float = 0.0
    sea_level: float = 0.45
    sea_contrast: float = 0.08
    boat: BoatSpec | None = field(default_factory=BoatSpec)
    poses: tuple[AffineTransform, ...] = (AffineTransform.identity(), AffineTransform.identity())
    fps: float = 1.0
    sensor_noise: float = 0.0

    @property
    def n_frames(self) -> int:
        return len(self.poses)

    @property
    def timestamps(self) -> np.ndarray:
        return np.arange(self.n_frames) / self.fps

    @property
    def boat_center(self) -> np.ndarray:
        if self.boat is not None and self.boat.center is not None:
            return np.asarray(self.boat.center, dtype=np.float64)
        return np.array([(self.width - 1) / 2.0, (self.height - 1) / 2.0])


@dataclass
class GroundTruth:
    masks: list[np.ndarray]
    shifts: list[tuple[float, float]]
    distortions: list[AffineTransform]
    timestamps: np.ndarray

    def distortion_norms(self) -> list[float]:
        return [distortion_norm(t) for t in self.distortions]


def boat_pose(rotation: float = 0.0, shift=(0.0, 0.0), length_scale: float = 1.0) -> AffineTransform:
    """Boat-centred pose: scale along the hull, rotate, then translate."""
    c, s = np.cos(rotation), np.sin(rotation)
    linear = np.array([[c, -s], [s, c]]) @ np.diag([length_scale, 1.0])
    return AffineTransform(linear, shift)


def rocking_poses(amplitude: float, period: float, fps: float, duration: float, drift=(0.0, 0.0)) -> list[AffineTransform]:
    """Rotation ``amplitude * sin(2 pi t / period)`` sampled at ``fps`` over ``[0, duration]``.

    ``drift`` is a constant boat velocity in pixels per second.
    """
    if period <= 0 or fps <= 0 or duration < 0 or amplitude < 0:
        raise ValueError("rocking_poses needs positive period and fps, non-negative amplitude and duration")
    n = int(np.floor(duration * fps + 1e-9)) + 1
    t = np.arange(n) / fps
    angles = amplitude * np.sin(2.0 * np.pi * t / period)
    return [boat_pose(a, (drift[0] * ti, drift[1] * ti)) for a, ti in zip(angles, t)]


def default_scene_spec(seed: int = 0) -> SceneSpec:
    """The reference scene: 13 frames at 1 fps, a rocking drifting boat whose
    last frame carries the strong ``HARD_CASE_MATRIX`` distortion."""
    poses = rocking_poses(0.05, 4.0, 1.0, 12.0, drift=(1.0, 0.5))
    last = poses[-1]
    poses[-1] = AffineTransform(HARD_CASE_MATRIX, last.translation)
    return SceneSpec(seed=seed, poses=tuple(poses))


def pair_spec(
    rotation: float = 0.0,
    shift=(0.0, 0.0),
    seed: int = 0,
    boat: bool = True,
    dt: float = 1.0,
    **kwargs,
) -> SceneSpec:
    """Two-frame scene: frame 0 at rest, frame 1 ``dt`` seconds later with the given pose."""
    spec = SceneSpec(
        seed=seed,
        poses=(AffineTransform.identity(), boat_pose(rotation, shift)),
        fps=1.0 / dt,
        **kwargs,
    )
    if not boat:
        spec = replace(spec, boat=None)
    return spec


def _smooth_noise(rng: np.random.Generator, shape, corr_length: float) -> np.ndarray:
    noise = rng.standard_normal(shape)
    if corr_length > 0:
        noise = ndi.gaussian_filter(noise, corr_length, mode="wrap")
    return (noise - noise.mean()) / noise.std()


def _hull(spec: SceneSpec) -> np.ndarray:
    b = spec.boat
    cx, cy = spec.boat_center
    yy, xx = np.mgrid[0 : spec.height, 0 : spec.width].astype(np.float64)
    u = (xx - cx) / (b.length / 2.0)
    v = (yy - cy) / (b.beam / 2.0)
    # pointed bow on the +x side, rounded stern
    au = np.abs(u)
    u_bow = np.where(u > 0, au ** 1.6, au ** 2.4)
    return u_bow + v ** 2 <= 1.0


def render_boat(spec: SceneSpec) -> tuple[np.ndarray, np.ndarray]:
    """Frame-0 boat luminance (defined everywhere) and its hull mask."""
    b = spec.boat
    rng = np.random.default_rng(b.texture_seed)
    shape = (spec.height, spec.width)
    tex = _smooth_noise(rng, shape, b.texture_corr_length)
    base = spec.sea_level + b.contrast + b.texture_contrast * tex
    # deck structures: a few rectangles with their own brightness
    cx, cy = spec.boat_center
    yy, xx = np.mgrid[0 : spec.height, 0 : spec.width].astype(np.float64)
    for _ in range(5):
        w = rng.uniform(0.08, 0.25) * b.length
        h = rng.uniform(0.25, 0.55) * b.beam
        x0 = cx + rng.uniform(-0.35, 0.25) * b.length
        y0 = cy + rng.uniform(-0.3, 0.3) * b.beam - h / 2.0
        box = (xx >= x0) & (xx < x0 + w) & (yy >= y0) & (yy < y0 + h)
        base = base + rng.uniform(-1.0, 1.0) * b.deck_contrast * box
    return base, _hull(spec)


def _to_frame_transform(pose: AffineTransform, center: np.ndarray) -> AffineTransform:
    return AffineTransform.about(pose.linear, center, pose.translation)


def _check_geometry(spec: SceneSpec, mask: np.ndarray) -> None:
    if spec.width < 8 or spec.height < 8:
        raise ImageError("scene must be at least 8x8 pixels")
    if not 0.0 <= spec.sea_memory <= 1.0:
        raise ImageError(f"sea_memory must lie in [0, 1], got {spec.sea_memory}")
    if spec.fps <= 0 or len(spec.poses) < 1:
        raise ImageError("scene needs a positive fps and at least one pose")
    if spec.boat is None:
        return
    if not mask.any():
        raise ImageError("boat hull is empty")
    rows, cols = np.nonzero(mask)
    corners = np.column_stack([cols, rows]).astype(np.float64)
    for k, pose in enumerate(spec.poses):
        if abs(np.linalg.det(pose.linear)) < 1e-9:
            raise ImageError(f"pose {k} is singular")
        pts = _to_frame_transform(pose, spec.boat_center).apply(corners)
        if pts[:, 0].min() < 1 or pts[:, 1].min() < 1 or pts[:, 0].max() > spec.width - 2 or pts[:, 1].max() > spec.height - 2:
            raise ImageError(f"boat does not fit inside the {spec.width}x{spec.height} frame at pose {k}")


def generate(spec: SceneSpec) -> tuple[list[np.ndarray], GroundTruth]:
    """Render every frame of ``spec``. Deterministic given ``spec.seed``."""
    shape = (spec.height, spec.width)
    if spec.boat is not None:
        boat_img, boat_mask = render_boat(spec)
    else:
        boat_img, boat_mask = None, np.zeros(shape, dtype=bool)
    _check_geometry(spec, boat_mask)

    rng = np.random.default_rng(spec.seed)
    m = spec.sea_memory
    sea = _smooth_noise(rng, shape, spec.sea_corr_length)
    center = spec.boat_center
    pose0_inv = np.linalg.inv(spec.poses[0].linear)

    frames, masks, shifts, distortions = [], [], [], []
    for k, pose in enumerate(spec.poses):
        if k > 0 and m < 1.0:
            fresh = _smooth_noise(rng, shape, spec.sea_corr_length)
            sea = m * sea + np.sqrt(1.0 - m * m) * fresh
            sea = (sea - sea.mean()) / sea.std()
        frame = spec.sea_level + spec.sea_contrast * sea
        if spec.boat is not None:
            t = _to_frame_transform(pose, center)
            mask_k = affine_warp(boat_mask.astype(np.float64), t, fill=0.0) >= 0.5
            boat_k = affine_warp(boat_img, t, fill=spec.sea_level)
            frame = np.where(mask_k, boat_k, frame)
        else:
            mask_k = np.zeros(shape, dtype=bool)
        if spec.sensor_noise > 0:
            frame = frame + spec.sensor_noise * rng.standard_normal(shape)
        frames.append(np.clip(frame, 0.0, 1.0))
        masks.append(mask_k)
        shifts.append((float(pose.translation[0]), float(pose.translation[1])))
        distortions.append(AffineTransform(pose.linear @ pose0_inv, np.zeros(2)))
    truth = GroundTruth(masks, shifts, distortions, spec.timestamps)
    return frames, truth


# ------------------------------------------------------------------ on disk


def spec_to_dict(spec: SceneSpec) -> dict:
    d = asdict(spec)
    d["poses"] = [{"linear": p.linear.tolist(), "translation": p.translation.tolist()} for p in spec.poses]
    return d


def spec_from_dict(d: dict) -> SceneSpec:
    d = dict(d)
    boat = d.pop("boat", {})
    poses = d.pop("poses", None)
    kwargs = {k: v for k, v in d.items() if k in SceneSpec.__dataclass_fields__}
    if boat is not None:
        boat = BoatSpec(**{k: (tuple(v) if isinstance(v, list) else v) for k, v in boat.items()})
    if poses is not None:
        kwargs["poses"] = tuple(AffineTransform(p["linear"], p["translation"]) for p in poses)
    return SceneSpec(boat=boat, **kwargs)


def write_scene(spec: SceneSpec, out_dir, fmt: str = "png") -> Path:
    """Write numbered frames, masks, a manifest and a ground-truth sidecar.

    Sidecar ``truth.tsv`` columns: frame, seconds, shift_x, shift_y,
    c11, c12, c21, c22, mask path, frame path. ``manifest.tsv`` is ``path<TAB>seconds``.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    frames, truth = generate(spec)
    manifest, rows = [], []
    for k, (frame, mask) in enumerate(zip(frames, truth.masks)):
        name = f"frame_{k:03d}.{fmt}"
        mask_name = f"mask_{k:03d}.png"
        save_image(frame, out / name)
        save_mask(mask, out / mask_name)
        t = float(truth.timestamps[k])
        c = truth.distortions[k].linear
        manifest.append(f"{name}\t{t:.6f}")
        sx, sy = truth.shifts[k]
        rows.append(
            f"{k}\t{t:.6f}\t{sx:.6f}\t{sy:.6f}\t{c[0, 0]:.6f}\t{c[0, 1]:.6f}\t{c[1, 0]:.6f}\t{c[1, 1]:.6f}\t{mask_name}\t{name}"
        )
    (out / "manifest.tsv").write_text("\n".join(manifest) + "\n")
    header = "frame\tseconds\tshift_x\tshift_y\tc11\tc12\tc21\tc22\tmask\tpath"
    (out / "truth.tsv").write_text(header + "\n" + "\n".join(rows) + "\n")
    (out / "scene.json").write_text(json.dumps(spec_to_dict(spec), indent=2, sort_keys=True) + "\n")
    return out


def read_truth(path) -> list[dict]:
    """Parse a ``truth.tsv`` sidecar into per-frame dicts."""
    path = Path(path)
    lines = path.read_text().splitlines()
    out = []
    for line in lines[1:]:
        if not line.strip():
            continue
        k, t, sx, sy, c11, c12, c21, c22, mask, *rest = line.split("\t")
        out.append(
            {
                "frame": int(k),
                "seconds": float(t),
                "shift": (float(sx), float(sy)),
                "linear": np.array([[float(c11), float(c12)], [float(c21), float(c22)]]),
                "mask": path.parent / mask,
                "path": path.parent / rest[0] if rest else None,
            }
        )
    return out
