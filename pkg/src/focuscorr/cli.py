"""Command-line front end: ``focuscorr {detect,compare,segment,thresholds,synth}``.

Frames are given either as a manifest (one ``path<TAB>seconds`` line per
frame) or as image files whose last number in the file name is the frame
index, timed with ``--fps``.

Exit codes: 0 success (a detection decision was made, whatever it is),
1 usage error, 2 input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import re
import sys
from pathlib import Path

import numpy as np

from . import synth
from .correlation import METHODS, ConstantSurfaceError
from .detection import (
    DetectionConfig,
    detect,
    detect_sequence,
    estimate_thresholds,
    series_to_csv,
    snr_series,
    verdicts_to_csv,
)
from .focusing import DEFAULT_EPSILON, DEFAULT_LEVELS, FocusConfig
from .image_core import ImageError, left_third, load_image, load_mask, normalize_for_display, save_grid_csv, save_image, save_mask
from .segmentation import DEFAULT_COS_THRESHOLD, DEFAULT_MIN_AREA_FRACTION, Cleanup, composite, iou, segment_pair

log = logging.getLogger("focuscorr")

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


# ------------------------------------------------------------------ inputs


def read_manifest(path) -> tuple[list[Path], list[float]]:
    path = Path(path)
    paths, times = [], []
    for n, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ImageError(f"{path}:{n}: expected 'path<TAB>seconds'")
        p = Path(parts[0])
        paths.append(p if p.is_absolute() else path.parent / p)
        try:
            times.append(float(parts[1]))
        except ValueError as exc:
            raise ImageError(f"{path}:{n}: bad timestamp {parts[1]!r}") from exc
    return paths, times


_NUMBER = re.compile(r"(\d+(?:\.\d+)?)")


def resolve_frames(inputs, fps: float) -> tuple[list[Path], list[float]]:
    """Frame paths and timestamps from a manifest or from numbered file names."""
    if len(inputs) == 1 and Path(inputs[0]).suffix.lower() in (".tsv", ".txt"):
        return read_manifest(inputs[0])
    paths = [Path(p) for p in inputs]
    times = []
    for p in paths:
        numbers = _NUMBER.findall(p.stem)
        if not numbers:
            raise ImageError(f"cannot infer a frame number from {p}; use a manifest")
        times.append(float(numbers[-1]) / fps)
    return paths, times


def load_frames(inputs, fps: float, min_frames: int = 2):
    paths, times = resolve_frames(inputs, fps)
    if len(paths) < min_frames:
        raise UsageError(f"need at least {min_frames} frames, got {len(paths)}")
    frames = [load_image(p) for p in paths]
    shape = frames[0].shape
    for p, f in zip(paths, frames):
        if f.shape != shape:
            raise ImageError(f"dimension mismatch: {p} is {f.shape[1]}x{f.shape[0]}, expected {shape[1]}x{shape[0]}")
    return paths, frames, times


def detection_config(args) -> DetectionConfig:
    focus = None
    if args.focus_x is not None or args.focus_y is not None:
        if args.focus_x is None or args.focus_y is None:
            raise UsageError("--focus-x and --focus-y must be given together")
        focus = (args.focus_x, args.focus_y)
    fc = FocusConfig(epsilon=args.epsilon, focus=focus, levels=args.levels)
    try:
        return DetectionConfig(snr_sea=args.snr_sea, t_sea=args.t_sea, t_max=args.t_max, focus=fc,
                               consecutive=args.consecutive)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def surface_heatmap(surface) -> np.ndarray:
    """Zero shift moved to the centre, rescaled to [0, 1]."""
    return normalize_for_display(np.fft.fftshift(surface))


def _side_by_side(panels, gap: int = 4) -> np.ndarray:
    h = panels[0].shape[0]
    out = [panels[0]]
    for p in panels[1:]:
        out += [np.ones((h, gap)), p]
    return np.hstack(out)


# ---------------------------------------------------------------- commands


def cmd_detect(args) -> int:
    cfg = detection_config(args)
    paths, frames, times = load_frames(args.inputs, args.fps)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if len(frames) == 2:
        verdicts = [detect(frames[0], frames[1], times[1] - times[0], cfg)]
        present = verdicts[0].present and not verdicts[0].low_confidence
    else:
        present, verdicts = detect_sequence(frames, times, cfg)
    verdicts_to_csv(verdicts, out / "verdicts.csv")
    for k, v in enumerate(verdicts, start=1):
        flag = " (low confidence)" if v.low_confidence else ""
        print(
            f"{paths[k].name}: dt={v.dt:g}s best={v.best_method} snr={v.best_snr:.2f} "
            f"shift=({v.peak_shift[0]},{v.peak_shift[1]}) present={str(v.present).lower()}{flag}"
        )
        if args.export_surfaces:
            for m, s in v.surfaces.items():
                save_image(surface_heatmap(s.surface), out / f"surface_{k:03d}_{m}.pgm")
                save_grid_csv(s.surface, out / f"surface_{k:03d}_{m}.csv")
    print(f"boat present: {str(present).lower()}")
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = detection_config(args)
    paths, frames, times = load_frames(args.inputs, args.fps)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    panels: dict[int, dict[str, np.ndarray]] = {}

    def keep(k, method, surface):
        if args.export_surfaces:
            panels.setdefault(k, {})[method] = surface_heatmap(surface.surface)

    series = [snr_series(frames, times, cfg, on_surface=keep)]
    if args.crop:
        h, w = frames[0].shape
        series.append(snr_series(frames, times, cfg, region=left_third(w, h)))
    series_to_csv(series, out / "snr_series.csv")
    for k, maps in sorted(panels.items()):
        save_image(_side_by_side([maps[m] for m in METHODS]), out / f"surfaces_{k:03d}.png")
    header = "t".rjust(8) + "".join(m.rjust(21) for m in METHODS)
    for s in series:
        print(f"[{s.region}]")
        print(header)
        for i, t in enumerate(s.timestamps):
            print(f"{t:8.2f}" + "".join(f"{s.values[m][i]:21.2f}" for m in METHODS))
    return EXIT_OK


def _truth_for(path: Path, truth_file: Path):
    for row in synth.read_truth(truth_file):
        if row.get("path") is not None and Path(row["path"]).name == path.name:
            return row
    return None


def cmd_segment(args) -> int:
    cfg = detection_config(args)
    paths, frames, times = load_frames(args.inputs, args.fps)
    if len(frames) != 2:
        raise UsageError(f"segment takes exactly two frames, got {len(frames)}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dt = args.dt if args.dt is not None else times[1] - times[0]
    v = detect(frames[0], frames[1], dt, cfg)
    print(f"detection: best={v.best_method} snr={v.best_snr:.2f} shift=({v.peak_shift[0]},{v.peak_shift[1]}) "
          f"present={str(v.present).lower()}")
    if not v.present and not args.force:
        print("no boat detected; use --force to segment anyway", file=sys.stderr)
        return EXIT_INPUT
    cleanup = Cleanup(opening=not args.no_opening, closing=not args.no_closing, min_area_fraction=args.min_area)
    seg = segment_pair(frames[0], frames[1], v.peak_shift, args.cos_threshold, cleanup)
    save_image((seg.map + 1.0) / 2.0, out / "map.pgm")
    save_grid_csv(seg.map, out / "map.csv")
    save_mask(seg.mask, out / "mask.png")
    save_mask(seg.raw_mask, out / "mask_raw.png")
    save_image(composite(frames[0], frames[1], seg.map, seg.mask), out / "composite.png")
    area = int(seg.mask.sum())
    print(f"mask area: {area} px ({area / seg.mask.size:.2%})")
    truth_file = Path(args.truth) if args.truth else paths[0].parent / "truth.tsv"
    if truth_file.is_file():
        row = _truth_for(paths[0], truth_file)
        if row is not None:
            print(f"IoU vs ground truth: {iou(seg.mask, load_mask(row['mask'])):.3f}")
    return EXIT_OK


def cmd_thresholds(args) -> int:
    cfg = detection_config(args)
    paths, frames, times = load_frames(args.inputs, args.fps)
    region = None
    if args.left_third:
        h, w = frames[0].shape
        region = left_third(w, h)
    series = snr_series(frames, times, cfg, region=region, methods=("focused_orientation", "focused_phase"))
    try:
        t_sea, snr_sea = estimate_thresholds(series, margin=args.margin)
    except ValueError as exc:
        print(f"cannot estimate thresholds: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(f"t_sea={t_sea:g}")
    print(f"snr_sea={snr_sea:g}")
    return EXIT_OK


def cmd_synth(args) -> int:
    if args.spec:
        spec = synth.spec_from_dict(json.loads(Path(args.spec).read_text()))
    elif args.frames is None and args.rocking_amplitude is None:
        spec = synth.default_scene_spec(args.seed)
    else:
        n = args.frames if args.frames is not None else 13
        amp = args.rocking_amplitude if args.rocking_amplitude is not None else 0.05
        poses = synth.rocking_poses(amp, args.period, args.fps, (n - 1) / args.fps, drift=(args.drift_x, args.drift_y))
        spec = synth.SceneSpec(seed=args.seed, poses=tuple(poses), fps=args.fps)
    overrides = {k: getattr(args, k) for k in ("width", "height", "sea_memory", "sea_corr_length") if getattr(args, k) is not None}
    if overrides:
        spec = synth.replace(spec, **overrides)
    if args.no_boat:
        spec = synth.replace(spec, boat=None)
    elif args.boat_length is not None or args.boat_beam is not None:
        b = spec.boat
        spec = synth.replace(spec, boat=synth.replace(
            b,
            length=args.boat_length if args.boat_length is not None else b.length,
            beam=args.boat_beam if args.boat_beam is not None else b.beam,
        ))
    out = synth.write_scene(spec, args.out, fmt=args.format)
    print(f"wrote {spec.n_frames} frames at {spec.fps:g} fps to {out}")
    return EXIT_OK


# ------------------------------------------------------------------ parser


def _add_detection_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("inputs", nargs="+", help="manifest (.tsv) or image files")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--fps", type=float, default=1.0, help="frame rate when timing comes from file names")
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    p.add_argument("--focus-x", type=float, default=None)
    p.add_argument("--focus-y", type=float, default=None)
    p.add_argument("--levels", type=int, default=DEFAULT_LEVELS)
    p.add_argument("--snr-sea", type=float, default=7.0)
    p.add_argument("--t-sea", type=float, default=1.0)
    p.add_argument("--t-max", type=float, default=3.0)
    p.add_argument("--consecutive", type=int, default=1, help="positive pairs required in a row")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="focuscorr", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="decide boat presence from a pair or sequence")
    _add_detection_flags(p)
    p.add_argument("--export-surfaces", action="store_true")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("compare", help="SNR series of the four correlation methods")
    _add_detection_flags(p)
    p.add_argument("--crop", action="store_true", help="also evaluate the boat-free left third")
    p.add_argument("--export-surfaces", action="store_true", help="write four-panel surface heat maps")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("segment", help="matchability map and boat mask for a pair")
    _add_detection_flags(p)
    p.add_argument("--dt", type=float, default=None, help="override the time between the frames")
    p.add_argument("--force", action="store_true", help="segment even without a detection")
    p.add_argument("--cos-threshold", type=float, default=DEFAULT_COS_THRESHOLD)
    p.add_argument("--min-area", type=float, default=DEFAULT_MIN_AREA_FRACTION, help="as a fraction of the frame")
    p.add_argument("--no-opening", action="store_true")
    p.add_argument("--no-closing", action="store_true")
    p.add_argument("--truth", default=None, help="ground-truth sidecar (default: truth.tsv next to the frames)")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("thresholds", help="estimate t_sea and snr_sea from a boat-free sequence")
    _add_detection_flags(p)
    p.add_argument("--left-third", action="store_true", help="use only the left third of each frame")
    p.add_argument("--margin", type=float, default=1.25)
    p.set_defaults(func=cmd_thresholds)

    p = sub.add_parser("synth", help="write a synthetic scene")
    p.add_argument("--out", required=True)
    p.add_argument("--spec", default=None, help="scene JSON (as written to scene.json)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--frames", type=int, default=None)
    p.add_argument("--fps", type=float, default=1.0)
    p.add_argument("--rocking-amplitude", type=float, default=None, help="radians")
    p.add_argument("--period", type=float, default=4.0, help="rocking period in seconds")
    p.add_argument("--drift-x", type=float, default=1.0, help="pixels per second")
    p.add_argument("--drift-y", type=float, default=0.5)
    p.add_argument("--width", type=int, default=None)
    p.add_argument("--height", type=int, default=None)
    p.add_argument("--sea-memory", type=float, default=None)
    p.add_argument("--sea-corr-length", type=float, default=None)
    p.add_argument("--boat-length", type=float, default=None)
    p.add_argument("--boat-beam", type=float, default=None)
    p.add_argument("--no-boat", action="store_true")
    p.add_argument("--format", choices=("png", "pgm"), default="png")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConstantSurfaceError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
