"""Command-line front end.

Subcommands: detect (full pipeline), threshold (NIR valley search),
indices (feature planes), synth (synthetic scene + truth), render (band
preview), score (predicted map vs truth). Exit codes: 0 success, 1 usage
error, 2 data or model error (with a one-line diagnostic naming the
failing stage).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from .errors import PipelineError, WaterfuseError
from .fusion import PipelineConfig, WaterDetector
from .indices import FEATURE_NAMES, feature_grid
from .raster import (
    MultiBandRaster,
    classmap_from_ppm,
    load_raster,
    read_pgm,
    render_classmap,
    render_mass,
    save_raster,
    write_pgm,
)
from .scene import SceneSpec, generate, score, truth_from_pgm_values, truth_to_pgm_values
from .spectral import analyze_threshold, smooth_counts

_DEFAULTS = PipelineConfig()


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad usage; this tool reserves 2 for data errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _usage_error(message: str) -> int:
    print(f"waterfuse: error: {message}", file=sys.stderr)
    return 1


def _data_error(stage: str, exc: Exception) -> int:
    print(f"waterfuse: error at stage '{stage}' [{type(exc).__name__}]: {exc}", file=sys.stderr)
    return 2


def _load_raster_checked(path: str) -> MultiBandRaster:
    try:
        return load_raster(path)
    except (WaterfuseError, OSError) as exc:
        raise PipelineError("raster load", exc) from exc


def _config_from_args(args: argparse.Namespace) -> PipelineConfig:
    """Layer defaults < config file < explicit flags."""
    merged = asdict(_DEFAULTS)
    if args.config:
        doc = json.loads(Path(args.config).read_text())
        unknown = set(doc) - set(merged)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        merged.update(doc)
    for name in merged:
        value = getattr(args, name, None)
        if value is not None:
            merged[name] = value
    return PipelineConfig(**merged)


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; explicit flags win over it")
    specs = {
        "nbins": (int, "NIR histogram bins"),
        "window_size": (int, "odd side of the label-agreement window"),
        "harvest_threshold": (float, "minimum spectral mass of a training pixel"),
        "per_class": (int, "training pixels drawn per class"),
        "min_samples": (int, "minimum eligible pixels per class"),
        "seed": (int, "seed for sampling and training shuffles"),
        "r": (float, "decision cardinality exponent in [0, 1]"),
        "k_d": (float, "decision normalization factor"),
        "lam": (float, "decision subset weight"),
        "alpha": (float, "classifier-model discount in (0, 1]"),
        "epochs": (int, "classifier training epochs"),
        "reg": (float, "classifier L2 regularization"),
    }
    for field in fields(PipelineConfig):
        kind, text = specs[field.name]
        flag = "--" + field.name.replace("_", "-")
        parser.add_argument(
            flag, type=kind, default=None, help=f"{text} (default: {field.default})"
        )


def _cmd_detect(args: argparse.Namespace) -> int:
    try:
        cfg = _config_from_args(args)
    except (ValueError, TypeError, OSError) as exc:
        # bad flag value, bad config file, or unreadable config: usage
        return _usage_error(str(exc))
    try:
        raster = _load_raster_checked(args.input)
        detector = WaterDetector(**asdict(cfg))
        classmap = detector.fit_predict(raster)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        # report holds names relative to its own directory so reruns into
        # different directories still produce byte-identical reports
        outputs = {
            "classmap": "classmap.ppm",
            "mass_water": "mass_water.pgm",
            "mass_nonwater": "mass_nonwater.pgm",
            "mass_ignorance": "mass_ignorance.pgm",
            "report": "report.json",
        }
        render_classmap(classmap, out / outputs["classmap"])
        for channel, key in enumerate(("mass_water", "mass_nonwater", "mass_ignorance")):
            render_mass(classmap.masses[:, :, channel], out / outputs[key])
        report = detector.report_
        report["outputs"] = outputs
        (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
        if args.save_model:
            detector.supervised_model_.save(args.save_model)
    except PipelineError as exc:
        return _data_error(exc.stage, exc.cause)
    except (WaterfuseError, OSError) as exc:
        return _data_error("output", exc)
    pct = report["class_percentages"]
    print(
        f"threshold {report['threshold']:.2f}; water {pct['water']:.2f}%, "
        f"non-water {pct['non-water']:.2f}%, ignorance {pct['ignorance']:.2f}%"
    )
    print(f"report: {out / 'report.json'}")
    return 0


def _cmd_threshold(args: argparse.Namespace) -> int:
    if args.nbins is not None and args.nbins < 8:
        return _usage_error(f"nbins must be >= 8, got {args.nbins}")
    try:
        raster = _load_raster_checked(args.input)
        band = raster.band(args.band)
        analysis = analyze_threshold(band, args.nbins or _DEFAULTS.nbins)
    except PipelineError as exc:
        return _data_error(exc.stage, exc.cause)
    except (WaterfuseError, ValueError) as exc:
        return _data_error("threshold detection", exc)
    hist = analysis.histogram
    p1, p2 = analysis.peak_bins
    centers = hist.centers
    print(f"threshold {analysis.params.t:.6f}")
    print(f"peaks: bin {p1} ({centers[p1]:.2f}), bin {p2} ({centers[p2]:.2f})")
    if args.csv:
        lines = ["bin_center,count,smoothed,polynomial"]
        smoothed = smooth_counts(hist.counts)
        poly_values = analysis.poly(centers)
        for i in range(hist.nbins):
            inside = p1 <= i <= p2
            poly_repr = repr(float(poly_values[i])) if inside else ""
            lines.append(
                f"{centers[i]!r},{int(hist.counts[i])},{float(smoothed[i])!r},{poly_repr}"
            )
        Path(args.csv).write_text("\n".join(lines) + "\n")
        print(f"csv: {args.csv}")
    return 0


def _cmd_indices(args: argparse.Namespace) -> int:
    try:
        raster = _load_raster_checked(args.input)
        features = feature_grid(raster)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for channel, name in enumerate(FEATURE_NAMES):
            plane = features[:, :, channel]
            write_pgm(
                np.rint((plane + 1.0) / 2.0 * 255.0).astype(np.uint8), out / f"{name}.pgm"
            )
        save_raster(
            MultiBandRaster(
                (name, features[:, :, channel]) for channel, name in enumerate(FEATURE_NAMES)
            ),
            out / "indices.json",
        )
    except PipelineError as exc:
        return _data_error(exc.stage, exc.cause)
    except (WaterfuseError, OSError) as exc:
        return _data_error("index computation", exc)
    print(f"wrote {', '.join(FEATURE_NAMES)} planes to {out}")
    return 0


def _cmd_synth(args: argparse.Namespace) -> int:
    overrides = {}
    if args.spec:
        try:
            doc = json.loads(Path(args.spec).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            return _data_error("spec load", exc)
        known = {f.name for f in fields(SceneSpec)}
        unknown = set(doc) - known
        if unknown:
            return _usage_error(f"unknown scene spec keys: {sorted(unknown)}")
        overrides.update(doc)
    for name in ("width", "height", "seed"):
        value = getattr(args, name)
        if value is not None:
            overrides[name] = value
    if "river_points" in overrides and overrides["river_points"] is not None:
        overrides["river_points"] = tuple(map(tuple, overrides["river_points"]))
    if "profiles" in overrides:
        overrides["profiles"] = {
            material: {band: tuple(stat) for band, stat in bands.items()}
            for material, bands in overrides["profiles"].items()
        }
    if "cloud_radius" in overrides:
        overrides["cloud_radius"] = tuple(overrides["cloud_radius"])
    try:
        spec = SceneSpec(**overrides)
    except (ValueError, TypeError) as exc:
        return _usage_error(str(exc))
    try:
        raster, truth = generate(spec)
        base = Path(args.out)
        base.parent.mkdir(parents=True, exist_ok=True)
        save_raster(raster, base)
        truth_path = base.parent / "truth.pgm"
        write_pgm(truth_to_pgm_values(truth), truth_path)
    except (WaterfuseError, OSError) as exc:
        return _data_error("scene generation", exc)
    print(f"scene: {base.with_suffix('.json')} ({spec.width}x{spec.height}, seed {spec.seed})")
    print(f"truth: {truth_path}")
    return 0


def _cmd_render(args: argparse.Namespace) -> int:
    try:
        raster = _load_raster_checked(args.input)
        band = raster.band(args.band)
        lo, hi = float(band.min()), float(band.max())
        scaled = (band - lo) / (hi - lo) if hi > lo else np.zeros_like(band)
        write_pgm(np.rint(scaled * 255.0).astype(np.uint8), args.out)
    except PipelineError as exc:
        return _data_error(exc.stage, exc.cause)
    except (WaterfuseError, OSError) as exc:
        return _data_error("rendering", exc)
    print(f"wrote {args.out}")
    return 0


def _cmd_score(args: argparse.Namespace) -> int:
    try:
        predicted = classmap_from_ppm(args.pred)
        truth = truth_from_pgm_values(read_pgm(args.truth))
        report = score(predicted, truth)
    except (WaterfuseError, ValueError, OSError) as exc:
        return _data_error("scoring", exc)
    text = json.dumps(report.to_dict(), indent=2, sort_keys=True)
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="waterfuse", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    detect = sub.add_parser("detect", help="run the full detection pipeline")
    detect.add_argument("--input", required=True, help="raster container (.json header)")
    detect.add_argument("--out", required=True, help="output directory")
    detect.add_argument("--save-model", help="also save the fitted classifier model as JSON")
    _add_config_flags(detect)
    detect.set_defaults(func=_cmd_detect)

    threshold = sub.add_parser("threshold", help="NIR histogram valley threshold")
    threshold.add_argument("--input", required=True, help="raster container (.json header)")
    threshold.add_argument("--band", default="nir", help="band to threshold (default: nir)")
    threshold.add_argument(
        "--nbins", type=int, default=None, help=f"histogram bins (default: {_DEFAULTS.nbins})"
    )
    threshold.add_argument("--csv", help="write histogram and fitted polynomial as CSV")
    threshold.set_defaults(func=_cmd_threshold)

    indices = sub.add_parser("indices", help="index planes and 3-band feature raster")
    indices.add_argument("--input", required=True, help="raster container (.json header)")
    indices.add_argument("--out", required=True, help="output directory")
    indices.set_defaults(func=_cmd_indices)

    synth = sub.add_parser("synth", help="generate a synthetic scene with ground truth")
    synth.add_argument("--out", required=True, help="output base path for the raster container")
    synth.add_argument("--spec", help="scene spec JSON (fields of SceneSpec)")
    synth.add_argument("--width", type=int, default=None, help="scene width (default: 512)")
    synth.add_argument("--height", type=int, default=None, help="scene height (default: 512)")
    synth.add_argument("--seed", type=int, default=None, help="scene seed (default: 42)")
    synth.set_defaults(func=_cmd_synth)

    render = sub.add_parser("render", help="render one band as a grayscale preview")
    render.add_argument("--input", required=True, help="raster container (.json header)")
    render.add_argument("--band", default="nir", help="band to render (default: nir)")
    render.add_argument("--out", required=True, help="output PGM path")
    render.set_defaults(func=_cmd_render)

    score_cmd = sub.add_parser("score", help="compare a class map against generator truth")
    score_cmd.add_argument("--pred", required=True, help="predicted classmap.ppm")
    score_cmd.add_argument("--truth", required=True, help="truth.pgm from synth")
    score_cmd.add_argument("--out", help="also write metrics JSON here")
    score_cmd.set_defaults(func=_cmd_score)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
