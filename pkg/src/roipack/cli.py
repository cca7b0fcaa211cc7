"""Command-line interface.

Subcommands: encode, decode, roundtrip, preview, bdrate, batch.
Configuration precedence is CLI flags > config file (--config, simple
key=value lines) > built-in defaults.  Exit codes: 0 success, 1
runtime failure, 2 usage/config error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .codec import QP_LADDER, CodecError, ExternalCodecError, ExternalCodecSpec
from .container import ContainerError, read_file, write_file
from .frame import compose_packed_frame  # noqa: F401  (re-exported for scripts)
from .geometry import convex_hull, grid_cover, extract_rect_groups, pad_region
from .image_io import load_image, save_image
from .metrics import BdResult, CurveError, RateCurve, bd_metric, bpp
from .pipeline import (
    ConfigError,
    PipelineConfig,
    PipelineError,
    decode_container,
    decode_packed_frame,
    encode_image,
    prepare_inputs,
    roundtrip_report,
)
from .regions import DetectionFormatError, load_detections
from .scaling import PolicyError, ScalePolicy, load_policy

_BOOL_WORDS = {"1": True, "true": True, "yes": True, "0": False, "false": False, "no": False}


def _parse_bool(text: str) -> bool:
    try:
        return _BOOL_WORDS[text.strip().lower()]
    except KeyError:
        raise ValueError(f"not a boolean: {text!r}") from None


_CONFIG_PARSERS = {
    "pad": int,
    "grid": int,
    "min_confidence": float,
    "qp": int,
    "global_size": int,
    "codec": str,
    "scale_policy": str,
    "single_hull": _parse_bool,
    "encode_cmd": str,
    "decode_cmd": str,
}


def _read_config_file(path) -> dict:
    values = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip().lower()
        if not sep or key not in _CONFIG_PARSERS:
            raise ConfigError(f"{path}:{lineno}: expected 'key=value' with a known key")
        try:
            values[key] = _CONFIG_PARSERS[key](value.strip())
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: {exc}") from exc
    return values


def _build_config(args) -> PipelineConfig:
    raw = {}
    if getattr(args, "config", None):
        raw.update(_read_config_file(args.config))
    for key in _CONFIG_PARSERS:
        value = getattr(args, key, None)
        if value is not None:
            raw[key] = value

    policy = ScalePolicy.identity()
    if raw.get("scale_policy"):
        policy = load_policy(raw["scale_policy"])

    external = None
    if raw.get("encode_cmd") or raw.get("decode_cmd"):
        if not (raw.get("encode_cmd") and raw.get("decode_cmd")):
            raise ConfigError("external codec needs both encode_cmd and decode_cmd")
        try:
            external = ExternalCodecSpec(raw["encode_cmd"], raw["decode_cmd"])
        except CodecError as exc:
            raise ConfigError(str(exc)) from exc

    kwargs = {
        k: raw[k]
        for k in ("pad", "grid", "min_confidence", "qp", "global_size", "codec", "single_hull")
        if k in raw
    }
    return PipelineConfig(scale_policy=policy, external=external, **kwargs)


def _add_config_flags(sp: argparse.ArgumentParser) -> None:
    g = sp.add_argument_group("pipeline configuration")
    g.add_argument("--config", metavar="FILE", help="key=value config file")
    g.add_argument("--pad", type=int, help="padding around detections (default 15)")
    g.add_argument("--grid", type=int, help="alignment grid in pixels (default 16)")
    g.add_argument("--min-confidence", type=float, help="drop detections below this score")
    g.add_argument("--scale-policy", metavar="FILE", help="scale policy rules file")
    g.add_argument("--codec", choices=("lossless", "lossy", "external"))
    g.add_argument("--qp", type=int, help="quantization parameter 0..51 (default 32)")
    g.add_argument("--global-size", type=int, choices=(100, 75, 50, 25),
                   help="resize the whole input before packing")
    g.add_argument("--single-hull", action="store_true", default=None,
                   help="one hull over all regions instead of per cluster")
    g.add_argument("--encode-cmd", metavar="TPL", help="external encoder command template")
    g.add_argument("--decode-cmd", metavar="TPL", help="external decoder command template")


# --------------------------------------------------------------------
# commands

def cmd_encode(args) -> int:
    config = _build_config(args)
    image = load_image(args.image)
    region_set = load_detections(args.detections, image.shape[1], image.shape[0])
    container = encode_image(image, region_set, config)
    total = write_file(args.output, container)
    print(
        f"regions={container.region_count} bin={container.bin_w}x{container.bin_h} "
        f"payload={len(container.payload)} container={total} "
        f"bpp={bpp(total, container.orig_w, container.orig_h):.4f}"
    )
    return 0


def cmd_decode(args) -> int:
    config = _build_config(args)
    container = read_file(args.container)
    image = decode_container(container, config.external)
    save_image(args.output, image)
    print(f"wrote {image.shape[1]}x{image.shape[0]} image to {args.output}")
    return 0


_ROUNDTRIP_COLUMNS = (
    ("codec", 9), ("qp", 4), ("regions", 8), ("bin", 12), ("roi_quality", 14),
    ("container_bytes", 16), ("bpp", 9), ("compression_ratio", 8), ("packed_area_ratio", 7),
)


def _roundtrip_row(report: dict) -> str:
    cells = []
    for key, width in _ROUNDTRIP_COLUMNS:
        value = report[key]
        if isinstance(value, float):
            value = f"{value:.4f}" if key == "bpp" else f"{value:.3f}"
        cells.append(f"{value!s:>{width}}")
    return " ".join(cells)


def cmd_roundtrip(args) -> int:
    config = _build_config(args)
    image = load_image(args.image)
    region_set = load_detections(args.detections, image.shape[1], image.shape[0])
    configs = [config]
    if args.qp_ladder:
        if config.codec == "lossless":
            raise ConfigError("--qp-ladder needs a lossy or external codec")
        configs = [dataclasses.replace(config, qp=q) for q in QP_LADDER]
    header = " ".join(f"{k:>{w}}" for k, w in _ROUNDTRIP_COLUMNS)
    print(header)
    for cfg in configs:
        print(_roundtrip_row(roundtrip_report(image, region_set, cfg)))
    return 0


def _as_rgb(image: np.ndarray) -> np.ndarray:
    if image.ndim == 2:
        return np.stack([image] * 3, axis=2).copy()
    return image.copy()


def _outline(canvas: np.ndarray, x: int, y: int, w: int, h: int, color) -> None:
    ih, iw = canvas.shape[:2]
    x0, y0 = max(x, 0), max(y, 0)
    x1, y1 = min(x + w, iw), min(y + h, ih)
    if x0 >= x1 or y0 >= y1:
        return
    canvas[y0, x0:x1] = color
    canvas[y1 - 1, x0:x1] = color
    canvas[y0:y1, x0] = color
    canvas[y0:y1, x1 - 1] = color


def _dot(canvas: np.ndarray, x: int, y: int, color) -> None:
    ih, iw = canvas.shape[:2]
    canvas[max(y - 1, 0) : min(y + 2, ih), max(x - 1, 0) : min(x + 2, iw)] = color


def cmd_preview(args) -> int:
    config = _build_config(args)
    image = load_image(args.image)
    region_set = load_detections(args.detections, image.shape[1], image.shape[0])
    image, region_set = prepare_inputs(image, region_set, config)
    h, w = image.shape[:2]

    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)

    kept = [r for r in region_set.regions if r.confidence >= config.min_confidence]
    padded = [pad_region(r.bbox, config.pad, w, h) for r in kept]
    groups = extract_rect_groups(padded, config.grid, w, h, config.single_hull)

    boxes = _as_rgb(image)
    for r in kept:
        _outline(boxes, r.bbox.x, r.bbox.y, r.bbox.w, r.bbox.h, (40, 220, 40))
    save_image(out / "01_boxes.png", boxes)

    padded_img = boxes.copy()
    for b in padded:
        _outline(padded_img, b.x, b.y, b.w, b.h, (230, 220, 40))
    save_image(out / "02_padded.png", padded_img)

    cells_img = _as_rgb(image)
    hull_lines = []
    for group in groups:
        points = []
        for i in group.source_region_ids:
            points.extend(padded[i].corners())
        hull = convex_hull(points)
        cover = grid_cover(hull, config.grid, w, h)
        for cx, cy in sorted(cover.cells):
            _outline(cells_img, cx * config.grid, cy * config.grid,
                     config.grid, config.grid, (40, 200, 220))
        for vx, vy in hull.vertices:
            _dot(cells_img, vx, vy, (220, 40, 40))
        hull_lines.append(
            "hull " + " ".join(f"({vx},{vy})" for vx, vy in hull.vertices)
        )
    save_image(out / "03_cells.png", cells_img)

    rects_img = _as_rgb(image)
    for group in groups:
        for r in group.rects:
            _outline(rects_img, r.x, r.y, r.w, r.h, (200, 40, 200))
    save_image(out / "04_rects.png", rects_img)

    container = encode_image(image, region_set, dataclasses.replace(config, global_size=100))
    packed = decode_packed_frame(container, config.external)
    save_image(out / "05_packed.png", packed)

    from .geometry import debug_dump

    text = debug_dump(padded, groups, config.grid)
    text += "\n".join(hull_lines)
    text += f"\nbin {container.bin_w}x{container.bin_h}\n"
    (out / "stages.txt").write_text(text, encoding="utf-8")
    print(f"wrote 5 stage images + stages.txt to {out}")
    return 0


def _write_svg(path, anchor: RateCurve, test: RateCurve) -> None:
    width, height, m = 520, 360, 48
    xs = np.concatenate([np.log10(anchor.rates), np.log10(test.rates)])
    ys = np.concatenate([anchor.metrics, test.metrics])
    x_lo, x_hi = xs.min(), xs.max()
    y_lo, y_hi = ys.min(), ys.max()
    x_span = (x_hi - x_lo) or 1.0
    y_span = (y_hi - y_lo) or 1.0

    def sx(v: float) -> float:
        return m + (v - x_lo) / x_span * (width - 2 * m)

    def sy(v: float) -> float:
        return height - m - (v - y_lo) / y_span * (height - 2 * m)

    def polyline(curve: RateCurve, color: str) -> str:
        pts = " ".join(
            f"{sx(math.log10(r)):.1f},{sy(v):.1f}" for r, v in curve.points
        )
        dots = "".join(
            f'<circle cx="{sx(math.log10(r)):.1f}" cy="{sy(v):.1f}" r="3" fill="{color}"/>'
            for r, v in curve.points
        )
        return f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>{dots}'

    svg = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">'
        f'<rect width="{width}" height="{height}" fill="white"/>'
        f'<line x1="{m}" y1="{height - m}" x2="{width - m}" y2="{height - m}" stroke="black"/>'
        f'<line x1="{m}" y1="{m}" x2="{m}" y2="{height - m}" stroke="black"/>'
        f'<text x="{width // 2}" y="{height - 12}" text-anchor="middle" font-size="12">'
        f"log10 rate</text>"
        f'<text x="14" y="{height // 2}" font-size="12" transform="rotate(-90 14 {height // 2})"'
        f' text-anchor="middle">metric</text>'
        + polyline(anchor, "steelblue")
        + polyline(test, "darkorange")
        + f'<text x="{width - m}" y="{m - 8}" text-anchor="end" font-size="12">'
        f'<tspan fill="steelblue">anchor</tspan>  <tspan fill="darkorange">test</tspan></text>'
        "</svg>"
    )
    Path(path).write_text(svg, encoding="utf-8")


def cmd_bdrate(args) -> int:
    anchor = RateCurve.from_csv(args.anchor)
    test = RateCurve.from_csv(args.test)
    result: BdResult = bd_metric(anchor, test, args.mode)
    m_lo, m_hi = result.metric_overlap
    r_lo, r_hi = result.log_rate_overlap
    print(f"BD-rate:   {result.bd_rate_percent:+10.4f} %   "
          f"(metric overlap {m_lo:.4f} .. {m_hi:.4f})")
    print(f"BD-metric: {result.bd_metric:+10.4f}     "
          f"(log10-rate overlap {r_lo:.4f} .. {r_hi:.4f})")
    if args.csv:
        with open(args.csv, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["bd_rate_percent", "bd_metric",
                             "metric_lo", "metric_hi", "log_rate_lo", "log_rate_hi"])
            writer.writerow([result.bd_rate_percent, result.bd_metric, m_lo, m_hi, r_lo, r_hi])
    if args.svg:
        _write_svg(args.svg, anchor, test)
    return 0


_IMAGE_SUFFIXES = (".png", ".ppm", ".pgm")


def cmd_batch(args) -> int:
    config = _build_config(args)
    images_dir = Path(args.images)
    dets_dir = Path(args.detections)
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)

    image_paths = sorted(
        p for p in images_dir.iterdir() if p.suffix.lower() in _IMAGE_SUFFIXES
    )
    if not image_paths:
        raise PipelineError(f"no images ({'/'.join(_IMAGE_SUFFIXES)}) in {images_dir}")

    def encode_one(path: Path) -> dict:
        det_path = dets_dir / (path.stem + ".json")
        if not det_path.exists():
            raise PipelineError(f"no detections for {path.name} (expected {det_path})")
        image = load_image(path)
        region_set = load_detections(det_path, image.shape[1], image.shape[0])
        container = encode_image(image, region_set, config)
        total = write_file(out_dir / (path.stem + ".roip"), container)
        return {
            "name": path.name,
            "regions": container.region_count,
            "bin_w": container.bin_w,
            "bin_h": container.bin_h,
            "container_bytes": total,
            "bpp": f"{bpp(total, container.orig_w, container.orig_h):.6f}",
        }

    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        rows = list(pool.map(encode_one, image_paths))
    rows.sort(key=lambda r: r["name"])

    csv_path = Path(args.csv) if args.csv else out_dir / "summary.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
    print(f"encoded {len(rows)} images to {out_dir}, summary in {csv_path}")
    return 0


# --------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="roipack",
        description="ROI-packing image compression: pack detected regions into "
        "a minimal frame, compress, containerize, reconstruct.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("encode", help="image + detections -> .roip container")
    sp.add_argument("image")
    sp.add_argument("detections")
    sp.add_argument("-o", "--output", required=True, metavar="FILE.roip")
    _add_config_flags(sp)
    sp.set_defaults(func=cmd_encode)

    sp = sub.add_parser("decode", help=".roip container -> reconstructed image")
    sp.add_argument("container")
    sp.add_argument("-o", "--output", required=True, metavar="IMAGE")
    _add_config_flags(sp)
    sp.set_defaults(func=cmd_decode)

    sp = sub.add_parser("roundtrip", help="encode+decode in memory and report quality")
    sp.add_argument("image")
    sp.add_argument("detections")
    sp.add_argument("--qp-ladder", action="store_true",
                    help="report one row per QP in {22,27,32,37,42,47}")
    _add_config_flags(sp)
    sp.set_defaults(func=cmd_roundtrip)

    sp = sub.add_parser("preview", help="write per-stage debug images")
    sp.add_argument("image")
    sp.add_argument("detections")
    sp.add_argument("-o", "--output", required=True, metavar="DIR")
    _add_config_flags(sp)
    sp.set_defaults(func=cmd_preview)

    sp = sub.add_parser("bdrate", help="Bjøntegaard deltas between two rate,metric CSVs")
    sp.add_argument("anchor")
    sp.add_argument("test")
    sp.add_argument("--mode", choices=("piecewise", "classic"), default="piecewise")
    sp.add_argument("--csv", metavar="FILE", help="also write the result as CSV")
    sp.add_argument("--svg", metavar="FILE", help="also plot both curves as SVG")
    sp.set_defaults(func=cmd_bdrate)

    sp = sub.add_parser("batch", help="encode a directory of images + detections")
    sp.add_argument("images", help="directory of images")
    sp.add_argument("detections", help="directory of <stem>.json detection files")
    sp.add_argument("-o", "--output", required=True, metavar="DIR")
    sp.add_argument("--csv", metavar="FILE", help="summary CSV (default DIR/summary.csv)")
    sp.add_argument("--jobs", type=int, default=1, help="parallel workers")
    _add_config_flags(sp)
    sp.set_defaults(func=cmd_batch)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, PolicyError) as exc:
        print(f"roipack: config error: {exc}", file=sys.stderr)
        return 2
    except (
        PipelineError,
        ContainerError,
        CodecError,
        ExternalCodecError,
        CurveError,
        DetectionFormatError,
        OSError,
        ValueError,
    ) as exc:
        print(f"roipack: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
