"""Command line front end: extraction, assessment, and the editing service.

Exit codes: 0 success, 2 unreadable or unwritable inputs/outputs, 3 bad
parameters, 4 internal failure. All output files are written
deterministically so reruns on identical inputs are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import logging
import socket
import sys
from pathlib import Path

import numpy as np

from . import geojson_io
from .assessment import (
    AssessmentConfig,
    confusion_series,
    grid_for_layers,
    rasterize_lines,
    report_csv,
    report_json,
    report_text,
    save_histogram,
)
from .errors import (
    BoundlineError,
    GridMismatchError,
    ParameterError,
    RasterFormatError,
    WorldFileError,
)
from .pipeline import (
    assemble_network,
    contour_lines,
    default_slic_params,
    superpixel_lines,
)
from .raster import (
    load_image,
    save_gray16_png,
    save_labels_png,
    write_world_file,
)
from .superpixels import SlicParams

__all__ = ["main"]

log = logging.getLogger("boundline")

EXIT_OK = 0
EXIT_IO = 2
EXIT_PARAMS = 3
EXIT_INTERNAL = 4


class _JsonFormatter(logging.Formatter):
    def format(self, record: logging.LogRecord) -> str:
        doc = {
            "level": record.levelname.lower(),
            "logger": record.name,
            "message": record.getMessage(),
            "time": self.formatTime(record, "%Y-%m-%dT%H:%M:%S"),
        }
        return json.dumps(doc, sort_keys=True)


def _setup_logging(json_logs: bool) -> None:
    handler = logging.StreamHandler(sys.stderr)
    if json_logs:
        handler.setFormatter(_JsonFormatter())
    else:
        handler.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
    logging.basicConfig(level=logging.INFO, handlers=[handler], force=True)


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; parameter problems are exit 3."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_PARAMS)


def _csv_floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected comma-separated numbers, got {text!r}") from None


def _worldfile_for(args) -> str:
    if args.worldfile is not None:
        return args.worldfile
    return str(Path(args.image).with_suffix(".pgw"))


def _load_lines(path, skip_non_exact: bool = False):
    return geojson_io.feature_collection_to_polylines(
        geojson_io.load(path), skip_non_exact=skip_non_exact)


def cmd_contours(args) -> int:
    grid = load_image(args.image, _worldfile_for(args))
    result = contour_lines(grid, threshold=args.threshold,
                           spectral=not args.no_spectral,
                           max_dim=args.max_dim)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_gray16_png(result.probability.values, out / "gpb.png")
    write_world_file(out / "gpb.pgw", result.probability.transform)
    save_gray16_png(result.binary.mask.astype(np.float64), out / "binary.png")
    write_world_file(out / "binary.pgw", result.binary.transform)
    geojson_io.dump(geojson_io.polylines_to_feature_collection(result.lines),
                    out / "outlines.geojson")
    log.info("wrote %d contour lines to %s", len(result.lines), out)
    return EXIT_OK


def cmd_slic(args) -> int:
    grid = load_image(args.image, _worldfile_for(args))
    if args.region_size is not None and args.target_count is not None:
        raise ParameterError(
            "give either --region-size or --target-count, not both")
    if args.region_size is None and args.target_count is None:
        region_size = default_slic_params(grid.transform).region_size
    else:
        region_size = args.region_size
    params = SlicParams(region_size=region_size,
                        target_count=args.target_count,
                        compactness=args.compactness,
                        iterations=args.iterations,
                        min_region_size=args.min_region_size)
    spacing = params.spacing(grid.width, grid.height)
    if spacing >= min(grid.width, grid.height):
        raise ParameterError(
            f"superpixel spacing {spacing} does not fit a "
            f"{grid.width}x{grid.height} image")
    result = superpixel_lines(grid, params)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_labels_png(result.labels.labels, out / "labels.png")
    write_world_file(out / "labels.pgw", result.labels.transform)
    geojson_io.dump(geojson_io.polylines_to_feature_collection(result.lines),
                    out / "outlines.geojson")
    n = int(result.labels.labels.max()) + 1
    log.info("wrote %d superpixels and %d outlines to %s",
             n, len(result.lines), out)
    return EXIT_OK


def cmd_combine(args) -> int:
    candidates = _load_lines(args.slic)
    guides = _load_lines(args.gpb)
    net = assemble_network(candidates, guides, radius=args.radius,
                           snap_tol=args.snap_tol,
                           min_dangle=args.min_dangle)
    if not net.edges:
        log.warning("combined network is empty: no superpixel outlines "
                    "within %g m of the contour guides", args.radius)
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    geojson_io.dump(geojson_io.network_to_feature_collection(net), out)
    log.info("wrote %d nodes / %d edges to %s",
             len(net.nodes), len(net.edges), out)
    return EXIT_OK


def cmd_assess(args) -> int:
    delineated = _load_lines(args.delineated)
    reference = _load_lines(args.reference, skip_non_exact=True)
    transform, width, height = grid_for_layers([delineated, reference],
                                               args.gsd)
    extra = {"distances": args.bands} if args.bands else {}
    cfg = AssessmentConfig(transform=transform, width=width, height=height,
                           **extra)
    series = confusion_series(
        rasterize_lines(delineated, transform, width, height),
        rasterize_lines(reference, transform, width, height), cfg)

    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(report_csv(series), encoding="utf-8")
    out.with_suffix(".json").write_text(
        json.dumps(report_json(series), sort_keys=True, indent=2) + "\n",
        encoding="utf-8")
    out.with_suffix(".txt").write_text(report_text(series), encoding="utf-8")
    save_histogram(series, out.with_suffix(".png"))
    log.info("wrote report to %s (+ .json, .txt, .png)", out)
    sys.stdout.write(report_text(series))
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    # claim the port up front so a conflict surfaces as a plain I/O error
    # instead of a uvicorn traceback
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    try:
        probe.bind((args.host, args.port))
    finally:
        probe.close()

    app = create_app(args.data_dir)
    uvicorn.run(app, host=args.host, port=args.port,
                log_level="warning" if args.json_logs else "info")
    return EXIT_OK


def _build_parser() -> _Parser:
    parser = _Parser(prog="boundline",
                     description="semi-automatic parcel boundary mapping "
                                 "from georeferenced orthoimages")
    parser.add_argument("--json-logs", action="store_true",
                        help="emit one JSON object per log line")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("contours",
                       help="detect boundary contours and vectorize them")
    p.add_argument("image", help="RGB PNG or PPM orthoimage")
    p.add_argument("--worldfile",
                   help="ESRI world file (default: image path with .pgw)")
    p.add_argument("-o", "--out-dir", required=True,
                   help="directory for gpb.png, binary.png, outlines.geojson")
    p.add_argument("--threshold", type=float, default=0.3,
                   help="binary boundary threshold in [0, 1] (default 0.3)")
    p.add_argument("--no-spectral", action="store_true",
                   help="skip the spectral globalization stage")
    p.add_argument("--max-dim", type=int, default=1000,
                   help="downscale cap for the contour stage (default 1000)")
    p.set_defaults(func=cmd_contours)

    p = sub.add_parser("slic", help="segment into superpixels and trace "
                                    "their outlines")
    p.add_argument("image", help="RGB PNG or PPM orthoimage")
    p.add_argument("--worldfile",
                   help="ESRI world file (default: image path with .pgw)")
    p.add_argument("-o", "--out-dir", required=True,
                   help="directory for labels.png and outlines.geojson")
    p.add_argument("--region-size", type=int,
                   help="superpixel spacing in pixels")
    p.add_argument("--target-count", type=int,
                   help="approximate number of superpixels")
    p.add_argument("--compactness", type=float, default=10.0,
                   help="color/space balance (default 10)")
    p.add_argument("--iterations", type=int, default=10,
                   help="assignment iterations (default 10)")
    p.add_argument("--min-region-size", type=int,
                   help="smallest surviving region in pixels "
                        "(default: spacing^2 / 4)")
    p.set_defaults(func=cmd_slic)

    p = sub.add_parser("combine", help="keep superpixel outlines near "
                                       "contour guides and build a network")
    p.add_argument("--slic", required=True,
                   help="superpixel outlines GeoJSON")
    p.add_argument("--gpb", required=True, help="contour outlines GeoJSON")
    p.add_argument("--radius", type=float, default=5.0,
                   help="buffer radius in meters (default 5)")
    p.add_argument("--snap-tol", type=float, default=0.05,
                   help="endpoint snap tolerance in meters (default 0.05)")
    p.add_argument("--min-dangle", type=float, default=0.5,
                   help="prune dangles shorter than this (default 0.5)")
    p.add_argument("-o", "--output", required=True,
                   help="output network GeoJSON path")
    p.set_defaults(func=cmd_combine)

    p = sub.add_parser("assess", help="score delineated lines against a "
                                      "reference layer")
    p.add_argument("--delineated", required=True,
                   help="delineated boundaries GeoJSON")
    p.add_argument("--reference", required=True,
                   help="reference boundaries GeoJSON")
    p.add_argument("--gsd", type=float, required=True,
                   help="assessment grid resolution in meters per pixel")
    p.add_argument("--bands", type=_csv_floats,
                   help="comma-separated distance band edges in meters")
    p.add_argument("-o", "--output", required=True,
                   help="output CSV path; JSON, text, and histogram PNG "
                        "siblings are written next to it")
    p.set_defaults(func=cmd_assess)

    p = sub.add_parser("serve", help="run the interactive delineation "
                                     "service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--data-dir",
                   help="session snapshot directory "
                        "(default: $BOUNDLINE_DATA_DIR or ./boundline_data)")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    _setup_logging(args.json_logs)
    try:
        return args.func(args)
    except (OSError, WorldFileError, RasterFormatError) as err:
        log.error("%s", err)
        return EXIT_IO
    except (ParameterError, GridMismatchError) as err:
        log.error("%s", err)
        return EXIT_PARAMS
    except BoundlineError as err:
        log.error("%s", err)
        return EXIT_INTERNAL
    except Exception:
        log.exception("internal error")
        return EXIT_INTERNAL


if __name__ == "__main__":
    raise SystemExit(main())
