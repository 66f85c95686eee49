"""Command-line front end.

    polsarblf simulate  --scene default4 --seed 0 --out scene/
    polsarblf filter    --in scene/ --distance ai --out filtered/
    polsarblf evaluate  --truth scene/ --estimate filtered/ --err-edge
    polsarblf decompose --in filtered/ --out halpha/
    polsarblf render    --in filtered/ --out pauli.png
    polsarblf histogram --in filtered/ --out hist.csv
    polsarblf reproduce --out report/

Exit status: 0 on success, 1 when ``reproduce`` finishes with failed
criteria, 2 on a usage or input error.  Errors go to stderr as one
``error: code=<code> message=<text>`` line.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import defaults, raster
from .bilateral import FilterConfig, boxcar, run_filter
from .field import CovarianceField, Rect
from .metrics import edge_mask, quality, quality_table_csv, zone_report
from .polarimetry import h_alpha_field, halpha_histogram, pauli_rgb
from .speckle import build_scene, default_scene, rank1_scene

log = logging.getLogger("polsarblf")


class CliError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


def _usage(message: str) -> CliError:
    return CliError("usage", message)


# --------------------------------------------------------------------------
# simulate


def cmd_simulate(args) -> int:
    if args.looks < 1:
        raise _usage("--looks must be >= 1")
    if args.looks < 3:
        log.warning(
            "looks=%d: matrices of fewer than 3 looks are rank deficient; the filter "
            "needs a multi-look initialization of at least 3 independent samples",
            args.looks,
        )
    if args.labels or args.classes:
        if not (args.labels and args.classes):
            raise _usage("--labels and --classes must be given together")
        try:
            labels = raster.load_labels(args.labels, args.classes, args.zones)
        except (raster.RasterError, ValueError) as exc:
            raise CliError("invalid-class-config", str(exc)) from exc
        field, labels = build_scene(labels, args.looks, args.seed)
        scene = "custom"
    elif args.scene == "rank1":
        field, labels = rank1_scene(looks=args.looks, seed=args.seed, size=args.size or 64)
        scene = "rank1"
    else:
        field, labels = build_scene(default_scene(args.size or defaults.SCENE_SIZE), args.looks, args.seed)
        scene = "default4"
    record = {"scene": scene, "seed": args.seed, "looks": args.looks, "rng": "philox", "nrows": field.height, "ncols": field.width}
    raster.save_bundle(field, labels, args.out, record)
    log.info("wrote %s (%dx%d, %d looks)", args.out, field.height, field.width, args.looks)
    return 0


# --------------------------------------------------------------------------
# filter

_CONFIG_KEYS = {
    "distance": str,
    "gamma_r": float,
    "gamma_s": float,
    "iters": int,
    "window": int,
    "cond_threshold": float,
    "threads": int,
    "method": str,
    "box_size": int,
}


def _read_config(path) -> dict:
    try:
        raw = raster.read_kv(path)
    except (OSError, raster.RasterError) as exc:
        raise CliError("invalid-config", str(exc)) from exc
    out = {}
    for key, value in raw.items():
        key = key.replace("-", "_")
        if key not in _CONFIG_KEYS:
            raise CliError("invalid-config", f"{path}: unknown key {key!r}")
        try:
            out[key] = _CONFIG_KEYS[key](value)
        except ValueError as exc:
            raise CliError("invalid-config", f"{path}: {key}={value!r}: {exc}") from exc
    return out


def resolve_filter_settings(args) -> dict:
    """Flags override the config file, which overrides the built-in defaults."""
    settings = {"distance": "ai", "method": "bilateral", "box_size": defaults.BOXCAR_SIZE, "threads": None}
    if args.config:
        settings.update(_read_config(args.config))
    for key in _CONFIG_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    return settings


def build_filter_config(settings: dict) -> FilterConfig:
    window = settings.get("window")
    if window is not None and (window < 3 or window % 2 == 0):
        raise _usage(f"--window must be an odd integer >= 3, got {window}")
    iters = settings.get("iters")
    if iters is not None and iters < 1:
        raise _usage(f"--iters must be >= 1, got {iters}")
    try:
        return FilterConfig.for_distance(
            settings["distance"],
            gamma_r=settings.get("gamma_r"),
            gamma_s=settings.get("gamma_s"),
            n_iter=iters,
            window_half=None if window is None else window // 2,
            cond_threshold=settings.get("cond_threshold"),
        )
    except ValueError as exc:
        raise _usage(str(exc)) from exc


def cmd_filter(args) -> int:
    settings = resolve_filter_settings(args)
    threads = settings.get("threads")
    if threads is not None and threads < 1:
        raise _usage("--threads must be >= 1")
    method = settings["method"]
    if method not in ("bilateral", "boxcar"):
        raise _usage(f"--method must be bilateral or boxcar, got {method!r}")
    field = raster.load_field(args.input)
    t0 = time.perf_counter()
    if method == "boxcar":
        size = settings["box_size"]
        if size < 1 or size % 2 == 0:
            raise _usage(f"--box-size must be a positive odd integer, got {size}")
        out = boxcar(field, size)
        meta = {"method": "boxcar", "window": size}
    else:
        config = build_filter_config(settings)
        out = run_filter(field, config, threads=threads)
        meta = {"method": "bilateral", **config.as_dict()}
    wall = time.perf_counter() - t0
    raster.write_t3(out, args.out)
    meta.update({"input": str(args.input), "threads": threads if threads is not None else "default", "wall_time_s": f"{wall:.3f}"})
    raster.write_kv(Path(args.out) / "filter_meta.txt", meta)
    log.info("filtered %s -> %s in %.2f s", args.input, args.out, wall)
    return 0


# --------------------------------------------------------------------------
# evaluate


def parse_zones(arg: str) -> dict[str, Rect]:
    """A zones file, or inline ``name:row0,col0,row1,col1;...``."""
    if Path(arg).exists():
        return raster.read_zones(arg)
    zones = {}
    for item in filter(None, (s.strip() for s in arg.split(";"))):
        try:
            name, coords = item.split(":")
            zones[name] = Rect(*(int(v) for v in coords.split(",")))
        except (ValueError, TypeError) as exc:
            raise _usage(f"bad zone {item!r}; expected name:row0,col0,row1,col1") from exc
    if not zones:
        raise _usage("no zones given")
    return zones


def cmd_evaluate(args) -> int:
    truth = raster.load_field(args.truth)
    estimate = raster.load_field(args.estimate)
    if truth.shape != estimate.shape:
        raise CliError("shape-mismatch", f"truth {truth.shape} vs estimate {estimate.shape}")
    truth_dir = Path(args.truth)
    labels = None
    if args.labels:
        labels = raster.read_labels(args.labels)
    elif (truth_dir / "labels.lbl").exists():
        labels = raster.read_labels(truth_dir / "labels.lbl")
    if args.err_edge and labels is None:
        raise _usage("--err-edge needs a label map (--labels, or a truth bundle that has one)")
    zones = None
    if args.zones:
        zones = parse_zones(args.zones)
    elif (truth_dir / "zones.txt").exists():
        zones = raster.read_zones(truth_dir / "zones.txt")
    # a bundle's field is the speckled image; compare against the class means
    if (truth_dir / "classes.txt").exists() and labels is not None and not args.raw_truth:
        classes, _, _ = raster.read_classes(truth_dir / "classes.txt")
        truth = CovarianceField(classes[labels], looks=truth.looks, basis=truth.basis)
    mask = edge_mask(labels) if args.err_edge else None
    row = quality(args.name or Path(args.estimate).name, truth, estimate, mask, zones)
    text = quality_table_csv([row])
    if zones:
        text += "\n" + zone_report(estimate, zones).to_csv()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


# --------------------------------------------------------------------------
# decompose / render / histogram


def cmd_decompose(args) -> int:
    field = raster.load_field(args.input)
    h, a = h_alpha_field(field)
    out = Path(args.out)
    raster.write_plane(h, out, "entropy")
    raster.write_plane(np.degrees(a), out, "alpha_deg")
    bad = ~(np.isfinite(h) & np.isfinite(a))
    if bad.any():
        log.warning("%d pixels have zero trace or are indefinite; written as NaN", int(bad.sum()))
    raster.export_png(np.nan_to_num(h), out / "entropy.png", args.cmap, 0.0, 1.0)
    raster.export_png(np.nan_to_num(np.degrees(a)), out / "alpha.png", args.cmap, 0.0, 90.0)
    return 0


def cmd_render(args) -> int:
    field = raster.load_field(args.input)
    from .polarimetry import to_basis
    from .field import PAULI

    rgb = pauli_rgb(to_basis(field, PAULI).data, args.clip_quantile, args.gamma)
    raster.export_png(rgb, args.out)
    return 0


def cmd_histogram(args) -> int:
    field = raster.load_field(args.input)
    h, a = h_alpha_field(field)
    counts, he, ae = halpha_histogram(h, a, args.bins_h, args.bins_alpha)
    raster.write_histogram_csv(counts, he, ae, args.out)
    if args.png:
        density = np.log1p(counts.T[::-1].astype(float))  # alpha up, H right
        raster.export_png(density, args.png, args.cmap)
    return 0


# --------------------------------------------------------------------------
# reproduce


def cmd_reproduce(args) -> int:
    from . import acceptance

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    seeds = tuple(int(s) for s in args.seeds.split(",")) if args.seeds else acceptance.TABLE_SEEDS
    acceptance.warm_up()
    study = acceptance.table_study(size=args.size, seeds=seeds, threads=args.threads, progress=log.info)
    results = acceptance.run_all(study=study)
    report = acceptance.format_report(results, study)
    (out / "acceptance_report.txt").write_text(report + "\n")
    rows = ["seed,method,err_glob,err_edge,enl,seconds"]
    for r in study.runs:
        for m in r.err_glob:
            rows.append(f"{r.seed},{m},{r.err_glob[m]:.6g},{r.err_edge[m]:.6g},{r.enl[m]:.6g},{r.seconds[m]:.3f}")
    (out / "table_study.csv").write_text("\n".join(rows) + "\n")
    print(report)
    return 0 if all(r.passed for r in results) else 1


# --------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _usage(message)


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="polsarblf", description="Bilateral speckle filtering of PolSAR covariance images.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="speckle a synthetic scene")
    s.add_argument("--scene", choices=("default4", "rank1"), default="default4")
    s.add_argument("--labels", help="label map file (8-bit with width/height header)")
    s.add_argument("--classes", help="class matrix text file")
    s.add_argument("--zones", help="optional zones file for a custom scene")
    s.add_argument("--looks", type=int, default=defaults.LOOKS)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--size", type=int, help="scene side in pixels (default4: 512, rank1: 64)")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    f = sub.add_parser("filter", help="bilateral or boxcar filtering")
    f.add_argument("--in", dest="input", required=True)
    f.add_argument("--out", required=True)
    f.add_argument("--config", help="key=value file; flags take precedence")
    f.add_argument("--method", choices=("bilateral", "boxcar"))
    f.add_argument("--distance", choices=("kl", "ai", "le"))
    f.add_argument("--gamma-r", dest="gamma_r", type=float)
    f.add_argument("--gamma-s", dest="gamma_s", type=float)
    f.add_argument("--iters", type=int)
    f.add_argument("--window", type=int)
    f.add_argument("--cond-threshold", dest="cond_threshold", type=float)
    f.add_argument("--threads", type=int)
    f.add_argument("--box-size", dest="box_size", type=int)
    f.set_defaults(func=cmd_filter)

    e = sub.add_parser("evaluate", help="ERR_glob / ERR_edge / ENL and zone means as CSV")
    e.add_argument("--truth", required=True, help="scene bundle or matrix directory")
    e.add_argument("--estimate", required=True)
    e.add_argument("--labels", help="label map (defaults to the truth bundle's)")
    e.add_argument("--zones", help="zones file or name:row0,col0,row1,col1;...")
    e.add_argument("--err-edge", dest="err_edge", action="store_true", help="also compute the edge error")
    e.add_argument("--raw-truth", dest="raw_truth", action="store_true", help="compare against the truth field as stored")
    e.add_argument("--name")
    e.add_argument("--out")
    e.set_defaults(func=cmd_evaluate)

    d = sub.add_parser("decompose", help="entropy and mean alpha rasters")
    d.add_argument("--in", dest="input", required=True)
    d.add_argument("--out", required=True)
    d.add_argument("--cmap", default="gray")
    d.set_defaults(func=cmd_decompose)

    r = sub.add_parser("render", help="Pauli RGB PNG")
    r.add_argument("--in", dest="input", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--clip-quantile", dest="clip_quantile", type=float, default=defaults.RGB_CLIP_QUANTILE)
    r.add_argument("--gamma", type=float, default=defaults.RGB_GAMMA)
    r.set_defaults(func=cmd_render)

    h = sub.add_parser("histogram", help="2-D H/alpha histogram")
    h.add_argument("--in", dest="input", required=True)
    h.add_argument("--out", required=True, help="CSV path")
    h.add_argument("--png")
    h.add_argument("--bins-h", dest="bins_h", type=_positive_int, default=50)
    h.add_argument("--bins-alpha", dest="bins_alpha", type=_positive_int, default=45)
    h.add_argument("--cmap", default="gray")
    h.set_defaults(func=cmd_histogram)

    q = sub.add_parser("reproduce", help="run every acceptance criterion and write a report")
    q.add_argument("--out", required=True)
    q.add_argument("--size", type=int, default=defaults.SCENE_SIZE)
    q.add_argument("--seeds", help="comma-separated seeds (default 0,1,2,3,4)")
    q.add_argument("--threads", type=int, default=1)
    q.set_defaults(func=cmd_reproduce)
    return p


def _message(text: str) -> str:
    return " ".join(str(text).split())


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s: %(message)s", stream=sys.stderr)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.verbose:
            log.setLevel(logging.DEBUG)
        return args.func(args)
    except CliError as exc:
        print(f"error: code={exc.code} message={_message(exc)}", file=sys.stderr)
        return 2
    except raster.RasterError as exc:
        print(f"error: code=bad-input message={_message(exc)}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: code={type(exc).__name__} message={_message(exc)}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
