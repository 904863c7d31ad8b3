"""Command line front end.

Subcommands:
    segment    one image -> one mask (and optionally the masked image)
    sweep      images x kernel pairs -> dataset tree of masks/applied images
    evaluate   predicted masks vs reference masks -> metric report
    relabel    diagnosis codes -> benign/malignant label CSV

Exit codes: 0 success, 1 partial (some items flagged or failed), 2 usage
error, 3 fatal I/O or config error. Summary lines go to stdout,
diagnostics to stderr. Output bytes never depend on --jobs.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from . import dataset as ds
from . import metrics as mt
from . import pipeline as pl
from .errors import LesionMaskError

JOBS_ENV = "LESIONMASK_JOBS"


def parse_pairs(text: str) -> tuple[tuple[int, int], ...]:
    """Parse a sweep pair list like ``10_10,15_15`` into (dilate, clean) ints."""
    pairs = []
    for token in text.split(","):
        token = token.strip()
        parts = token.split("_")
        if len(parts) != 2:
            raise argparse.ArgumentTypeError(
                f"bad pair {token!r}: expected <dilate>_<clean>"
            )
        try:
            dilate, clean = int(parts[0]), int(parts[1])
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad pair {token!r}: sides must be integers")
        if dilate < 0 or clean < 0:
            raise argparse.ArgumentTypeError(f"bad pair {token!r}: sides must be >= 0")
        pairs.append((dilate, clean))
    if not pairs:
        raise argparse.ArgumentTypeError("empty pair list")
    if len(set(pairs)) != len(pairs):
        raise argparse.ArgumentTypeError(f"duplicate pair in {text!r}")
    return tuple(pairs)


def positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return value


def resolve_jobs(args: argparse.Namespace) -> int:
    if args.jobs is not None:
        return args.jobs
    env = os.environ.get(JOBS_ENV)
    if env:
        try:
            value = int(env)
        except ValueError:
            raise LesionMaskError(f"{JOBS_ENV} must be an integer, got {env!r}")
        if value < 1:
            raise LesionMaskError(f"{JOBS_ENV} must be >= 1, got {env!r}")
        return value
    return os.cpu_count() or 1


def load_config(path: str | None) -> pl.PipelineConfig:
    if path is None or path == "default":
        return pl.DEFAULT_CONFIG
    with open(path) as fh:
        doc = json.load(fh)
    return pl.config_from_dict(doc)


def _manifest_rows(args: argparse.Namespace) -> list[ds.ManifestRecord]:
    """Build the image list for sweep from --manifest or --images."""
    if args.manifest:
        rows, missing = ds.read_manifest_csv(args.manifest)
        for image_id in missing:
            print(f"missing file for {image_id}", file=sys.stderr)
        if not rows:
            raise LesionMaskError(f"no usable rows in {args.manifest}")
        return rows
    rows = []
    for path_text in args.images:
        path = Path(path_text)
        if not path.is_file():
            raise LesionMaskError(f"image not found: {path}")
        rows.append(ds.ManifestRecord(image_id=path.stem, path=path))
    return rows


def cmd_segment(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    from .imgproc import load_rgb_image

    img = load_rgb_image(args.input)
    outcome = pl.generate_mask(img, config)
    pl.export_mask(outcome.mask, args.out_mask)
    if args.out_applied:
        from PIL import Image

        applied = pl.apply_mask(img, outcome.mask, pl.ApplicationMode(args.mode))
        Image.fromarray(applied, mode="RGB").save(args.out_applied, format="PNG")
    threshold = outcome.otsu.threshold if outcome.otsu else None
    print(
        f"{args.input}: threshold={threshold}"
        f" foreground={outcome.foreground_fraction:.4f}"
        f" flags={';'.join(sorted(f.value for f in outcome.flags)) or '-'}"
    )
    return 1 if outcome.flags else 0


def cmd_sweep(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    manifest = _manifest_rows(args)
    sweep = pl.SweepSpec(pairs=args.pairs, base=config)
    mode = pl.ApplicationMode(args.mode)
    jobs = resolve_jobs(args)
    summary = ds.emit_dataset(manifest, sweep, mode, args.out, jobs=jobs)
    for image_id, message in summary.failed:
        print(f"failed {image_id}: {message}", file=sys.stderr)
    for image_id, name in summary.flagged:
        print(f"flagged {image_id} in {name}", file=sys.stderr)
    for pair in sweep.pairs:
        name = ds.pair_name(pair)
        print(f"pair {name}: {summary.per_pair.get(name, 0)} masks")
    print(
        f"wrote {summary.n_masks} masks for {summary.n_images} images"
        f" across {len(sweep.pairs)} pairs to {summary.out_dir}"
    )
    return 1 if summary.failed or summary.flagged else 0


def _evaluate_pairs(args: argparse.Namespace) -> list[tuple[str, Path, Path]]:
    """Resolve (id, pred, truth) triples from a pair CSV or by stem matching."""
    pred = Path(args.pred)
    pairs: list[tuple[str, Path, Path]] = []
    if pred.is_file() and pred.suffix.lower() == ".csv":
        with open(pred, newline="") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            if "pred" not in header or "truth" not in header:
                raise LesionMaskError(f"{pred}: pair CSV needs pred and truth columns")
            for row in reader:
                pred_path = Path((row.get("pred") or "").strip())
                truth_path = Path((row.get("truth") or "").strip())
                item_id = (row.get("id") or "").strip() or pred_path.stem
                if not pred_path.is_file() or not truth_path.is_file():
                    print(f"missing file for {item_id}", file=sys.stderr)
                    continue
                pairs.append((item_id, pred_path, truth_path))
    else:
        if not pred.is_dir():
            raise LesionMaskError(f"prediction path is neither directory nor CSV: {pred}")
        if not args.truth:
            raise LesionMaskError("--truth is required when --pred is a directory")
        truth_dir = Path(args.truth)
        if not truth_dir.is_dir():
            raise LesionMaskError(f"reference directory does not exist: {truth_dir}")
        for pred_path in sorted(pred.glob("*.png")):
            truth_path = ds.find_truth_mask(truth_dir, pred_path.stem)
            if truth_path is None:
                print(f"no reference mask for {pred_path.stem}", file=sys.stderr)
                continue
            pairs.append((pred_path.stem, pred_path, truth_path))
    if not pairs:
        raise LesionMaskError(f"no prediction/reference pairs resolved from {pred}")
    return pairs


def _summary_line(tag: str, metrics: mt.SegMetrics | None, n_items: int, n_flagged: int) -> str:
    if metrics is None:
        return f"{tag}: no defined metrics over {n_items} items"
    return (
        f"{tag}:"
        f" acc={mt.render_ratio(metrics.accuracy, undefined='n/a')}"
        f" se={mt.render_ratio(metrics.sensitivity, undefined='n/a')}"
        f" sp={mt.render_ratio(metrics.specificity, undefined='n/a')}"
        f" precision={mt.render_ratio(metrics.precision, undefined='n/a')}"
        f" f1={mt.render_ratio(metrics.f1, undefined='n/a')}"
        f" dice={mt.render_ratio(metrics.dice, undefined='n/a')}"
        f" items={n_items} flagged={n_flagged}"
    )


def cmd_evaluate(args: argparse.Namespace) -> int:
    pairs = _evaluate_pairs(args)
    jobs = resolve_jobs(args)
    report = mt.evaluate_batch(pairs, threshold=args.mask_threshold, jobs=jobs)
    for path_text in args.report or []:
        path = Path(path_text)
        if path.suffix.lower() == ".csv":
            mt.write_report_csv(report, path)
        elif path.suffix.lower() == ".json":
            mt.write_report_json(report, path)
        else:
            raise LesionMaskError(f"report path must end in .csv or .json: {path}")
    for err in report.errors:
        print(f"failed {err.item_id}: {err.message}", file=sys.stderr)
    print(_summary_line("macro", report.macro, len(report.items), report.n_flagged))
    print(_summary_line("micro", report.micro, len(report.items), report.n_flagged))
    return 1 if report.errors or report.n_flagged else 0


def cmd_relabel(args: argparse.Namespace) -> int:
    if args.mapping and args.mapping != "default":
        mapping = ds.DiagnosisMapping.from_csv(args.mapping)
    else:
        mapping = ds.DiagnosisMapping.default()
    loaded = ds.load_metadata(args.metadata)
    unmapped = sorted({r.dx for r in loaded.records if r.dx not in mapping.entries})
    if unmapped:
        print(
            f"error: no mapping entry for dx codes: {', '.join(unmapped)}",
            file=sys.stderr,
        )
        return 3
    counts: dict[str, int] = {}
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["image_id", "dx", "label"])
        for record in loaded.records:
            label = ds.map_diagnosis(record.dx, mapping)
            counts[label.value] = counts.get(label.value, 0) + 1
            writer.writerow([record.image_id, record.dx, label.value])
    for err in loaded.row_errors:
        print(f"line {err.line}: {err.message}", file=sys.stderr)
    total = sum(counts.values())
    breakdown = " ".join(f"{name}={counts[name]}" for name in sorted(counts))
    print(f"labeled {total} records ({breakdown})")
    return 1 if loaded.row_errors else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lesionmask",
        description="Otsu + morphology lesion masks, mask sweeps, and mask scoring.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    seg = sub.add_parser("segment", help="segment one image")
    seg.add_argument("--input", required=True, help="input RGB image")
    seg.add_argument("--config", default="default",
                     help='pipeline config JSON, or "default" (the default)')
    seg.add_argument("--out-mask", required=True, help="output mask PNG")
    seg.add_argument("--out-applied", help="also write the mask applied to the image")
    seg.add_argument(
        "--mode",
        default=pl.ApplicationMode.MASK_ONLY.value,
        choices=[m.value for m in pl.ApplicationMode],
        help="how --out-applied combines image and mask",
    )
    seg.set_defaults(func=cmd_segment)

    swp = sub.add_parser("sweep", help="emit mask variants over kernel pairs")
    src = swp.add_mutually_exclusive_group(required=True)
    src.add_argument("--manifest", help="manifest CSV (image_id,path,...)")
    src.add_argument("--images", nargs="+", help="image files, manifest-free")
    swp.add_argument("--pairs", required=True, type=parse_pairs,
                     help="comma list of <dilate>_<clean> kernel sides, e.g. 10_10,15_15")
    swp.add_argument(
        "--mode",
        default=pl.ApplicationMode.MASK_ONLY.value,
        choices=[m.value for m in pl.ApplicationMode],
        help="applied-image variant to emit next to each mask",
    )
    swp.add_argument("--out", required=True, help="output directory")
    swp.add_argument("--config", default="default",
                     help='base pipeline config JSON, or "default" (the default)')
    swp.add_argument("--jobs", type=positive_int,
                     help=f"worker threads (default: {JOBS_ENV} or CPU count)")
    swp.set_defaults(func=cmd_sweep)

    ev = sub.add_parser("evaluate", help="score predicted masks against references")
    ev.add_argument("--pred", required=True,
                    help="directory of predicted mask PNGs, or a pair CSV (id,pred,truth)")
    ev.add_argument("--truth", help="directory of reference masks (for directory --pred)")
    ev.add_argument("--report", action="append",
                    help="report path ending in .csv or .json; repeatable")
    ev.add_argument("--mask-threshold", type=int, default=127,
                    help="luminance above this counts as foreground (default 127)")
    ev.add_argument("--jobs", type=positive_int,
                    help=f"worker threads (default: {JOBS_ENV} or CPU count)")
    ev.set_defaults(func=cmd_evaluate)

    rel = sub.add_parser("relabel", help="collapse diagnosis codes to benign/malignant")
    rel.add_argument("--metadata", required=True,
                     help="metadata CSV with lesion_id,image_id,dx")
    rel.add_argument("--mapping", default="default",
                     help='mapping CSV (dx,label), or "default" (the default)')
    rel.add_argument("--out", required=True, help="output CSV (image_id,dx,label)")
    rel.set_defaults(func=cmd_relabel)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return args.func(args)
    except LesionMaskError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
