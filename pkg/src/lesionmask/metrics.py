"""Pixelwise confusion counts and segmentation metrics.

Metrics are computed as exact rationals and rendered to four decimal places
in reports. A zero denominator makes a metric undefined (None), never 0 or
1: silently coercing would corrupt batch means exactly on the empty-mask
failures this pipeline is built to flag.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DimensionMismatchError
from .pipeline import import_mask

METRIC_NAMES = ("accuracy", "sensitivity", "specificity", "precision", "f1", "dice")

# Report column order; acc/se/sp abbreviations follow the usual tabular form.
CSV_COLUMNS = ("id", "tp", "fp", "tn", "fn", "acc", "se", "sp", "precision", "f1", "dice", "flags")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            tp=self.tp + other.tp,
            fp=self.fp + other.fp,
            tn=self.tn + other.tn,
            fn=self.fn + other.fn,
        )


def confusion(pred: np.ndarray, truth: np.ndarray) -> ConfusionCounts:
    """Pixelwise confusion counts between two bool masks of equal shape."""
    for name, m in (("pred", pred), ("truth", truth)):
        if not isinstance(m, np.ndarray) or m.dtype != np.bool_ or m.ndim != 2:
            raise ValueError(f"{name} must be a bool mask with shape (H, W)")
    if pred.shape != truth.shape:
        raise DimensionMismatchError(f"pred {pred.shape} does not match truth {truth.shape}")
    tp = int(np.count_nonzero(pred & truth))
    fp = int(np.count_nonzero(pred & ~truth))
    fn = int(np.count_nonzero(~pred & truth))
    tn = pred.size - tp - fp - fn
    return ConfusionCounts(tp=tp, fp=fp, tn=tn, fn=fn)


def _ratio(num: int, den: int) -> Fraction | None:
    return None if den == 0 else Fraction(num, den)


def accuracy(c: ConfusionCounts) -> Fraction | None:
    return _ratio(c.tp + c.tn, c.total)


def sensitivity(c: ConfusionCounts) -> Fraction | None:
    return _ratio(c.tp, c.tp + c.fn)


def specificity(c: ConfusionCounts) -> Fraction | None:
    return _ratio(c.tn, c.tn + c.fp)


def precision(c: ConfusionCounts) -> Fraction | None:
    return _ratio(c.tp, c.tp + c.fp)


def f1(c: ConfusionCounts) -> Fraction | None:
    """Harmonic mean of precision and recall; equals dice whenever defined."""
    p = precision(c)
    r = sensitivity(c)
    if p is None or r is None or p + r == 0:
        return None
    return 2 * p * r / (p + r)


def dice(c: ConfusionCounts) -> Fraction | None:
    """Overlap of the two segmentations divided by their total size."""
    return _ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn)


@dataclass(frozen=True)
class SegMetrics:
    """The metric set for one mask pair; None marks an undefined value."""

    accuracy: Fraction | None
    sensitivity: Fraction | None
    specificity: Fraction | None
    precision: Fraction | None
    f1: Fraction | None
    dice: Fraction | None

    @classmethod
    def from_counts(cls, c: ConfusionCounts) -> "SegMetrics":
        return cls(
            accuracy=accuracy(c),
            sensitivity=sensitivity(c),
            specificity=specificity(c),
            precision=precision(c),
            f1=f1(c),
            dice=dice(c),
        )

    def defined(self) -> bool:
        return all(getattr(self, name) is not None for name in METRIC_NAMES)

    def undefined_names(self) -> tuple[str, ...]:
        return tuple(name for name in METRIC_NAMES if getattr(self, name) is None)


@dataclass(frozen=True)
class ItemResult:
    """Per-item row; counts is None for externally supplied reference rows."""

    item_id: str
    counts: ConfusionCounts | None
    metrics: SegMetrics
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class ItemError:
    item_id: str
    message: str


@dataclass(frozen=True)
class BatchReport:
    items: tuple[ItemResult, ...]
    macro: SegMetrics
    micro: SegMetrics | None
    n_flagged: int
    errors: tuple[ItemError, ...] = ()


def _macro_mean(items: Sequence[ItemResult]) -> SegMetrics:
    values = {}
    for name in METRIC_NAMES:
        defined = [getattr(it.metrics, name) for it in items if getattr(it.metrics, name) is not None]
        values[name] = sum(defined, Fraction(0)) / len(defined) if defined else None
    return SegMetrics(**values)


def summarize(items: Sequence[ItemResult], errors: Sequence[ItemError] = ()) -> BatchReport:
    """Assemble per-item results into macro/micro aggregates.

    Macro averages each metric over the items where it is defined; micro
    recomputes the metrics from pooled counts. Items with any undefined
    metric are counted in n_flagged.
    """
    counted = [it.counts for it in items if it.counts is not None]
    micro = None
    if counted:
        pooled = counted[0]
        for c in counted[1:]:
            pooled = pooled + c
        micro = SegMetrics.from_counts(pooled)
    return BatchReport(
        items=tuple(items),
        macro=_macro_mean(items),
        micro=micro,
        n_flagged=sum(1 for it in items if not it.metrics.defined()),
        errors=tuple(errors),
    )


def evaluate_pair(pred_path: str | Path, truth_path: str | Path, threshold: int = 127) -> ItemResult:
    pred = import_mask(pred_path, threshold)
    truth = import_mask(truth_path, threshold)
    counts = confusion(pred, truth)
    metrics = SegMetrics.from_counts(counts)
    flags = tuple(f"undefined:{name}" for name in metrics.undefined_names())
    return ItemResult(item_id="", counts=counts, metrics=metrics, flags=flags)


def evaluate_batch(
    pairs: Sequence[tuple[str, str | Path, str | Path]],
    threshold: int = 127,
    jobs: int | None = None,
) -> BatchReport:
    """Score (id, predicted path, truth path) triples into a BatchReport.

    Per-item decode or shape errors land in the report's error list; the
    batch always completes. Results keep the input order regardless of
    worker count.
    """
    def one(pair):
        item_id, pred_path, truth_path = pair
        try:
            result = evaluate_pair(pred_path, truth_path, threshold)
            return ItemResult(item_id=item_id, counts=result.counts,
                              metrics=result.metrics, flags=result.flags), None
        except Exception as exc:
            return None, ItemError(item_id=item_id, message=str(exc))

    if jobs is not None and jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(one, pairs))
    else:
        outcomes = [one(p) for p in pairs]

    items = [it for it, err in outcomes if it is not None]
    errors = [err for it, err in outcomes if err is not None]
    return summarize(items, errors)


def render_ratio(value: Fraction | None, undefined: str = "") -> str:
    """Four-decimal rendering used by every report surface."""
    return undefined if value is None else f"{float(value):.4f}"


def _metric_cells(metrics: SegMetrics) -> list[str]:
    return [render_ratio(getattr(metrics, name)) for name in METRIC_NAMES]


def item_row(item: ItemResult) -> list[str]:
    counts = ["", "", "", ""] if item.counts is None else [
        str(item.counts.tp), str(item.counts.fp), str(item.counts.tn), str(item.counts.fn)
    ]
    return [item.item_id, *counts, *_metric_cells(item.metrics), ";".join(item.flags)]


def write_report_csv(report: BatchReport, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for item in report.items:
            writer.writerow(item_row(item))
        for err in report.errors:
            writer.writerow([err.item_id, "", "", "", "", "", "", "", "", "", "", f"error:{err.message}"])


def _metrics_doc(metrics: SegMetrics | None) -> dict | None:
    if metrics is None:
        return None
    return {
        name: (None if getattr(metrics, name) is None else round(float(getattr(metrics, name)), 4))
        for name in METRIC_NAMES
    }


def report_to_doc(report: BatchReport) -> dict:
    items = []
    for item in report.items:
        doc = {"id": item.item_id}
        if item.counts is not None:
            doc.update(tp=item.counts.tp, fp=item.counts.fp, tn=item.counts.tn, fn=item.counts.fn)
        doc.update(_metrics_doc(item.metrics))
        doc["flags"] = list(item.flags)
        items.append(doc)
    return {
        "items": items,
        "macro": _metrics_doc(report.macro),
        "micro": _metrics_doc(report.micro),
        "n_flagged": report.n_flagged,
        "errors": [{"id": e.item_id, "message": e.message} for e in report.errors],
    }


def write_report_json(report: BatchReport, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(report_to_doc(report), fh, indent=2)
        fh.write("\n")
