"""HAM10000 metadata ingestion, benign/malignant relabeling, and dataset emission.

The seven histopathology codes (akiec, bcc, bkl, df, mel, nv, vasc) collapse
to a binary label through a DiagnosisMapping. The default mapping is a
documented choice, not dataset ground truth, and can be overridden from a
two-column CSV; akiec (actinic keratosis / in-situ carcinoma) defaults to
malignant.

Note: HAM10000 contains multiple images per lesion_id. Nothing here
deduplicates them, so naive train/test splits can leak lesions across
splits; split by lesion_id downstream if that matters.
"""

from __future__ import annotations

import csv
import enum
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from . import pipeline as pl
from .errors import EmptyJoinError, MissingColumnError, UnknownDiagnosisError
from .imgproc import load_rgb_image

KNOWN_DX_CODES = frozenset({"akiec", "bcc", "bkl", "df", "mel", "nv", "vasc"})

IMAGE_EXTENSIONS = (".jpg", ".jpeg", ".png")


class BinaryLabel(enum.Enum):
    BENIGN = "benign"
    MALIGNANT = "malignant"


@dataclass(frozen=True)
class MetadataRecord:
    lesion_id: str
    image_id: str
    dx: str
    dx_type: str = ""
    age: str = ""
    sex: str = ""
    localization: str = ""

    @property
    def known_dx(self) -> bool:
        return self.dx in KNOWN_DX_CODES


@dataclass(frozen=True)
class DiagnosisMapping:
    """dx code -> binary label; total over the codes it will be asked about."""

    entries: dict[str, BinaryLabel]

    @classmethod
    def default(cls) -> "DiagnosisMapping":
        return cls(entries={
            "mel": BinaryLabel.MALIGNANT,
            "bcc": BinaryLabel.MALIGNANT,
            "akiec": BinaryLabel.MALIGNANT,
            "bkl": BinaryLabel.BENIGN,
            "df": BinaryLabel.BENIGN,
            "nv": BinaryLabel.BENIGN,
            "vasc": BinaryLabel.BENIGN,
        })

    @classmethod
    def from_csv(cls, path: str | Path) -> "DiagnosisMapping":
        """Load a `dx,label` CSV; labels are benign/malignant, case-insensitive."""
        entries = {}
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            rows = [row for row in reader if row and any(cell.strip() for cell in row)]
        if not rows:
            raise ValueError(f"{path}: empty mapping file")
        start = 1 if [c.strip().lower() for c in rows[0][:2]] == ["dx", "label"] else 0
        for row in rows[start:]:
            if len(row) < 2:
                raise ValueError(f"{path}: mapping rows need two columns, got {row!r}")
            dx = row[0].strip().lower()
            label = row[1].strip().lower()
            if label not in ("benign", "malignant"):
                raise ValueError(f"{path}: label for {dx!r} must be benign or malignant, got {row[1]!r}")
            entries[dx] = BinaryLabel(label)
        return cls(entries=entries)


def map_diagnosis(dx: str, mapping: DiagnosisMapping | None = None) -> BinaryLabel:
    """Map one diagnosis code to its binary label."""
    mapping = mapping or DiagnosisMapping.default()
    try:
        return mapping.entries[dx]
    except KeyError:
        raise UnknownDiagnosisError(dx) from None


@dataclass(frozen=True)
class RowError:
    line: int
    message: str


@dataclass(frozen=True)
class MetadataLoadResult:
    records: tuple[MetadataRecord, ...]
    row_errors: tuple[RowError, ...]
    unknown_dx: tuple[str, ...]


def load_metadata(path: str | Path) -> MetadataLoadResult:
    """Parse a HAM10000-style metadata CSV.

    Requires lesion_id, image_id, and dx columns. Malformed rows are
    collected with their line numbers instead of aborting; unknown dx codes
    are kept on their records and reported in unknown_dx.
    """
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for required in ("lesion_id", "image_id", "dx"):
            if required not in header:
                raise MissingColumnError(required)

        records: list[MetadataRecord] = []
        errors: list[RowError] = []
        unknown: set[str] = set()
        for row in reader:
            line = reader.line_num
            image_id = (row.get("image_id") or "").strip()
            dx = (row.get("dx") or "").strip().lower()
            if not image_id:
                errors.append(RowError(line=line, message="empty image_id"))
                continue
            if not dx:
                errors.append(RowError(line=line, message=f"{image_id}: empty dx"))
                continue
            if None in row and row[None]:
                errors.append(RowError(line=line, message=f"{image_id}: too many fields"))
                continue
            record = MetadataRecord(
                lesion_id=(row.get("lesion_id") or "").strip(),
                image_id=image_id,
                dx=dx,
                dx_type=(row.get("dx_type") or "").strip(),
                age=(row.get("age") or "").strip(),
                sex=(row.get("sex") or "").strip(),
                localization=(row.get("localization") or "").strip(),
            )
            if not record.known_dx:
                unknown.add(dx)
            records.append(record)
    return MetadataLoadResult(
        records=tuple(records),
        row_errors=tuple(errors),
        unknown_dx=tuple(sorted(unknown)),
    )


@dataclass(frozen=True)
class ManifestRecord:
    image_id: str
    path: Path
    label: BinaryLabel | None = None
    dx: str = ""
    truth_path: Path | None = None


@dataclass
class ManifestSummary:
    n_records: int = 0
    n_matched: int = 0
    missing: list[str] = field(default_factory=list)
    duplicates: list[str] = field(default_factory=list)
    unknown_dx: list[str] = field(default_factory=list)
    label_counts: Counter = field(default_factory=Counter)


def _find_image(image_dir: Path, image_id: str) -> Path | None:
    for ext in IMAGE_EXTENSIONS:
        candidate = image_dir / f"{image_id}{ext}"
        if candidate.is_file():
            return candidate
    return None


def find_truth_mask(truth_dir: Path, image_id: str) -> Path | None:
    """Reference mask for an image: <id>.png, else <id>_segmentation.png."""
    for name in (f"{image_id}.png", f"{image_id}_segmentation.png"):
        candidate = truth_dir / name
        if candidate.is_file():
            return candidate
    return None


def build_manifest(
    records: list[MetadataRecord] | tuple[MetadataRecord, ...],
    image_dir: str | Path,
    truth_dir: str | Path | None = None,
    mapping: DiagnosisMapping | None = None,
) -> tuple[list[ManifestRecord], ManifestSummary]:
    """Join metadata records to image files by image_id.

    Rows are sorted by image_id; missing files and unmappable dx codes are
    reported in the summary rather than failing the batch. A join that
    matches nothing raises EmptyJoinError, which almost always means the
    wrong directory.
    """
    image_dir = Path(image_dir)
    if not image_dir.is_dir():
        raise EmptyJoinError(f"image directory does not exist: {image_dir}")
    truth_dir = Path(truth_dir) if truth_dir is not None else None
    mapping = mapping or DiagnosisMapping.default()

    summary = ManifestSummary(n_records=len(records))
    rows: list[ManifestRecord] = []
    seen: set[str] = set()
    for record in sorted(records, key=lambda r: r.image_id):
        if record.image_id in seen:
            summary.duplicates.append(record.image_id)
            continue
        seen.add(record.image_id)
        path = _find_image(image_dir, record.image_id)
        if path is None:
            summary.missing.append(record.image_id)
            continue
        try:
            label = map_diagnosis(record.dx, mapping)
        except UnknownDiagnosisError:
            summary.unknown_dx.append(record.image_id)
            continue
        truth_path = find_truth_mask(truth_dir, record.image_id) if truth_dir else None
        rows.append(ManifestRecord(
            image_id=record.image_id, path=path, label=label,
            dx=record.dx, truth_path=truth_path,
        ))
        summary.label_counts[label.value] += 1
    summary.n_matched = len(rows)
    if not rows:
        raise EmptyJoinError(
            f"no metadata row matched a file in {image_dir}; wrong directory?"
        )
    return rows, summary


MANIFEST_COLUMNS = ("image_id", "path", "label", "dx", "truth")


def write_manifest_csv(rows: list[ManifestRecord], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_COLUMNS)
        for row in rows:
            writer.writerow([
                row.image_id,
                str(row.path),
                row.label.value if row.label else "",
                row.dx,
                str(row.truth_path) if row.truth_path else "",
            ])


def read_manifest_csv(path: str | Path) -> tuple[list[ManifestRecord], list[str]]:
    """Read a manifest CSV; returns (usable rows, image_ids with missing files)."""
    rows: list[ManifestRecord] = []
    missing: list[str] = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for required in ("image_id", "path"):
            if required not in header:
                raise MissingColumnError(required)
        for row in reader:
            image_id = (row.get("image_id") or "").strip()
            src = (row.get("path") or "").strip()
            if not image_id or not src:
                continue
            src_path = Path(src)
            if not src_path.is_file():
                missing.append(image_id)
                continue
            label_text = (row.get("label") or "").strip().lower()
            truth_text = (row.get("truth") or "").strip()
            rows.append(ManifestRecord(
                image_id=image_id,
                path=src_path,
                label=BinaryLabel(label_text) if label_text else None,
                dx=(row.get("dx") or "").strip(),
                truth_path=Path(truth_text) if truth_text else None,
            ))
    return rows, missing


@dataclass
class EmissionSummary:
    out_dir: Path
    n_images: int = 0
    n_masks: int = 0
    per_pair: Counter = field(default_factory=Counter)
    flagged: list[tuple[str, str]] = field(default_factory=list)   # (image_id, pair name)
    failed: list[tuple[str, str]] = field(default_factory=list)    # (image_id, message)
    label_counts: Counter = field(default_factory=Counter)


def pair_name(pair: tuple[int, int]) -> str:
    """Directory label in dilate_clean order."""
    return f"{pair[0]}_{pair[1]}"


LABELS_COLUMNS = ("image_id", "label", "dilate", "clean", "mode", "flags")


def emit_dataset(
    manifest: list[ManifestRecord],
    sweep: pl.SweepSpec,
    mode: pl.ApplicationMode,
    out_dir: str | Path,
    jobs: int | None = None,
) -> EmissionSummary:
    """Write masks and mask-applied images for every manifest row and sweep pair.

    Layout, fully determined by (image, pair, mode):
        <out>/<dilate>_<clean>/mask/<image_id>.png       raw binary mask
        <out>/<dilate>_<clean>/<mode>/<image_id>.png     applied RGB image
        <out>/labels.csv                                 one row per (image, pair)

    Per-image failures are recorded and the batch continues; reruns with
    identical inputs are byte-identical, whatever the worker count.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for pair in sweep.pairs:
        (out_dir / pair_name(pair) / "mask").mkdir(parents=True, exist_ok=True)
        (out_dir / pair_name(pair) / mode.value).mkdir(parents=True, exist_ok=True)

    def one(row: ManifestRecord):
        try:
            img = load_rgb_image(row.path)
            results = []
            for pair, outcome in pl.run_sweep(img, sweep):
                name = pair_name(pair)
                pl.export_mask(outcome.mask, out_dir / name / "mask" / f"{row.image_id}.png")
                applied = pl.apply_mask(img, outcome.mask, mode)
                from PIL import Image

                Image.fromarray(applied, mode="RGB").save(
                    out_dir / name / mode.value / f"{row.image_id}.png", format="PNG"
                )
                results.append((pair, outcome))
            return results, None
        except Exception as exc:
            return None, str(exc)

    if jobs is not None and jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(one, manifest))
    else:
        outcomes = [one(row) for row in manifest]

    summary = EmissionSummary(out_dir=out_dir, n_images=len(manifest))
    label_rows: list[list[str]] = []
    for row, (results, error) in zip(manifest, outcomes):
        if error is not None:
            summary.failed.append((row.image_id, error))
            continue
        if row.label is not None:
            summary.label_counts[row.label.value] += 1
        for pair, outcome in results:
            name = pair_name(pair)
            summary.per_pair[name] += 1
            summary.n_masks += 1
            flags = ";".join(sorted(f.value for f in outcome.flags))
            if outcome.flags:
                summary.flagged.append((row.image_id, name))
            label_rows.append([
                row.image_id,
                row.label.value if row.label else "",
                str(pair[0]),
                str(pair[1]),
                mode.value,
                flags,
            ])

    with open(out_dir / "labels.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(LABELS_COLUMNS)
        writer.writerows(label_rows)
    return summary
