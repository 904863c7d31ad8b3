"""The mask recipe: smoothing -> threshold -> opening -> dilation.

A PipelineConfig captures one full recipe; a SweepSpec is a grid of
(dilate, clean) kernel pairs over a shared base recipe. Degenerate images
(constant after smoothing) produce a flagged empty-mask outcome instead of
aborting, so batches over thousands of images survive the handful of
failures real dermatoscopic data contains.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from . import imgproc, morphology
from .errors import (
    ConfigError,
    DegenerateHistogramError,
    DimensionMismatchError,
    ImageFormatError,
)
from .imgproc import OtsuResult, Polarity


@dataclass(frozen=True)
class GaussianSmoothing:
    sigma: float = 1.0
    kernel_side: int = 5


@dataclass(frozen=True)
class OtsuThreshold:
    """Pick the threshold per image from the (smoothed) histogram."""


@dataclass(frozen=True)
class GlobalThreshold:
    value: int

    def __post_init__(self):
        if not 0 <= self.value <= 255:
            raise ConfigError(f"global threshold must be in [0, 255], got {self.value}")


class ApplicationMode(enum.Enum):
    """How a mask is applied to its RGB image."""

    MASK_ONLY = "maskonly"      # white foreground on black; ignores RGB content
    ABLATE_LESION = "ablate"    # black out the lesion, keep surrounding skin
    ISOLATE_LESION = "isolate"  # keep the lesion, black out surrounding skin


class MaskFlag(enum.Enum):
    EMPTY_MASK = "empty_mask"
    FULL_MASK = "full_mask"
    DEGENERATE_HISTOGRAM = "degenerate_histogram"


@dataclass(frozen=True)
class PipelineConfig:
    """One complete mask recipe.

    clean_side parameterizes the opening stage, dilate_side the final
    dilation; either may be 0 to skip that stage.
    """

    smoothing: GaussianSmoothing | None = field(default_factory=GaussianSmoothing)
    threshold: OtsuThreshold | GlobalThreshold = field(default_factory=OtsuThreshold)
    polarity: Polarity = Polarity.DARK_FOREGROUND
    clean_side: int = 5
    dilate_side: int = 0

    def __post_init__(self):
        if self.clean_side < 0 or self.dilate_side < 0:
            raise ConfigError("kernel sides must be >= 0")


DEFAULT_CONFIG = PipelineConfig()


@dataclass(frozen=True)
class SweepSpec:
    """Ordered (dilate_side, clean_side) pairs sharing one base recipe."""

    pairs: tuple[tuple[int, int], ...]
    base: PipelineConfig = DEFAULT_CONFIG

    def __post_init__(self):
        pairs = tuple((int(d), int(c)) for d, c in self.pairs)
        if not pairs:
            raise ConfigError("sweep needs at least one (dilate, clean) pair")
        if len(set(pairs)) != len(pairs):
            raise ConfigError("sweep pairs must not repeat")
        if any(d < 0 or c < 0 for d, c in pairs):
            raise ConfigError("kernel sides must be >= 0")
        object.__setattr__(self, "pairs", pairs)

    def config_for(self, pair: tuple[int, int]) -> PipelineConfig:
        dilate_side, clean_side = pair
        return replace(self.base, clean_side=clean_side, dilate_side=dilate_side)


@dataclass(frozen=True)
class MaskOutcome:
    """A generated mask plus everything needed to triage it."""

    mask: np.ndarray
    otsu: OtsuResult | None
    flags: frozenset[MaskFlag]
    foreground_fraction: float


def _flags_for(mask: np.ndarray, degenerate: bool) -> tuple[frozenset[MaskFlag], float]:
    fraction = float(np.count_nonzero(mask)) / mask.size
    flags = set()
    if fraction == 0.0:
        flags.add(MaskFlag.EMPTY_MASK)
    if fraction == 1.0:
        flags.add(MaskFlag.FULL_MASK)
    if degenerate:
        flags.add(MaskFlag.DEGENERATE_HISTOGRAM)
    return frozenset(flags), fraction


def generate_mask(img: np.ndarray, cfg: PipelineConfig = DEFAULT_CONFIG) -> MaskOutcome:
    """Run the full recipe on one RGB image.

    Stages, in order: grayscale conversion, optional Gaussian smoothing,
    threshold extraction (Otsu runs on the smoothed image's histogram),
    binarization, opening with clean_side, dilation with dilate_side.

    A degenerate histogram yields an empty mask carrying the
    DEGENERATE_HISTOGRAM flag rather than an exception.
    """
    gray = imgproc.to_grayscale(img)
    if cfg.smoothing is not None:
        gray = imgproc.gaussian_blur(gray, cfg.smoothing.sigma, cfg.smoothing.kernel_side)

    otsu = None
    if isinstance(cfg.threshold, GlobalThreshold):
        threshold = cfg.threshold.value
    else:
        try:
            otsu = imgproc.otsu_threshold(imgproc.histogram(gray))
        except DegenerateHistogramError:
            mask = np.zeros(gray.shape, dtype=bool)
            flags, fraction = _flags_for(mask, degenerate=True)
            return MaskOutcome(mask=mask, otsu=None, flags=flags, foreground_fraction=fraction)
        threshold = otsu.threshold

    mask = imgproc.apply_threshold(gray, threshold, cfg.polarity)
    mask = morphology.open_mask(mask, cfg.clean_side)
    mask = morphology.dilate(mask, cfg.dilate_side)
    flags, fraction = _flags_for(mask, degenerate=False)
    return MaskOutcome(mask=mask, otsu=otsu, flags=flags, foreground_fraction=fraction)


def run_sweep(
    img: np.ndarray, sweep: SweepSpec
) -> list[tuple[tuple[int, int], MaskOutcome]]:
    """One MaskOutcome per sweep pair, in pair order."""
    return [(pair, generate_mask(img, sweep.config_for(pair))) for pair in sweep.pairs]


def apply_mask(img: np.ndarray, mask: np.ndarray, mode: ApplicationMode) -> np.ndarray:
    """Render a mask onto its RGB image in one of the three application modes.

    ABLATE_LESION and ISOLATE_LESION partition the image: every pixel is
    kept by exactly one of the two.
    """
    imgproc._require_rgb(img)
    morphology._require_mask(mask)
    if img.shape[:2] != mask.shape:
        raise DimensionMismatchError(
            f"mask {mask.shape} does not match image {img.shape[:2]}"
        )
    keep3 = np.broadcast_to(mask[:, :, np.newaxis], img.shape)
    if mode is ApplicationMode.MASK_ONLY:
        return np.where(keep3, np.uint8(255), np.uint8(0))
    if mode is ApplicationMode.ABLATE_LESION:
        return np.where(keep3, np.uint8(0), img)
    return np.where(keep3, img, np.uint8(0))


def export_mask(mask: np.ndarray, path: str | Path) -> None:
    """Write a mask as an 8-bit grayscale PNG, foreground 255 on background 0."""
    morphology._require_mask(mask)
    path = Path(path)
    data = np.where(mask, np.uint8(255), np.uint8(0))
    try:
        Image.fromarray(data, mode="L").save(path, format="PNG")
    except OSError as exc:
        raise OSError(f"failed to write mask to {path}: {exc}") from exc


def import_mask(path: str | Path, threshold: int = 127) -> np.ndarray:
    """Read a mask from a grayscale or RGB image file.

    A pixel is foreground when its luminance exceeds the threshold, so
    anti-aliased or RGB-encoded ground truth binarizes predictably.
    """
    if not 0 <= threshold <= 255:
        raise ValueError(f"threshold must be in [0, 255], got {threshold}")
    try:
        with Image.open(path) as im:
            mode = im.mode
            if mode == "L":
                lum = np.asarray(im, dtype=np.uint8)
            elif mode in ("RGBA", "LA", "PA") or (
                mode == "P" and "transparency" in im.info
            ):
                raise ImageFormatError(f"{path}: alpha channel not supported")
            elif mode in ("RGB", "P", "1"):
                lum = imgproc.to_grayscale(np.asarray(im.convert("RGB"), dtype=np.uint8))
            else:
                raise ImageFormatError(
                    f"{path}: unsupported mode {mode!r}; expected grayscale or RGB"
                )
    except UnidentifiedImageError as exc:
        raise ImageFormatError(f"{path}: not a decodable image") from exc
    return lum > threshold


# --- config (de)serialization -------------------------------------------------
#
# The on-disk document mirrors the dataclass fields: smoothing (null or
# {sigma, kernel_side}), threshold ("otsu" or {"global": value}), polarity
# ("dark" | "light"), clean_side, dilate_side. The CLI reads it as JSON.

def config_to_dict(cfg: PipelineConfig) -> dict:
    if isinstance(cfg.threshold, GlobalThreshold):
        threshold = {"global": cfg.threshold.value}
    else:
        threshold = "otsu"
    return {
        "smoothing": (
            None
            if cfg.smoothing is None
            else {"sigma": cfg.smoothing.sigma, "kernel_side": cfg.smoothing.kernel_side}
        ),
        "threshold": threshold,
        "polarity": cfg.polarity.value,
        "clean_side": cfg.clean_side,
        "dilate_side": cfg.dilate_side,
    }


def config_from_dict(doc: dict) -> PipelineConfig:
    if not isinstance(doc, dict):
        raise ConfigError(f"config must be a mapping, got {type(doc).__name__}")
    unknown = set(doc) - {"smoothing", "threshold", "polarity", "clean_side", "dilate_side"}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    smoothing = DEFAULT_CONFIG.smoothing
    if "smoothing" in doc:
        raw = doc["smoothing"]
        if raw is None:
            smoothing = None
        elif isinstance(raw, dict) and set(raw) <= {"sigma", "kernel_side"}:
            try:
                smoothing = GaussianSmoothing(
                    sigma=float(raw.get("sigma", 1.0)),
                    kernel_side=int(raw.get("kernel_side", 5)),
                )
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad smoothing parameters: {raw!r}") from exc
        else:
            raise ConfigError(f"bad smoothing spec: {raw!r}")

    threshold: OtsuThreshold | GlobalThreshold = DEFAULT_CONFIG.threshold
    if "threshold" in doc:
        raw = doc["threshold"]
        if raw == "otsu":
            threshold = OtsuThreshold()
        elif isinstance(raw, dict) and set(raw) == {"global"}:
            try:
                threshold = GlobalThreshold(int(raw["global"]))
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad global threshold: {raw!r}") from exc
        else:
            raise ConfigError(f'bad threshold spec: {raw!r} (use "otsu" or {{"global": N}})')

    polarity = DEFAULT_CONFIG.polarity
    if "polarity" in doc:
        try:
            polarity = Polarity(doc["polarity"])
        except ValueError as exc:
            raise ConfigError(f'bad polarity: {doc["polarity"]!r} (use "dark" or "light")') from exc

    try:
        clean_side = int(doc.get("clean_side", DEFAULT_CONFIG.clean_side))
        dilate_side = int(doc.get("dilate_side", DEFAULT_CONFIG.dilate_side))
    except (TypeError, ValueError) as exc:
        raise ConfigError("kernel sides must be integers") from exc

    return PipelineConfig(
        smoothing=smoothing,
        threshold=threshold,
        polarity=polarity,
        clean_side=clean_side,
        dilate_side=dilate_side,
    )
