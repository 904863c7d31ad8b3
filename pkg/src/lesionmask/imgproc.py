"""Grayscale conversion, Gaussian smoothing, histograms, and threshold extraction.

Raster conventions used throughout the package:
  - RGB image:  uint8 array of shape (height, width, 3)
  - gray image: uint8 array of shape (height, width)
  - binary mask: bool array of shape (height, width), True = foreground
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import (
    DegenerateHistogramError,
    ImageFormatError,
    InvalidKernelError,
    InvalidSigmaError,
)

# BT.601 luminance weights; stated here so tests can be exact.
LUMA_WEIGHTS = (0.299, 0.587, 0.114)


class Polarity(enum.Enum):
    """Which side of the threshold is foreground."""

    DARK_FOREGROUND = "dark"    # foreground = intensity <= threshold
    LIGHT_FOREGROUND = "light"  # foreground = intensity > threshold


@dataclass(frozen=True)
class OtsuResult:
    """Selected threshold and the between-class variance attained there."""

    threshold: int
    between_class_variance: float


def _require_rgb(img: np.ndarray) -> None:
    if not isinstance(img, np.ndarray) or img.ndim != 3 or img.shape[2] != 3:
        raise ValueError("expected an RGB image with shape (H, W, 3)")
    if img.dtype != np.uint8:
        raise ValueError(f"expected uint8 pixels, got {img.dtype}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError("image must be at least 1x1")


def _require_gray(img: np.ndarray) -> None:
    if not isinstance(img, np.ndarray) or img.ndim != 2:
        raise ValueError("expected a grayscale image with shape (H, W)")
    if img.dtype != np.uint8:
        raise ValueError(f"expected uint8 pixels, got {img.dtype}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError("image must be at least 1x1")


def load_rgb_image(path: str | Path) -> np.ndarray:
    """Read an 8-bit RGB image from a PNG or JPEG file.

    Grayscale files are promoted to RGB. Images carrying an alpha channel are
    rejected: silently dropping transparency would change pipeline output.
    """
    try:
        with Image.open(path) as im:
            mode = im.mode
            if mode in ("RGBA", "LA", "PA") or (
                mode == "P" and "transparency" in im.info
            ):
                raise ImageFormatError(
                    f"{path}: alpha channel not supported; flatten the image first"
                )
            if mode == "P":
                im = im.convert("RGB")
            elif mode == "L":
                im = im.convert("RGB")
            elif mode != "RGB":
                raise ImageFormatError(
                    f"{path}: unsupported mode {mode!r}; expected 8-bit RGB or grayscale"
                )
            return np.asarray(im, dtype=np.uint8)
    except UnidentifiedImageError as exc:
        raise ImageFormatError(f"{path}: not a decodable image") from exc


def to_grayscale(img: np.ndarray) -> np.ndarray:
    """Convert RGB to gray via rounded BT.601 luminance.

    Achromatic pixels (v, v, v) map back to v exactly.
    """
    _require_rgb(img)
    wr, wg, wb = LUMA_WEIGHTS
    luma = (
        img[:, :, 0].astype(np.float64) * wr
        + img[:, :, 1].astype(np.float64) * wg
        + img[:, :, 2].astype(np.float64) * wb
    )
    return np.clip(np.rint(luma), 0, 255).astype(np.uint8)


def gaussian_kernel_1d(sigma: float, side: int) -> np.ndarray:
    """Normalized 1-D Gaussian weights, k[i] proportional to exp(-i^2 / (2 sigma^2))."""
    offsets = np.arange(side, dtype=np.float64) - side // 2
    k = np.exp(-(offsets * offsets) / (2.0 * sigma * sigma))
    return k / k.sum()


def gaussian_blur(img: np.ndarray, sigma: float = 1.0, kernel_side: int = 5) -> np.ndarray:
    """Separable Gaussian smoothing with mirrored borders.

    Borders reflect without repeating the edge sample, so blurring commutes
    with mirroring the image. Arithmetic stays in float64 through both passes
    and is quantized once at the end; constant images pass through unchanged
    and output never leaves the input's [min, max] range.
    """
    _require_gray(img)
    if sigma <= 0:
        raise InvalidSigmaError(f"sigma must be positive, got {sigma}")
    if kernel_side < 1 or kernel_side % 2 == 0:
        raise InvalidKernelError(f"kernel side must be odd and >= 1, got {kernel_side}")
    if kernel_side > min(img.shape):
        raise InvalidKernelError(
            f"kernel side {kernel_side} exceeds image extent {img.shape[1]}x{img.shape[0]}"
        )

    k = gaussian_kernel_1d(sigma, kernel_side)
    r = kernel_side // 2
    acc = img.astype(np.float64)
    if r > 0:
        for axis in (0, 1):
            pad = [(0, 0), (0, 0)]
            pad[axis] = (r, r)
            padded = np.pad(acc, pad, mode="reflect")
            acc = np.zeros_like(acc)
            for i in range(kernel_side):
                sl = [slice(None), slice(None)]
                sl[axis] = slice(i, i + img.shape[axis])
                acc += k[i] * padded[tuple(sl)]
    return np.clip(np.rint(acc), 0, 255).astype(np.uint8)


def histogram(img: np.ndarray) -> np.ndarray:
    """256-bin intensity histogram; counts sum to the pixel count."""
    _require_gray(img)
    return np.bincount(img.ravel(), minlength=256).astype(np.int64)


def otsu_threshold(hist: np.ndarray) -> OtsuResult:
    """Pick the threshold maximizing between-class variance.

    For a cut point t, the lower class holds intensities <= t and the upper
    class intensities > t; the objective is w0 * w1 * (mu0 - mu1)^2. Class
    counts and intensity sums are accumulated as exact integers, converting
    to floating point only in the final objective, so the result is
    platform-independent. Ties return the smallest maximizing threshold.

    Raises DegenerateHistogramError when fewer than two bins are occupied:
    the image is constant and should be flagged rather than thresholded.
    """
    hist = np.asarray(hist)
    if hist.shape != (256,):
        raise ValueError(f"expected a 256-bin histogram, got shape {hist.shape}")
    if np.any(hist < 0):
        raise ValueError("histogram counts must be non-negative")
    counts = hist.astype(np.int64)
    if int(np.count_nonzero(counts)) < 2:
        raise DegenerateHistogramError(
            "histogram has fewer than two occupied bins; cannot split into two classes"
        )

    total = int(counts.sum())
    weighted_total = int((counts * np.arange(256, dtype=np.int64)).sum())

    # Exact integer prefix sums over cut points t = 0..254.
    c0 = np.cumsum(counts)[:255]
    s0 = np.cumsum(counts * np.arange(256, dtype=np.int64))[:255]
    c1 = total - c0
    valid = (c0 > 0) & (c1 > 0)

    objective = np.full(255, -1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        w0 = c0 / total
        w1 = c1 / total
        mu0 = s0 / c0
        mu1 = (weighted_total - s0) / c1
        d = mu0 - mu1
        np.copyto(objective, w0 * w1 * d * d, where=valid)

    t = int(np.argmax(objective))  # first occurrence: smallest threshold wins ties
    return OtsuResult(threshold=t, between_class_variance=float(objective[t]))


def apply_threshold(img: np.ndarray, threshold: int, polarity: Polarity) -> np.ndarray:
    """Binarize a gray image at a threshold under the given polarity."""
    _require_gray(img)
    if not 0 <= threshold <= 255:
        raise ValueError(f"threshold must be in [0, 255], got {threshold}")
    if polarity is Polarity.DARK_FOREGROUND:
        return img <= threshold
    return img > threshold
