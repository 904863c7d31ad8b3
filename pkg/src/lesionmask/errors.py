"""Exception types raised across the package."""


class LesionMaskError(Exception):
    """Base class for all errors raised by this package."""


class InvalidKernelError(LesionMaskError):
    """Smoothing kernel side is even, non-positive, or larger than the image."""


class InvalidSigmaError(LesionMaskError):
    """Gaussian sigma is zero or negative."""


class DegenerateHistogramError(LesionMaskError):
    """Histogram has fewer than two occupied bins; no threshold separates two classes."""


class DimensionMismatchError(LesionMaskError):
    """Two rasters that must share dimensions do not."""


class ImageFormatError(LesionMaskError):
    """File is not a decodable 8-bit RGB/grayscale image (alpha channels included)."""


class ConfigError(LesionMaskError):
    """Pipeline or sweep configuration is malformed."""


class MissingColumnError(LesionMaskError):
    """Metadata CSV lacks a required column."""

    def __init__(self, column: str):
        self.column = column
        super().__init__(f"missing required column: {column!r}")


class UnknownDiagnosisError(LesionMaskError):
    """Diagnosis code has no entry in the active benign/malignant mapping."""

    def __init__(self, dx: str):
        self.dx = dx
        super().__init__(f"no benign/malignant mapping for diagnosis code {dx!r}")


class EmptyJoinError(LesionMaskError):
    """Metadata-to-file join matched nothing; almost always a wrong directory."""
