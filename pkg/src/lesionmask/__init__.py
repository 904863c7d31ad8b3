"""Skin lesion masks from classical image processing.

Otsu thresholding plus binary morphology turns dermatoscopic images into
lesion masks; sweeps over morphology kernel sizes emit whole dataset
variants; exact-arithmetic metrics score masks against references.
"""

from .dataset import (
    BinaryLabel,
    DiagnosisMapping,
    KNOWN_DX_CODES,
    ManifestRecord,
    MetadataRecord,
    build_manifest,
    emit_dataset,
    load_metadata,
    map_diagnosis,
    read_manifest_csv,
    write_manifest_csv,
)
from .errors import (
    ConfigError,
    DegenerateHistogramError,
    DimensionMismatchError,
    EmptyJoinError,
    ImageFormatError,
    InvalidKernelError,
    InvalidSigmaError,
    LesionMaskError,
    MissingColumnError,
    UnknownDiagnosisError,
)
from .imgproc import (
    OtsuResult,
    Polarity,
    apply_threshold,
    gaussian_blur,
    gaussian_kernel_1d,
    histogram,
    load_rgb_image,
    otsu_threshold,
    to_grayscale,
)
from .metrics import (
    BatchReport,
    ConfusionCounts,
    SegMetrics,
    confusion,
    evaluate_batch,
    evaluate_pair,
    render_ratio,
    write_report_csv,
    write_report_json,
)
from .morphology import StructuringElement, dilate, erode, open_mask
from .pipeline import (
    ApplicationMode,
    DEFAULT_CONFIG,
    GaussianSmoothing,
    GlobalThreshold,
    MaskFlag,
    MaskOutcome,
    OtsuThreshold,
    PipelineConfig,
    SweepSpec,
    apply_mask,
    config_from_dict,
    config_to_dict,
    export_mask,
    generate_mask,
    import_mask,
    run_sweep,
)

__version__ = "0.1.0"

__all__ = [
    "ApplicationMode",
    "BatchReport",
    "BinaryLabel",
    "ConfigError",
    "ConfusionCounts",
    "DEFAULT_CONFIG",
    "DegenerateHistogramError",
    "DiagnosisMapping",
    "DimensionMismatchError",
    "EmptyJoinError",
    "GaussianSmoothing",
    "GlobalThreshold",
    "ImageFormatError",
    "InvalidKernelError",
    "InvalidSigmaError",
    "KNOWN_DX_CODES",
    "LesionMaskError",
    "ManifestRecord",
    "MaskFlag",
    "MaskOutcome",
    "MetadataRecord",
    "MissingColumnError",
    "OtsuResult",
    "OtsuThreshold",
    "PipelineConfig",
    "Polarity",
    "SegMetrics",
    "StructuringElement",
    "SweepSpec",
    "UnknownDiagnosisError",
    "apply_mask",
    "apply_threshold",
    "build_manifest",
    "config_from_dict",
    "config_to_dict",
    "confusion",
    "dilate",
    "emit_dataset",
    "erode",
    "evaluate_batch",
    "evaluate_pair",
    "export_mask",
    "gaussian_blur",
    "gaussian_kernel_1d",
    "generate_mask",
    "histogram",
    "import_mask",
    "load_metadata",
    "load_rgb_image",
    "map_diagnosis",
    "open_mask",
    "otsu_threshold",
    "read_manifest_csv",
    "render_ratio",
    "run_sweep",
    "to_grayscale",
    "write_manifest_csv",
    "write_report_csv",
    "write_report_json",
]
