"""Bridge from torch classifiers to replayable ccam record directories."""

from .export import (
    MODES,
    ExportConfig,
    ExportError,
    ExportResult,
    export_record,
    load_image,
    psi_masks,
    stored_scorecam_deltas,
)
from .models import LoadedModel, ModelError, Preprocessing, TinyNet, load_model
from .tensorio import TensorFormatError, load_tensor, save_tensor

__all__ = [
    "MODES",
    "ExportConfig",
    "ExportError",
    "ExportResult",
    "LoadedModel",
    "ModelError",
    "Preprocessing",
    "TensorFormatError",
    "TinyNet",
    "export_record",
    "load_image",
    "load_model",
    "load_tensor",
    "psi_masks",
    "save_tensor",
    "stored_scorecam_deltas",
]
