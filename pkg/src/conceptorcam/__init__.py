"""Conceptor-synchronized class activation mapping.

Learn conceptors on weighted channel evidence from a CNN layer, synchronize
the evidence through them to build saliency maps, replay recorded model
runs, and score explanations with average-increase / average-drop metrics.
"""

from .backend import (
    Conv3x3,
    Dense,
    EvidenceRecord,
    GlobalAveragePool,
    MaxPool2x2,
    Relu,
    ReplayBackend,
    Softmax,
    ToyCnnBackend,
    ToyCnnSpec,
    dense_class_row,
    toy_forward,
)
from .conceptor import (
    Conceptor,
    EvidenceMatrix,
    conceptor_loss,
    intra_reconstruction_gradient,
    intra_reconstruction_loss,
    intra_reconstruction_minimizer,
    learn_conceptor,
    negate,
    synchronization_loss,
)
from .imaging import read_image, render_overlay, write_png
from .linalg import (
    correlation,
    frobenius_sq,
    pseudo_inverse,
    ridge_inverse_apply,
    sym_eigenvalues,
)
from .metrics import (
    EvalPair,
    EvalReport,
    EvalRow,
    average_drop,
    average_increase,
    evaluate_manifest,
)
from .pipeline import (
    ExplainResult,
    channel_weights_for,
    explain_record,
    resolve_tanh,
    sidecar_payload,
    tensor_checksum,
)
from .records import (
    RecordError,
    load_record,
    load_toy_spec,
    save_record,
    save_toy_spec,
)
from .saliency import (
    ChannelWeights,
    ConceptorSaliency,
    FeatureMap,
    SaliencyMap,
    baseline_saliency,
    build_evidence,
    cam_weights,
    comprehensive_saliency,
    gradcam_weights,
    normalize_weights,
    rescale_psi,
    scorecam_weights,
    synchronized_saliency,
    tanh_normalize,
)
from .tensorfile import (
    BadMagicError,
    TensorFileError,
    TruncatedPayloadError,
    UnsupportedDtypeError,
    load_tensor,
    parse_tensor,
    save_tensor,
    tensor_bytes,
)
from .verify import CheckResult, minimize_intra_loss, run_all_checks

__version__ = "0.1.0"

__all__ = [
    "BadMagicError",
    "ChannelWeights",
    "CheckResult",
    "Conceptor",
    "ConceptorSaliency",
    "Conv3x3",
    "Dense",
    "EvalPair",
    "EvalReport",
    "EvalRow",
    "EvidenceMatrix",
    "EvidenceRecord",
    "ExplainResult",
    "FeatureMap",
    "GlobalAveragePool",
    "MaxPool2x2",
    "RecordError",
    "Relu",
    "ReplayBackend",
    "SaliencyMap",
    "Softmax",
    "TensorFileError",
    "ToyCnnBackend",
    "ToyCnnSpec",
    "TruncatedPayloadError",
    "UnsupportedDtypeError",
    "average_drop",
    "average_increase",
    "baseline_saliency",
    "build_evidence",
    "cam_weights",
    "channel_weights_for",
    "comprehensive_saliency",
    "conceptor_loss",
    "correlation",
    "dense_class_row",
    "evaluate_manifest",
    "explain_record",
    "frobenius_sq",
    "gradcam_weights",
    "intra_reconstruction_gradient",
    "intra_reconstruction_loss",
    "intra_reconstruction_minimizer",
    "learn_conceptor",
    "load_record",
    "load_tensor",
    "load_toy_spec",
    "minimize_intra_loss",
    "negate",
    "normalize_weights",
    "parse_tensor",
    "pseudo_inverse",
    "read_image",
    "render_overlay",
    "rescale_psi",
    "resolve_tanh",
    "ridge_inverse_apply",
    "run_all_checks",
    "save_record",
    "sidecar_payload",
    "save_tensor",
    "save_toy_spec",
    "scorecam_weights",
    "sym_eigenvalues",
    "synchronization_loss",
    "synchronized_saliency",
    "tanh_normalize",
    "tensor_bytes",
    "tensor_checksum",
    "toy_forward",
    "write_png",
]
