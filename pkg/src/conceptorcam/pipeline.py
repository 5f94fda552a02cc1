"""Record-level explanation pipeline shared by the CLI and the harness.

Ties the pieces together for one recorded run: pick the weight scheme,
optionally tanh-squash the features, and produce the requested explanation
mode at input resolution along with every intermediate worth checksumming.
"""

import hashlib
from dataclasses import dataclass

import numpy as np

from .backend import EvidenceRecord, ReplayBackend
from .linalg import correlation
from .saliency import (
    ChannelWeights,
    SaliencyMap,
    baseline_saliency,
    cam_weights,
    comprehensive_saliency,
    gradcam_weights,
    scorecam_weights,
    tanh_normalize,
)
from .tensorfile import tensor_bytes

MODES = ("baseline", "positive", "complementary", "comprehensive")

# Gradient- and connection-weight evidence is tanh-squashed by default;
# score deltas already live on a bounded scale, so they are not.
TANH_DEFAULTS = {"score": False, "grad": True, "cam": True, "ingested": False}

MIN_APERTURE = 0.0
MAX_APERTURE = 100.0


@dataclass(frozen=True, eq=False)
class ExplainResult:
    """One explanation plus the intermediates that produced it."""

    mode: str
    scheme: str
    aperture: float
    tanh: bool
    saliency: SaliencyMap
    weights: ChannelWeights
    intermediates: dict


def resolve_tanh(scheme: str, tanh) -> bool:
    """Apply the per-scheme default when the tanh flag is left unset."""
    if tanh is None:
        return TANH_DEFAULTS[scheme]
    return bool(tanh)


def channel_weights_for(record: EvidenceRecord, scheme: str) -> ChannelWeights:
    """Build channel weights for a record under the named scheme."""
    if scheme == "score":
        return scorecam_weights(record.features, ReplayBackend(record),
                                record.class_index)
    if scheme == "grad":
        if record.gradients is None:
            raise ValueError("record carries no gradients for the grad scheme")
        return gradcam_weights(record.gradients)
    if scheme == "cam":
        if record.fc_weights is None:
            raise ValueError(
                "record carries no connection weights for the cam scheme"
            )
        return cam_weights(record.fc_weights)
    if scheme == "ingested":
        if record.channel_weights is None:
            raise ValueError(
                "record carries no precomputed weights for the ingested scheme"
            )
        return ChannelWeights(values=record.channel_weights, scheme="ingested")
    raise ValueError(f"unknown weight scheme {scheme!r}")


def explain_record(record: EvidenceRecord, mode: str = "comprehensive",
                   scheme: str = "score", aperture: float = 1.0,
                   tanh=None) -> ExplainResult:
    """Produce one explanation mode for a recorded run.

    The saliency map always comes back at the recorded input resolution.
    ``tanh`` left as None picks the per-scheme default. The aperture must
    lie in [0, 100]; it only matters for the conceptor modes.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}, expected one of {MODES}")
    aperture = float(aperture)
    if not MIN_APERTURE <= aperture <= MAX_APERTURE:
        raise ValueError(
            f"aperture must lie in [{MIN_APERTURE:g}, {MAX_APERTURE:g}], "
            f"got {aperture}"
        )
    use_tanh = resolve_tanh(scheme, tanh)
    weights = channel_weights_for(record, scheme)
    features = tanh_normalize(record.features) if use_tanh else record.features
    target = record.image_shape
    intermediates = {"channel_weights": weights.values}
    if mode == "baseline":
        saliency = baseline_saliency(features, weights, target)
        intermediates["fused_channels"] = features.matrix @ weights.values
    else:
        bundle = comprehensive_saliency(features, weights, aperture, target)
        saliency = getattr(bundle, mode)
        intermediates.update(
            normalized_weights=bundle.normalized_weights,
            evidence=bundle.evidence.matrix,
            reversed_evidence=bundle.reversed_evidence.matrix,
            evidence_correlation=correlation(bundle.evidence.matrix),
            reversed_correlation=correlation(bundle.reversed_evidence.matrix),
            positive_conceptor=bundle.positive_conceptor.matrix,
            negative_conceptor=bundle.negative_conceptor.matrix,
            complementary_conceptor=bundle.complementary_conceptor.matrix,
            fused_synchronizer=bundle.fused_synchronizer.matrix,
        )
    return ExplainResult(
        mode=mode,
        scheme=scheme,
        aperture=aperture,
        tanh=use_tanh,
        saliency=saliency,
        weights=weights,
        intermediates=intermediates,
    )


def tensor_checksum(values) -> str:
    """Hex sha256 of an array's CCT1 serialization."""
    return hashlib.sha256(tensor_bytes(values)).hexdigest()


def sidecar_payload(result: ExplainResult, record_path: str,
                    overlay_rgb: np.ndarray) -> dict:
    """Sidecar JSON content: run parameters, weights, and checksums."""
    return {
        "record": record_path,
        "mode": result.mode,
        "weights_scheme": result.scheme,
        "alpha": result.aperture,
        "tanh": result.tanh,
        "channel_weights": [float(v) for v in result.weights.values],
        "saliency_sha256": tensor_checksum(result.saliency.grid),
        "overlay_rgb_sha256": hashlib.sha256(
            overlay_rgb.tobytes()).hexdigest(),
        "intermediate_sha256": {
            name: tensor_checksum(value)
            for name, value in sorted(result.intermediates.items())
        },
    }
