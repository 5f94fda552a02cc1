"""Class activation mapping on top of conceptor synchronization.

A feature map is an M-by-K matrix of flattened channel columns taken from a
convolutional layer. Every explanation here is the same three-stage shape:
fuse the channels into one grid, then apply the fixed post-processing

    psi = ReLU -> corner-aligned bilinear upsample -> min-max to [0, 1].

The fused grid differs per mode. The baseline fuses channels linearly with
scalar channel weights. The conceptor modes first scale each channel by its
(min-max normalized) weight to form weighted evidence, learn a conceptor on
it, and synchronize the summed evidence through the conceptor before psi.
The comprehensive mode averages the learned conceptor with the Boolean
complement of the one learned on reversed weights, so genuinely useful
directions are kept while directions that also fire on the pseudo-negative
evidence cancel out.
"""

from dataclasses import dataclass

import numpy as np

from .conceptor import Conceptor, EvidenceMatrix, learn_conceptor, negate
from .linalg import as_matrix, as_vector

WEIGHT_SCHEMES = ("score", "grad", "cam", "ingested")


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=np.float64)
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class FeatureMap:
    """Channel activations of one layer: M = h * w rows, one column per channel."""

    matrix: np.ndarray
    spatial: tuple

    def __post_init__(self):
        m = as_matrix(self.matrix, "feature matrix")
        h, w = self.spatial
        if h < 1 or w < 1 or h * w != m.shape[0]:
            raise ValueError(
                f"spatial shape {self.spatial} does not fold {m.shape[0]} rows"
            )
        object.__setattr__(self, "matrix", _freeze(m))
        object.__setattr__(self, "spatial", (int(h), int(w)))

    @classmethod
    def from_stack(cls, stack) -> "FeatureMap":
        """Build from a channels-last (h, w, K) activation stack."""
        arr = np.asarray(stack, dtype=np.float64)
        if arr.ndim != 3:
            raise ValueError(f"activation stack must be 3-D, got shape {arr.shape}")
        h, w, k = arr.shape
        return cls(matrix=arr.reshape(h * w, k), spatial=(h, w))

    @property
    def num_channels(self) -> int:
        return self.matrix.shape[1]

    def channel_grid(self, channel_index: int) -> np.ndarray:
        """Channel ``channel_index`` folded back onto its h-by-w grid."""
        k = self.num_channels
        if not 0 <= channel_index < k:
            raise IndexError(f"channel {channel_index} out of range [0, {k})")
        return self.matrix[:, channel_index].reshape(self.spatial)


@dataclass(frozen=True, eq=False)
class ChannelWeights:
    """One scalar of evidence per channel plus the scheme that produced it."""

    values: np.ndarray
    scheme: str

    def __post_init__(self):
        v = as_vector(self.values, "channel weights")
        if self.scheme not in WEIGHT_SCHEMES:
            raise ValueError(
                f"unknown weight scheme {self.scheme!r}, expected one of {WEIGHT_SCHEMES}"
            )
        object.__setattr__(self, "values", _freeze(v))

    @property
    def num_channels(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True, eq=False)
class SaliencyMap:
    """Post-processed explanation grid; every value lies in [0, 1]."""

    grid: np.ndarray

    def __post_init__(self):
        g = as_matrix(self.grid, "saliency grid")
        if g.min() < 0.0 or g.max() > 1.0:
            raise ValueError("saliency values escape [0, 1]")
        object.__setattr__(self, "grid", _freeze(g))

    @property
    def shape(self) -> tuple:
        return self.grid.shape


def tanh_normalize(feature_map: FeatureMap) -> FeatureMap:
    """Squash every activation through tanh, keeping the spatial shape.

    Bounds each channel into (-1, 1) so a few high-energy channels cannot
    dominate the evidence correlation before conceptor learning.
    """
    return FeatureMap(matrix=np.tanh(feature_map.matrix), spatial=feature_map.spatial)


def _bilinear_upsample(grid: np.ndarray, target) -> np.ndarray:
    """Corner-aligned bilinear interpolation of a 2-D grid onto target shape.

    Source coordinate of output row i is i * (h - 1) / (H - 1); a singleton
    source or target axis degenerates to the first row/column. Never shrinks.
    """
    h, w = grid.shape
    out_h, out_w = int(target[0]), int(target[1])
    if out_h < h or out_w < w:
        raise ValueError(f"target {target} would shrink the {grid.shape} grid")
    rows = np.linspace(0.0, h - 1.0, out_h)
    cols = np.linspace(0.0, w - 1.0, out_w)
    r0 = np.floor(rows).astype(int)
    c0 = np.floor(cols).astype(int)
    r1 = np.minimum(r0 + 1, h - 1)
    c1 = np.minimum(c0 + 1, w - 1)
    fr = (rows - r0)[:, None]
    fc = (cols - c0)[None, :]
    g00 = grid[np.ix_(r0, c0)]
    g01 = grid[np.ix_(r0, c1)]
    g10 = grid[np.ix_(r1, c0)]
    g11 = grid[np.ix_(r1, c1)]
    return (g00 * (1.0 - fr) * (1.0 - fc) + g01 * (1.0 - fr) * fc
            + g10 * fr * (1.0 - fc) + g11 * fr * fc)


def rescale_psi(grid, target) -> SaliencyMap:
    """Fixed saliency post-processing: ReLU, upsample, min-max normalize.

    Rectifies first so negative fused values never leak into interpolation,
    upsamples corner-aligned to the target shape, then min-max normalizes
    onto [0, 1]. A grid that is constant after ReLU carries no localization
    signal and maps to all zeros.
    """
    g = np.maximum(as_matrix(grid, "fused grid"), 0.0)
    up = _bilinear_upsample(g, target)
    lo = float(up.min())
    hi = float(up.max())
    if hi == lo:
        return SaliencyMap(grid=np.zeros(up.shape))
    return SaliencyMap(grid=(up - lo) / (hi - lo))


def scorecam_weights(feature_map: FeatureMap, backend, class_index: int) -> ChannelWeights:
    """Score deltas per channel: masked class score minus the base score.

    Queries the backend once per channel; channel k's weight is the class
    score of the input masked by psi of channel k, minus the unmasked score.
    """
    base = as_vector(backend.base_scores(), "base scores")
    if not 0 <= class_index < base.shape[0]:
        raise IndexError(
            f"class {class_index} out of range [0, {base.shape[0]})"
        )
    deltas = np.empty(feature_map.num_channels)
    for k in range(feature_map.num_channels):
        masked = as_vector(backend.masked_scores(k), f"masked scores for channel {k}")
        if masked.shape != base.shape:
            raise ValueError(
                f"masked scores for channel {k} have shape {masked.shape}, "
                f"expected {base.shape}"
            )
        deltas[k] = masked[class_index] - base[class_index]
    return ChannelWeights(values=deltas, scheme="score")


def gradcam_weights(gradients) -> ChannelWeights:
    """Column-summed class gradients, scaled by 1 / (K * M).

    ``gradients`` is the M-by-K matrix of class-score partials with respect
    to each feature value; the weight of channel k averages its column and
    spreads the usual 1/M spatial mean across the K channels.
    """
    g = as_matrix(gradients, "gradients")
    m, k = g.shape
    return ChannelWeights(values=g.sum(axis=0) / (k * m), scheme="grad")


def cam_weights(connection_weights) -> ChannelWeights:
    """Column-summed dense connection weights, scaled by 1 / (N2 * N1).

    ``connection_weights`` is the N2-by-N1 slice of the classifier weight
    matrix feeding the class output; column sums give one scalar per source
    unit, normalized by both fan dimensions.
    """
    w = as_matrix(connection_weights, "connection weights")
    n2, n1 = w.shape
    return ChannelWeights(values=w.sum(axis=0) / (n1 * n2), scheme="cam")


def normalize_weights(values) -> np.ndarray:
    """Min-max normalize a weight vector onto [0, 1].

    Constant vectors map to all 0.5 so that neither the direct nor the
    reversed evidence collapses to zero.
    """
    v = as_vector(values, "weights")
    lo = float(v.min())
    hi = float(v.max())
    if hi == lo:
        return np.full(v.shape, 0.5)
    return (v - lo) / (hi - lo)


def build_evidence(feature_map: FeatureMap, weights: ChannelWeights,
                   reverse: bool = False, normalize: bool = True) -> EvidenceMatrix:
    """Scale each feature channel by its weight to form evidence columns.

    Weights are min-max normalized onto [0, 1] first (skippable for callers
    that already hold normalized weights); with ``reverse`` each channel is
    scaled by one minus its weight instead, producing the pseudo-negative
    evidence for the complementary route.
    """
    if weights.num_channels != feature_map.num_channels:
        raise ValueError(
            f"{weights.num_channels} weights cannot scale "
            f"{feature_map.num_channels} channels"
        )
    w = normalize_weights(weights.values) if normalize else np.asarray(
        weights.values, dtype=np.float64)
    scale = 1.0 - w if reverse else w
    return EvidenceMatrix(matrix=feature_map.matrix * scale[None, :],
                          spatial=feature_map.spatial)


def baseline_saliency(feature_map: FeatureMap, weights: ChannelWeights,
                      target) -> SaliencyMap:
    """Classic weighted-sum explanation: psi of the channels fused by weights."""
    if weights.num_channels != feature_map.num_channels:
        raise ValueError(
            f"{weights.num_channels} weights cannot fuse "
            f"{feature_map.num_channels} channels"
        )
    fused = feature_map.matrix @ weights.values
    return rescale_psi(fused.reshape(feature_map.spatial), target)


def synchronized_saliency(conceptor: Conceptor, evidence: EvidenceMatrix,
                          target) -> SaliencyMap:
    """Psi of the summed evidence passed through a conceptor.

    The evidence columns are summed into one state vector, projected by the
    conceptor, folded back onto the spatial grid, and post-processed.
    """
    if conceptor.order != evidence.matrix.shape[0]:
        raise ValueError(
            f"conceptor of order {conceptor.order} cannot synchronize "
            f"evidence with {evidence.matrix.shape[0]} rows"
        )
    fused = conceptor.matrix @ evidence.matrix.sum(axis=1)
    return rescale_psi(fused.reshape(evidence.spatial), target)


@dataclass(frozen=True, eq=False)
class ConceptorSaliency:
    """All three conceptor-synchronized views plus the learning intermediates."""

    comprehensive: SaliencyMap
    positive: SaliencyMap
    complementary: SaliencyMap
    evidence: EvidenceMatrix
    reversed_evidence: EvidenceMatrix
    positive_conceptor: Conceptor
    negative_conceptor: Conceptor
    complementary_conceptor: Conceptor
    fused_synchronizer: Conceptor
    normalized_weights: np.ndarray


def comprehensive_saliency(feature_map: FeatureMap, weights: ChannelWeights,
                           aperture: float, target) -> ConceptorSaliency:
    """Full conceptor explanation pipeline for one feature map.

    Normalizes the weights, builds direct and reversed evidence, learns a
    conceptor on each, complements the reversed one, and synchronizes the
    direct evidence through the positive conceptor, the complement, and
    their average. The averaged synchronizer stays symmetric with spectrum
    in [0, 1], so it is itself a valid conceptor.
    """
    w = normalize_weights(weights.values)
    normalized = ChannelWeights(values=w, scheme=weights.scheme)
    evidence = build_evidence(feature_map, normalized, reverse=False, normalize=False)
    reversed_evidence = build_evidence(feature_map, normalized, reverse=True,
                                       normalize=False)
    positive = learn_conceptor(evidence, aperture)
    negative = learn_conceptor(reversed_evidence, aperture)
    complementary = negate(negative)
    fused = Conceptor(
        matrix=(positive.matrix + complementary.matrix) / 2.0,
        aperture=positive.aperture,
    )
    return ConceptorSaliency(
        comprehensive=synchronized_saliency(fused, evidence, target),
        positive=synchronized_saliency(positive, evidence, target),
        complementary=synchronized_saliency(complementary, evidence, target),
        evidence=evidence,
        reversed_evidence=reversed_evidence,
        positive_conceptor=positive,
        negative_conceptor=negative,
        complementary_conceptor=complementary,
        fused_synchronizer=fused,
        normalized_weights=_freeze(w),
    )
