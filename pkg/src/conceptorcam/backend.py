"""Model backends: recorded replay and a live toy CNN evaluator.

A backend answers exactly two queries about one image and one model:
``base_scores()`` for the unmasked class scores and ``masked_scores(k)``
for the scores after masking the input with psi of feature channel k.
Everything downstream (weight schemes, conceptor learning, metrics) only
sees this interface, so recorded evidence from a real network and the
built-in toy CNN are interchangeable.

The toy CNN is a fixed little evaluator meant for tests, demos, and golden
records: channels-last tensors, 3x3 same-padded stride-1 convolutions,
ReLU, 2x2 max pooling with floor division on odd sizes, global average
pooling, one dense layer, and a final softmax. No training, no autodiff;
gradients are always ingested from elsewhere.
"""

from dataclasses import dataclass

import numpy as np

from .linalg import as_matrix, as_vector
from .saliency import FeatureMap, rescale_psi, tanh_normalize

SCORE_SPACES = ("softmax", "logit")


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=np.float64)
    out.flags.writeable = False
    return out


def _as_image(values, name: str = "image") -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"{name} must have shape (H, W, 3), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError(f"{name} values escape [0, 1]")
    return arr


@dataclass(frozen=True, eq=False)
class EvidenceRecord:
    """Everything one explanation needs, captured from a single model run.

    ``features`` is the tapped layer activation; ``masked_scores`` holds one
    score vector per channel, aligned with the channel columns. Gradients,
    classifier connection weights, precomputed channel weights, and
    per-mode explanation scores are optional extras ingested from whatever
    produced the record.
    """

    image: np.ndarray
    features: FeatureMap
    layer: str
    class_index: int
    base_scores: np.ndarray
    masked_scores: np.ndarray
    score_space: str = "softmax"
    gradients: "np.ndarray | None" = None
    fc_weights: "np.ndarray | None" = None
    channel_weights: "np.ndarray | None" = None
    explanation_modes: tuple = ()
    explanation_scores: "np.ndarray | None" = None
    model_path: "str | None" = None

    def __post_init__(self):
        image = _as_image(self.image)
        base = as_vector(self.base_scores, "base scores")
        masked = as_matrix(self.masked_scores, "masked scores")
        k = self.features.num_channels
        if masked.shape != (k, base.shape[0]):
            raise ValueError(
                f"masked scores shape {masked.shape} does not match "
                f"{k} channels x {base.shape[0]} classes"
            )
        if not 0 <= self.class_index < base.shape[0]:
            raise IndexError(
                f"class {self.class_index} out of range [0, {base.shape[0]})"
            )
        if self.score_space not in SCORE_SPACES:
            raise ValueError(
                f"unknown score space {self.score_space!r}, expected one of {SCORE_SPACES}"
            )
        object.__setattr__(self, "image", _freeze(image))
        object.__setattr__(self, "base_scores", _freeze(base))
        object.__setattr__(self, "masked_scores", _freeze(masked))
        object.__setattr__(self, "class_index", int(self.class_index))
        object.__setattr__(self, "explanation_modes",
                           tuple(str(m) for m in self.explanation_modes))
        if self.gradients is not None:
            g = as_matrix(self.gradients, "gradients")
            if g.shape != self.features.matrix.shape:
                raise ValueError(
                    f"gradients shape {g.shape} does not match features "
                    f"{self.features.matrix.shape}"
                )
            object.__setattr__(self, "gradients", _freeze(g))
        if self.fc_weights is not None:
            object.__setattr__(self, "fc_weights",
                               _freeze(as_matrix(self.fc_weights, "fc weights")))
        if self.channel_weights is not None:
            cw = as_vector(self.channel_weights, "channel weights")
            if cw.shape[0] != k:
                raise ValueError(
                    f"{cw.shape[0]} channel weights do not cover {k} channels"
                )
            object.__setattr__(self, "channel_weights", _freeze(cw))
        if self.explanation_scores is not None:
            ex = as_matrix(self.explanation_scores, "explanation scores")
            if ex.shape != (len(self.explanation_modes), base.shape[0]):
                raise ValueError(
                    f"explanation scores shape {ex.shape} does not match "
                    f"{len(self.explanation_modes)} modes x {base.shape[0]} classes"
                )
            object.__setattr__(self, "explanation_scores", _freeze(ex))

    @property
    def num_channels(self) -> int:
        return self.features.num_channels

    @property
    def num_classes(self) -> int:
        return self.base_scores.shape[0]

    @property
    def image_shape(self) -> tuple:
        return (self.image.shape[0], self.image.shape[1])


class ReplayBackend:
    """Backend that answers every query verbatim from a recorded run."""

    def __init__(self, record: EvidenceRecord):
        self.record = record

    @property
    def num_channels(self) -> int:
        return self.record.num_channels

    def base_scores(self) -> np.ndarray:
        return self.record.base_scores

    def masked_scores(self, channel_index: int) -> np.ndarray:
        k = self.record.num_channels
        if not 0 <= channel_index < k:
            raise IndexError(
                f"record holds masked scores for channels [0, {k}), "
                f"got {channel_index}"
            )
        return self.record.masked_scores[channel_index]

    def explanation_scores(self, mode: str) -> np.ndarray:
        """Recorded per-class scores for one explanation mode, or KeyError."""
        if mode not in self.record.explanation_modes:
            raise KeyError(
                f"record carries no explanation scores for mode {mode!r}"
            )
        row = self.record.explanation_modes.index(mode)
        return self.record.explanation_scores[row]


# Toy CNN layers. Weight layouts: conv (3, 3, in_channels, out_channels)
# acting on channels-last (h, w, in_channels); dense (out_units, in_units).

@dataclass(frozen=True, eq=False)
class Conv3x3:
    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        b = as_vector(self.bias, "conv bias")
        if w.ndim != 4 or w.shape[0] != 3 or w.shape[1] != 3:
            raise ValueError(f"conv weights must be (3, 3, cin, cout), got {w.shape}")
        if not np.all(np.isfinite(w)):
            raise ValueError("conv weights contain non-finite values")
        if b.shape[0] != w.shape[3]:
            raise ValueError(
                f"conv bias covers {b.shape[0]} channels, weights produce {w.shape[3]}"
            )
        object.__setattr__(self, "weights", _freeze(w))
        object.__setattr__(self, "bias", _freeze(b))


@dataclass(frozen=True)
class Relu:
    pass


@dataclass(frozen=True)
class MaxPool2x2:
    pass


@dataclass(frozen=True)
class GlobalAveragePool:
    pass


@dataclass(frozen=True, eq=False)
class Dense:
    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        w = as_matrix(self.weights, "dense weights")
        b = as_vector(self.bias, "dense bias")
        if b.shape[0] != w.shape[0]:
            raise ValueError(
                f"dense bias covers {b.shape[0]} units, weights produce {w.shape[0]}"
            )
        object.__setattr__(self, "weights", _freeze(w))
        object.__setattr__(self, "bias", _freeze(b))


@dataclass(frozen=True)
class Softmax:
    pass


LAYER_KINDS = {
    Conv3x3: "conv3x3",
    Relu: "relu",
    MaxPool2x2: "maxpool2x2",
    GlobalAveragePool: "global_average_pool",
    Dense: "dense",
    Softmax: "softmax",
}


@dataclass(frozen=True, eq=False)
class ToyCnnSpec:
    """Layer stack plus the index of the layer whose output gets tapped."""

    layers: tuple
    tap: int

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise ValueError("a toy CNN needs at least one layer")
        for layer in layers:
            if type(layer) not in LAYER_KINDS:
                raise ValueError(f"unknown layer type {type(layer).__name__}")
        if not isinstance(layers[-1], Softmax):
            raise ValueError("the final layer must be a softmax")
        if not 0 <= self.tap < len(layers):
            raise IndexError(
                f"tap index {self.tap} out of range [0, {len(layers)})"
            )
        object.__setattr__(self, "layers", layers)
        object.__setattr__(self, "tap", int(self.tap))


def _conv3x3(x: np.ndarray, layer: Conv3x3) -> np.ndarray:
    h, w, cin = x.shape
    if layer.weights.shape[2] != cin:
        raise ValueError(
            f"conv expects {layer.weights.shape[2]} input channels, got {cin}"
        )
    padded = np.zeros((h + 2, w + 2, cin))
    padded[1:-1, 1:-1, :] = x
    out = np.zeros((h, w, layer.weights.shape[3]))
    for di in range(3):
        for dj in range(3):
            out += padded[di:di + h, dj:dj + w, :] @ layer.weights[di, dj]
    return out + layer.bias


def _maxpool2x2(x: np.ndarray) -> np.ndarray:
    h, w, c = x.shape
    if h < 2 or w < 2:
        raise ValueError(f"cannot 2x2-pool a {h}x{w} grid")
    h2, w2 = h // 2, w // 2
    return x[:2 * h2, :2 * w2, :].reshape(h2, 2, w2, 2, c).max(axis=(1, 3))


def _softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max()
    e = np.exp(shifted)
    return e / e.sum()


def toy_forward(spec: ToyCnnSpec, image, score_space: str = "softmax"):
    """Run the toy CNN on a channels-last image.

    Returns ``(scores, features)`` where scores live in the requested space
    (softmax probabilities or the logits feeding the final softmax) and
    features is the tapped layer output as a FeatureMap. Pure and
    deterministic; raises on any shape mismatch along the way.
    """
    if score_space not in SCORE_SPACES:
        raise ValueError(
            f"unknown score space {score_space!r}, expected one of {SCORE_SPACES}"
        )
    x = np.asarray(image, dtype=np.float64)
    if x.ndim != 3:
        raise ValueError(f"toy CNN input must be 3-D channels-last, got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("toy CNN input contains non-finite values")
    tap_value = None
    pre_softmax = None
    for index, layer in enumerate(spec.layers):
        if isinstance(layer, Conv3x3):
            if x.ndim != 3:
                raise ValueError(f"conv needs a 3-D input, got shape {x.shape}")
            x = _conv3x3(x, layer)
        elif isinstance(layer, Relu):
            x = np.maximum(x, 0.0)
        elif isinstance(layer, MaxPool2x2):
            if x.ndim != 3:
                raise ValueError(f"pooling needs a 3-D input, got shape {x.shape}")
            x = _maxpool2x2(x)
        elif isinstance(layer, GlobalAveragePool):
            if x.ndim != 3:
                raise ValueError(f"pooling needs a 3-D input, got shape {x.shape}")
            x = x.mean(axis=(0, 1))
        elif isinstance(layer, Dense):
            if x.ndim != 1:
                raise ValueError(f"dense needs a flat input, got shape {x.shape}")
            if x.shape[0] != layer.weights.shape[1]:
                raise ValueError(
                    f"dense expects {layer.weights.shape[1]} inputs, got {x.shape[0]}"
                )
            x = layer.weights @ x + layer.bias
        elif isinstance(layer, Softmax):
            if x.ndim != 1:
                raise ValueError(f"softmax needs a flat input, got shape {x.shape}")
            pre_softmax = x
            x = _softmax(x)
        if index == spec.tap:
            if x.ndim != 3:
                raise ValueError(
                    f"tapped layer {index} must produce a 3-D activation, got {x.shape}"
                )
            tap_value = x
    scores = x if score_space == "softmax" else pre_softmax
    return np.asarray(scores, dtype=np.float64), FeatureMap.from_stack(tap_value)


def dense_class_row(spec: ToyCnnSpec, class_index: int) -> np.ndarray:
    """The dense connection weights feeding one class output, as a 1-by-K row."""
    for layer in spec.layers:
        if isinstance(layer, Dense):
            if not 0 <= class_index < layer.weights.shape[0]:
                raise IndexError(
                    f"class {class_index} out of range [0, {layer.weights.shape[0]})"
                )
            return layer.weights[class_index:class_index + 1, :].copy()
    raise ValueError("the toy CNN has no dense layer")


class ToyCnnBackend:
    """Live backend over the toy CNN evaluator.

    Runs the network once for the base scores and tapped features, then
    lazily answers masked queries: the mask for channel k is psi of that
    channel upsampled to the input resolution, multiplied into every input
    plane before a fresh forward pass. With ``mask_from_tanh`` masks are cut
    from the tanh-squashed features instead of the raw ones.
    """

    def __init__(self, spec: ToyCnnSpec, image, score_space: str = "softmax",
                 mask_from_tanh: bool = False, tap=None):
        if tap is not None:
            spec = ToyCnnSpec(layers=spec.layers, tap=int(tap))
        self.spec = spec
        self.image = _freeze(_as_image(image))
        self.score_space = score_space
        base, features = toy_forward(spec, self.image, score_space)
        self._base = _freeze(base)
        self._features = features
        self._mask_source = tanh_normalize(features) if mask_from_tanh else features
        self._masked_cache: dict = {}

    @property
    def num_channels(self) -> int:
        return self._features.num_channels

    @property
    def features(self) -> FeatureMap:
        return self._features

    def base_scores(self) -> np.ndarray:
        return self._base

    def channel_mask(self, channel_index: int) -> np.ndarray:
        """Psi of one feature channel at input resolution."""
        grid = self._mask_source.channel_grid(channel_index)
        target = (self.image.shape[0], self.image.shape[1])
        return rescale_psi(grid, target).grid

    def masked_scores(self, channel_index: int) -> np.ndarray:
        if channel_index not in self._masked_cache:
            mask = self.channel_mask(channel_index)
            scores, _ = toy_forward(self.spec, self.image * mask[:, :, None],
                                    self.score_space)
            self._masked_cache[channel_index] = _freeze(scores)
        return self._masked_cache[channel_index]

    def score_for_map(self, saliency_grid) -> np.ndarray:
        """Class scores after masking the input with an explanation map."""
        grid = np.asarray(saliency_grid, dtype=np.float64)
        if grid.shape != self.image.shape[:2]:
            raise ValueError(
                f"map shape {grid.shape} does not cover the {self.image.shape[:2]} input"
            )
        scores, _ = toy_forward(self.spec, self.image * grid[:, :, None],
                                self.score_space)
        return scores

    def export_record(self, class_index: int, layer: str = "tap",
                      gradients=None, fc_weights=None, channel_weights=None,
                      explanation_modes=(), explanation_scores=None,
                      model_path=None) -> EvidenceRecord:
        """Capture this backend's answers into a replayable record."""
        masked = np.stack([self.masked_scores(k)
                           for k in range(self.num_channels)])
        return EvidenceRecord(
            image=self.image,
            features=self._features,
            layer=layer,
            class_index=class_index,
            base_scores=self._base,
            masked_scores=masked,
            score_space=self.score_space,
            gradients=gradients,
            fc_weights=fc_weights,
            channel_weights=channel_weights,
            explanation_modes=tuple(explanation_modes),
            explanation_scores=explanation_scores,
            model_path=model_path,
        )
