"""Disk layout for evidence records and toy CNN models.

A record directory holds a ``record.json`` manifest plus one CCT1 tensor
file per array. Manifest keys:

    format              "ccam-record-v1"
    layer               label of the tapped layer
    class_index         explained class
    spatial             [h, w] of the tapped feature grid (cross-check)
    score_space         "softmax" or "logit"
    input               image tensor, (H, W, 3) in [0, 1]
    features            tapped activations, (h, w, K) channels-last
    base_scores         (num_classes,)
    masked_scores       (K, num_classes)
    gradients           optional, (h, w, K), ingested class gradients
    fc_weights          optional, (N2, N1) classifier connection weights
    channel_weights     optional, (K,) precomputed channel weights
    explanation_scores  optional, (len(explanation_modes), num_classes)
    explanation_modes   required alongside explanation_scores
    model               optional path to a toy CNN JSON for live re-scoring

A toy CNN model is a ``*.json`` document listing layers in order, each with
a ``kind`` plus tensor file names for the parametric ones, and the tapped
layer index under ``tap``. All tensor paths are relative to the JSON file.
"""

import json
from pathlib import Path

import numpy as np

from .backend import (
    Conv3x3,
    Dense,
    EvidenceRecord,
    GlobalAveragePool,
    MaxPool2x2,
    Relu,
    Softmax,
    ToyCnnSpec,
)
from .saliency import FeatureMap
from .tensorfile import TensorFileError, load_tensor, save_tensor

RECORD_FORMAT = "ccam-record-v1"
TOYCNN_FORMAT = "ccam-toycnn-v1"
MANIFEST_NAME = "record.json"


class RecordError(Exception):
    """A record or model document is missing, malformed, or inconsistent."""


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _read_json(path: Path) -> dict:
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise RecordError(f"manifest not found: {path}") from None
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as err:
        raise RecordError(f"manifest {path} is not valid JSON: {err}") from None
    if not isinstance(payload, dict):
        raise RecordError(f"manifest {path} must hold a JSON object")
    return payload


def save_record(record: EvidenceRecord, directory) -> Path:
    """Write a record directory; returns the manifest path.

    Tensors are narrowed to float32 by the interchange format, so a record
    reloaded from disk matches the in-memory original to float32 precision.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    h, w = record.features.spatial
    manifest = {
        "format": RECORD_FORMAT,
        "layer": record.layer,
        "class_index": record.class_index,
        "spatial": [h, w],
        "score_space": record.score_space,
        "input": "input.cct",
        "features": "features.cct",
        "base_scores": "base_scores.cct",
        "masked_scores": "masked_scores.cct",
    }
    save_tensor(directory / "input.cct", record.image)
    save_tensor(directory / "features.cct",
                record.features.matrix.reshape(h, w, record.num_channels))
    save_tensor(directory / "base_scores.cct", record.base_scores)
    save_tensor(directory / "masked_scores.cct", record.masked_scores)
    if record.gradients is not None:
        manifest["gradients"] = "gradients.cct"
        save_tensor(directory / "gradients.cct",
                    record.gradients.reshape(h, w, record.num_channels))
    if record.fc_weights is not None:
        manifest["fc_weights"] = "fc_weights.cct"
        save_tensor(directory / "fc_weights.cct", record.fc_weights)
    if record.channel_weights is not None:
        manifest["channel_weights"] = "channel_weights.cct"
        save_tensor(directory / "channel_weights.cct", record.channel_weights)
    if record.explanation_scores is not None:
        manifest["explanation_scores"] = "explanation_scores.cct"
        manifest["explanation_modes"] = list(record.explanation_modes)
        save_tensor(directory / "explanation_scores.cct", record.explanation_scores)
    if record.model_path is not None:
        manifest["model"] = record.model_path
    path = directory / MANIFEST_NAME
    _write_json(path, manifest)
    return path


def _load_named_tensor(directory: Path, manifest: dict, key: str) -> np.ndarray:
    name = manifest.get(key)
    if not isinstance(name, str) or not name:
        raise RecordError(f"manifest is missing the {key!r} tensor entry")
    try:
        return load_tensor(directory / name)
    except TensorFileError as err:
        raise RecordError(f"tensor {key!r} ({name}): {err}") from err


def load_record(location) -> EvidenceRecord:
    """Load a record directory (or a manifest path) back into memory."""
    location = Path(location)
    manifest_path = location / MANIFEST_NAME if location.is_dir() else location
    directory = manifest_path.parent
    manifest = _read_json(manifest_path)
    if manifest.get("format") != RECORD_FORMAT:
        raise RecordError(
            f"manifest {manifest_path} declares format "
            f"{manifest.get('format')!r}, expected {RECORD_FORMAT!r}"
        )
    image = _load_named_tensor(directory, manifest, "input")
    features_stack = _load_named_tensor(directory, manifest, "features")
    base = _load_named_tensor(directory, manifest, "base_scores")
    masked = _load_named_tensor(directory, manifest, "masked_scores")
    if features_stack.ndim != 3:
        raise RecordError(
            f"features tensor must be 3-D channels-last, got {features_stack.shape}"
        )
    spatial = manifest.get("spatial")
    if spatial is not None and list(spatial) != list(features_stack.shape[:2]):
        raise RecordError(
            f"manifest spatial {spatial} disagrees with features "
            f"{features_stack.shape[:2]}"
        )
    gradients = None
    if "gradients" in manifest:
        g = _load_named_tensor(directory, manifest, "gradients")
        if g.shape != features_stack.shape:
            raise RecordError(
                f"gradients shape {g.shape} does not match features "
                f"{features_stack.shape}"
            )
        gradients = g.reshape(-1, g.shape[2])
    fc_weights = (_load_named_tensor(directory, manifest, "fc_weights")
                  if "fc_weights" in manifest else None)
    channel_weights = (_load_named_tensor(directory, manifest, "channel_weights")
                       if "channel_weights" in manifest else None)
    explanation_scores = None
    explanation_modes = ()
    if "explanation_scores" in manifest:
        modes = manifest.get("explanation_modes")
        if not isinstance(modes, list) or not modes:
            raise RecordError(
                "explanation_scores requires a non-empty explanation_modes list"
            )
        explanation_modes = tuple(str(m) for m in modes)
        explanation_scores = _load_named_tensor(directory, manifest,
                                                "explanation_scores")
    model_path = None
    if "model" in manifest:
        model_path = str((directory / str(manifest["model"])).resolve())
    try:
        return EvidenceRecord(
            image=image,
            features=FeatureMap.from_stack(features_stack),
            layer=str(manifest.get("layer", "")),
            class_index=int(manifest.get("class_index", 0)),
            base_scores=base,
            masked_scores=masked,
            score_space=str(manifest.get("score_space", "softmax")),
            gradients=gradients,
            fc_weights=fc_weights,
            channel_weights=channel_weights,
            explanation_modes=explanation_modes,
            explanation_scores=explanation_scores,
            model_path=model_path,
        )
    except (ValueError, IndexError) as err:
        raise RecordError(f"record at {directory} is inconsistent: {err}") from err


def save_toy_spec(spec: ToyCnnSpec, path) -> Path:
    """Write a toy CNN spec as JSON plus CCT1 weight tensors beside it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    stem = path.stem
    layers = []
    for index, layer in enumerate(spec.layers):
        if isinstance(layer, Conv3x3):
            entry = {
                "kind": "conv3x3",
                "weights": f"{stem}_layer{index}_weights.cct",
                "bias": f"{stem}_layer{index}_bias.cct",
            }
            save_tensor(path.parent / entry["weights"], layer.weights)
            save_tensor(path.parent / entry["bias"], layer.bias)
        elif isinstance(layer, Dense):
            entry = {
                "kind": "dense",
                "weights": f"{stem}_layer{index}_weights.cct",
                "bias": f"{stem}_layer{index}_bias.cct",
            }
            save_tensor(path.parent / entry["weights"], layer.weights)
            save_tensor(path.parent / entry["bias"], layer.bias)
        elif isinstance(layer, Relu):
            entry = {"kind": "relu"}
        elif isinstance(layer, MaxPool2x2):
            entry = {"kind": "maxpool2x2"}
        elif isinstance(layer, GlobalAveragePool):
            entry = {"kind": "global_average_pool"}
        elif isinstance(layer, Softmax):
            entry = {"kind": "softmax"}
        else:
            raise RecordError(f"cannot serialize layer type {type(layer).__name__}")
        layers.append(entry)
    _write_json(path, {"format": TOYCNN_FORMAT, "tap": spec.tap, "layers": layers})
    return path


def load_toy_spec(path) -> ToyCnnSpec:
    """Load a toy CNN spec JSON back into memory."""
    path = Path(path)
    manifest = _read_json(path)
    if manifest.get("format") != TOYCNN_FORMAT:
        raise RecordError(
            f"model {path} declares format {manifest.get('format')!r}, "
            f"expected {TOYCNN_FORMAT!r}"
        )
    raw_layers = manifest.get("layers")
    if not isinstance(raw_layers, list) or not raw_layers:
        raise RecordError(f"model {path} lists no layers")
    layers = []
    for entry in raw_layers:
        kind = entry.get("kind") if isinstance(entry, dict) else None
        if kind in ("conv3x3", "dense"):
            try:
                weights = load_tensor(path.parent / str(entry["weights"]))
                bias = load_tensor(path.parent / str(entry["bias"]))
            except KeyError as err:
                raise RecordError(
                    f"{kind} layer in {path} is missing the {err} tensor entry"
                ) from None
            except TensorFileError as err:
                raise RecordError(f"{kind} layer in {path}: {err}") from err
            cls = Conv3x3 if kind == "conv3x3" else Dense
            try:
                layers.append(cls(weights=weights, bias=bias))
            except ValueError as err:
                raise RecordError(f"{kind} layer in {path}: {err}") from err
        elif kind == "relu":
            layers.append(Relu())
        elif kind == "maxpool2x2":
            layers.append(MaxPool2x2())
        elif kind == "global_average_pool":
            layers.append(GlobalAveragePool())
        elif kind == "softmax":
            layers.append(Softmax())
        else:
            raise RecordError(f"model {path} names unknown layer kind {kind!r}")
    try:
        return ToyCnnSpec(layers=tuple(layers), tap=int(manifest.get("tap", 0)))
    except (ValueError, IndexError) as err:
        raise RecordError(f"model {path} is inconsistent: {err}") from err
