"""Capture one classifier run into a replayable record directory.

The exporter hooks a named layer of a torch model, runs the preprocessed
image once for base scores, tapped features, and class gradients, then
reruns the model on channel-masked inputs for the per-channel masked
scores. Masks are cut exactly the way the consumer cuts them: ReLU over
the channel grid, corner-aligned bilinear upsampling to input resolution,
then min-max normalization, with grids that are constant after ReLU
masking to all zeros.

Everything lands as 32-bit CCT1 tensors next to a record.json manifest.
When explanation scoring is enabled the freshly written record is handed
to the installed `ccam` explainer, one subprocess per mode, and the model
is rescored on each returned saliency mask; the consumer is only ever
reached through its command line and file formats.
"""

import json
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as tnn
import torchvision.transforms.functional as tvf
from PIL import Image
from torchvision.transforms import InterpolationMode

from .models import LoadedModel, ModelError, Preprocessing, load_model
from .tensorio import load_tensor, save_tensor

RECORD_FORMAT = "ccam-record-v1"
MANIFEST_NAME = "record.json"
MODES = ("baseline", "positive", "complementary", "comprehensive")
SCORE_SPACES = ("softmax", "logit")


class ExportError(Exception):
    """The export cannot proceed: bad config, missing layer, shape trouble."""


@dataclass(frozen=True)
class ExportConfig:
    """One export job: which model, which layer, which image, which class."""

    model: str
    layer: str
    image: str
    out_dir: str
    class_rule: str = "top1"
    score_space: str = "softmax"
    explanations: bool = True
    ccam_binary: str = "ccam"
    batch_size: int = 16

    def explicit_class(self):
        """The fixed class index, or None when the top-1 rule applies."""
        if self.class_rule == "top1":
            return None
        try:
            return int(self.class_rule)
        except ValueError:
            raise ExportError(
                f"class rule must be 'top1' or an integer, got {self.class_rule!r}"
            ) from None


@dataclass(frozen=True)
class ExportResult:
    """Written record location plus the float64 values before narrowing."""

    manifest: Path
    directory: Path
    class_index: int
    base_scores: np.ndarray
    masked_scores: np.ndarray
    spatial: tuple

    @property
    def num_channels(self) -> int:
        return self.masked_scores.shape[0]

    def scorecam_deltas(self) -> np.ndarray:
        """Per-channel masked-minus-base score deltas at full precision."""
        c = self.class_index
        return self.masked_scores[:, c] - self.base_scores[c]


def load_image(path, pre: Preprocessing) -> np.ndarray:
    """Decode, shorter-side resize, center crop; returns (H, W, 3) in [0, 1]."""
    with Image.open(path) as img:
        rgb = img.convert("RGB")
    rgb = tvf.resize(rgb, pre.resize, interpolation=InterpolationMode.BILINEAR)
    rgb = tvf.center_crop(rgb, pre.crop)
    return np.asarray(rgb, dtype=np.float64) / 255.0


def psi_masks(features: np.ndarray, target) -> np.ndarray:
    """Per-channel input-resolution masks from an (h, w, K) activation.

    Each channel is rectified, bilinearly upsampled corner-aligned onto the
    target shape, and min-max normalized into [0, 1]. A channel that is
    constant after ReLU carries no localization signal and masks to zeros.
    """
    if features.ndim != 3:
        raise ExportError(f"features must be (h, w, K), got {features.shape}")
    grids = torch.from_numpy(
        np.ascontiguousarray(features.transpose(2, 0, 1)))[:, None, :, :]
    up = tnn.interpolate(grids.clamp(min=0.0), size=(int(target[0]), int(target[1])),
                         mode="bilinear", align_corners=True)[:, 0].numpy()
    masks = np.zeros_like(up)
    for k in range(up.shape[0]):
        lo = float(up[k].min())
        hi = float(up[k].max())
        if hi > lo:
            masks[k] = (up[k] - lo) / (hi - lo)
    return masks


def _standardize(batch01: np.ndarray, pre: Preprocessing) -> torch.Tensor:
    """Channels-last [0, 1] batch to a standardized (B, 3, H, W) float32."""
    x = torch.from_numpy(
        np.ascontiguousarray(batch01.transpose(0, 3, 1, 2))).to(torch.float32)
    mean = torch.tensor(pre.mean, dtype=torch.float32).view(1, 3, 1, 1)
    std = torch.tensor(pre.std, dtype=torch.float32).view(1, 3, 1, 1)
    return (x - mean) / std


def _scores_tensor(logits: torch.Tensor, score_space: str) -> torch.Tensor:
    return torch.softmax(logits, dim=1) if score_space == "softmax" else logits


def _tap_module(module: torch.nn.Module, layer: str) -> torch.nn.Module:
    table = dict(module.named_modules())
    if not layer or layer not in table:
        names = [name for name in table if name]
        listing = ", ".join(names[:12]) + (" ..." if len(names) > 12 else "")
        raise ExportError(f"model has no layer {layer!r}; choices include {listing}")
    return table[layer]


@dataclass(frozen=True)
class _Capture:
    base_scores: np.ndarray
    features: np.ndarray
    gradients: np.ndarray
    class_index: int


def _run_with_tap(loaded: LoadedModel, image01: np.ndarray, layer: str,
                  score_space: str, explicit_class) -> _Capture:
    """One differentiable forward pass: scores, tapped activation, gradients."""
    tap = _tap_module(loaded.module, layer)
    grabbed = []

    def hook(_module, _inputs, output):
        if not torch.is_tensor(output):
            raise ExportError(f"layer {layer!r} does not produce a tensor")
        output.retain_grad()
        grabbed.append(output)

    handle = tap.register_forward_hook(hook)
    try:
        logits = loaded.module(_standardize(image01[None], loaded.preprocessing))
    finally:
        handle.remove()
    if not grabbed:
        raise ExportError(f"layer {layer!r} never ran in the forward pass")
    act = grabbed[-1]
    if act.ndim != 4 or act.shape[0] != 1:
        raise ExportError(
            f"tapped activation must be (1, K, h, w), got {tuple(act.shape)}")
    scores_t = _scores_tensor(logits, score_space)
    base = scores_t.detach()[0].double().numpy()
    class_index = int(base.argmax()) if explicit_class is None else int(explicit_class)
    if not 0 <= class_index < base.shape[0]:
        raise ExportError(
            f"class {class_index} out of range [0, {base.shape[0]})")
    scores_t[0, class_index].backward()
    if act.grad is None:
        raise ExportError(f"no gradient reached layer {layer!r}")
    features = act.detach()[0].double().numpy().transpose(1, 2, 0)
    gradients = act.grad[0].double().numpy().transpose(1, 2, 0)
    return _Capture(base_scores=base, features=features,
                    gradients=gradients, class_index=class_index)


def _masked_scores(loaded: LoadedModel, image01: np.ndarray, masks: np.ndarray,
                   score_space: str, batch_size: int) -> np.ndarray:
    """Class scores for every channel-masked input, as a (K, N) matrix."""
    if batch_size < 1:
        raise ExportError(f"batch size must be at least 1, got {batch_size}")
    rows = []
    with torch.no_grad():
        for start in range(0, masks.shape[0], batch_size):
            chunk = masks[start:start + batch_size]
            batch = image01[None, :, :, :] * chunk[:, :, :, None]
            logits = loaded.module(_standardize(batch, loaded.preprocessing))
            rows.append(_scores_tensor(logits, score_space).double().numpy())
    return np.concatenate(rows, axis=0)


def _classifier_weights(module: torch.nn.Module):
    """Weight matrix of the last linear layer, or None when there is none."""
    last = None
    for candidate in module.modules():
        if isinstance(candidate, torch.nn.Linear):
            last = candidate
    if last is None:
        return None
    return last.weight.detach().double().numpy()


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _score_for_map(loaded: LoadedModel, image01: np.ndarray,
                   saliency: np.ndarray, score_space: str) -> np.ndarray:
    """Class scores after masking the input with one explanation map."""
    if saliency.shape != image01.shape[:2]:
        raise ExportError(
            f"saliency shape {saliency.shape} does not cover the "
            f"{image01.shape[:2]} input")
    masked = image01 * saliency[:, :, None]
    with torch.no_grad():
        logits = loaded.module(_standardize(masked[None], loaded.preprocessing))
    return _scores_tensor(logits, score_space).detach()[0].double().numpy()


def _attach_explanation_scores(cfg: ExportConfig, loaded: LoadedModel,
                               directory: Path, image01: np.ndarray) -> None:
    """Run the consumer on the record, rescore its maps, extend the manifest."""
    rows = []
    with tempfile.TemporaryDirectory() as scratch:
        for mode in MODES:
            prefix = Path(scratch) / mode
            argv = [cfg.ccam_binary, "explain", "--record", str(directory),
                    "--mode", mode, "--weights", "score", "--alpha", "1.0",
                    "--score-space", cfg.score_space, "--out", str(prefix)]
            try:
                proc = subprocess.run(argv, capture_output=True, text=True)
            except FileNotFoundError:
                raise ExportError(
                    f"explainer binary {cfg.ccam_binary!r} is not on PATH; "
                    f"install it or pass explanations=False") from None
            if proc.returncode != 0:
                raise ExportError(
                    f"`{' '.join(argv)}` exited {proc.returncode}: "
                    f"{proc.stderr.strip()}")
            saliency = load_tensor(f"{prefix}.saliency.cct")
            rows.append(_score_for_map(loaded, image01, saliency, cfg.score_space))
    save_tensor(directory / "explanation_scores.cct", np.stack(rows))
    manifest_path = directory / MANIFEST_NAME
    manifest = json.loads(manifest_path.read_text())
    manifest["explanation_scores"] = "explanation_scores.cct"
    manifest["explanation_modes"] = list(MODES)
    _write_json(manifest_path, manifest)


def export_record(cfg: ExportConfig) -> ExportResult:
    """Export one record directory; returns the location and raw score values.

    The directory is immediately consumable by `ccam explain` and, thanks to
    the recorded explanation scores, by `ccam eval` in precomputed mode. The
    manifest also documents the preprocessing that produced the input tensor.
    """
    if cfg.score_space not in SCORE_SPACES:
        raise ExportError(
            f"unknown score space {cfg.score_space!r}, "
            f"expected one of {SCORE_SPACES}")
    explicit = cfg.explicit_class()
    try:
        loaded = load_model(cfg.model)
    except ModelError as err:
        raise ExportError(str(err)) from None
    # Single-threaded inference keeps re-exports bit-identical.
    torch.set_num_threads(1)

    image01 = load_image(cfg.image, loaded.preprocessing)
    capture = _run_with_tap(loaded, image01, cfg.layer, cfg.score_space, explicit)
    masks = psi_masks(capture.features, image01.shape[:2])
    masked = _masked_scores(loaded, image01, masks, cfg.score_space,
                            cfg.batch_size)

    directory = Path(cfg.out_dir)
    directory.mkdir(parents=True, exist_ok=True)
    h, w, _k = capture.features.shape
    pre = loaded.preprocessing
    manifest = {
        "format": RECORD_FORMAT,
        "layer": cfg.layer,
        "class_index": capture.class_index,
        "spatial": [h, w],
        "score_space": cfg.score_space,
        "input": "input.cct",
        "features": "features.cct",
        "base_scores": "base_scores.cct",
        "masked_scores": "masked_scores.cct",
        "gradients": "gradients.cct",
        "preprocessing": {
            "resize": pre.resize,
            "crop": pre.crop,
            "mean": list(pre.mean),
            "std": list(pre.std),
            "interpolation": pre.interpolation,
            "source": loaded.source,
        },
    }
    save_tensor(directory / "input.cct", image01)
    save_tensor(directory / "features.cct", capture.features)
    save_tensor(directory / "base_scores.cct", capture.base_scores)
    save_tensor(directory / "masked_scores.cct", masked)
    save_tensor(directory / "gradients.cct", capture.gradients)
    fc = _classifier_weights(loaded.module)
    if fc is not None:
        manifest["fc_weights"] = "fc_weights.cct"
        save_tensor(directory / "fc_weights.cct", fc)
    manifest_path = directory / MANIFEST_NAME
    _write_json(manifest_path, manifest)

    if cfg.explanations:
        _attach_explanation_scores(cfg, loaded, directory, image01)

    return ExportResult(
        manifest=manifest_path,
        directory=directory,
        class_index=capture.class_index,
        base_scores=capture.base_scores,
        masked_scores=masked,
        spatial=(h, w),
    )


def stored_scorecam_deltas(record_dir) -> np.ndarray:
    """Masked-minus-base deltas recomputed from a written record's tensors.

    Reads the record back from disk, so the arithmetic sees exactly the
    32-bit values any consumer sees.
    """
    directory = Path(record_dir)
    manifest = json.loads((directory / MANIFEST_NAME).read_text())
    base = load_tensor(directory / manifest["base_scores"])
    masked = load_tensor(directory / manifest["masked_scores"])
    c = int(manifest["class_index"])
    return masked[:, c] - base[c]
