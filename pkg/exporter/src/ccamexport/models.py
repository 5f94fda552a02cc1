"""Model menu: torchvision classifiers plus a built-in offline fallback.

Every entry couples a torch module with the preprocessing its weights were
published for (shorter-side resize, center crop, per-channel mean and std),
so records always state how their input tensor was produced. The "tiny"
model is constructed in-process from a fixed seed and needs no checkpoint
download, which keeps the exporter usable in offline environments.
"""

from collections import OrderedDict
from dataclasses import dataclass

import torch
from torch import nn

TINY_SEED = 2024
IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)


class ModelError(Exception):
    """The requested model cannot be built or its weights fetched."""


@dataclass(frozen=True)
class Preprocessing:
    """Published input recipe: resize shorter side, center crop, standardize."""

    resize: int
    crop: int
    mean: tuple
    std: tuple
    interpolation: str = "bilinear"


@dataclass(frozen=True)
class LoadedModel:
    name: str
    module: nn.Module
    preprocessing: Preprocessing
    source: str


class TinyNet(nn.Module):
    """Small conv stack for offline runs: 3x32x32 input, 5 classes out.

    Module names are stable (features.conv1 .. features.pool2, pool, fc)
    so records can reference tap layers by path.
    """

    def __init__(self):
        super().__init__()
        self.features = nn.Sequential(OrderedDict([
            ("conv1", nn.Conv2d(3, 8, kernel_size=3, padding=1)),
            ("relu1", nn.ReLU()),
            ("pool1", nn.MaxPool2d(2)),
            ("conv2", nn.Conv2d(8, 12, kernel_size=3, padding=1)),
            ("relu2", nn.ReLU()),
            ("pool2", nn.MaxPool2d(2)),
        ]))
        self.pool = nn.AdaptiveAvgPool2d(1)
        self.fc = nn.Linear(12, 5)

    def forward(self, x):
        x = self.pool(self.features(x))
        return self.fc(torch.flatten(x, 1))


def _tiny() -> LoadedModel:
    # Fixed seed: rebuilding the model is part of re-export determinism.
    torch.manual_seed(TINY_SEED)
    return LoadedModel(
        name="tiny",
        module=TinyNet(),
        preprocessing=Preprocessing(resize=32, crop=32,
                                    mean=(0.5, 0.5, 0.5), std=(0.5, 0.5, 0.5)),
        source=f"builtin:seed={TINY_SEED}",
    )


def _torchvision(name: str, resize: int, crop: int) -> LoadedModel:
    import torchvision.models as zoo

    try:
        module = getattr(zoo, name)(weights="IMAGENET1K_V1")
    except Exception as err:  # checkpoint fetch or cache failure
        raise ModelError(
            f"pretrained weights for {name!r} are unavailable: {err}") from err
    return LoadedModel(
        name=name,
        module=module,
        preprocessing=Preprocessing(resize=resize, crop=crop,
                                    mean=IMAGENET_MEAN, std=IMAGENET_STD),
        source=f"torchvision:{name}:IMAGENET1K_V1",
    )


MODEL_MENU = {
    "tiny": _tiny,
    "resnet18": lambda: _torchvision("resnet18", 256, 224),
    "vgg16": lambda: _torchvision("vgg16", 256, 224),
    "inception_v3": lambda: _torchvision("inception_v3", 342, 299),
}


def load_model(name: str) -> LoadedModel:
    """Build one menu model in eval mode; unknown names raise ModelError."""
    if name not in MODEL_MENU:
        raise ModelError(
            f"unknown model {name!r}, expected one of {sorted(MODEL_MENU)}")
    loaded = MODEL_MENU[name]()
    loaded.module.eval()
    return loaded
