"""Overlay rendering and PNG I/O for saliency maps."""

import numpy as np
from PIL import Image

# Blend target for fully salient pixels.
RED = np.array([1.0, 0.0, 0.0])


def render_overlay(image, saliency_grid) -> np.ndarray:
    """Blend an image toward pure red by per-pixel saliency.

    ``image`` is (H, W, 3) in [0, 1] and ``saliency_grid`` is (H, W) in
    [0, 1]; the result is uint8 with each plane rounded half away from zero.
    A pixel with saliency 1 becomes pure red, saliency 0 leaves it alone.
    """
    img = np.asarray(image, dtype=np.float64)
    sal = np.asarray(saliency_grid, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"image must be (H, W, 3), got {img.shape}")
    if sal.shape != img.shape[:2]:
        raise ValueError(
            f"saliency shape {sal.shape} does not match image {img.shape[:2]}"
        )
    if img.min() < 0.0 or img.max() > 1.0 or sal.min() < 0.0 or sal.max() > 1.0:
        raise ValueError("image and saliency values must lie in [0, 1]")
    s = sal[:, :, None]
    blend = (1.0 - s) * img + s * RED
    # Round half away from zero; inputs are nonnegative so floor(x + 0.5) is it.
    return np.floor(255.0 * blend + 0.5).astype(np.uint8)


def write_png(path, rgb) -> None:
    """Write an (H, W, 3) uint8 array as a PNG file."""
    arr = np.asarray(rgb)
    if arr.ndim != 3 or arr.shape[2] != 3 or arr.dtype != np.uint8:
        raise ValueError(f"expected uint8 (H, W, 3), got {arr.dtype} {arr.shape}")
    Image.fromarray(arr, mode="RGB").save(path, format="PNG")


def read_image(path) -> np.ndarray:
    """Read an image file into a float64 (H, W, 3) array in [0, 1]."""
    with Image.open(path) as img:
        rgb = np.asarray(img.convert("RGB"), dtype=np.float64)
    return rgb / 255.0
