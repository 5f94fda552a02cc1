"""From a CNN forward pass to four saliency maps.

Builds the little built-in CNN, runs a synthetic image through it, and
produces every explanation mode the package knows: the plain weighted-sum
baseline and the three conceptor modes (positive, complementary,
comprehensive). Writes the overlays as PNGs next to this script's output
directory so you can look at them.

Run: python3 demos/02_toy_cnn_saliency.py
"""

from pathlib import Path

import numpy as np

import conceptorcam as cc

rng = np.random.default_rng(7)
OUT = Path("demo_output")
OUT.mkdir(exist_ok=True)

# -- 1. a small CNN and an image ----------------------------------------------
# Channels-last everywhere. The tap index marks the layer whose activation
# becomes the feature map that explanations are built from.

spec = cc.ToyCnnSpec(
    layers=(
        cc.Conv3x3(weights=0.4 * rng.standard_normal((3, 3, 3, 5)),
                   bias=rng.uniform(-0.05, 0.05, 5)),
        cc.Relu(),
        cc.MaxPool2x2(),
        cc.GlobalAveragePool(),
        cc.Dense(weights=rng.standard_normal((3, 5)),
                 bias=0.1 * rng.standard_normal(3)),
        cc.Softmax(),
    ),
    tap=2,  # feature map = output of the max-pool
)

# A test card with a bright blob in the upper-left quadrant.
side = 24
yy, xx = np.mgrid[0:side, 0:side] / (side - 1)
image = np.stack([0.3 + 0.2 * xx, 0.3 + 0.2 * yy, np.full_like(xx, 0.35)], axis=2)
image += 0.5 * np.exp(-(((yy - 0.25) ** 2 + (xx - 0.25) ** 2) / 0.02))[:, :, None]
image = np.clip(image, 0.0, 1.0)

scores, features = cc.toy_forward(spec, image)
klass = int(np.argmax(scores))
print("class scores:", np.round(scores, 4), "-> explaining class", klass)
print("feature map:", features.spatial, "spatial,", features.num_channels,
      "channels")

# -- 2. channel weights by masking (Score-CAM style) --------------------------
# Each channel is turned into a mask, the masked image is re-scored, and
# the weight is the score delta against the unmasked run.

backend = cc.ToyCnnBackend(spec, image)
weights = cc.scorecam_weights(features, backend, klass)
print("\nchannel weights:", np.round(weights.values, 4))

# -- 3. the four explanation modes --------------------------------------------
# baseline: weighted channel sum. When every masking delta is negative (as
# happens easily on small models) the weighted sum is non-positive and the
# baseline map dies to all zeros after its ReLU. The conceptor modes
# normalize the weights into [0, 1] first, learn a synchronizer on the
# weighted evidence (and on the reversed evidence for the complementary
# view), and still recover spatial structure.

bundle = cc.comprehensive_saliency(features, weights, 1.0, image.shape[:2])
maps = {
    "baseline": cc.baseline_saliency(features, weights, image.shape[:2]),
    "positive": bundle.positive,
    "complementary": bundle.complementary,
    "comprehensive": bundle.comprehensive,
}

for name, saliency in maps.items():
    grid = saliency.grid
    hot = tuple(int(i) for i in np.unravel_index(np.argmax(grid), grid.shape))
    print(f"{name:>13}: mean {grid.mean():.3f}, hottest pixel at {hot}")
    overlay = cc.render_overlay(image, grid)
    cc.write_png(OUT / f"{name}.png", overlay)

print(f"\noverlays written to {OUT}/")

# -- 4. the same thing in one call --------------------------------------------
# explain_record() wraps the steps above for recorded evidence and also
# hands back every intermediate (conceptors, evidence, correlations).

record = backend.export_record(class_index=klass, layer="pool")
result = cc.explain_record(record, mode="comprehensive", scheme="score",
                           aperture=1.0)
print("\nexplain_record reproduces the map:",
      np.array_equal(result.saliency.grid, maps["comprehensive"].grid))
print("intermediates captured:", ", ".join(sorted(result.intermediates)))
