"""Scoring explanations: average increase and average drop.

Both metrics compare the model's class score on the original input (Y)
with its score on the explanation-masked input (S). Average increase
counts how often masking strictly helps; average drop measures the share
of score lost when it does not. Good explanations keep the pixels the
model actually relies on, so they show high AI and low AD.

Run: python3 demos/04_evaluation_metrics.py
"""

import json
from pathlib import Path

import numpy as np

import conceptorcam as cc

rng = np.random.default_rng(3)
OUT = Path("demo_output")
OUT.mkdir(exist_ok=True)

# -- 1. the formulas on bare score pairs ---------------------------------------

pairs = [
    cc.EvalPair(base_score=0.5, explanation_score=0.6),  # masking helped
    cc.EvalPair(base_score=0.8, explanation_score=0.7),  # lost 1/8 of the score
]
print("average increase:", cc.average_increase(pairs))   # one of two -> 50.0
print("average drop:    ", cc.average_drop(pairs))       # (0 + 12.5) / 2 -> 6.25

# -- 2. a manifest over real records -------------------------------------------
# The harness recomputes each item's explanation, masks the input with it,
# and re-scores. Records that link a model are re-scored live; this demo
# uses the toy CNN. Build two model+record pairs with different images.

spec = cc.ToyCnnSpec(
    layers=(
        cc.Conv3x3(weights=0.45 * rng.standard_normal((3, 3, 3, 4)),
                   bias=np.zeros(4)),
        cc.Relu(),
        cc.MaxPool2x2(),
        cc.GlobalAveragePool(),
        cc.Dense(weights=rng.standard_normal((3, 4)), bias=np.zeros(3)),
        cc.Softmax(),
    ),
    tap=2,
)
spec = cc.load_toy_spec(cc.save_toy_spec(spec, OUT / "eval_model" / "model.json"))

items = []
for index in range(4):
    image = rng.uniform(0.0, 1.0, size=(16, 16, 3))
    backend = cc.ToyCnnBackend(spec, image)
    klass = int(np.argmax(backend.base_scores()))
    record = backend.export_record(class_index=klass, layer="pool")
    directory = OUT / f"eval_record_{index}"
    manifest_path = cc.save_record(record, directory)
    manifest = json.loads(manifest_path.read_text())
    manifest["model"] = "../eval_model/model.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True))
    for mode in ("baseline", "comprehensive"):
        items.append({"record": directory.name, "mode": mode,
                      "scheme": "score", "alpha": 1.0})

report = cc.evaluate_manifest(items, base_dir=OUT, jobs=2)
print("\n" + report.format_table())

# -- 3. the report as data ------------------------------------------------------

(OUT / "report.json").write_text(report.to_json())
payload = json.loads(report.to_json())
print("\nevaluated", payload["evaluated"], "items ->",
      f"AI {payload['average_increase']:.2f},",
      f"AD {payload['average_drop']:.2f}")
print("full report at", OUT / "report.json")

# The same run through the command line:
print("\ntry it:")
print(f"  ccam eval --manifest <manifest.json> --jobs 2 --out {OUT}/report.json")
