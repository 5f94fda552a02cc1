"""Faithfulness metrics and the batch evaluation harness.

Both metrics compare the class score of an unmasked input (the base score
Y) with the score of the same input masked by an explanation map (S):

    average increase  AI = 100 * mean(1[Y < S])
    average drop      AD = 100 * mean(max(0, Y - S) / Y)

AI counts how often masking with the explanation strictly helps; AD
measures how much score is lost when it does not. Higher AI and lower AD
mean the explanation keeps the evidence the model actually uses.

The harness walks a manifest of (record, mode, scheme, aperture) items,
recomputes each explanation, masks the input, and sources the explanation
score either from a live toy model referenced by the record or from the
record's precomputed per-mode scores. Items that cannot be scored are
skipped and counted, never silently dropped.
"""

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class EvalPair:
    """One comparison: base class score vs explanation-masked class score."""

    base_score: float
    explanation_score: float

    def __post_init__(self):
        y = float(self.base_score)
        s = float(self.explanation_score)
        if not np.isfinite(y) or not np.isfinite(s):
            raise ValueError("scores must be finite")
        if not 0.0 <= y <= 1.0 or not 0.0 <= s <= 1.0:
            raise ValueError(f"scores must lie in [0, 1], got Y={y}, S={s}")
        object.__setattr__(self, "base_score", y)
        object.__setattr__(self, "explanation_score", s)


def average_increase(pairs) -> float:
    """Percentage of pairs whose masked score strictly beats the base score."""
    pairs = list(pairs)
    if not pairs:
        raise ValueError("average increase needs at least one pair")
    hits = sum(1 for p in pairs if p.base_score < p.explanation_score)
    return 100.0 * hits / len(pairs)


def average_drop(pairs) -> float:
    """Mean percentage of base score lost under masking, clamped at zero.

    Every base score must be strictly positive; offenders are reported by
    index so a bad manifest item can be found directly.
    """
    pairs = list(pairs)
    if not pairs:
        raise ValueError("average drop needs at least one pair")
    bad = [i for i, p in enumerate(pairs) if p.base_score <= 0.0]
    if bad:
        raise ValueError(
            f"average drop needs positive base scores; offending items: {bad}"
        )
    total = sum(max(0.0, p.base_score - p.explanation_score) / p.base_score
                for p in pairs)
    return 100.0 * total / len(pairs)


@dataclass(frozen=True)
class EvalRow:
    """Outcome for one manifest item, in manifest order."""

    index: int
    record: str
    mode: str
    scheme: str
    aperture: float
    status: str
    base_score: "float | None" = None
    explanation_score: "float | None" = None
    detail: str = ""


@dataclass(frozen=True)
class EvalReport:
    """Batch metrics plus the per-item rows they were computed from."""

    rows: tuple
    evaluated: int
    skipped: int
    average_increase: "float | None"
    average_drop: "float | None"

    def to_json(self) -> str:
        payload = {
            "evaluated": self.evaluated,
            "skipped": self.skipped,
            "average_increase": self.average_increase,
            "average_drop": self.average_drop,
            "rows": [
                {
                    "index": r.index,
                    "record": r.record,
                    "mode": r.mode,
                    "scheme": r.scheme,
                    "aperture": r.aperture,
                    "status": r.status,
                    "base_score": r.base_score,
                    "explanation_score": r.explanation_score,
                    "detail": r.detail,
                }
                for r in self.rows
            ],
        }
        return json.dumps(payload, indent=2) + "\n"

    def format_table(self) -> str:
        lines = [
            f"{'#':>3}  {'status':<8} {'mode':<14} {'scheme':<9} "
            f"{'base':>10} {'masked':>10}  record"
        ]
        for r in self.rows:
            base = f"{r.base_score:.6f}" if r.base_score is not None else "-"
            expl = (f"{r.explanation_score:.6f}"
                    if r.explanation_score is not None else "-")
            tail = r.record if r.status == "ok" else f"{r.record}  ({r.detail})"
            lines.append(
                f"{r.index:>3}  {r.status:<8} {r.mode:<14} {r.scheme:<9} "
                f"{base:>10} {expl:>10}  {tail}"
            )
        ai = ("n/a" if self.average_increase is None
              else f"{self.average_increase:.4f}")
        ad = "n/a" if self.average_drop is None else f"{self.average_drop:.4f}"
        lines.append(
            f"evaluated {self.evaluated}, skipped {self.skipped}, "
            f"average increase {ai}, average drop {ad}"
        )
        return "\n".join(lines)


def _evaluate_item(index: int, item: dict, base_dir: Path):
    # Imported here to keep metrics importable without the pipeline stack.
    from .backend import ToyCnnBackend
    from .pipeline import explain_record
    from .records import load_record, load_toy_spec

    mode = str(item.get("mode", "comprehensive"))
    scheme = str(item.get("scheme", "score"))
    aperture = float(item.get("alpha", 1.0))
    record_path = item.get("record")
    if not isinstance(record_path, str) or not record_path:
        return EvalRow(index=index, record="", mode=mode, scheme=scheme,
                       aperture=aperture, status="skipped",
                       detail="item has no record path")
    location = Path(record_path)
    if not location.is_absolute():
        location = base_dir / location
    record = load_record(location)
    tanh = item.get("tanh")
    result = explain_record(record, mode=mode, scheme=scheme, aperture=aperture,
                            tanh=None if tanh is None else bool(tanh))
    if record.model_path is not None:
        backend = ToyCnnBackend(load_toy_spec(record.model_path), record.image,
                                score_space=record.score_space)
        scores = backend.score_for_map(result.saliency.grid)
        explanation = float(scores[record.class_index])
    elif mode in record.explanation_modes:
        row = record.explanation_modes.index(mode)
        explanation = float(record.explanation_scores[row, record.class_index])
    else:
        return EvalRow(index=index, record=str(record_path), mode=mode,
                       scheme=scheme, aperture=aperture, status="skipped",
                       detail="record has neither a model nor scores for this mode")
    return EvalRow(
        index=index,
        record=str(record_path),
        mode=mode,
        scheme=scheme,
        aperture=aperture,
        status="ok",
        base_score=float(record.base_scores[record.class_index]),
        explanation_score=explanation,
    )


def evaluate_manifest(items, base_dir=".", jobs: int = 1) -> EvalReport:
    """Evaluate every manifest item and aggregate AI/AD over the scored ones.

    ``items`` is the parsed manifest list; relative record paths resolve
    against ``base_dir``. ``jobs`` > 1 evaluates items in a thread pool;
    rows always come back in manifest order and the aggregate is computed
    from the ordered rows, so the worker count never changes the result.
    """
    items = list(items)
    if not items:
        raise ValueError("the evaluation manifest is empty")
    base = Path(base_dir)
    jobs = int(jobs)
    if jobs < 1:
        raise ValueError(f"jobs must be at least 1, got {jobs}")
    if jobs == 1:
        rows = [_evaluate_item(i, item, base) for i, item in enumerate(items)]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_evaluate_item, range(len(items)), items,
                                 [base] * len(items)))
    scored = [r for r in rows if r.status == "ok"]
    pairs = [EvalPair(base_score=r.base_score, explanation_score=r.explanation_score)
             for r in scored]
    return EvalReport(
        rows=tuple(rows),
        evaluated=len(scored),
        skipped=len(rows) - len(scored),
        average_increase=average_increase(pairs) if pairs else None,
        average_drop=average_drop(pairs) if pairs else None,
    )
