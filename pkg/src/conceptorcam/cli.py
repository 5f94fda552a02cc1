"""The ccam command line.

Three subcommands:

    ccam explain --record DIR --mode MODE [--weights SCHEME] [--alpha A]
                 [--tanh on|off] [--score-space softmax|logit] --out PREFIX
    ccam eval    --manifest FILE [--jobs N] [--out FILE]
    ccam verify  [--seed N]

``explain`` writes PREFIX.saliency.cct, PREFIX.overlay.png, and
PREFIX.sidecar.json. ``eval`` prints a per-item table and writes the full
report as JSON. ``verify`` runs the analytic self-check suite; the
CCAM_SEED environment variable overrides its --seed flag.

Exit codes: 0 success, 1 verification failure, 2 argument errors,
3 I/O or data errors.
"""

import argparse
import json
import os
import sys
from pathlib import Path

from .imaging import render_overlay, write_png
from .metrics import evaluate_manifest
from .pipeline import MODES, explain_record, sidecar_payload
from .records import MANIFEST_NAME, RecordError, load_record
from .saliency import WEIGHT_SCHEMES
from .tensorfile import TensorFileError, save_tensor
from .verify import run_all_checks

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2
EXIT_IO = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ccam",
        description="Conceptor-synchronized class activation maps over "
                    "recorded model evidence.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    explain = sub.add_parser(
        "explain", help="explain one recorded run and write its artifacts")
    explain.add_argument("--record", required=True,
                         help=f"record directory (holding {MANIFEST_NAME})")
    explain.add_argument("--mode", required=True, choices=MODES,
                         help="explanation mode to produce")
    explain.add_argument("--weights", default="score", choices=WEIGHT_SCHEMES,
                         help="channel weight scheme (default: score)")
    explain.add_argument("--alpha", type=float, default=1.0,
                         help="conceptor aperture in [0, 100] (default: 1.0)")
    explain.add_argument("--tanh", choices=("on", "off"), default=None,
                         help="tanh-squash features first "
                              "(default: on for grad/cam, off otherwise)")
    explain.add_argument("--score-space", choices=("softmax", "logit"),
                         default="softmax",
                         help="score space the record must hold (default: softmax)")
    explain.add_argument("--out", required=True,
                         help="output prefix for the three artifacts")

    evaluate = sub.add_parser(
        "eval", help="batch-evaluate explanations against a manifest")
    evaluate.add_argument("--manifest", required=True,
                          help="JSON list of {record, mode, scheme, alpha} items")
    evaluate.add_argument("--jobs", type=int, default=1,
                          help="worker threads (default: 1)")
    evaluate.add_argument("--out", default=None,
                          help="write the JSON report here")

    verify = sub.add_parser(
        "verify", help="run the analytic self-check suite")
    verify.add_argument("--seed", type=int, default=0,
                        help="RNG seed (overridden by CCAM_SEED)")
    return parser


def _cmd_explain(args) -> int:
    if not 0.0 <= args.alpha <= 100.0:
        print(f"ccam explain: --alpha must lie in [0, 100], got {args.alpha}",
              file=sys.stderr)
        return EXIT_USAGE
    try:
        record = load_record(Path(args.record))
    except RecordError as err:
        print(f"ccam explain: {err}", file=sys.stderr)
        return EXIT_IO
    if record.score_space != args.score_space:
        print(
            f"ccam explain: the record holds {record.score_space} scores but "
            f"--score-space {args.score_space} was requested; re-export the "
            f"record in that space",
            file=sys.stderr,
        )
        return EXIT_USAGE
    tanh = None if args.tanh is None else args.tanh == "on"
    try:
        result = explain_record(record, mode=args.mode, scheme=args.weights,
                                aperture=args.alpha, tanh=tanh)
    except (ValueError, IndexError) as err:
        print(f"ccam explain: {err}", file=sys.stderr)
        return EXIT_USAGE
    overlay = render_overlay(record.image, result.saliency.grid)
    out = Path(args.out)
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        save_tensor(f"{out}.saliency.cct", result.saliency.grid)
        write_png(f"{out}.overlay.png", overlay)
        payload = sidecar_payload(result, str(args.record), overlay)
        Path(f"{out}.sidecar.json").write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n")
    except OSError as err:
        print(f"ccam explain: cannot write outputs: {err}", file=sys.stderr)
        return EXIT_IO
    print(f"wrote {out}.saliency.cct, {out}.overlay.png, {out}.sidecar.json")
    return EXIT_OK


def _cmd_eval(args) -> int:
    manifest_path = Path(args.manifest)
    try:
        items = json.loads(manifest_path.read_text())
    except OSError as err:
        print(f"ccam eval: cannot read manifest: {err}", file=sys.stderr)
        return EXIT_IO
    except json.JSONDecodeError as err:
        print(f"ccam eval: manifest is not valid JSON: {err}", file=sys.stderr)
        return EXIT_IO
    if not isinstance(items, list):
        print("ccam eval: the manifest must be a JSON list", file=sys.stderr)
        return EXIT_USAGE
    if not items:
        print("ccam eval: the manifest is empty", file=sys.stderr)
        return EXIT_USAGE
    if args.jobs < 1:
        print(f"ccam eval: --jobs must be at least 1, got {args.jobs}",
              file=sys.stderr)
        return EXIT_USAGE
    try:
        report = evaluate_manifest(items, base_dir=manifest_path.parent,
                                   jobs=args.jobs)
    except (RecordError, TensorFileError, OSError) as err:
        print(f"ccam eval: {err}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, IndexError) as err:
        print(f"ccam eval: {err}", file=sys.stderr)
        return EXIT_USAGE
    print(report.format_table())
    if args.out is not None:
        try:
            Path(args.out).write_text(report.to_json())
        except OSError as err:
            print(f"ccam eval: cannot write report: {err}", file=sys.stderr)
            return EXIT_IO
    return EXIT_OK


def _cmd_verify(args) -> int:
    seed = args.seed
    env_seed = os.environ.get("CCAM_SEED")
    if env_seed is not None:
        try:
            seed = int(env_seed)
        except ValueError:
            print(f"ccam verify: CCAM_SEED must be an integer, got {env_seed!r}",
                  file=sys.stderr)
            return EXIT_USAGE
    results = run_all_checks(seed)
    failed = 0
    for result in results:
        flag = "PASS" if result.passed else "FAIL"
        print(f"{flag} {result.name}: {result.detail}")
        failed += 0 if result.passed else 1
    print(f"{len(results) - failed}/{len(results)} checks passed (seed {seed})")
    return EXIT_OK if failed == 0 else EXIT_VERIFY_FAILED


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command == "explain":
        return _cmd_explain(args)
    if args.command == "eval":
        return _cmd_eval(args)
    return _cmd_verify(args)


if __name__ == "__main__":
    sys.exit(main())
