"""Command line entry point: ccam-export.

Exit codes: 0 on success, 1 when the export itself fails (unknown model,
missing layer, unavailable weights, shape trouble), 2 on argument errors,
3 on I/O failures such as an unreadable image or an unwritable output.
"""

import argparse
import sys

from .export import ExportConfig, ExportError, export_record
from .models import MODEL_MENU

EXIT_OK = 0
EXIT_EXPORT = 1
EXIT_USAGE = 2
EXIT_IO = 3


def _class_rule(text: str) -> str:
    if text == "top1":
        return text
    try:
        int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected 'top1' or an integer, got {text!r}") from None
    return text


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ccam-export",
        description="Export one classifier run as a replayable ccam record "
                    "directory.",
    )
    parser.add_argument("--model", required=True,
                        help=f"menu model to run: {', '.join(sorted(MODEL_MENU))}")
    parser.add_argument("--layer", required=True,
                        help="named module to tap, e.g. features.pool2")
    parser.add_argument("--image", required=True,
                        help="path of the image to classify")
    parser.add_argument("--class", dest="class_rule", type=_class_rule,
                        default="top1",
                        help="'top1' or an explicit class index (default: top1)")
    parser.add_argument("--out", required=True,
                        help="record directory to create")
    parser.add_argument("--score-space", choices=("softmax", "logit"),
                        default="softmax",
                        help="space of all exported scores (default: softmax)")
    parser.add_argument("--no-explanations", action="store_true",
                        help="skip the per-mode explanation score rows")
    parser.add_argument("--ccam", default="ccam",
                        help="explainer binary used for the explanation "
                             "scores (default: ccam)")
    parser.add_argument("--batch-size", type=int, default=16,
                        help="masked forward passes per batch (default: 16)")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    cfg = ExportConfig(
        model=args.model,
        layer=args.layer,
        image=args.image,
        out_dir=args.out,
        class_rule=args.class_rule,
        score_space=args.score_space,
        explanations=not args.no_explanations,
        ccam_binary=args.ccam,
        batch_size=args.batch_size,
    )
    try:
        result = export_record(cfg)
    except ExportError as err:
        print(f"ccam-export: {err}", file=sys.stderr)
        return EXIT_EXPORT
    except OSError as err:
        print(f"ccam-export: {err}", file=sys.stderr)
        return EXIT_IO
    h, w = result.spatial
    print(f"wrote {result.directory} ({result.num_channels} channels on a "
          f"{h}x{w} grid, {result.base_scores.shape[0]} classes, "
          f"class {result.class_index})")
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
