"""Command line front end.

Flags mirror the job fields one to one. Exit codes: 0 success, 1 usage,
2 anything that stops the job (bad inputs, unusable model, no output).
The job report is printed to stdout as JSON.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from .errors import JobError
from .job import EmbeddingJob, embed_and_export
from .textio import parse_ratio


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="illustrate-embed",
        description=(
            "Score every corpus phrase against every bank image and write "
            "the binary similarity file the selection engine reads."
        ),
    )
    parser.add_argument("--corpus", required=True, help="corpus JSON file")
    parser.add_argument(
        "--images",
        required=True,
        help="image directory or JSON manifest with images[]",
    )
    parser.add_argument("--output", required=True, help="similarity file to write")
    parser.add_argument(
        "--model",
        default="palette",
        help="'palette' or a local clip checkpoint directory (default: palette)",
    )
    parser.add_argument("--batch-size", type=int, default=32)
    parser.add_argument("--device", default="cpu", help="device hint for clip")
    parser.add_argument(
        "--window",
        type=int,
        default=75,
        help="phrase window width in tokens; must match the selection run",
    )
    parser.add_argument(
        "--overlap",
        default="1/3",
        help="window overlap ratio, e.g. 1/3 or 0.25; must match the selection run",
    )
    return parser


def _fail(exc: Exception) -> int:
    diagnostic = {"error": type(exc).__name__, "message": str(exc)}
    print(json.dumps(diagnostic, sort_keys=True), file=sys.stderr)
    return 2


def run(argv: list[str]) -> int:
    args = build_parser().parse_args(argv)
    try:
        overlap = args.overlap
        if not isinstance(overlap, Fraction):
            overlap = parse_ratio(str(overlap))
        job = EmbeddingJob(
            corpus=Path(args.corpus),
            images=Path(args.images),
            output=Path(args.output),
            model=args.model,
            batch_size=args.batch_size,
            device=args.device,
            window=args.window,
            overlap=overlap,
        )
        report = embed_and_export(job)
    except (JobError, FileNotFoundError) as exc:
        return _fail(exc)
    print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    return 0


def entrypoint() -> None:
    raise SystemExit(run(sys.argv[1:]))
