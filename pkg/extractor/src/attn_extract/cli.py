"""CLI: attn-extract --model <id> --transcript <file> --out <dir> [--layer last]."""

from __future__ import annotations

import argparse
import sys

from attn_extract import __version__
from attn_extract.extract import ExtractionJob, extract


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="attn-extract",
        description="Export head-averaged attention records from a transcript",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--model", required=True, help="checkpoint id or local path")
    parser.add_argument("--transcript", required=True, help="line-delimited JSON transcript")
    parser.add_argument("--out", required=True, help="output directory for records")
    parser.add_argument("--layer", default="last",
                        help="attention layer to export: 'last' or an index")
    parser.add_argument("--device", default="cpu")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    layer: str | int = args.layer if args.layer == "last" else int(args.layer)
    job = ExtractionJob(
        checkpoint=args.model,
        transcript=args.transcript,
        out_dir=args.out,
        layer=layer,
        device=args.device,
    )
    written = extract(job)
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
