"""Command line wrapper for the export job."""

from __future__ import annotations

import argparse
import logging
import sys

from tonelut.errors import ToneLutError

from .export import DEFAULT_MODEL, ExportJob, run_export


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clip-export", description="write an embedding store file"
    )
    parser.add_argument(
        "--texts", required=True, help="file with one text per line"
    )
    parser.add_argument("--model", default=DEFAULT_MODEL, help="model name, or 'toy'")
    parser.add_argument("--images", default=None, help="optional image directory")
    parser.add_argument("--out", required=True)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    args = build_parser().parse_args(argv)
    try:
        with open(args.texts) as fh:
            texts = [line.rstrip("\n") for line in fh]
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    job = ExportJob(
        texts=tuple(texts), output_path=args.out, model=args.model, image_dir=args.images
    )
    try:
        store = run_export(job)
    except ToneLutError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {len(store)} records to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
