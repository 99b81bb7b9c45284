"""Command-line entry points: ``extract-pairs`` and ``extract-tokens``."""

from __future__ import annotations

import argparse
import logging
import sys

from . import encode, formats

DEFAULT_MODEL = "bert-base-uncased"


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--model", default=DEFAULT_MODEL, help="model name or local path")
    parser.add_argument("--batch-size", type=int, default=32)
    parser.add_argument("--quiet", action="store_true")


def _setup_logging(quiet: bool) -> None:
    logging.basicConfig(
        level=logging.ERROR if quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )


def main_pairs(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="extract-pairs",
        description="Encode 'query TAB response' pairs into an NPY embedding matrix.",
    )
    parser.add_argument("--input", required=True, help="TSV file, one pair per line")
    parser.add_argument("--out", required=True, help="output .npy path")
    _add_common(parser)
    args = parser.parse_args(argv)
    _setup_logging(args.quiet)

    try:
        records = encode.read_pair_corpus(args.input)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        tokenizer, model = encode.load_encoder(args.model)
    except Exception as exc:  # model resolution/loading can fail many ways
        print(f"error: cannot load model {args.model!r}: {exc}", file=sys.stderr)
        return 1
    matrix = encode.encode_pairs(records, tokenizer, model, batch_size=args.batch_size)
    formats.write_matrix(matrix, args.out)
    print(f"wrote {args.out}: shape {matrix.shape}")
    return 0


def main_tokens(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="extract-tokens",
        description="Encode sentences into a token-embedding archive directory.",
    )
    parser.add_argument("--input", required=True, help="text file, one sentence per line")
    parser.add_argument("--out", required=True, help="output archive directory")
    _add_common(parser)
    args = parser.parse_args(argv)
    _setup_logging(args.quiet)

    try:
        sentences = encode.read_sentences(args.input)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        tokenizer, model = encode.load_encoder(args.model)
    except Exception as exc:
        print(f"error: cannot load model {args.model!r}: {exc}", file=sys.stderr)
        return 1
    matrices = encode.encode_tokens(sentences, tokenizer, model, batch_size=args.batch_size)
    try:
        formats.write_token_archive(matrices, args.out)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    kept = sum(1 for m in matrices if m is not None)
    print(f"wrote {args.out}: {kept} of {len(matrices)} sentences")
    return 0


if __name__ == "__main__":
    sys.exit(main_pairs())
