"""Command-line front end.

Subcommands: ``fbd``, ``prd``, ``baseline``, ``study``, ``normality``,
``report``.  Exit codes: 0 on success, 1 when a computation fails, 2 for
usage errors and unreadable/ill-formed inputs.  Output is deterministic
given flags and seed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import baselines
from .errors import DistMetricError
from .frechet import COV_DIVISORS, MEAN_NORMS, fbd_from_sets
from .harness import (
    correlate,
    merge_reports,
    normality_profile,
    render_report,
    score_table_from_csv,
)
from .io import read_embedding_set, read_ratings, read_token_archive, read_word_vectors
from .prd import (
    DEFAULT_ANGLES,
    DEFAULT_CLUSTERS,
    DEFAULT_RUNS,
    aggregate_curves,
    prd_run_curves,
    write_prd_curve,
)
from .registry import DEFAULT_SEED
from .study import audit_csv, load_manifest, run_study

EXIT_OK = 0
EXIT_COMPUTE = 1
EXIT_USAGE = 2


class _LoadError(Exception):
    """Wraps errors raised while reading or validating inputs (exit code 2)."""

    def __init__(self, cause: DistMetricError):
        super().__init__(str(cause))
        self.cause = cause


def _loading(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except DistMetricError as exc:
        raise _LoadError(exc) from exc


def _emit_json(payload: dict) -> None:
    print(json.dumps(payload, sort_keys=True))


def cmd_fbd(args) -> int:
    real = _loading(read_embedding_set, args.real, "real")
    gen = _loading(read_embedding_set, args.gen, "gen")
    if real.dim != gen.dim:
        print(f"error: dimension mismatch: {real.dim} != {gen.dim}", file=sys.stderr)
        return EXIT_USAGE
    value = fbd_from_sets(
        real,
        gen,
        mean_norm=args.mean_norm,
        divisor=args.cov_divisor,
        ridge=args.cov_ridge,
    )
    if args.json:
        _emit_json(
            {
                "metric": "fbd",
                "value": value,
                "n_real": real.count,
                "n_gen": gen.count,
                "dim": real.dim,
                "mean_norm": args.mean_norm,
                "cov_divisor": args.cov_divisor,
            }
        )
    else:
        print(f"{value:.6f}")
    return EXIT_OK


def cmd_prd(args) -> int:
    real = _loading(read_embedding_set, args.real, "real")
    gen = _loading(read_embedding_set, args.gen, "gen")
    if real.dim != gen.dim:
        print(f"error: dimension mismatch: {real.dim} != {gen.dim}", file=sys.stderr)
        return EXIT_USAGE
    curves = prd_run_curves(
        real, gen, k=args.k, m=args.m, runs=args.runs, seed=args.seed
    )
    aggregate = aggregate_curves(curves)
    if args.curve_out:
        write_prd_curve(aggregate, args.curve_out)
    if args.run_curves:
        out_dir = Path(args.run_curves)
        out_dir.mkdir(parents=True, exist_ok=True)
        for i, curve in enumerate(curves):
            write_prd_curve(curve, out_dir / f"run_{i:03d}.csv")
    if args.json:
        _emit_json(
            {
                "metric": "prd",
                "value": aggregate.max_f1,
                "n_real": real.count,
                "n_gen": gen.count,
                "dim": real.dim,
                "k": args.k,
                "m": args.m,
                "runs": args.runs,
                "seed": args.seed,
            }
        )
    else:
        print(f"{aggregate.max_f1:.6f}")
    return EXIT_OK


def cmd_baseline(args) -> int:
    metric = args.metric
    if metric == "bertscore":
        if not args.hyp_tokens or not args.ref_tokens:
            print("error: bertscore needs --hyp-tokens and --ref-tokens", file=sys.stderr)
            return EXIT_USAGE
        hyp_archive = _loading(read_token_archive, args.hyp_tokens)
        ref_archive = _loading(read_token_archive, args.ref_tokens)
        if len(hyp_archive) != len(ref_archive):
            print("error: token archives are not line-aligned", file=sys.stderr)
            return EXIT_USAGE
        values = [
            baselines.bertscore(h, r).f1
            for h, r in zip(hyp_archive.sentences, ref_archive.sentences)
            if h is not None and r is not None
        ]
        if not values:
            print("error: no aligned sentences to score", file=sys.stderr)
            return EXIT_COMPUTE
        value = sum(values) / len(values)
        n_turns = len(values)
    else:
        if not args.hyp or not args.ref:
            print(f"error: {metric} needs --hyp and --ref", file=sys.stderr)
            return EXIT_USAGE
        pairs = _loading(baselines.read_turn_pairs, args.hyp, args.ref)
        if metric == "bleu":
            value = baselines.bleu(pairs, max_n=args.max_n)
        else:
            if metric == "rouge_l":
                scorer = baselines.rouge_l
            else:
                if not args.word_vectors:
                    print(f"error: {metric} needs --word-vectors", file=sys.stderr)
                    return EXIT_USAGE
                table = _loading(read_word_vectors, args.word_vectors)
                fn = {
                    "average": baselines.embedding_average,
                    "extrema": baselines.vector_extrema,
                    "greedy": baselines.greedy_matching,
                }[metric]
                scorer = lambda p: fn(p, table)  # noqa: E731
            per_turn = [scorer(p) for p in pairs]
            value = sum(per_turn) / len(per_turn)
        n_turns = len(pairs)
    if args.json:
        _emit_json({"metric": metric, "value": value, "n_turns": n_turns})
    else:
        print(f"{value:.6f}")
    return EXIT_OK


def cmd_normality(args) -> int:
    emb = _loading(read_embedding_set, args.embeddings)
    profile = normality_profile(emb, seed=args.seed)
    if args.json:
        _emit_json(
            {
                "mean_w": profile.mean_w,
                "std_w": profile.std_w,
                "n_dims": profile.n_dims,
                "n_skipped": profile.n_skipped,
            }
        )
    else:
        print(f"{profile.mean_w:.4f}±{profile.std_w:.4f}")
    return EXIT_OK


def cmd_study(args) -> int:
    manifest = _loading(load_manifest, args.manifest)
    result = run_study(manifest)
    rendered = render_report(result.report, fmt=args.format)
    scores_out = Path(args.scores_out)
    scores_out.write_text(audit_csv(result), encoding="utf-8")
    if args.out:
        Path(args.out).write_text(rendered, encoding="utf-8")
    else:
        sys.stdout.write(rendered)
    for system_id, metric, message in result.errors:
        print(f"ERR {system_id}/{metric}: {message}", file=sys.stderr)
    return EXIT_OK


def cmd_report(args) -> int:
    scores = _loading(score_table_from_csv, Path(args.scores).read_text(encoding="utf-8"))
    ratings = _loading(read_ratings, args.ratings)
    aspects = args.aspect or ratings.aspects()
    reports = [correlate(scores, ratings, aspect) for aspect in aspects]
    sys.stdout.write(render_report(merge_reports(reports), fmt=args.format))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="distmetric",
        description="Distribution-wise and turn-level evaluation of text-generation systems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fbd = sub.add_parser("fbd", help="Frechet distance between two embedding files")
    p_fbd.add_argument("real")
    p_fbd.add_argument("gen")
    p_fbd.add_argument("--mean-norm", choices=MEAN_NORMS, default="squared")
    p_fbd.add_argument("--cov-divisor", choices=COV_DIVISORS, default="n-1")
    p_fbd.add_argument("--cov-ridge", type=float, default=0.0)
    p_fbd.add_argument("--json", action="store_true")
    p_fbd.set_defaults(fn=cmd_fbd)

    p_prd = sub.add_parser("prd", help="precision-recall max-F1 between two embedding files")
    p_prd.add_argument("real")
    p_prd.add_argument("gen")
    p_prd.add_argument("--k", type=int, default=DEFAULT_CLUSTERS)
    p_prd.add_argument("--m", type=int, default=DEFAULT_ANGLES)
    p_prd.add_argument("--runs", type=int, default=DEFAULT_RUNS)
    p_prd.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p_prd.add_argument("--curve-out", help="write the aggregated curve CSV here")
    p_prd.add_argument("--run-curves", help="directory for per-run curve CSVs")
    p_prd.add_argument("--json", action="store_true")
    p_prd.set_defaults(fn=cmd_prd)

    p_base = sub.add_parser("baseline", help="turn-level baseline metrics")
    p_base.add_argument(
        "--metric",
        required=True,
        choices=["bleu", "rouge_l", "average", "extrema", "greedy", "bertscore"],
    )
    p_base.add_argument("--hyp", help="hypothesis text file, one response per line")
    p_base.add_argument("--ref", help="reference text file, line-aligned with --hyp")
    p_base.add_argument("--word-vectors")
    p_base.add_argument("--hyp-tokens", help="token-embedding archive directory")
    p_base.add_argument("--ref-tokens", help="token-embedding archive directory")
    p_base.add_argument("--max-n", type=int, default=4)
    p_base.add_argument("--json", action="store_true")
    p_base.set_defaults(fn=cmd_baseline)

    p_norm = sub.add_parser("normality", help="per-dimension Shapiro-Wilk profile")
    p_norm.add_argument("embeddings")
    p_norm.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p_norm.add_argument("--json", action="store_true")
    p_norm.set_defaults(fn=cmd_normality)

    p_study = sub.add_parser("study", help="full correlation study from a JSON manifest")
    p_study.add_argument("manifest")
    p_study.add_argument("--format", choices=["markdown", "csv", "json"], default="markdown")
    p_study.add_argument("--out", help="write the rendered report here instead of stdout")
    p_study.add_argument("--scores-out", default="study_scores.csv")
    p_study.set_defaults(fn=cmd_study)

    p_report = sub.add_parser("report", help="correlate a stored score table with ratings")
    p_report.add_argument("--scores", required=True)
    p_report.add_argument("--ratings", required=True)
    p_report.add_argument("--aspect", action="append")
    p_report.add_argument("--format", choices=["markdown", "csv", "json"], default="markdown")
    p_report.set_defaults(fn=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except _LoadError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DistMetricError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
