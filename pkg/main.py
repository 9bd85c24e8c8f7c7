"""Main entry point for sepscore."""

import argparse
import io
import logging
import sys
from pathlib import Path
from typing import List, Optional

import pandas as pd

from src.config import SepScoreConfig
from src.datasets import SwissRollSpec, generate_swiss_roll, subsample_balanced
from src.errors import ComputationError, DataError, InvalidParameter
from src.evaluation import Normalization, SeparabilityEvaluator, normalize
from src.indices import create_index, parse_index_ids, score_many
from src.models import IndexScore
from src.ingestion import (
    STDIN_PATH,
    load_candidate_manifest,
    load_candidates,
    load_labeled_csv,
    load_profile_matrix,
    write_labeled_csv,
)
from src.reporting import (
    dump_json,
    frame_to_csv,
    nullmodel_to_dict,
    render_report_text,
    render_scores_text,
    render_similarity_text,
    report_to_dict,
    report_to_frame,
    score_result_to_dict,
    similarity_to_dict,
    similarity_to_frame,
)
from src.significance import permutation_null, permutation_null_many
from src.similarity import build_similarity_map, merge_profiles

logger = logging.getLogger("sepscore")

EXIT_OK = 0
EXIT_USAGE = 1


class CliParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"error: {message}\n")


def _index_list(value: str):
    try:
        return parse_index_ids(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _drop_cols(value: str):
    return tuple(c.strip() for c in value.split(",") if c.strip())


def _config(args) -> SepScoreConfig:
    """Environment configuration with command-line overrides applied."""
    config = SepScoreConfig()
    if getattr(args, "centroid", None):
        config.projection.centroid = args.centroid
    if getattr(args, "replicates", None) is not None:
        config.null_model.replicates = args.replicates
    if getattr(args, "alpha", None) is not None:
        if not 0.0 < args.alpha < 1.0:
            raise InvalidParameter(f"--alpha must lie in (0, 1), got {args.alpha}")
        config.null_model.alpha = args.alpha
    if getattr(args, "seed", None) is not None:
        config.null_model.seed = args.seed
    if getattr(args, "workers", None) is not None:
        config.null_model.workers = max(1, args.workers)
    return config


def _dataset_name(path: str) -> str:
    return "stdin" if path == STDIN_PATH else Path(path).stem


def _emit(text: str, out: Optional[str]) -> None:
    if out and out != STDIN_PATH:
        Path(out).write_text(text, encoding="utf-8", newline="\n")
        logger.info("Wrote %s", out)
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


def _cloud_csv(cloud, label_column: str, include_t: bool = False) -> str:
    buffer = io.StringIO()
    write_labeled_csv(cloud, buffer, label_column=label_column, include_t=include_t)
    return buffer.getvalue()


def score_command(args):
    """Handle score command: indices on one labeled cloud, optionally with null models."""
    config = _config(args)
    cloud = load_labeled_csv(args.data, args.label_col, args.drop_cols)
    scorers = [create_index(index_id, config.projection.centroid) for index_id in args.indices]
    scores = score_many(cloud, scorers)

    null = None
    if args.with_null:
        null = permutation_null_many(
            cloud, scorers, config.null_model.replicates, config.seed,
            workers=config.null_model.workers, show_progress=config.null_model.show_progress,
        )

    dataset = _dataset_name(args.data)
    if args.format == "text":
        text = render_scores_text(dataset, scores, null)
    elif args.format == "csv":
        rows = []
        for index_id, score in scores.items():
            row = {"index": index_id.key, "value": score.value}
            if null:
                summary = null[index_id]
                row.update(
                    null_mean=summary.null_mean, null_se=summary.null_se,
                    p=summary.p_value, p_conservative=summary.p_value_conservative,
                )
            rows.append(row)
        text = frame_to_csv(pd.DataFrame(rows))
    else:
        alpha = config.null_model.alpha if null else None
        text = dump_json(score_result_to_dict(dataset, scores, null, config.seed, alpha))
    _emit(text, args.out)


def nullmodel_command(args):
    """Handle nullmodel command: permutation null model for one index."""
    config = _config(args)
    if len(args.index) != 1:
        raise DataError("nullmodel takes exactly one index")
    cloud = load_labeled_csv(args.data, args.label_col, args.drop_cols)
    summary = permutation_null(
        cloud,
        create_index(args.index[0], config.projection.centroid),
        config.null_model.replicates,
        config.seed,
        workers=config.null_model.workers,
        show_progress=config.null_model.show_progress,
    )
    payload = nullmodel_to_dict(summary, config.null_model.alpha)
    if args.format == "json":
        text = dump_json(payload)
    elif args.format == "csv":
        text = frame_to_csv(pd.DataFrame([payload]).drop(columns=["schema_version"]))
    else:
        text = render_scores_text(
            _dataset_name(args.data),
            {summary.index_id: IndexScore.of(summary.index_id, summary.observed)},
            {summary.index_id: summary},
        )
    _emit(text, args.out)


def evaluate_command(args):
    """Handle evaluate command: manifest of candidates to EvaluationReport."""
    config = _config(args)
    manifest = load_candidate_manifest(args.manifest)
    candidates = load_candidates(manifest)
    evaluator = SeparabilityEvaluator(config)
    report = evaluator.evaluate(
        candidates,
        args.indices,
        dataset=manifest.dataset,
        replicates=config.null_model.replicates,
        seed=config.seed,
    )
    if args.format == "csv":
        text = frame_to_csv(report_to_frame(report))
    elif args.format == "text":
        text = render_report_text(report)
    else:
        text = dump_json(report_to_dict(report))
    _emit(text, args.out)


def similarity_command(args):
    """Handle similarity command: profile matrices to a 2-D map with triangle flags."""
    profile = merge_profiles(*[load_profile_matrix(path) for path in args.profiles])
    similarity = build_similarity_map(profile)
    if args.format == "csv":
        text = frame_to_csv(similarity_to_frame(similarity))
    elif args.format == "text":
        text = render_similarity_text(similarity)
    else:
        text = dump_json(similarity_to_dict(similarity))
    _emit(text, args.out)


def gen_swissroll_command(args):
    """Handle gen-swissroll command."""
    config = _config(args)
    defaults = config.swiss_roll
    spec = SwissRollSpec(
        n_points=args.n if args.n is not None else defaults.n_points,
        n_arcs=args.arcs if args.arcs is not None else defaults.n_arcs,
        gap_fraction=args.gap_fraction if args.gap_fraction is not None else defaults.gap_fraction,
        noise_sd=args.noise if args.noise is not None else defaults.noise_sd,
        seed=config.seed,
    )
    cloud = generate_swiss_roll(spec)
    _emit(_cloud_csv(cloud, args.label_col, include_t=args.with_t), args.out)


def normalize_command(args):
    """Handle normalize command: apply NON/DRS/DCS/LOG to the coordinates of a CSV."""
    cloud = load_labeled_csv(args.data, args.label_col, args.drop_cols)
    normalized = cloud.with_points(normalize(cloud.points, args.scheme))
    _emit(_cloud_csv(normalized, args.label_col), args.out)


def subsample_command(args):
    """Handle subsample command: balanced subsample of a labeled CSV."""
    config = _config(args)
    cloud = load_labeled_csv(args.data, args.label_col, args.drop_cols)
    sample = subsample_balanced(cloud, args.per_group, config.seed)
    _emit(_cloud_csv(sample, args.label_col), args.out)


def _add_data_args(parser):
    parser.add_argument("data", nargs="?", default=STDIN_PATH, help="Labeled CSV file ('-' for stdin)")
    parser.add_argument("--label-col", default="label", help="Name of the label column")
    parser.add_argument("--drop-cols", type=_drop_cols, default=(),
                        help="Comma-separated columns to exclude from coordinates")


def _add_output_args(parser, formats=("json", "csv", "text")):
    parser.add_argument("--format", choices=formats, default=formats[0], help="Output format")
    parser.add_argument("--out", help="Write output to this path instead of stdout")


def _add_seed_args(parser):
    parser.add_argument("--seed", type=int, help="Master seed (falls back to SEPSCORE_SEED, then 0)")


def _add_null_args(parser):
    parser.add_argument("--replicates", type=int, help="Null model replicates (default 1000)")
    parser.add_argument("--alpha", type=float, help="Significance level (default 0.01)")
    parser.add_argument("--workers", type=int, help="Worker threads for null replicates")
    _add_seed_args(parser)


def _add_centroid_arg(parser):
    parser.add_argument("--centroid", choices=("mean", "median", "mode"), help="PSI centroid (default median)")


def build_parser() -> argparse.ArgumentParser:
    parser = CliParser(prog="sepscore", description="sepscore: group separability indices and significance")
    parser.add_argument("--log-level", help="Logging level (default SEPSCORE_LOG_LEVEL or INFO)")
    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    # Score command
    score_parser = subparsers.add_parser("score", help="Score one labeled cloud")
    _add_data_args(score_parser)
    score_parser.add_argument("--indices", type=_index_list, default=parse_index_ids("all"),
                              help="Comma-separated indices (psi-p, psi-roc, psi-pr, sh, ch, dn, bz, db-star, th, all)")
    _add_centroid_arg(score_parser)
    score_parser.add_argument("--with-null", action="store_true", help="Add permutation null models")
    _add_null_args(score_parser)
    _add_output_args(score_parser)
    score_parser.set_defaults(func=score_command)

    # Null model command
    null_parser = subparsers.add_parser("nullmodel", help="Permutation null model for one index")
    _add_data_args(null_parser)
    null_parser.add_argument("--index", "--indices", dest="index", type=_index_list,
                             default=parse_index_ids("psi-roc"), help="Index to test (default psi-roc)")
    _add_centroid_arg(null_parser)
    _add_null_args(null_parser)
    _add_output_args(null_parser)
    null_parser.set_defaults(func=nullmodel_command)

    # Evaluate command
    eval_parser = subparsers.add_parser("evaluate", help="Evaluate a manifest of embedding candidates")
    eval_parser.add_argument("manifest", help="Candidate manifest JSON")
    eval_parser.add_argument("--indices", type=_index_list, default=parse_index_ids("all"),
                             help="Comma-separated indices")
    _add_centroid_arg(eval_parser)
    _add_null_args(eval_parser)
    _add_output_args(eval_parser)
    eval_parser.set_defaults(func=evaluate_command)

    # Similarity command
    sim_parser = subparsers.add_parser("similarity", help="Index similarity map from profile matrices")
    sim_parser.add_argument("profiles", nargs="+", help="Profile CSV files or evaluation report JSON files")
    _add_output_args(sim_parser)
    sim_parser.set_defaults(func=similarity_command)

    # Swiss roll generator
    gen_parser = subparsers.add_parser("gen-swissroll", help="Generate the tripartite swiss roll as CSV")
    gen_parser.add_argument("--n", type=int, help="Number of points (default 723)")
    gen_parser.add_argument("--arcs", type=int, help="Number of arcs (default 3)")
    gen_parser.add_argument("--gap-fraction", type=float, help="Fraction of the t range left as gaps (default 0.2)")
    gen_parser.add_argument("--noise", type=float, help="Gaussian noise sd (default 0)")
    gen_parser.add_argument("--with-t", action="store_true", help="Append the spiral parameter as column 't'")
    gen_parser.add_argument("--label-col", default="label", help="Name of the label column")
    gen_parser.add_argument("--out", help="Write CSV to this path instead of stdout")
    _add_seed_args(gen_parser)
    gen_parser.set_defaults(func=gen_swissroll_command)

    # Normalize command
    norm_parser = subparsers.add_parser("normalize", help="Apply a data normalization to a labeled CSV")
    _add_data_args(norm_parser)
    norm_parser.add_argument("--scheme", type=str.upper, choices=[n.value for n in Normalization], required=True,
                             help="NON, DRS, DCS or LOG")
    norm_parser.add_argument("--out", help="Write CSV to this path instead of stdout")
    norm_parser.set_defaults(func=normalize_command)

    # Subsample command
    sub_parser = subparsers.add_parser("subsample", help="Balanced subsample of a labeled CSV")
    _add_data_args(sub_parser)
    sub_parser.add_argument("--per-group", type=int, required=True, help="Points drawn from every group")
    sub_parser.add_argument("--out", help="Write CSV to this path instead of stdout")
    _add_seed_args(sub_parser)
    sub_parser.set_defaults(func=subsample_command)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI entry point; returns the process exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)

    level = args.log_level or SepScoreConfig().log_level
    logging.basicConfig(
        level=getattr(logging, str(level).upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
    )

    if not args.command:
        parser.print_help(sys.stderr)
        return EXIT_USAGE

    try:
        args.func(args)
    except (DataError, ComputationError) as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except Exception as e:
        logger.error(f"Command failed: {str(e)}", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return ComputationError.exit_code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
