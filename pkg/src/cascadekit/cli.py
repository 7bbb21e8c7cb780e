"""Command-line surface.

Subcommands map one-to-one onto the library workflows: pair selection
(complementarity), threshold calibration (calibrate), metered batch runs
(run), fingerprint inspection (hash), the duplication experiment
(duplication) and run-report comparison (report).

Exit codes: 0 success, 1 data or runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .calibration import (
    CascadeConfig,
    auto_select,
    find_lambda_star,
    format_curve_csv,
    load_config,
    save_config,
)
from .complementarity import complementarity_matrix, format_matrix_csv
from .confidence import ScoreFunction
from .engine import CascadeEngine, ReplayClassifier, SampleRef, format_traces_jsonl, run_batch
from .errors import DataError
from .images import load_image_pnm, to_grayscale
from .metering import (
    aggregate,
    compare,
    duplication_experiment,
    format_curves_csv,
    format_report_csv,
    format_report_json,
    load_report,
)
from .phash import dhash_fingerprint, moment_invariants, moments_fingerprint
from .records import load_cost_profile, load_prediction_records, align_records

TRANSFORM_NAMES = ("identity", "rot90", "rot180", "mirror_h", "mirror_v", "random_of_these")


def _write_text(path: str, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc}") from None


def _model_names(path_a: str, path_b: str) -> tuple[str, str]:
    name_a, name_b = Path(path_a).stem, Path(path_b).stem
    if name_a == name_b:
        return "model_a", "model_b"
    return name_a, name_b


def _load_samples(
    args: argparse.Namespace,
    config: CascadeConfig,
    with_images: bool,
    with_labels: bool = False,
):
    records_a = load_prediction_records(args.records_a)
    records_b = load_prediction_records(args.records_b)
    paired = align_records(records_a, records_b, config.first_model, config.second_model)
    classifier_a = ReplayClassifier(config.first_model, records_a)
    classifier_b = ReplayClassifier(config.second_model, records_b)
    samples = []
    for s in paired.samples:
        image = None
        if with_images:
            image = _load_sample_image(args.images, s.id)
        samples.append(SampleRef(s.id, image, s.label if with_labels else None))
    return classifier_a, classifier_b, samples


def _load_sample_image(directory: str, sample_id: str):
    for ext in (".pgm", ".ppm"):
        candidate = os.path.join(directory, sample_id + ext)
        if os.path.exists(candidate):
            try:
                with open(candidate, "rb") as fh:
                    data = fh.read()
            except OSError as exc:
                raise DataError(f"cannot read image {candidate}: {exc}") from None
            try:
                return load_image_pnm(data)
            except DataError as exc:
                raise DataError(f"{candidate}: {exc}") from None
    raise DataError(f"no image for sample {sample_id!r} in {directory}")


def cmd_complementarity(args: argparse.Namespace) -> int:
    if len(args.records) < 2:
        args.parser.error("at least two record files are required")
    models = [load_prediction_records(p) for p in args.records]
    names = [Path(p).stem for p in args.records]
    if len(set(names)) != len(names):
        names = list(args.records)
    matrix = complementarity_matrix(models, names)
    _write_text(args.out, format_matrix_csv(matrix))
    i, j = matrix.best_pair()
    value = matrix.values[i][j]
    # the CSV keeps raw [0, 1] scores; the summary line uses the tenfold display
    print(f"best pair: {matrix.names[i]},{matrix.names[j]} score={value * 10:.4f}")
    return 0


def cmd_calibrate(args: argparse.Namespace) -> int:
    if args.score == "auto" and args.no_post_check:
        args.parser.error("--no-post-check cannot be combined with --score auto")
    records_a = load_prediction_records(args.records_a)
    records_b = load_prediction_records(args.records_b)
    name_a, name_b = _model_names(args.records_a, args.records_b)
    paired = align_records(records_a, records_b, name_a, name_b)
    if args.score == "auto":
        result = auto_select(paired)
    else:
        fn = ScoreFunction.parse(args.score)
        result = find_lambda_star(paired, fn, post_check=not args.no_post_check)
    save_config(result.config, args.out)
    if args.curve:
        _write_text(args.curve, format_curve_csv(result.curve))
    cfg = result.config
    print(
        f"score_fn={cfg.score_fn.value} lambda={cfg.threshold!r} "
        f"post_check={cfg.post_check} first={cfg.first_model} second={cfg.second_model} "
        f"accuracy={result.accuracy:.4f} usage={result.second_model_usage:.4f}"
    )
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    if config.memory != "none" and not args.images:
        args.parser.error(f"--images is required when config memory is {config.memory}")
    costs = load_cost_profile(args.costs)
    classifier_a, classifier_b, samples = _load_samples(
        args, config, with_images=config.memory != "none", with_labels=args.labels
    )
    engine = CascadeEngine(config, classifier_a, classifier_b)
    traces, _ = run_batch(engine, samples)
    report = aggregate(traces, costs, config=config)
    if args.format == "csv":
        _write_text(args.report, format_report_csv(report))
    else:
        _write_text(args.report, format_report_json(report))
    if args.traces:
        _write_text(args.traces, format_traces_jsonl(traces))
    accuracy = "n/a" if report.metrics is None else f"{report.metrics.accuracy:.4f}"
    print(
        f"samples={report.sample_count} accuracy={accuracy} "
        f"energy_wh={report.total_energy_wh!r} mean_ms={report.mean_latency_ms:.3f} "
        f"p95_ms={report.p95_latency_ms:.3f} p99_ms={report.p99_latency_ms:.3f}"
    )
    return 0


def cmd_hash(args: argparse.Namespace) -> int:
    try:
        with open(args.image, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read image {args.image}: {exc}") from None
    gray = to_grayscale(load_image_pnm(data))
    if args.method == "dhash":
        print(f"dhash: {dhash_fingerprint(gray).key}")
    else:
        inv = moment_invariants(gray)
        fp = moments_fingerprint(gray)
        phi = ",".join(repr(v) for v in inv.vector())
        print(f"moments: {fp.key} phi=[{phi}]")
    return 0


def cmd_duplication(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    if config.memory != "none" and not args.images:
        args.parser.error(f"--images is required when config memory is {config.memory}")
    if args.transform != "identity" and not args.images:
        args.parser.error(f"--images is required for transform {args.transform}")
    try:
        ratios = [float(part) for part in args.ratios.split(",") if part.strip() != ""]
    except ValueError:
        args.parser.error(f"cannot parse --ratios {args.ratios!r}")
    if not ratios:
        args.parser.error("--ratios must list at least one value")
    costs = load_cost_profile(args.costs)
    classifier_a, classifier_b, samples = _load_samples(
        args, config, with_images=bool(args.images)
    )
    def factory() -> CascadeEngine:
        return CascadeEngine(config, classifier_a, classifier_b)

    curves = duplication_experiment(
        samples, ratios, args.transform, [(config.memory, factory)], costs, seed=args.seed
    )
    _write_text(args.out, format_curves_csv(curves))
    for ratio, energy, hits in curves[0].points:
        print(f"ratio={ratio!r} energy_wh={energy!r} hits={hits}")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    baseline = load_report(args.baseline)
    candidate = load_report(args.candidate)
    reduction = compare(baseline, candidate)
    rows = [
        ("energy_wh", baseline.total_energy_wh, candidate.total_energy_wh, reduction.energy_pct),
        ("mean_ms", baseline.mean_latency_ms, candidate.mean_latency_ms, reduction.mean_latency_pct),
        ("p95_ms", baseline.p95_latency_ms, candidate.p95_latency_ms, reduction.p95_latency_pct),
        ("p99_ms", baseline.p99_latency_ms, candidate.p99_latency_ms, reduction.p99_latency_pct),
    ]
    print(f"{'metric':<12}{'baseline':>16}{'candidate':>16}{'reduction':>12}")
    for name, base, cand, pct in rows:
        print(f"{name:<12}{base:>16.6g}{cand:>16.6g}{pct:>11.2f}%")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cascadekit",
        description="Calibrate and meter two-model classification cascades from replay records.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser(
        "complementarity",
        help="score every model pair and pick the most complementary one",
    )
    p.add_argument("records", nargs="+", help="two or more prediction-record JSONL files")
    p.add_argument("--out", required=True, help="matrix CSV output path")
    p.set_defaults(func=cmd_complementarity, parser=p)

    p = sub.add_parser("calibrate", help="search the escalation threshold on a validation pair")
    p.add_argument("--records-a", required=True, help="first model's records (JSONL)")
    p.add_argument("--records-b", required=True, help="second model's records (JSONL)")
    p.add_argument(
        "--score",
        choices=("max", "diff", "entropy", "auto"),
        default="auto",
        help="score function; auto tries all three and both model orders (default: auto)",
    )
    p.add_argument(
        "--no-post-check",
        action="store_true",
        help="always accept the second model on escalation instead of the better-scoring one",
    )
    p.add_argument("--out", required=True, help="config JSON output path")
    p.add_argument("--curve", help="optional lambda/accuracy/usage curve CSV output path")
    p.set_defaults(func=cmd_calibrate, parser=p)

    p = sub.add_parser("run", help="replay a batch through a configured cascade and meter it")
    p.add_argument("--config", required=True, help="cascade config JSON")
    p.add_argument("--records-a", required=True, help="first model's records (JSONL)")
    p.add_argument("--records-b", required=True, help="second model's records (JSONL)")
    p.add_argument("--images", help="directory of <id>.pgm/.ppm images (required when memory is on)")
    p.add_argument("--costs", required=True, help="stage cost profile JSON")
    p.add_argument("--labels", action="store_true", help="score predictions against record labels")
    p.add_argument("--report", required=True, help="run report output path")
    p.add_argument("--format", choices=("json", "csv"), default="json", help="report format")
    p.add_argument("--traces", help="optional per-sample trace JSONL output path")
    p.set_defaults(func=cmd_run, parser=p)

    p = sub.add_parser("hash", help="print an image's fingerprint")
    p.add_argument("--method", choices=("dhash", "moments"), required=True)
    p.add_argument("image", help="PGM/PPM image file")
    p.set_defaults(func=cmd_hash, parser=p)

    p = sub.add_parser("duplication", help="energy curve over duplicated-input ratios")
    p.add_argument("--config", required=True, help="cascade config JSON")
    p.add_argument("--records-a", required=True, help="first model's records (JSONL)")
    p.add_argument("--records-b", required=True, help="second model's records (JSONL)")
    p.add_argument("--images", help="directory of <id>.pgm/.ppm images")
    p.add_argument("--costs", required=True, help="stage cost profile JSON")
    p.add_argument("--ratios", required=True, help="comma-separated ratios in [0,1], e.g. 0,0.5,1")
    p.add_argument("--transform", choices=TRANSFORM_NAMES, default="identity")
    p.add_argument("--seed", type=int, default=0, help="seed for transform random_of_these")
    p.add_argument("--out", required=True, help="curve CSV output path")
    p.set_defaults(func=cmd_duplication, parser=p)

    p = sub.add_parser("report", help="compare two run reports (reduction percentages)")
    p.add_argument("baseline", help="baseline run report JSON")
    p.add_argument("candidate", help="candidate run report JSON")
    p.set_defaults(func=cmd_report, parser=p)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
