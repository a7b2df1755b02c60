"""Command-line driver.

Exit codes are a stable contract: 0 success, 1 usage or internal error,
2 cardinality-audit failure. Scoring mismatched class cardinalities is
opt-in via --allow-mismatch and always leaves a machine-readable warning
record, because the tool exists to demonstrate that artefact, not to
commit it silently.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .experiments import (
    INVARIANCE_EVIDENCE,
    CardinalityMismatchError,
    ExpansionMode,
    ExpansionSpec,
    Metric,
    Orientation,
    Verdict,
    audit_cardinality,
    mismatch_warning,
    run_expansion_experiment,
    run_restriction_experiment,
    score_group,
)
from .metrics import evaluate_detection
from .records import RecordParseError, parse_records, serialize_records
from .report import (
    detection_result_dict,
    emit_report,
    expansion_result_dict,
    render_table,
    restriction_result_dict,
    warnings_jsonl,
)
from .synthetic import PopulationParams, generate_evidence_population, generate_toy_classification
from .toy import ToyTrainConfig, TrainingDiverged, TrainingMode, train_toy

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_AUDIT_FAIL = 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on bad usage instead of argparse's 2
        raise _UsageError(message)


def _evidence_value(text: str):
    if text == INVARIANCE_EVIDENCE:
        return INVARIANCE_EVIDENCE
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected a number or {INVARIANCE_EVIDENCE!r}, got {text!r}"
        )
    return value


def build_parser() -> _Parser:
    common = _Parser(add_help=False)
    common.add_argument("--out", metavar="DIR", default=None, help="directory for emitted files")
    common.add_argument("--format", choices=["md", "csv", "json"], default="md")
    common.add_argument("--seed", type=int, default=None, help="override the config seed")
    common.add_argument(
        "--allow-mismatch",
        action="store_true",
        help="permit scoring with K_ID != K_OOD (a warning record is always emitted)",
    )

    parser = _Parser(prog="vacuitylab", description=__doc__)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    p = sub.add_parser("audit", parents=[common], help="check that K_ID equals K_OOD")
    p.add_argument("id_file")
    p.add_argument("ood_file")
    p.set_defaults(func=_cmd_audit)

    p = sub.add_parser("metrics", parents=[common], help="detection metrics on two record files")
    p.add_argument("id_file")
    p.add_argument("ood_file")
    p.add_argument("--metric", choices=[m.value for m in Metric], default=Metric.VACUITY.value)
    p.add_argument(
        "--orientation",
        choices=[o.value for o in Orientation],
        default=Orientation.ID_POSITIVE.value,
    )
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("expand", parents=[common], help="class-cardinality expansion sweep")
    p.add_argument("id_file")
    p.add_argument("ood_file")
    p.add_argument("--mode", choices=[m.value for m in ExpansionMode], required=True)
    p.add_argument("--k-max", type=int, required=True, help="largest expanded class count")
    p.add_argument(
        "--evidence",
        type=_evidence_value,
        default=0.0,
        help=f"evidence for appended classes (number or {INVARIANCE_EVIDENCE!r})",
    )
    p.add_argument("--metric", choices=[m.value for m in Metric], default=Metric.VACUITY.value)
    p.add_argument(
        "--orientation",
        choices=[o.value for o in Orientation],
        default=Orientation.ID_POSITIVE.value,
    )
    p.set_defaults(func=_cmd_expand)

    p = sub.add_parser("restrict", parents=[common], help="remove one class from the OOD set")
    p.add_argument("id_file")
    p.add_argument("ood_file")
    p.add_argument("--remove-class", type=int, required=True, metavar="IDX")
    p.add_argument("--metric", choices=[m.value for m in Metric], default=Metric.VACUITY.value)
    p.add_argument(
        "--orientation",
        choices=[o.value for o in Orientation],
        default=Orientation.ID_POSITIVE.value,
    )
    p.set_defaults(func=_cmd_restrict)

    p = sub.add_parser("simulate", parents=[common], help="generate a synthetic population")
    p.add_argument("--config", required=True, metavar="FILE")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("train-toy", parents=[common], help="train the toy evidential classifier")
    p.add_argument("--config", required=True, metavar="FILE")
    p.set_defaults(func=_cmd_train_toy)

    p = sub.add_parser("report", parents=[common], help="re-render reports from *.result.json")
    p.add_argument("results_dir")
    p.set_defaults(func=_cmd_report)

    return parser


def _load_groups(args):
    return parse_records(args.id_file), parse_records(args.ood_file)


def _print_audit(report) -> None:
    print(f"AUDIT {report.verdict.value}: K_ID={report.k_id} K_OOD={report.k_ood}")
    if report.detail:
        print(f"  {len(report.detail)} offending records:")
        for rid, k in report.detail[:20]:
            print(f"    {rid} K={k}")
        if len(report.detail) > 20:
            print(f"    ... {len(report.detail) - 20} more")


def _write_warnings(out_dir: str | None, warnings: list[dict]) -> None:
    if not warnings:
        return
    for w in warnings:
        print(f"warning: {json.dumps(w)}", file=sys.stderr)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "warnings.jsonl").write_text(warnings_jsonl(warnings), encoding="utf-8")


def _deliver(result: dict, args) -> None:
    print(render_table(result, args.format), end="")
    if args.out is not None:
        paths = emit_report([result], args.out, args.format)
        print(f"wrote {len(paths)} files to {args.out}")


def _cmd_audit(args) -> int:
    report = audit_cardinality(*_load_groups(args))
    _print_audit(report)
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "audit.result.json").write_text(
            json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8"
        )
    return EXIT_OK if report.verdict is Verdict.PASS else EXIT_AUDIT_FAIL


def _cmd_metrics(args) -> int:
    id_records, ood_records = _load_groups(args)
    report = audit_cardinality(id_records, ood_records)
    if report.verdict is not Verdict.PASS:
        if not args.allow_mismatch:
            _print_audit(report)
            print("refusing to score mismatched cardinalities (pass --allow-mismatch to override)")
            return EXIT_AUDIT_FAIL
        if report.k_id == "MIXED" or report.k_ood == "MIXED":
            _print_audit(report)
            print("mixed cardinality inside a group cannot be scored")
            return EXIT_AUDIT_FAIL
        _write_warnings(args.out, [mismatch_warning("metrics", report.k_id, report.k_ood)])
    metric = Metric(args.metric)
    orientation = Orientation(args.orientation)
    samples = score_group(id_records + ood_records, metric, orientation)
    k_id = report.k_id if isinstance(report.k_id, int) else -1
    k_ood = report.k_ood if isinstance(report.k_ood, int) else -1
    res = evaluate_detection(samples, metric_name=metric.value, k_id=k_id, k_ood=k_ood)
    result = detection_result_dict(
        f"metrics_{metric.value}", f"{metric.value} ({orientation.value})", res, orientation.value
    )
    _deliver(result, args)
    return EXIT_OK


def _cmd_expand(args) -> int:
    id_records, ood_records = _load_groups(args)
    report = audit_cardinality(id_records, ood_records)
    if report.verdict is not Verdict.PASS:
        _print_audit(report)
        print("expansion needs a matched baseline; run `vacuitylab audit` for details")
        return EXIT_AUDIT_FAIL
    base_k = int(report.k_id)
    if args.k_max <= base_k:
        raise _UsageError(f"--k-max must exceed the baseline K={base_k}")
    spec = ExpansionSpec(
        mode=ExpansionMode(args.mode),
        k_targets=tuple(range(base_k + 1, args.k_max + 1)),
        appended_evidence=args.evidence,
    )
    run = run_expansion_experiment(
        id_records, ood_records, spec, Metric(args.metric), Orientation(args.orientation)
    )
    name = f"expansion_{spec.mode.value.replace('-', '_')}"
    result = expansion_result_dict(name, run)
    _deliver(result, args)
    return EXIT_OK


def _cmd_restrict(args) -> int:
    id_records, ood_records = _load_groups(args)
    result = run_restriction_experiment(
        ood_records, args.remove_class, id_records, Metric(args.metric), Orientation(args.orientation)
    )
    _write_warnings(args.out, list(result.warnings))
    out = restriction_result_dict("restriction", result, args.remove_class)
    print(f"excluded {out['excluded_count']} records whose gold label was the removed class")
    _deliver(out, args)
    return EXIT_OK


def _read_config(path) -> dict:
    with open(path, encoding="utf-8") as handle:
        return json.load(handle)


def _cmd_simulate(args) -> int:
    config = _read_config(args.config)
    if args.seed is not None:
        config["seed"] = args.seed
    params = PopulationParams(**config)
    id_records, ood_records = generate_evidence_population(params)
    out = Path(args.out) if args.out is not None else Path(".")
    out.mkdir(parents=True, exist_ok=True)
    serialize_records(id_records, out / "id_records.jsonl")
    serialize_records(ood_records, out / "ood_records.jsonl")
    print(
        f"wrote {len(id_records)} ID and {len(ood_records)} OOD records "
        f"(K={params.k}, seed={params.seed}) to {out}"
    )
    return EXIT_OK


def _cmd_train_toy(args) -> int:
    config = dict(_read_config(args.config))
    n_per_class = int(config.pop("n_per_class", 250))
    separation = float(config.pop("separation", 6.0))
    if args.seed is not None:
        config["seed"] = args.seed
    if "mode" in config:
        config["mode"] = TrainingMode(config["mode"])
    train_config = ToyTrainConfig(**config)
    points, labels = generate_toy_classification(n_per_class, separation, train_config.seed)
    result = train_toy(train_config, points, labels)
    summary = dict(result.summary, n_per_class=n_per_class, separation=separation)
    text = json.dumps(summary, indent=2) + "\n"
    print(text, end="")
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "toy_summary.json").write_text(text, encoding="utf-8")
    return EXIT_OK


def _cmd_report(args) -> int:
    results_dir = Path(args.results_dir)
    paths = sorted(results_dir.glob("*.result.json"))
    if not paths:
        print(f"no *.result.json files in {results_dir}", file=sys.stderr)
        return EXIT_USAGE
    results = [json.loads(p.read_text(encoding="utf-8")) for p in paths]
    out = args.out if args.out is not None else results_dir
    written = emit_report(results, out, args.format)
    print(f"wrote {len(written)} files to {out}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if getattr(args, "func", None) is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CardinalityMismatchError as exc:
        print(f"cardinality mismatch: {exc}", file=sys.stderr)
        return EXIT_AUDIT_FAIL
    except (RecordParseError, TrainingDiverged) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError, TypeError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
