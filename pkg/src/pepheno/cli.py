"""Command-line orchestration of the phenotyping pipeline.

Stages communicate via content-addressed files under the configured output
directory: identify-<hash>.jsonl, extract-<hash>.jsonl, classify-<hash>.jsonl,
compare-icd-<hash>.csv, evaluate-<hash>.json. The hash covers the config and
input file contents, so reruns with the same config are byte-identical.

Exit codes: 0 success, 2 usage, 3 missing input, 4 schema/validation error,
5 external-adapter failure, 1 anything else.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .adjudication import AdjudicationStore, ConflictGranularity, ReviewerRole, create_app
from .adjudication import items_from_pipeline
from .classifier import AdapterError
from .config import ConfigError, PipelineConfig, load_config, stage_path
from .corpus import (
    BinaryLabel,
    CorpusError,
    PhenotypeLabel,
    load_icd_file,
    load_reports_file,
    write_reports_file,
)
from .icd import build_comparison, write_comparison_csv
from .identifier import Route
from .metrics import CiMethod, ConfusionCounts, confusion, format_two_by_two, metrics, summarize
from .pipeline import (
    read_jsonl,
    run_classify,
    run_extract,
    run_identify,
    run_sections_dump,
    write_jsonl,
)
from .synth import GeneratorSpec, PlantedClass, generate
from .terms import TermConfigError, load_terms

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_MISSING_INPUT = 3
EXIT_SCHEMA = 4
EXIT_ADAPTER = 5


class MissingInputError(Exception):
    pass


def _load_pipeline_inputs(config: PipelineConfig):
    if not Path(config.reports).exists():
        raise MissingInputError(f"reports file not found: {config.reports}")
    corpus = load_reports_file(config.reports)
    terms = load_terms(config.terms)
    return corpus, terms


def _require_stage(config: PipelineConfig, stage: str, suffix: str = "jsonl") -> Path:
    path = stage_path(config, stage, suffix)
    if not path.exists():
        raise MissingInputError(
            f"stage file {path} not found; run `pepheno {stage}` first"
        )
    return path


def _load_gold(path: str) -> dict[str, PhenotypeLabel]:
    if not Path(path).exists():
        raise MissingInputError(f"gold labels file not found: {path}")
    gold = {}
    for record in read_jsonl(path):
        gold[record["report_id"]] = PhenotypeLabel.from_fine(record["fine"])
    return gold


def cmd_ingest(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    corpus, _ = _load_pipeline_inputs(config)
    out = stage_path(config, "ingest")
    out.parent.mkdir(parents=True, exist_ok=True)
    write_reports_file(corpus.reports, out)
    print(f"reports: {len(corpus)} loaded, {len(corpus.issues)} malformed skipped")
    for issue in corpus.issues:
        print(f"  line {issue.line}: {issue.message}")
    print(f"emergency-room-only (no hadm_id): {corpus.er_only_count}")
    if config.icd:
        if not Path(config.icd).exists():
            raise MissingInputError(f"ICD file not found: {config.icd}")
        icd = load_icd_file(config.icd)
        print(f"icd: {len(icd)} records, {len(icd.issues)} malformed skipped")
        for issue in icd.issues:
            print(f"  line {issue.line}: {issue.message}")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_identify(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    corpus, terms = _load_pipeline_inputs(config)
    records = run_identify(corpus, terms, config.identifier_mode, workers=args.workers)
    out = stage_path(config, "identify")
    write_jsonl(records, out)
    counts = {route.value: 0 for route in Route}
    included = 0
    for record in records:
        included += record["included"]
        for route in record["routes"]:
            counts[route] += 1
    print("  ".join(f"{route} N={n}" for route, n in counts.items()))
    print(f"included N={included} of {len(records)} ({config.identifier_mode.value} mode)")
    print(f"wrote {out}")
    if args.dump_sections:
        dump = stage_path(config, "sections", "txt")
        dump.write_text("\n".join(run_sections_dump(corpus, terms)) + "\n", encoding="utf-8")
        print(f"wrote {dump}")
    return EXIT_OK


def cmd_extract(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    corpus, terms = _load_pipeline_inputs(config)
    decisions = read_jsonl(_require_stage(config, "identify"))
    included = {r["report_id"] for r in decisions if r["included"]}
    records = run_extract(
        corpus, terms, config.scope_kinds(), included_ids=included, workers=args.workers
    )
    out = stage_path(config, "extract")
    write_jsonl(records, out)
    with_evidence = sum(1 for r in records if r["evidence_present"])
    print(
        f"evidence isolated for {with_evidence} of {len(records)} reports "
        f"({len(records) - with_evidence} with no relevant keywords)"
    )
    print(f"wrote {out}")
    return EXIT_OK


def cmd_classify(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    terms = load_terms(config.terms)
    evidence_records = read_jsonl(_require_stage(config, "extract"))
    records = run_classify(evidence_records, terms, config.classifier, workers=args.workers)
    out = stage_path(config, "classify")
    write_jsonl(records, out)
    positive = sum(1 for r in records if r["label"] == "Positive")
    defaulted = sum(1 for r in records if r["source"] == "DefaultNegative")
    print(
        f"classified {len(records)} reports: {positive} positive, "
        f"{defaulted} default-negative (no evidence)"
    )
    print(f"wrote {out}")
    return EXIT_OK


def _print_metrics(name: str, counts: ConfusionCounts, method: CiMethod) -> dict:
    report = metrics(counts, method)
    print(format_two_by_two(name, report))
    return report.as_dict()


def cmd_evaluate(args: argparse.Namespace) -> int:
    method = CiMethod(args.ci_method) if args.ci_method else None
    arms: list[dict] = []
    if args.counts:
        try:
            tp, fp, fn, tn = (int(x) for x in args.counts.split(","))
        except ValueError:
            raise ValueError("--counts expects tp,fp,fn,tn") from None
        arm = _print_metrics(
            args.name or "supplied counts",
            ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=tn),
            method or CiMethod.WILSON,
        )
        arms.append({"name": args.name or "supplied counts", **arm})
    elif args.comparison:
        if not Path(args.comparison).exists():
            raise MissingInputError(f"comparison file not found: {args.comparison}")
        import csv

        with open(args.comparison, newline="", encoding="utf-8") as fh:
            pairs = [
                (BinaryLabel(row["gold_binary"]), BinaryLabel(row["icd_label"]))
                for row in csv.DictReader(fh)
            ]
        arm = _print_metrics(
            args.name or "ICD discharge codes vs gold",
            confusion(pairs),
            method or CiMethod.WILSON,
        )
        arms.append({"name": args.name or "ICD discharge codes vs gold", **arm})
    else:
        if not args.config or not args.gold:
            raise MissingInputError(
                "evaluate needs --counts, --comparison, or --config with --gold"
            )
        config = load_config(args.config)
        gold = _load_gold(args.gold)
        predictions = read_jsonl(_require_stage(config, "classify"))
        pairs = []
        for record in predictions:
            label = gold.get(record["report_id"])
            if label is None:
                raise MissingInputError(f"no gold label for report {record['report_id']!r}")
            pairs.append((label.binary, BinaryLabel(record["label"])))
        arm = _print_metrics(
            args.name or "classifier vs gold",
            confusion(pairs),
            method or config.ci_method,
        )
        arms.append({"name": args.name or "classifier vs gold", **arm})
        out = stage_path(config, "evaluate", "json")
        out.write_text(json.dumps(arms, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        print(f"wrote {out}")
    if args.out:
        Path(args.out).write_text(
            json.dumps(arms, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        print(f"wrote {args.out}")
    return EXIT_OK


def cmd_compare_icd(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    if not config.icd:
        raise MissingInputError("config has no icd file configured")
    if not Path(config.icd).exists():
        raise MissingInputError(f"ICD file not found: {config.icd}")
    corpus, _ = _load_pipeline_inputs(config)
    gold = _load_gold(args.gold)
    decisions = read_jsonl(_require_stage(config, "identify"))
    included = {r["report_id"] for r in decisions if r["included"]}
    reports = [r for r in corpus if r.report_id in included]
    icd = load_icd_file(config.icd)
    result = build_comparison(reports, gold, icd)
    out = stage_path(config, "compare-icd", "csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    write_comparison_csv(result, out)
    print(
        f"{len(result.rows)} hospital stays compared; "
        f"{result.er_only_count} emergency-room-only reports not comparable"
    )
    print(f"wrote {out}")
    return EXIT_OK


def cmd_summarize(args: argparse.Namespace) -> int:
    gold = _load_gold(args.gold)
    corpus = None
    if args.config:
        config = load_config(args.config)
        corpus, _ = _load_pipeline_inputs(config)
    report = summarize(gold, corpus)
    for line in report.table_lines():
        print(line)
    if args.out:
        Path(args.out).write_text(
            json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        print(f"wrote {args.out}")
    return EXIT_OK


def _parse_mix(text: str) -> dict[PlantedClass, float]:
    mix = {}
    for part in text.split(","):
        name, _, value = part.partition("=")
        mix[PlantedClass(name.strip())] = float(value)
    return mix


DEFAULT_MIX = "ctpa-acute=0.10,ctpa-chronic=0.05,ctpa-negative=0.45,ctpa-equivocal=0.05,non-ctpa=0.35"


def cmd_generate(args: argparse.Namespace) -> int:
    spec = GeneratorSpec(
        seed=args.seed,
        n_reports=args.n,
        mix=_parse_mix(args.mix),
        trap_rate=args.trap_rate,
    )
    corpus = generate(spec)
    paths = corpus.write(args.out)
    included = sum(1 for t in corpus.report_truth.values() if t.included)
    print(
        f"generated {len(corpus.reports)} reports ({included} CTPA), "
        f"{len(corpus.icd)} ICD records, {len(corpus.stay_truth)} stays"
    )
    for name, path in paths.items():
        print(f"wrote {name}: {path}")
    return EXIT_OK


def _parse_reviewers(text: str) -> dict[str, ReviewerRole]:
    reviewers = {}
    for part in text.split(","):
        name, _, role = part.partition("=")
        reviewers[name.strip()] = ReviewerRole(role.strip())
    return reviewers


def build_serve_app(
    config: PipelineConfig,
    reviewers: dict[str, ReviewerRole],
    log_path: str | None = None,
    granularity: str = "binary",
):
    """Wire the adjudication service from the extract/classify stage files."""
    corpus, _ = _load_pipeline_inputs(config)
    evidence_records = read_jsonl(_require_stage(config, "extract"))
    predictions: dict[str, BinaryLabel] = {}
    classify_file = stage_path(config, "classify")
    if classify_file.exists():
        predictions = {
            r["report_id"]: BinaryLabel(r["label"]) for r in read_jsonl(classify_file)
        }
    items = items_from_pipeline(
        evidences={r["report_id"]: r["merged_note"] for r in evidence_records},
        report_texts={r.report_id: r.text for r in corpus},
        predictions=predictions,
    )
    store = AdjudicationStore(
        items,
        log_path=log_path or Path(config.output_dir) / "adjudication-events.jsonl",
        granularity=ConflictGranularity(granularity),
    )
    return create_app(store, reviewers), store


def cmd_serve(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    app, _ = build_serve_app(
        config, _parse_reviewers(args.reviewers), args.log, args.granularity
    )
    import uvicorn

    print(f"serving adjudication API on {args.host}:{args.port}")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pepheno",
        description="PE phenotyping pipeline for CTPA radiology reports",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def with_config(p: argparse.ArgumentParser, workers: bool = False):
        p.add_argument("--config", required=True, help="pipeline config YAML")
        if workers:
            p.add_argument("--workers", type=int, default=1, help="parallel workers")

    p = sub.add_parser("ingest", help="validate and canonicalize the input corpus")
    with_config(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("identify", help="flag CTPA reports via the term routes")
    with_config(p, workers=True)
    p.add_argument("--dump-sections", action="store_true",
                   help="also write a per-report section listing with offsets")
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("extract", help="isolate PE evidence sentences")
    with_config(p, workers=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("classify", help="classify evidence PE-positive/negative")
    with_config(p, workers=True)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("evaluate", help="confusion metrics with 95%% CIs")
    p.add_argument("--config", help="pipeline config YAML")
    p.add_argument("--gold", help="gold labels JSONL (report_id, fine)")
    p.add_argument("--counts", help="direct 2x2 input: tp,fp,fn,tn")
    p.add_argument("--comparison", help="compare-icd CSV to evaluate the ICD arm")
    p.add_argument("--ci-method", choices=[m.value for m in CiMethod])
    p.add_argument("--name", help="arm name for the printed table")
    p.add_argument("--out", help="also write metrics JSON here")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare-icd", help="per-stay gold vs ICD comparison rows")
    with_config(p)
    p.add_argument("--gold", required=True, help="gold labels JSONL")
    p.set_defaults(func=cmd_compare_icd)

    p = sub.add_parser("summarize", help="corpus label summary table")
    p.add_argument("--gold", required=True, help="gold labels JSONL")
    p.add_argument("--config", help="pipeline config YAML (enables the stay split)")
    p.add_argument("--out", help="also write summary JSON here")
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("generate", help="synthetic corpus with planted ground truth")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--mix", default=DEFAULT_MIX, help="class=proportion, comma separated")
    p.add_argument("--trap-rate", type=float, default=0.0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("serve", help="run the adjudication HTTP service")
    with_config(p)
    p.add_argument("--reviewers", required=True,
                   help="id=Role list, e.g. alice=Unblinded,bob=Blinded,carol=Consensus")
    p.add_argument("--log", help="event log path (default: <output_dir>/adjudication-events.jsonl)")
    p.add_argument("--granularity", choices=["binary", "fine"], default="binary")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MissingInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING_INPUT
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING_INPUT
    except (CorpusError, ConfigError, TermConfigError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except AdapterError as exc:
        print(f"adapter error: {exc}", file=sys.stderr)
        return EXIT_ADAPTER
    except Exception as exc:  # pragma: no cover
        print(f"unexpected error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
