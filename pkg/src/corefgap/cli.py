"""Command-line front end: score, typed-score, gaps, report, validate."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .errors import ConfigError, CorefGapError
from .generalization import ORIENTATIONS, GapConfig, build_gap_report
from .harness import EvalConfig, EvalReport, evaluate_pair, load_dataset, run_evaluation
from .ingest import align, dump_jsonl, filter_scope, read_coref_file, read_dependency_file
from .mention_types import DISPLAY_NAMES, dump_typed_mentions, resolve_types
from .metrics import ALL, B_CUBED, CEAF_E, CONLL, METRIC_LABELS, MUC
from .report import FORMATS, emit_tables, gap_records_csv, gaps_markdown, points

logger = logging.getLogger("corefgap")


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with status 1 rather than argparse's 2, which is reserved for input errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_output(p):
    p.add_argument("--format", choices=FORMATS, default="md")
    p.add_argument("-o", "--output", help="write here instead of stdout")


def _add_significance(p):
    p.add_argument("--seed", type=int)
    p.add_argument("--n-perms", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--gap-metric", choices=[B_CUBED, CONLL, MUC, CEAF_E])
    p.add_argument("--gap-orientation", choices=ORIENTATIONS)
    p.add_argument("--workers", type=int)


def _add_typing(p):
    p.add_argument("--types", help="comma-separated mention types (default: Nested,OnGeneric,Compound,Copular)")
    p.add_argument("--allow-missing-parse", action="store_true", help="skip typed metrics for unparsed documents")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="corefgap", description="Coreference scoring with type-restricted generalization gaps.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("score", help="score one system file against gold")
    p.add_argument("gold")
    p.add_argument("pred")
    _add_output(p)
    p.set_defaults(func=cmd_score, typed=False)

    p = sub.add_parser("typed-score", help="score plus type-restricted B-cubed")
    p.add_argument("gold")
    p.add_argument("pred")
    p.add_argument("--parse", required=True, help="CoNLL-U dependency sidecar for the gold file")
    _add_typing(p)
    _add_output(p)
    p.set_defaults(func=cmd_score, typed=True)

    p = sub.add_parser("gaps", help="gap reports with permutation tests")
    p.add_argument("--config", help="evaluation config (YAML); emits the gap section of the sweep")
    p.add_argument("--gold")
    p.add_argument("--parse")
    p.add_argument("--in", dest="in_run", metavar="NAME=PRED", help="reference (in-domain) system output")
    p.add_argument("--out", dest="out_runs", metavar="NAME=PRED", action="append", default=[],
                   help="comparison system output, repeatable")
    _add_typing(p)
    _add_significance(p)
    _add_output(p)
    p.set_defaults(func=cmd_gaps)

    p = sub.add_parser("report", help="full config sweep: score tables and gap tables")
    p.add_argument("--config", required=True)
    _add_typing(p)
    _add_significance(p)
    _add_output(p)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("validate", help="ingest and alignment checks only")
    p.add_argument("--config")
    p.add_argument("--gold")
    p.add_argument("--parse")
    p.add_argument("--allow-missing-parse", action="store_true")
    p.add_argument("--dump", help="write the filtered corpus as JSON lines")
    p.add_argument("--dump-types", help="write typed gold mentions as JSON lines")
    p.set_defaults(func=cmd_validate)
    return parser


def _write(args, text: str):
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _require_file(path, what):
    if path is None:
        raise ConfigError(f"{what} is required")
    if not Path(path).is_file():
        raise ConfigError(f"{what} {path} does not exist")
    return path


def _load_gold(gold, parse, allow_missing_parse):
    corpus = filter_scope(read_coref_file(_require_file(gold, "gold file")))
    if parse is not None:
        corpus = align(corpus, read_dependency_file(_require_file(parse, "parse file")), allow_missing_parse=allow_missing_parse)
    return corpus


# -- score ------------------------------------------------------------------


def _score_rows(run, predicates) -> list[dict]:
    keys = [(MUC, ALL), (B_CUBED, ALL), (CEAF_E, ALL), (CONLL, ALL)] + [(B_CUBED, p.name) for p in predicates]
    rows = []
    for metric, t in keys:
        triple = run.score(metric, t)
        if triple is None:
            continue
        rows.append({"metric": metric, "type": t, **triple.to_dict()})
    return rows


def _render_scores(rows, fmt) -> str:
    if fmt == "json":
        return json.dumps(rows, indent=2, sort_keys=True) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["metric", "type", "R", "P", "F1", "support_gold", "support_pred"])
        for r in rows:
            writer.writerow([r["metric"], r["type"], points(r["R"]), points(r["P"]), points(r["F1"]),
                             r["support_gold"], r["support_pred"]])
        return buf.getvalue()
    lines = ["| Metric | R | P | F1 | # Gold | # Pred |", "| --- | ---: | ---: | ---: | ---: | ---: |"]
    for r in rows:
        label = METRIC_LABELS[r["metric"]]
        if r["type"] != ALL:
            label = f"{label} {DISPLAY_NAMES.get(r['type'], r['type'])}"
        lines.append(f"| {label} | {points(r['R'])} | {points(r['P'])} | {points(r['F1'])} | "
                     f"{r['support_gold']} | {r['support_pred']} |")
    return "\n".join(lines) + "\n"


def cmd_score(args) -> int:
    predicates = resolve_types(args.types) if args.typed else []
    gold = _load_gold(args.gold, getattr(args, "parse", None), getattr(args, "allow_missing_parse", False))
    pred = read_coref_file(_require_file(args.pred, "prediction file"))
    run = evaluate_pair(gold, pred, predicates)
    for w in gold.warnings:
        logger.warning(w)
    _write(args, _render_scores(_score_rows(run, predicates), args.format))
    return 0


# -- config-driven commands -------------------------------------------------


def _apply_overrides(cfg: EvalConfig, args) -> EvalConfig:
    sig = cfg.significance
    changes = {}
    for attr, name in (("seed", "seed"), ("n_perms", "n_perms"), ("alpha", "alpha"), ("gap_metric", "metric"),
                       ("gap_orientation", "orientation"), ("workers", "workers")):
        value = getattr(args, attr, None)
        if value is not None:
            changes[name] = value
    if changes:
        cfg.significance = dataclasses.replace(sig, **changes)
    if getattr(args, "types", None):
        cfg.types = [p.name for p in resolve_types(args.types, cfg.typing)]
    if getattr(args, "allow_missing_parse", False):
        cfg.allow_missing_parse = True
    return cfg


def _evaluate(args) -> EvalReport:
    cfg = _apply_overrides(EvalConfig.load(_require_file(args.config, "config")), args)
    report = run_evaluation(cfg)
    for w in report.warnings:
        logger.warning(w)
    return report


def _exit_status(report: EvalReport) -> int:
    for key, msg in sorted(report.errors.items()):
        logger.error("%s: %s", key, msg)
    return 2 if report.errors else 0


def cmd_report(args) -> int:
    report = _evaluate(args)
    _write(args, emit_tables(report, args.format))
    return _exit_status(report)


def _split_named(value) -> tuple[str, str]:
    name, sep, path = value.partition("=")
    if not sep or not name or not path:
        raise ConfigError(f"expected NAME=PATH, got {value!r}")
    return name, path


def _render_gaps(report: EvalReport, fmt) -> str:
    if fmt == "json":
        return json.dumps([g.to_dict() for g in report.gaps], indent=2, sort_keys=True) + "\n"
    if fmt == "csv":
        rows = gap_records_csv(report)
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=["test_set", "out_model", "scope", "gap", "p_value", "significant"],
                                lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        return buf.getvalue()
    return gaps_markdown(report) + "\n"


def cmd_gaps(args) -> int:
    if args.config:
        report = _evaluate(args)
        _write(args, _render_gaps(report, args.format))
        return _exit_status(report)
    if not args.in_run or not args.out_runs:
        raise ConfigError("gaps needs --config, or --gold with --in NAME=PRED and at least one --out NAME=PRED")
    if args.gap_orientation == "body":
        raise ConfigError("body orientation compares test sets; use --config")
    predicates = resolve_types(args.types)
    gold = _load_gold(args.gold, args.parse, args.allow_missing_parse)
    if args.parse is None and predicates:
        raise ConfigError("typed gaps need --parse")
    defaults = GapConfig()
    cfg = GapConfig(
        n_perms=args.n_perms or defaults.n_perms,
        alpha=args.alpha if args.alpha is not None else defaults.alpha,
        seed=args.seed if args.seed is not None else defaults.seed,
        metric=args.gap_metric or defaults.metric,
        workers=args.workers or defaults.workers,
    )
    name, path = _split_named(args.in_run)
    in_run = evaluate_pair(gold, read_coref_file(_require_file(path, "prediction file")), predicates, model_id=name)
    out_runs = []
    for value in args.out_runs:
        name, path = _split_named(value)
        pred = read_coref_file(_require_file(path, "prediction file"))
        out_runs.append(evaluate_pair(gold, pred, predicates, model_id=name))
    gaps = build_gap_report(in_run, out_runs, [p.name for p in predicates], cfg)
    report = EvalReport(types=[p.name for p in predicates], gaps=gaps)
    _write(args, _render_gaps(report, args.format))
    return 0


def cmd_validate(args) -> int:
    if args.config:
        cfg = EvalConfig.load(_require_file(args.config, "config"))
        if args.allow_missing_parse:
            cfg.allow_missing_parse = True
        corpora = []
        for entry in cfg.datasets:
            corpus = load_dataset(entry, cfg, bool(cfg.types))
            corpora.append(corpus)
            for system in cfg.systems:
                path = system.predictions.get(entry.name)
                if path is not None and Path(path).is_file():
                    read_coref_file(path)
                elif path is not None:
                    logger.warning("%s: prediction file %s missing for %s", system.model_id, path, entry.name)
    else:
        corpora = [_load_gold(args.gold, args.parse, args.allow_missing_parse)]
    for corpus in corpora:
        for w in corpus.warnings:
            logger.warning(w)
        s = corpus.scope
        print(f"{corpus.name}: {len(corpus)} documents, "
              f"{sum(len(d.gold) for d in corpus)} clusters, "
              f"{sum(len(d.gold.mention_index) for d in corpus)} mentions, "
              f"{sum(1 for d in corpus if d.parsed)} parsed"
              + (f"; removed {s.discontinuous_mentions} discontinuous and {s.singleton_mentions} singleton mentions" if s else ""))
    if args.dump:
        with open(args.dump, "w", encoding="utf-8") as fh:
            for corpus in corpora:
                dump_jsonl(corpus, fh)
    if args.dump_types:
        with open(args.dump_types, "w", encoding="utf-8") as fh:
            for corpus in corpora:
                dump_typed_mentions(corpus, fh)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except CorefGapError as exc:
        print(f"corefgap: {exc}", file=sys.stderr)
        return exc.exit_code
    except Exception as exc:  # noqa: BLE001 - anything else is a bug
        logger.exception("internal error: %s", exc)
        return 3


if __name__ == "__main__":
    sys.exit(main())
