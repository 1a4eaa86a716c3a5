"""Config-driven multi-dataset, multi-system evaluation."""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import AlignmentError, ConfigError, ParseError
from .generalization import APPENDIX, BODY, DocRecord, GapConfig, GapReport, ModelRun, build_gap_report
from .ingest import (
    SPLITS,
    Corpus,
    SplitRule,
    align,
    attach_predictions,
    filter_scope,
    read_coref_file,
    read_dependency_file,
    split_corpus,
)
from .mention_types import DEFAULT_TYPES, TypePredicate, TypingConfig, resolve_type_name, resolve_types
from .metrics import ALL, B_CUBED, METRICS, ScoreTriple, document_counts, typed_mentions

logger = logging.getLogger(__name__)

LOW_SUPPORT = 20


@dataclass
class DatasetEntry:
    name: str
    gold: Path
    parse: Path | None = None
    split_rule: SplitRule = field(default_factory=lambda: SplitRule("identity"))
    eval_split: str = "test"
    seed: int = 0


@dataclass
class SystemEntry:
    model_id: str
    in_domain: str
    predictions: dict[str, Path] = field(default_factory=dict)


@dataclass
class EvalConfig:
    datasets: list[DatasetEntry]
    systems: list[SystemEntry]
    types: list[str] = field(default_factory=lambda: list(DEFAULT_TYPES))
    metrics: list[str] = field(default_factory=lambda: list(METRICS))
    significance: GapConfig = field(default_factory=GapConfig)
    reference_system: str | None = None
    allow_missing_parse: bool = False
    normalization: dict[str, str] | None = None
    mismatch_threshold: float = 0.05
    typing: TypingConfig = field(default_factory=TypingConfig)

    def __post_init__(self):
        names = [d.name for d in self.datasets]
        if len(set(names)) != len(names):
            raise ConfigError("dataset names must be unique")
        ids = [s.model_id for s in self.systems]
        if len(set(ids)) != len(ids):
            raise ConfigError("system ids must be unique")
        for s in self.systems:
            if s.in_domain not in names:
                raise ConfigError(f"system {s.model_id!r}: in-domain dataset {s.in_domain!r} not in registry")
            unknown = set(s.predictions) - set(names)
            if unknown:
                raise ConfigError(f"system {s.model_id!r}: predictions for unknown datasets {sorted(unknown)}")
        if self.reference_system is not None and self.reference_system not in ids:
            raise ConfigError(f"reference system {self.reference_system!r} is not configured")
        for m in self.metrics:
            if m not in METRICS:
                raise ConfigError(f"unknown metric {m!r}")
        self.types = [resolve_type_name(t) for t in self.types]

    def predicates(self) -> list[TypePredicate]:
        return resolve_types(self.types, self.typing)

    @classmethod
    def from_dict(cls, data: dict, base_dir: str | os.PathLike = ".") -> "EvalConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a mapping")
        base = Path(base_dir)

        def path(value):
            if value is None:
                return None
            p = Path(value)
            return p if p.is_absolute() else base / p

        try:
            datasets = []
            for d in data.get("datasets", []):
                eval_split = d.get("eval_split", "test")
                if eval_split not in SPLITS:
                    raise ConfigError(f"dataset {d.get('name')!r}: eval_split must be one of {SPLITS}")
                datasets.append(
                    DatasetEntry(
                        name=str(d["name"]),
                        gold=path(d["gold"]),
                        parse=path(d.get("parse")),
                        split_rule=SplitRule.parse(d.get("split_rule", "identity")),
                        eval_split=eval_split,
                        seed=int(d.get("seed", 0)),
                    )
                )
            systems = [
                SystemEntry(
                    model_id=str(s["model_id"]),
                    in_domain=str(s["in_domain"]),
                    predictions={str(k): path(v) for k, v in (s.get("predictions") or {}).items()},
                )
                for s in data.get("systems", [])
            ]
            sig = dict(data.get("significance") or {})
            gaps = dict(data.get("gaps") or {})
            significance = GapConfig(
                n_perms=int(sig.get("n_perms", 10000)),
                alpha=float(sig.get("alpha", 0.1)),
                seed=int(sig.get("seed", 0)),
                metric=str(sig.get("metric", B_CUBED)),
                orientation=str(gaps.get("orientation", APPENDIX)),
                workers=int(sig.get("workers", 1)),
            )
            return cls(
                datasets=datasets,
                systems=systems,
                types=list(data.get("types", DEFAULT_TYPES)),
                metrics=list(data.get("metrics", METRICS)),
                significance=significance,
                reference_system=gaps.get("reference_system"),
                allow_missing_parse=bool(data.get("allow_missing_parse", False)),
                normalization=data.get("normalization"),
                mismatch_threshold=float(data.get("mismatch_threshold", 0.05)),
                typing=TypingConfig.from_dict(data.get("typing")),
            )
        except KeyError as exc:
            raise ConfigError(f"missing config key {exc}") from None
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad config value: {exc}") from None

    @classmethod
    def load(cls, path) -> "EvalConfig":
        path = Path(path)
        try:
            data = yaml.safe_load(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except yaml.YAMLError as exc:
            raise ConfigError(f"invalid YAML in {path}: {exc}") from None
        return cls.from_dict(data, path.parent)


def _key(metric, type_name):
    return f"{metric}/{type_name}"


def _unkey(key: str) -> tuple[str, str]:
    metric, type_name = key.split("/", 1)
    return metric, type_name


@dataclass
class EvalReport:
    datasets: list[str] = field(default_factory=list)
    systems: list[str] = field(default_factory=list)
    types: list[str] = field(default_factory=list)
    splits: dict[str, str] = field(default_factory=dict)
    in_domain: dict[str, str] = field(default_factory=dict)
    scores: dict[tuple[str, str], dict[tuple[str, str], ScoreTriple]] = field(default_factory=dict)
    mention_counts: dict[str, dict[str, int]] = field(default_factory=dict)
    gaps: list[GapReport] = field(default_factory=list)
    absent: list[tuple[str, str]] = field(default_factory=list)
    errors: dict[str, str] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    runs: dict[tuple[str, str], ModelRun] = field(default_factory=dict, compare=False, repr=False)

    def score(self, dataset, system, metric, type_name=ALL) -> ScoreTriple | None:
        return self.scores.get((dataset, system), {}).get((metric, type_name))

    def significant(self, dataset, system, type_name) -> bool:
        for gap in self.gaps:
            if gap.test_set == dataset and gap.out_run == system and type_name in gap.per_type:
                if gap.per_type[type_name].significant:
                    return True
        return False

    def low_support(self, dataset, type_name) -> bool:
        n = self.mention_counts.get(dataset, {}).get(type_name)
        return type_name != ALL and n is not None and n < LOW_SUPPORT

    def records(self) -> list[dict]:
        """Flat score records in dataset, system, metric order."""
        out = []
        for ds in self.datasets:
            for system in self.systems:
                cell = self.scores.get((ds, system))
                if cell is None:
                    continue
                for (metric, type_name), t in cell.items():
                    out.append(
                        {
                            "dataset": ds,
                            "split": self.splits.get(ds, "test"),
                            "system": system,
                            "metric": metric,
                            "type": type_name,
                            "R": t.recall,
                            "P": t.precision,
                            "F1": t.f1,
                            "support_gold": t.support_gold,
                            "support_pred": t.support_pred,
                            "partial": t.partial,
                        }
                    )
        return out

    def to_dict(self) -> dict:
        return {
            "datasets": self.datasets,
            "systems": self.systems,
            "types": self.types,
            "splits": self.splits,
            "in_domain": self.in_domain,
            "scores": self.records(),
            "mention_counts": self.mention_counts,
            "gaps": [g.to_dict() for g in self.gaps],
            "absent": [list(a) for a in self.absent],
            "errors": self.errors,
            "warnings": self.warnings,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EvalReport":
        scores: dict = {}
        for rec in data.get("scores", []):
            cell = scores.setdefault((rec["dataset"], rec["system"]), {})
            cell[(rec["metric"], rec["type"])] = ScoreTriple(
                rec["R"], rec["P"], rec["F1"], rec["support_gold"], rec["support_pred"], rec.get("partial", False)
            )
        return cls(
            datasets=list(data.get("datasets", [])),
            systems=list(data.get("systems", [])),
            types=list(data.get("types", [])),
            splits=dict(data.get("splits", {})),
            in_domain=dict(data.get("in_domain", {})),
            scores=scores,
            mention_counts={k: dict(v) for k, v in data.get("mention_counts", {}).items()},
            gaps=[GapReport.from_dict(g) for g in data.get("gaps", [])],
            absent=[tuple(a) for a in data.get("absent", [])],
            errors=dict(data.get("errors", {})),
            warnings=list(data.get("warnings", [])),
        )

    @classmethod
    def from_runs(
        cls,
        runs: dict[str, dict[str, ModelRun]],
        types=DEFAULT_TYPES,
        mention_counts=None,
        gaps=(),
        in_domain=None,
    ) -> "EvalReport":
        """Assemble a report from ModelRuns keyed by test set, then system."""
        datasets = list(runs)
        systems: list[str] = []
        for per_system in runs.values():
            for s in per_system:
                if s not in systems:
                    systems.append(s)
        report = cls(
            datasets=datasets,
            systems=systems,
            types=list(types),
            splits={d: "test" for d in datasets},
            in_domain=dict(in_domain or {}),
            mention_counts={k: dict(v) for k, v in (mention_counts or {}).items()},
            gaps=list(gaps),
        )
        for ds, per_system in runs.items():
            if ds not in report.mention_counts and per_system:
                first = next(iter(per_system.values()))
                report.mention_counts[ds] = {
                    t: triple.support_gold
                    for (metric, t), triple in first.corpus_scores.items()
                    if metric == B_CUBED and triple.support_gold
                }
            for s, run in per_system.items():
                report.scores[(ds, s)] = dict(run.corpus_scores)
                report.runs[(ds, s)] = run
        return report


def count_typed_mentions(corpus: Corpus, predicate: TypePredicate) -> int:
    """Gold mentions satisfying ``predicate`` over parse-aligned documents."""
    return sum(len(typed_mentions(predicate, d.gold, d)) for d in corpus if d.parsed)


def load_dataset(entry: DatasetEntry, cfg: EvalConfig, need_parse: bool) -> Corpus:
    raw = read_coref_file(entry.gold, name=entry.name, split=entry.eval_split)
    corpus = split_corpus(raw, entry.split_rule, entry.seed)[entry.eval_split]
    corpus = filter_scope(corpus)
    if entry.parse is not None:
        deps = read_dependency_file(entry.parse)
        corpus = align(corpus, deps, cfg.normalization, cfg.mismatch_threshold, cfg.allow_missing_parse)
    elif need_parse and not cfg.allow_missing_parse:
        raise AlignmentError(f"dataset {entry.name!r} has no parse sidecar but typed metrics are enabled")
    return corpus


def score_corpus(corpus: Corpus, metrics=METRICS, predicates=()) -> list[DocRecord]:
    return [DocRecord(d.doc_id, document_counts(d, metrics, predicates)) for d in corpus]


def _gap_reports(cfg: EvalConfig, report: EvalReport) -> list[GapReport]:
    gap_cfg = cfg.significance
    type_names = list(cfg.types)
    out = []
    if gap_cfg.orientation == BODY:
        for s in cfg.systems:
            in_run = report.runs.get((s.in_domain, s.model_id))
            if in_run is None:
                continue
            out_runs = [
                report.runs[(d.name, s.model_id)]
                for d in cfg.datasets
                if d.name != s.in_domain and (d.name, s.model_id) in report.runs
            ]
            out.extend(build_gap_report(in_run, out_runs, type_names, gap_cfg))
        return out
    for d in cfg.datasets:
        if cfg.reference_system is not None:
            ref = cfg.reference_system
        else:
            candidates = [s.model_id for s in cfg.systems if s.in_domain == d.name]
            if not candidates:
                continue
            ref = candidates[0]
        in_run = report.runs.get((d.name, ref))
        if in_run is None:
            continue
        ref_domain = report.in_domain[ref]
        out_runs = [
            report.runs[(d.name, s.model_id)]
            for s in cfg.systems
            if s.model_id != ref and s.in_domain != ref_domain and (d.name, s.model_id) in report.runs
        ]
        out.extend(build_gap_report(in_run, out_runs, type_names, gap_cfg))
    return out


def _score_cell(gold: Corpus, entry: DatasetEntry, system: SystemEntry, path, cfg: EvalConfig, predicates):
    """Score one (dataset, system) cell; parse and alignment errors are returned, not raised."""
    try:
        pred = read_coref_file(path, name=f"{system.model_id}:{entry.name}")
        corpus = filter_scope(attach_predictions(gold, pred))
    except (ParseError, AlignmentError) as exc:
        return None, exc, []
    run = ModelRun.from_documents(system.model_id, entry.name, score_corpus(corpus, cfg.metrics, predicates))
    return run, None, [w for w in corpus.warnings if w not in gold.warnings]


def run_evaluation(cfg: EvalConfig, strict: bool = False) -> EvalReport:
    """Score every configured (dataset, system) cell and compute gap reports.

    Missing prediction files leave the cell absent. Parse or alignment
    failures mark the whole dataset as errored (or raise when ``strict``).
    Cells of one dataset are scored concurrently when
    ``cfg.significance.workers > 1``; results merge in declaration order.
    """
    predicates = cfg.predicates()
    report = EvalReport(
        systems=[s.model_id for s in cfg.systems],
        types=list(cfg.types),
        in_domain={s.model_id: s.in_domain for s in cfg.systems},
    )
    workers = max(1, cfg.significance.workers)
    for entry in cfg.datasets:
        report.datasets.append(entry.name)
        report.splits[entry.name] = entry.eval_split
        try:
            gold = load_dataset(entry, cfg, bool(predicates))
        except (ParseError, AlignmentError, OSError) as exc:
            if strict:
                raise
            report.errors[entry.name] = str(exc)
            logger.error("%s: %s", entry.name, exc)
            continue
        report.warnings.extend(gold.warnings)
        counts = {ALL: sum(len(d.gold.mention_index) for d in gold)}
        for p in predicates:
            counts[p.name] = count_typed_mentions(gold, p)
        report.mention_counts[entry.name] = counts
        cells = []
        for system in cfg.systems:
            path = system.predictions.get(entry.name)
            if path is None:
                continue
            if not Path(path).is_file():
                report.absent.append((entry.name, system.model_id))
                report.warnings.append(f"{system.model_id}: prediction file {path} missing for {entry.name}")
                continue
            cells.append((system, path))

        def score(cell):
            return _score_cell(gold, entry, cell[0], cell[1], cfg, predicates)

        if workers > 1 and len(cells) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(score, cells))
        else:
            results = [score(c) for c in cells]
        for (system, _), (run, exc, warnings) in zip(cells, results):
            if exc is not None:
                if strict:
                    raise exc
                report.errors[f"{entry.name}/{system.model_id}"] = str(exc)
                continue
            report.warnings.extend(warnings)
            report.runs[(entry.name, system.model_id)] = run
            report.scores[(entry.name, system.model_id)] = dict(run.corpus_scores)
    report.gaps = _gap_reports(cfg, report)
    return report


def evaluate_pair(gold: Corpus, pred: Corpus, predicates=(), metrics=METRICS, model_id="system") -> ModelRun:
    """Score one already-loaded gold corpus against one system corpus."""
    corpus = filter_scope(attach_predictions(filter_scope(gold), pred))
    return ModelRun.from_documents(model_id, gold.name, score_corpus(corpus, metrics, predicates))

