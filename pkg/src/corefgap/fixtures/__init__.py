"""Curated micro-corpora and recorded score tables used by the test suite.

Each fixture is a directory under ``data/`` holding ``fixture.yaml`` and,
for text fixtures, a gold CoNLL file, a CoNLL-U parse sidecar and optional
``pred_<system>.conll`` outputs. Every expectation carries a provenance tag
(PAPER, DERIVED or TRIVIAL).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import yaml

from ..errors import ConfigError
from ..generalization import ModelRun
from ..ingest import Corpus, align, attach_predictions, filter_scope, parse_coref_file, parse_dependency_file
from ..ingest import IngestOptions
from ..metrics import ALL, B_CUBED, CONLL, ScoreTriple

SCHEMA_VERSION = 1
PROVENANCE = {"PAPER", "DERIVED", "TRIVIAL"}
DATA = resources.files(__package__) / "data"


@dataclass
class Fixture:
    id: str
    description: str
    meta: dict
    gold: str | None = None
    parses: str | None = None
    predictions: dict[str, str] = field(default_factory=dict)
    expectations: list[dict] = field(default_factory=list)

    @property
    def is_text(self) -> bool:
        return self.gold is not None

    def raw_corpus(self) -> Corpus:
        return parse_coref_file(self.gold, IngestOptions(source=f"{self.id}/gold"), name=self.id)

    def corpus(self) -> Corpus:
        """Gold corpus, scope-filtered and parse-aligned."""
        corpus = filter_scope(self.raw_corpus())
        return align(corpus, parse_dependency_file(self.parses, source=f"{self.id}/parses"))

    def with_predictions(self, system: str) -> Corpus:
        pred = parse_coref_file(self.predictions[system], IngestOptions(source=f"{self.id}/{system}"), name=system)
        return filter_scope(attach_predictions(self.corpus(), pred))


def fixture_ids() -> list[str]:
    return sorted(p.name for p in DATA.iterdir() if (p / "fixture.yaml").is_file())


def _check(meta: dict, fid: str):
    if meta.get("schema") != SCHEMA_VERSION:
        raise ConfigError(f"fixture {fid!r}: stale expectation schema {meta.get('schema')!r}")
    if meta.get("id") != fid:
        raise ConfigError(f"fixture {fid!r}: id field says {meta.get('id')!r}")
    for exp in meta.get("expectations", []):
        tag = exp.get("provenance")
        if tag not in PROVENANCE:
            raise ConfigError(f"fixture {fid!r}: expectation without provenance tag: {exp}")
        if tag == "PAPER" and not exp.get("cite"):
            raise ConfigError(f"fixture {fid!r}: PAPER expectation without citation: {exp}")
    if meta.get("provenance") == "PAPER" and not meta.get("cite"):
        raise ConfigError(f"fixture {fid!r}: PAPER fixture without citation")


@lru_cache(maxsize=None)
def _load(fid: str) -> Fixture:
    if fid not in fixture_ids():
        raise ConfigError(f"unknown fixture {fid!r}")
    base = DATA / fid
    meta = yaml.safe_load((base / "fixture.yaml").read_text(encoding="utf-8"))
    _check(meta, fid)
    files = meta.get("files", {})
    fx = Fixture(fid, meta.get("description", ""), meta, expectations=list(meta.get("expectations", [])))
    if "gold" in files:
        fx.gold = (base / files["gold"]).read_text(encoding="utf-8")
        fx.parses = (base / files["parses"]).read_text(encoding="utf-8")
        for name, path in files.get("predictions", {}).items():
            fx.predictions[name] = (base / path).read_text(encoding="utf-8")
    return fx


def load_fixture(fid: str) -> Fixture:
    """Load and validate a registered fixture; text fixtures are parse-checked."""
    fx = _load(fid)
    if fx.is_text:
        fx.corpus()
    return fx


def _triple(value) -> ScoreTriple:
    if isinstance(value, (list, tuple)):
        r, p, f = (v / 100 for v in value)
        return ScoreTriple(r, p, f)
    return ScoreTriple(None, None, value / 100)


def recorded_runs(fid: str) -> dict[str, dict[str, ModelRun]]:
    """ModelRuns (test set -> system -> run) built from a recorded score table.

    Scores are stored in points and converted to fractions. Typed rows are
    keyed by type name under the B-cubed metric; typed gold support is taken
    from the recorded mention counts.
    """
    meta = _load(fid).meta
    if "scores_from" in meta:
        meta = _load(meta["scores_from"]).meta
    out: dict[str, dict[str, ModelRun]] = {}
    for test_set, block in meta["test_sets"].items():
        runs = {}
        for system in meta["systems"]:
            scores = {
                (B_CUBED, ALL): _with_support(_triple(block["b_cubed"][system]), block.get("mentions")),
                (CONLL, ALL): _triple(block["conll"][system]),
            }
            for type_name, row in block.get("types", {}).items():
                scores[(B_CUBED, type_name)] = _with_support(_triple(row["scores"][system]), row.get("mentions"))
            runs[system] = ModelRun.from_scores(system, test_set, scores)
        out[test_set] = runs
    return out


def _with_support(t: ScoreTriple, mentions) -> ScoreTriple:
    if mentions is None:
        return t
    return ScoreTriple(t.recall, t.precision, t.f1, int(mentions), t.support_pred, t.partial)


def recorded_highlights(fid: str) -> set[tuple[str, str, str]]:
    """(test_set, system, type) cells marked significant in a recorded table."""
    meta = _load(fid).meta
    if "scores_from" in meta:
        meta = _load(meta["scores_from"]).meta
    out = set()
    for test_set, block in meta["test_sets"].items():
        for type_name, row in block.get("types", {}).items():
            for system in row.get("highlight", []):
                out.add((test_set, system, type_name))
    return out


def recorded_gap_reports(fid: str, types=None) -> list:
    """GapReports for a recorded gap fixture, computed from its source score table.

    The reference and comparison models come from the fixture's
    ``reference`` and ``out_models`` fields. No significance test is run
    because recorded tables carry no per-document records.
    """
    from ..generalization import GapConfig, build_gap_report

    meta = _load(fid).meta
    runs = recorded_runs(meta["scores_from"])
    cfg = GapConfig(metric=meta.get("metric", B_CUBED))
    out = []
    for test_set, expected in meta["expected"].items():
        names = list(types) if types is not None else [k for k in expected if k != ALL]
        per_system = runs[test_set]
        out.extend(
            build_gap_report(per_system[meta["reference"]], [per_system[m] for m in meta["out_models"]], names, cfg)
        )
    return out
