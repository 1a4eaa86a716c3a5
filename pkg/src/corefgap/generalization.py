"""Aggregate and type generalization gaps with permutation significance tests.

Gaps are absolute F1 differences reported in percentage points. The
significance statistic is ``TGG - AGG``: a type is flagged when its drop is
larger than the drop over all mentions, one-sided.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, InvariantError
from .metrics import ALL, B_CUBED, CEAF_E, CONLL, METRICS, MUC, Counts, ScoreTriple, corpus_scores

APPENDIX = "appendix"
BODY = "body"
ORIENTATIONS = (APPENDIX, BODY)
CHUNK = 1000
TIE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class DocRecord:
    doc_id: str
    counts: dict[tuple[str, str], Counts]


@dataclass
class ModelRun:
    """One model evaluated on one test set.

    Built either from per-document records (``from_documents``), in which
    case corpus scores are their micro aggregation, or directly from
    recorded corpus scores (``from_scores``), which supports gaps but not
    significance testing.
    """

    model_id: str
    test_set: str
    per_document: tuple[DocRecord, ...] = ()
    corpus_scores: dict[tuple[str, str], ScoreTriple] = field(default_factory=dict)

    @classmethod
    def from_documents(cls, model_id, test_set, records: Iterable[DocRecord]) -> "ModelRun":
        records = tuple(records)
        return cls(model_id, test_set, records, corpus_scores(r.counts for r in records))

    @classmethod
    def from_scores(cls, model_id, test_set, scores: dict) -> "ModelRun":
        triples = {}
        for key, value in scores.items():
            if not isinstance(value, ScoreTriple):
                value = ScoreTriple(None, None, value)
            triples[key] = value
        return cls(model_id, test_set, (), triples)

    def score(self, metric: str, type_name: str = ALL) -> ScoreTriple | None:
        return self.corpus_scores.get((metric, type_name))

    def f1(self, metric: str, type_name: str = ALL) -> float | None:
        s = self.score(metric, type_name)
        return None if s is None else s.f1

    @property
    def doc_ids(self) -> list[str]:
        return [r.doc_id for r in self.per_document]


def agg(f_in, f_out):
    """Aggregate generalization gap ``|f_in - f_out|`` (None if either is N/A)."""
    if f_in is None or f_out is None:
        return None
    return abs(f_in - f_out)


def tgg(f_in_t, f_out_t):
    """Type generalization gap: ``agg`` applied to type-restricted scores."""
    return agg(f_in_t, f_out_t)


# -- vectorized statistic ---------------------------------------------------


def _agg_keys(metric: str) -> list[tuple[str, str]]:
    if metric == CONLL:
        return [(m, ALL) for m in METRICS]
    if metric not in METRICS:
        raise ConfigError(f"unknown gap metric {metric!r}")
    return [(metric, ALL)]


def _matrix(run: ModelRun, keys, doc_ids) -> np.ndarray:
    by_id = {r.doc_id: r for r in run.per_document}
    out = np.zeros((len(doc_ids), 4 * len(keys)))
    for i, doc_id in enumerate(doc_ids):
        counts = by_id[doc_id].counts
        for k, key in enumerate(keys):
            c = counts.get(key)
            if c is not None:
                out[i, 4 * k : 4 * k + 4] = (c.r_num, c.r_den, c.p_num, c.p_den)
    return out


def _f1(block: np.ndarray) -> np.ndarray:
    """Vectorized F1 over rows of ``[r_num, r_den, p_num, p_den]`` sums."""
    r_num, r_den, p_num, p_den = block[..., 0], block[..., 1], block[..., 2], block[..., 3]
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(r_den > 0, r_num / np.where(r_den > 0, r_den, 1), np.nan)
        p = np.where(p_den > 0, p_num / np.where(p_den > 0, p_den, 1), np.nan)
        both = ~np.isnan(r) & ~np.isnan(p)
        s = np.where(both, r + p, 0.0)
        f = np.where(both & (s > 0), 2 * np.nan_to_num(r) * np.nan_to_num(p) / np.where(s > 0, s, 1), 0.0)
    return np.where(np.isnan(r) & np.isnan(p), np.nan, f)


def _scope_f1(sums: np.ndarray, n_keys: int) -> np.ndarray:
    f1s = [_f1(sums[..., 4 * k : 4 * k + 4]) for k in range(n_keys)]
    return f1s[0] if n_keys == 1 else sum(f1s) / n_keys


def _delta(s_in: np.ndarray, s_out: np.ndarray, n_agg: int) -> np.ndarray:
    a = 4 * n_agg
    gap_all = np.abs(_scope_f1(s_in[..., :a], n_agg) - _scope_f1(s_out[..., :a], n_agg))
    gap_type = np.abs(_f1(s_in[..., a : a + 4]) - _f1(s_out[..., a : a + 4]))
    return gap_type - gap_all


def _chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(chunk,))))


def _chunks(n_perms: int):
    return [(c, min(CHUNK, n_perms - c * CHUNK)) for c in range(math.ceil(n_perms / CHUNK))]


def _run_chunks(fn, n_perms: int, workers: int) -> int:
    chunks = _chunks(n_perms)
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return sum(pool.map(lambda c: fn(*c), chunks))
    return sum(fn(*c) for c in chunks)


@dataclass(frozen=True)
class PermutationResult:
    p_value: float | None
    significant: bool
    observed: float | None = None

    def __iter__(self):
        return iter((self.p_value, self.significant))


def _typed_support(run: ModelRun, type_name: str) -> int:
    s = run.score(B_CUBED, type_name)
    return 0 if s is None else s.support_gold


def permutation_gap_test(
    in_run: ModelRun,
    out_run: ModelRun,
    type_name: str,
    n_perms: int = 10000,
    alpha: float = 0.1,
    seed: int = 0,
    metric: str = B_CUBED,
    workers: int = 1,
) -> PermutationResult:
    """Paired test of ``TGG - AGG`` between two models on one test set.

    Each permutation swaps the two runs' records of every document
    independently with probability 1/2. Permutations are drawn in chunks of
    ``CHUNK`` from seed-derived substreams, so ``workers`` never changes the
    result. Returns ``p = (1 + #{Δ* >= Δ}) / (1 + n_perms)``.
    """
    ids_in, ids_out = in_run.doc_ids, out_run.doc_ids
    if set(ids_in) != set(ids_out) or len(ids_in) != len(ids_out):
        raise InvariantError(
            f"runs {in_run.model_id!r} and {out_run.model_id!r} cover different documents"
        )
    if not ids_in or not _typed_support(in_run, type_name) or not _typed_support(out_run, type_name):
        return PermutationResult(None, False)
    keys = _agg_keys(metric) + [(B_CUBED, type_name)]
    a_in = _matrix(in_run, keys, ids_in)
    a_out = _matrix(out_run, keys, ids_in)
    t_in, t_out = a_in.sum(axis=0), a_out.sum(axis=0)
    diff = a_out - a_in
    n_agg = len(keys) - 1
    observed = float(_delta(t_in, t_out, n_agg))
    if math.isnan(observed):
        return PermutationResult(None, False)
    n_docs = len(ids_in)

    def count(chunk, size):
        mask = _chunk_rng(seed, chunk).random((size, n_docs)) < 0.5
        shift = mask.astype(float) @ diff
        stats = _delta(t_in + shift, t_out - shift, n_agg)
        return int(np.count_nonzero(stats >= observed - TIE_TOLERANCE))

    k = _run_chunks(count, n_perms, workers)
    p = (1 + k) / (1 + n_perms)
    return PermutationResult(p, p < alpha, observed)


def unpaired_permutation_gap_test(
    in_run: ModelRun,
    out_run: ModelRun,
    type_name: str,
    n_perms: int = 10000,
    alpha: float = 0.1,
    seed: int = 0,
    metric: str = B_CUBED,
    workers: int = 1,
) -> PermutationResult:
    """Test of ``TGG - AGG`` for one model on two different test sets.

    Documents are pooled and randomly reassigned to the two sets, keeping
    set sizes; otherwise identical to :func:`permutation_gap_test`.
    """
    n1, n2 = len(in_run.per_document), len(out_run.per_document)
    if not n1 or not n2 or not _typed_support(in_run, type_name) or not _typed_support(out_run, type_name):
        return PermutationResult(None, False)
    keys = _agg_keys(metric) + [(B_CUBED, type_name)]
    pool = np.vstack([_matrix(in_run, keys, in_run.doc_ids), _matrix(out_run, keys, out_run.doc_ids)])
    total = pool.sum(axis=0)
    n_agg = len(keys) - 1
    s_in = pool[:n1].sum(axis=0)
    observed = float(_delta(s_in, total - s_in, n_agg))
    if math.isnan(observed):
        return PermutationResult(None, False)
    n = n1 + n2

    def count(chunk, size):
        rng = _chunk_rng(seed, chunk)
        order = rng.permuted(np.tile(np.arange(n), (size, 1)), axis=1)
        member = np.zeros((size, n))
        np.put_along_axis(member, order[:, :n1], 1.0, axis=1)
        sums_in = member @ pool
        stats = _delta(sums_in, total - sums_in, n_agg)
        return int(np.count_nonzero(stats >= observed - TIE_TOLERANCE))

    k = _run_chunks(count, n_perms, workers)
    p = (1 + k) / (1 + n_perms)
    return PermutationResult(p, p < alpha, observed)


# -- reports ----------------------------------------------------------------


@dataclass(frozen=True)
class GapConfig:
    n_perms: int = 10000
    alpha: float = 0.1
    seed: int = 0
    metric: str = B_CUBED
    orientation: str = APPENDIX
    workers: int = 1

    def __post_init__(self):
        if self.orientation not in ORIENTATIONS:
            raise ConfigError(f"gap orientation must be one of {ORIENTATIONS}")
        if self.metric not in (B_CUBED, CONLL, MUC, CEAF_E):
            raise ConfigError(f"unknown gap metric {self.metric!r}")
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha must lie in (0, 1)")
        if self.n_perms < 1:
            raise ConfigError("n_perms must be positive")


@dataclass(frozen=True)
class TypeGap:
    tgg: float | None
    p_value: float | None = None
    significant: bool = False


def _points(gap):
    return None if gap is None else 100.0 * gap


@dataclass(frozen=True)
class GapReport:
    """Gaps in F1 points between a reference run and one comparison run."""

    test_set: str
    in_run: str
    out_run: str
    agg: float | None
    per_type: dict[str, TypeGap]
    metric: str = B_CUBED
    orientation: str = APPENDIX
    in_test_set: str | None = None
    alpha: float = 0.1

    def __post_init__(self):
        for name, gap in self.per_type.items():
            expected = gap.p_value is not None and gap.p_value < self.alpha
            if gap.significant != expected:
                raise InvariantError(f"significance flag of {name} disagrees with its p-value")
            if gap.tgg is not None and gap.tgg < 0:
                raise InvariantError("negative type gap")
        if self.agg is not None and self.agg < 0:
            raise InvariantError("negative aggregate gap")

    def rows(self) -> list[dict]:
        """CSV-style rows: test_set, out_model, scope, gap, p_value, significant."""
        out = [
            {
                "test_set": self.test_set,
                "out_model": self.out_run,
                "scope": ALL,
                "gap": self.agg,
                "p_value": None,
                "significant": False,
            }
        ]
        for name, gap in self.per_type.items():
            out.append(
                {
                    "test_set": self.test_set,
                    "out_model": self.out_run,
                    "scope": name,
                    "gap": gap.tgg,
                    "p_value": gap.p_value,
                    "significant": gap.significant,
                }
            )
        return out

    def to_dict(self) -> dict:
        return {
            "test_set": self.test_set,
            "in_run": self.in_run,
            "out_run": self.out_run,
            "in_test_set": self.in_test_set,
            "agg": self.agg,
            "metric": self.metric,
            "orientation": self.orientation,
            "alpha": self.alpha,
            "per_type": {
                k: {"tgg": v.tgg, "p_value": v.p_value, "significant": v.significant}
                for k, v in self.per_type.items()
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GapReport":
        return cls(
            d["test_set"],
            d["in_run"],
            d["out_run"],
            d["agg"],
            {k: TypeGap(v["tgg"], v["p_value"], v["significant"]) for k, v in d["per_type"].items()},
            d.get("metric", B_CUBED),
            d.get("orientation", APPENDIX),
            d.get("in_test_set"),
            d.get("alpha", 0.1),
        )


def gap_report(in_run: ModelRun, out_run: ModelRun, type_names: Sequence[str], cfg: GapConfig) -> GapReport:
    paired = cfg.orientation == APPENDIX
    if paired and in_run.test_set != out_run.test_set:
        raise InvariantError("appendix orientation compares two models on the same test set")
    if not paired and in_run.model_id != out_run.model_id:
        raise InvariantError("body orientation compares one model across two test sets")
    test = permutation_gap_test if paired else unpaired_permutation_gap_test
    has_docs = bool(in_run.per_document) and bool(out_run.per_document)
    per_type = {}
    for name in type_names:
        gap = _points(tgg(in_run.f1(B_CUBED, name), out_run.f1(B_CUBED, name)))
        if has_docs and gap is not None:
            result = test(in_run, out_run, name, cfg.n_perms, cfg.alpha, cfg.seed, cfg.metric, cfg.workers)
        else:
            result = PermutationResult(None, False)
        per_type[name] = TypeGap(gap, result.p_value, result.significant)
    return GapReport(
        test_set=out_run.test_set,
        in_run=in_run.model_id,
        out_run=out_run.model_id,
        agg=_points(agg(in_run.f1(cfg.metric), out_run.f1(cfg.metric))),
        per_type=per_type,
        metric=cfg.metric,
        orientation=cfg.orientation,
        in_test_set=None if paired else in_run.test_set,
        alpha=cfg.alpha,
    )


def build_gap_report(
    in_run: ModelRun,
    out_runs: Sequence[ModelRun],
    type_names: Sequence[str],
    cfg: GapConfig | None = None,
) -> list[GapReport]:
    """One :class:`GapReport` per comparison run."""
    cfg = cfg or GapConfig()
    return [gap_report(in_run, out, type_names, cfg) for out in out_runs]
