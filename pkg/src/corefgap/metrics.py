"""Cluster-agreement metrics: B-cubed (plus its type-restricted variant),
MUC, CEAF-e and the CoNLL average.

Each metric reduces one document to a :class:`Counts` record of recall and
precision numerators/denominators. Corpus scores are micro averages, i.e.
the sum of per-document records turned into a :class:`ScoreTriple`.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.optimize import linear_sum_assignment

from .ingest import Document, EntityPartition, Span

ALL = "all"
MUC = "muc"
B_CUBED = "b_cubed"
CEAF_E = "ceaf_e"
CONLL = "conll"
METRICS = (MUC, B_CUBED, CEAF_E)
METRIC_LABELS = {MUC: "MUC", B_CUBED: "B³", CEAF_E: "CEAF-e", CONLL: "CoNLL"}


@dataclass(frozen=True)
class Counts:
    r_num: float = 0.0
    r_den: float = 0.0
    p_num: float = 0.0
    p_den: float = 0.0
    n_gold: int = 0
    n_pred: int = 0

    def __add__(self, other: "Counts") -> "Counts":
        return Counts(
            self.r_num + other.r_num,
            self.r_den + other.r_den,
            self.p_num + other.p_num,
            self.p_den + other.p_den,
            self.n_gold + other.n_gold,
            self.n_pred + other.n_pred,
        )

    def as_tuple(self) -> tuple:
        return (self.r_num, self.r_den, self.p_num, self.p_den, self.n_gold, self.n_pred)

    def to_triple(self) -> "ScoreTriple":
        recall = self.r_num / self.r_den if self.r_den > 0 else None
        precision = self.p_num / self.p_den if self.p_den > 0 else None
        return ScoreTriple.build(recall, precision, self.n_gold, self.n_pred)


def aggregate(records: Iterable[Counts]) -> Counts:
    total = Counts()
    for c in records:
        total = total + c
    return total


def harmonic_f1(recall, precision):
    """F1 with N/A handling: None if both sides undefined, 0.0 if one is."""
    if recall is None and precision is None:
        return None
    if recall is None or precision is None:
        return 0.0
    if recall + precision == 0:
        return 0.0
    return 2 * recall * precision / (recall + precision)


@dataclass(frozen=True)
class ScoreTriple:
    """Recall, precision and F1 as fractions; ``None`` marks N/A.

    ``partial`` is set when F1 was forced to 0 because only one side was
    defined.
    """

    recall: float | None
    precision: float | None
    f1: float | None
    support_gold: int = 0
    support_pred: int = 0
    partial: bool = False

    @classmethod
    def build(cls, recall, precision, support_gold=0, support_pred=0) -> "ScoreTriple":
        partial = (recall is None) != (precision is None)
        return cls(recall, precision, harmonic_f1(recall, precision), support_gold, support_pred, partial)

    @property
    def defined(self) -> bool:
        return self.f1 is not None

    def to_dict(self) -> dict:
        return {
            "R": self.recall,
            "P": self.precision,
            "F1": self.f1,
            "support_gold": self.support_gold,
            "support_pred": self.support_pred,
            "partial": self.partial,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ScoreTriple":
        return cls(
            data.get("R"),
            data.get("P"),
            data.get("F1"),
            data.get("support_gold", 0),
            data.get("support_pred", 0),
            data.get("partial", False),
        )


# -- B-cubed ----------------------------------------------------------------


def _b3_side(key: EntityPartition, response: EntityPartition, include=None) -> tuple[float, int]:
    """Sum of |E ∩ E'| / |E| over mentions of ``key`` (optionally filtered)."""
    total = 0.0
    n = 0
    for cluster in key.clusters:
        overlap = Counter(response.mention_index.get(m) for m in cluster)
        size = len(cluster)
        for m in cluster:
            if include is not None and m not in include:
                continue
            n += 1
            j = response.mention_index.get(m)
            if j is not None:
                total += overlap[j] / size
    return total, n


def b_cubed_counts(gold: EntityPartition, pred: EntityPartition, gold_include=None, pred_include=None) -> Counts:
    r_num, n_gold = _b3_side(gold, pred, gold_include)
    p_num, n_pred = _b3_side(pred, gold, pred_include)
    return Counts(r_num, n_gold, p_num, n_pred, n_gold, n_pred)


def b_cubed(gold: EntityPartition, pred: EntityPartition) -> ScoreTriple:
    return b_cubed_counts(gold, pred).to_triple()


def typed_mentions(predicate, partition: EntityPartition, document: Document) -> set[Span]:
    return {m for m in partition.mention_index if predicate(m, partition, document)}


def b_cubed_typed_counts(gold: EntityPartition, pred: EntityPartition, predicate, document: Document) -> Counts:
    gold_typed = typed_mentions(predicate, gold, document)
    pred_typed = typed_mentions(predicate, pred, document)
    return b_cubed_counts(gold, pred, gold_typed, pred_typed)


def b_cubed_typed(gold: EntityPartition, pred: EntityPartition, predicate, document: Document) -> ScoreTriple:
    """B-cubed restricted to mentions of one type.

    Recall sums over gold mentions typed against ``gold``; precision sums
    over predicted mentions typed against ``pred``.
    """
    return b_cubed_typed_counts(gold, pred, predicate, document).to_triple()


# -- MUC --------------------------------------------------------------------


def _muc_side(key: EntityPartition, response: EntityPartition) -> tuple[int, int]:
    num = den = 0
    for cluster in key.clusters:
        parts = set()
        unmatched = 0
        for m in cluster:
            j = response.mention_index.get(m)
            if j is None:
                unmatched += 1
            else:
                parts.add(j)
        num += len(cluster) - (len(parts) + unmatched)
        den += len(cluster) - 1
    return num, den


def muc_counts(gold: EntityPartition, pred: EntityPartition) -> Counts:
    r_num, r_den = _muc_side(gold, pred)
    p_num, p_den = _muc_side(pred, gold)
    return Counts(r_num, r_den, p_num, p_den, len(gold.mention_index), len(pred.mention_index))


def muc(gold: EntityPartition, pred: EntityPartition) -> ScoreTriple:
    return muc_counts(gold, pred).to_triple()


# -- CEAF-e -----------------------------------------------------------------


def phi4_matrix(gold: EntityPartition, pred: EntityPartition) -> np.ndarray:
    sim = np.zeros((len(gold), len(pred)))
    for i, cluster in enumerate(gold.clusters):
        for j, n in Counter(pred.mention_index.get(m) for m in cluster).items():
            if j is not None:
                sim[i, j] = 2 * n / (len(cluster) + len(pred.clusters[j]))
    return sim


def ceaf_e_similarity(gold: EntityPartition, pred: EntityPartition) -> float:
    """Total φ4 similarity of the best one-to-one cluster alignment."""
    if not len(gold) or not len(pred):
        return 0.0
    sim = phi4_matrix(gold, pred)
    rows, cols = linear_sum_assignment(sim, maximize=True)
    return float(sim[rows, cols].sum())


def ceaf_e_counts(gold: EntityPartition, pred: EntityPartition) -> Counts:
    total = ceaf_e_similarity(gold, pred)
    return Counts(total, len(gold), total, len(pred), len(gold.mention_index), len(pred.mention_index))


def ceaf_e(gold: EntityPartition, pred: EntityPartition) -> ScoreTriple:
    return ceaf_e_counts(gold, pred).to_triple()


# -- CoNLL ------------------------------------------------------------------

COUNT_FUNCTIONS = {MUC: muc_counts, B_CUBED: b_cubed_counts, CEAF_E: ceaf_e_counts}


def conll_from_scores(muc_score: ScoreTriple, b3_score: ScoreTriple, ceaf_score: ScoreTriple) -> float | None:
    f1s = [muc_score.f1, b3_score.f1, ceaf_score.f1]
    if any(f is None for f in f1s):
        return None
    return sum(f1s) / 3


def conll_f1(gold: EntityPartition, pred: EntityPartition) -> float | None:
    return conll_from_scores(muc(gold, pred), b_cubed(gold, pred), ceaf_e(gold, pred))


def conll_triple(muc_score: ScoreTriple, b3_score: ScoreTriple, ceaf_score: ScoreTriple) -> ScoreTriple:
    """CoNLL score as a triple; recall and precision are the component means."""

    def mean(values):
        return None if any(v is None for v in values) else sum(values) / 3

    parts = (muc_score, b3_score, ceaf_score)
    return ScoreTriple(
        mean([p.recall for p in parts]),
        mean([p.precision for p in parts]),
        conll_from_scores(*parts),
        b3_score.support_gold,
        b3_score.support_pred,
        any(p.partial for p in parts),
    )


def document_counts(document: Document, metrics=METRICS, predicates=()) -> dict[tuple[str, str], Counts]:
    """Per-document records keyed by ``(metric, type)``; type ``'all'`` is untyped.

    Typed records (B-cubed only) are produced only for parse-aligned documents.
    """
    gold = document.gold
    pred = document.predicted if document.predicted is not None else EntityPartition()
    out = {}
    for metric in metrics:
        out[(metric, ALL)] = COUNT_FUNCTIONS[metric](gold, pred)
    if predicates and document.parsed:
        for predicate in predicates:
            out[(B_CUBED, predicate.name)] = b_cubed_typed_counts(gold, pred, predicate, document)
    return out


def corpus_scores(records: Iterable[dict[tuple[str, str], Counts]]) -> dict[tuple[str, str], ScoreTriple]:
    """Micro-aggregate per-document records into corpus triples, adding CoNLL."""
    totals: dict[tuple[str, str], Counts] = {}
    for rec in records:
        for key, c in rec.items():
            totals[key] = totals.get(key, Counts()) + c
    out = {key: c.to_triple() for key, c in totals.items()}
    if all((m, ALL) in out for m in METRICS):
        out[(CONLL, ALL)] = conll_triple(out[(MUC, ALL)], out[(B_CUBED, ALL)], out[(CEAF_E, ALL)])
    return out
