"""Brute-force reference implementations for tests.

Nothing here imports the production metric or significance code; clusters
are read as plain iterables of hashable mentions.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction

from .ingest import EntityPartition, Span


def _clusters(partition) -> list[set]:
    clusters = getattr(partition, "clusters", partition)
    return [set(c) for c in clusters]


def _cluster_containing(mention, clusters):
    for c in clusters:
        if mention in c:
            return c
    return set()


def _f1(r, p):
    if r is None and p is None:
        return None
    if r is None or p is None or r + p == 0:
        return 0.0
    return 2 * r * p / (r + p)


def naive_b_cubed(gold, pred, gold_filter=None, pred_filter=None):
    """Literal per-mention B-cubed; returns ``(R, P, F1)`` with None for N/A."""
    g, p = _clusters(gold), _clusters(pred)
    gold_mentions = [m for c in g for m in c if gold_filter is None or gold_filter(m)]
    pred_mentions = [m for c in p for m in c if pred_filter is None or pred_filter(m)]
    r = None
    if gold_mentions:
        r = sum(
            len(_cluster_containing(m, g) & _cluster_containing(m, p)) / len(_cluster_containing(m, g))
            for m in gold_mentions
        ) / len(gold_mentions)
    pr = None
    if pred_mentions:
        pr = sum(
            len(_cluster_containing(m, p) & _cluster_containing(m, g)) / len(_cluster_containing(m, p))
            for m in pred_mentions
        ) / len(pred_mentions)
    return r, pr, _f1(r, pr)


def _links(cluster) -> set[frozenset]:
    return {frozenset(pair) for pair in itertools.combinations(sorted(cluster), 2)}


def naive_muc_side(key, response):
    """Link counting: for each key cluster, the links that survive after cutting
    it along the response partition, via connected components."""
    num = den = 0
    for cluster in key:
        den += len(cluster) - 1
        kept_links = {
            link for link in _links(cluster)
            if any(link <= r for r in response)
        }
        # components of the kept-link graph over the cluster
        parent = {m: m for m in cluster}

        def find(x):
            while parent[x] != x:
                x = parent[x]
            return x

        for link in kept_links:
            a, b = tuple(link)
            parent[find(a)] = find(b)
        components = len({find(m) for m in cluster})
        num += len(cluster) - components
    return num, den


def naive_muc(gold, pred):
    g, p = _clusters(gold), _clusters(pred)
    rn, rd = naive_muc_side(g, p)
    pn, pd = naive_muc_side(p, g)
    r = rn / rd if rd else None
    pr = pn / pd if pd else None
    return r, pr, _f1(r, pr)


def _phi4(a: set, b: set) -> float:
    return 2 * len(a & b) / (len(a) + len(b))


def naive_ceaf_matching(gold, pred, limit=8) -> float:
    """Maximum total φ4 over all one-to-one cluster alignments, by enumeration."""
    g, p = _clusters(gold), _clusters(pred)
    if len(g) > limit or len(p) > limit:
        raise ValueError(f"exhaustive matching limited to {limit} clusters per side")
    if not g or not p:
        return 0.0
    small, large, flip = (g, p, False) if len(g) <= len(p) else (p, g, True)
    best = 0.0
    for perm in itertools.permutations(range(len(large)), len(small)):
        total = 0.0
        for i, j in enumerate(perm):
            total += _phi4(large[j], small[i]) if flip else _phi4(small[i], large[j])
        best = max(best, total)
    return best


def naive_ceaf_e(gold, pred):
    g, p = _clusters(gold), _clusters(pred)
    total = naive_ceaf_matching(g, p)
    r = total / len(g) if g else None
    pr = total / len(p) if p else None
    return r, pr, _f1(r, pr)


# -- permutation oracle -----------------------------------------------------


def exact_permutation_p(in_docs, out_docs, statistic, max_docs=12, tol=1e-12) -> float:
    """Exact one-sided p over all 2^n per-document swap assignments.

    ``statistic(in_list, out_list)`` maps two equally long record lists to a
    float; the identity assignment is included in the count.
    """
    n = len(in_docs)
    if n != len(out_docs):
        raise ValueError("runs must have the same number of documents")
    if n > max_docs:
        raise ValueError(f"exact enumeration limited to {max_docs} documents")
    observed = statistic(list(in_docs), list(out_docs))
    hits = 0
    for swaps in itertools.product((False, True), repeat=n):
        a = [o if s else i for i, o, s in zip(in_docs, out_docs, swaps)]
        b = [i if s else o for i, o, s in zip(in_docs, out_docs, swaps)]
        if statistic(a, b) >= observed - tol:
            hits += 1
    return hits / 2**n


def _sum_rows(records, key):
    tot = [0.0, 0.0, 0.0, 0.0]
    for rec in records:
        c = rec.get(key)
        if c is None:
            continue
        vals = (c.r_num, c.r_den, c.p_num, c.p_den)
        for i in range(4):
            tot[i] += vals[i]
    return tot


def _f1_from_sums(t):
    r = t[0] / t[1] if t[1] else None
    p = t[2] / t[3] if t[3] else None
    return _f1(r, p)


def gap_statistic(type_name, metric="b_cubed"):
    """Naive ``TGG - AGG`` over per-document ``{(metric, type): counts}`` dicts."""
    agg_keys = [("muc", "all"), ("b_cubed", "all"), ("ceaf_e", "all")] if metric == "conll" else [(metric, "all")]

    def statistic(in_docs, out_docs):
        def agg_f1(docs):
            return sum(_f1_from_sums(_sum_rows(docs, k)) for k in agg_keys) / len(agg_keys)

        typed = ("b_cubed", type_name)
        t_gap = abs(_f1_from_sums(_sum_rows(in_docs, typed)) - _f1_from_sums(_sum_rows(out_docs, typed)))
        a_gap = abs(agg_f1(in_docs) - agg_f1(out_docs))
        return t_gap - a_gap

    return statistic


# -- random instances -------------------------------------------------------


@dataclass(frozen=True)
class RandomInstanceSpec:
    n_mentions: int = 10
    max_clusters: int = 4
    seed: int = 0
    overlap_allowed: bool = False

    def __post_init__(self):
        if not 2 <= self.n_mentions <= 12:
            raise ValueError("n_mentions must lie in [2, 12]")
        if self.max_clusters < 1:
            raise ValueError("max_clusters must be positive")


def _mention_pool(rng: random.Random, n: int, overlap: bool) -> list[Span]:
    if not overlap:
        return [Span(0, i, i) for i in range(n)]
    pool = set()
    while len(pool) < n:
        if rng.random() < 0.3 and pool:
            # nest inside or around an existing span
            base = rng.choice(sorted(pool))
            if len(base) > 1 and rng.random() < 0.5:
                start = rng.randint(base.start, base.end)
                end = rng.randint(start, base.end)
            else:
                start = max(0, base.start - rng.randint(0, 2))
                end = base.end + rng.randint(0, 2)
        else:
            start = rng.randint(0, 2 * n)
            end = start + rng.randint(0, 3)
        pool.add(Span(rng.randint(0, 1) if overlap and rng.random() < 0.2 else 0, start, end))
    return sorted(pool)


def _partition(rng: random.Random, mentions: list, max_clusters: int, mode: str) -> EntityPartition:
    mentions = list(mentions)
    if mode == "one":
        clusters = [mentions]
    elif mode == "pairs":
        rng.shuffle(mentions)
        clusters = [mentions[i : i + 2] for i in range(0, len(mentions), 2)]
    else:
        k = rng.randint(1, max_clusters)
        clusters = [[] for _ in range(k)]
        for m in mentions:
            clusters[rng.randrange(k)].append(m)
    return EntityPartition(c for c in clusters if len(c) >= 2)


def random_instance(spec: RandomInstanceSpec) -> tuple[EntityPartition, EntityPartition]:
    """Gold and predicted singleton-free partitions over a shared mention pool.

    A fixed share of instances hits the edge cases: everything in one cluster,
    all pairs, or prediction equal to gold.
    """
    rng = random.Random(spec.seed)
    pool = _mention_pool(rng, spec.n_mentions, spec.overlap_allowed)
    roll = rng.random()
    gold_mode = "one" if roll < 0.1 else "pairs" if roll < 0.2 else "random"
    gold_mentions = [m for m in pool if rng.random() < 0.8] or pool[:2]
    gold = _partition(rng, gold_mentions, spec.max_clusters, gold_mode)
    if rng.random() < 0.1:
        return gold, gold
    roll = rng.random()
    pred_mode = "one" if roll < 0.1 else "pairs" if roll < 0.2 else "random"
    pred_mentions = [m for m in pool if rng.random() < 0.75]
    pred = _partition(rng, pred_mentions, spec.max_clusters, pred_mode)
    return gold, pred


def exact_fraction_b_cubed(gold, pred):
    """B-cubed recall and precision as exact fractions (for hand-checked fixtures)."""
    g, p = _clusters(gold), _clusters(pred)
    gm = [m for c in g for m in c]
    pm = [m for c in p for m in c]
    r = sum(Fraction(len(_cluster_containing(m, g) & _cluster_containing(m, p)), len(_cluster_containing(m, g))) for m in gm)
    pr = sum(Fraction(len(_cluster_containing(m, p) & _cluster_containing(m, g)), len(_cluster_containing(m, p))) for m in pm)
    return (r / len(gm) if gm else None), (pr / len(pm) if pm else None)
