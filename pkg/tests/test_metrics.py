from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import letters, sp
from corefgap.ingest import EntityPartition
from corefgap.mention_types import builtin_predicates
from corefgap.metrics import (
    ALL,
    B_CUBED,
    CEAF_E,
    CONLL,
    MUC,
    Counts,
    ScoreTriple,
    b_cubed,
    b_cubed_counts,
    b_cubed_typed,
    ceaf_e,
    ceaf_e_similarity,
    conll_f1,
    conll_from_scores,
    corpus_scores,
    document_counts,
    harmonic_f1,
    muc,
)
from corefgap.oracles import RandomInstanceSpec, naive_b_cubed, naive_ceaf_matching, random_instance


def approx(t: ScoreTriple, r, p, f):
    assert t.recall == pytest.approx(r)
    assert t.precision == pytest.approx(p)
    assert t.f1 == pytest.approx(f)


class TestBCubed:
    def test_identity(self):
        g = letters("ab", "cde")
        approx(b_cubed(g, g), 1, 1, 1)

    def test_merge(self):
        approx(b_cubed(letters("ab", "cd"), letters("abcd")), 1.0, 0.5, 2 / 3)

    def test_missing_cluster(self):
        approx(b_cubed(letters("ab", "cd"), letters("ab")), 0.5, 1.0, 2 / 3)

    def test_empty_gold_is_na(self):
        t = b_cubed(EntityPartition(), letters("ab"))
        assert t.recall is None and t.support_gold == 0
        assert t.f1 == 0.0 and t.partial

    def test_both_empty(self):
        t = b_cubed(EntityPartition(), EntityPartition())
        assert t.f1 is None and not t.partial


class TestTyped:
    def test_always_true_is_plain(self):
        g, p = letters("abc", "de"), letters("ab", "cde")
        t = b_cubed_typed(g, p, lambda m, part, d: True, None)
        assert t == b_cubed(g, p)

    def test_always_false(self):
        g, p = letters("abc"), letters("abc")
        t = b_cubed_typed(g, p, lambda m, part, d: False, None)
        assert t.f1 is None
        assert (t.support_gold, t.support_pred) == (0, 0)

    def test_nested_partial_recovery(self):
        # gold: "he himself" [0,1] + "himself" [1] + "him" [4]; "Ann" [6] + "she" [8]
        # pred recovers [0,1] with [4] but puts [1] with [6, 8]
        gold = EntityPartition([[sp(0, 1), sp(1), sp(4)], [sp(6), sp(8)]])
        pred = EntityPartition([[sp(0, 1), sp(4)], [sp(1), sp(6), sp(8)]])
        nested = builtin_predicates()["Nested"]
        t = b_cubed_typed(gold, pred, nested, None)
        # gold nested mentions: [0,1] -> |{01,4}|/3 = 2/3 ; [1] -> |{1}|/3 = 1/3
        assert t.recall == pytest.approx((2 / 3 + 1 / 3) / 2)
        # no predicted mention overlaps another of its own predicted cluster
        assert t.precision is None and t.partial and t.f1 == 0.0
        r, _, _ = naive_b_cubed(gold, pred, gold_filter=lambda m: m in {sp(0, 1), sp(1)})
        assert t.recall == pytest.approx(r, abs=1e-12)


class TestMuc:
    def test_identity(self):
        approx(muc(letters("abc"), letters("abc")), 1, 1, 1)

    def test_split_with_extra(self):
        t = muc(letters("abc"), letters("ab", "cd"))
        assert t.recall == pytest.approx(0.5)

    def test_disjoint(self):
        assert muc(letters("ab"), letters("cd")).recall == 0


class TestCeaf:
    def test_identity(self):
        approx(ceaf_e(letters("ab", "cde"), letters("ab", "cde")), 1, 1, 1)

    def test_single_pair(self):
        approx(ceaf_e(letters("ab"), letters("ac")), 0.5, 0.5, 0.5)

    def test_empty_pred(self):
        t = ceaf_e(letters("ab"), EntityPartition())
        assert t.precision is None and t.recall == 0.0

    def test_matches_oracle_on_crafted_case(self):
        g, p = letters("abc", "de"), letters("abcd", "ef")
        assert ceaf_e_similarity(g, p) == pytest.approx(naive_ceaf_matching(g, p))


class TestConll:
    def test_identity(self):
        assert conll_f1(letters("ab", "cd"), letters("ab", "cd")) == pytest.approx(1.0)

    def test_mean(self):
        t = ScoreTriple.build(0.6, 0.6)
        assert conll_from_scores(t, t, t) == pytest.approx(0.6)

    def test_na_component(self):
        assert conll_from_scores(ScoreTriple(None, None, None), ScoreTriple.build(1, 1), ScoreTriple.build(1, 1)) is None


def test_harmonic_f1():
    assert harmonic_f1(None, None) is None
    assert harmonic_f1(0.5, None) == 0.0
    assert harmonic_f1(0.0, 0.0) == 0.0
    assert harmonic_f1(0.5, 1.0) == pytest.approx(2 / 3)


def test_micro_corpus_hand_values(micro):
    corpus = micro.with_predictions("sys")
    scores = corpus_scores(document_counts(d) for d in corpus)
    wanted = {e["metric"]: e for e in micro.expectations if e["kind"] == "score"}
    for metric, exp in wanted.items():
        got = scores[(metric, ALL)]
        assert got.recall == pytest.approx(float(Fraction(*exp["R"])), abs=1e-12)
        assert got.precision == pytest.approx(float(Fraction(*exp["P"])), abs=1e-12)
    assert scores[(CONLL, ALL)].f1 == pytest.approx(sum(scores[(m, ALL)].f1 for m in (MUC, B_CUBED, CEAF_E)) / 3)


def test_typed_records_only_for_parsed_documents(micro):
    doc = micro.with_predictions("sys").documents[0]
    preds = [builtin_predicates()["Nested"]]
    assert (B_CUBED, "Nested") in document_counts(doc, predicates=preds)
    from dataclasses import replace

    bare = replace(doc, sentences=tuple(tuple(replace(t, head=None) for t in s) for s in doc.sentences))
    assert (B_CUBED, "Nested") not in document_counts(bare, predicates=preds)


def test_counts_add():
    a, b = Counts(1, 2, 3, 4, 5, 6), Counts(1, 1, 1, 1, 1, 1)
    assert (a + b).as_tuple() == (2, 3, 4, 5, 6, 7)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 12), st.booleans())
def test_bcubed_is_bounded_and_symmetric(seed, n, overlap):
    g, p = random_instance(RandomInstanceSpec(n, 4, seed, overlap))
    fwd, back = b_cubed_counts(g, p), b_cubed_counts(p, g)
    assert fwd.r_num == pytest.approx(back.p_num)
    t = fwd.to_triple()
    for v in (t.recall, t.precision, t.f1):
        assert v is None or 0 <= v <= 1 + 1e-12
