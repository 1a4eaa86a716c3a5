import pytest

from conftest import aligned_doc, conll, conllu, sp
from corefgap.errors import ConfigError, InvariantError
from corefgap.fixtures import fixture_ids, load_fixture
from corefgap.ingest import EntityPartition, Span
from corefgap.mention_types import (
    ALL_TYPES,
    APPOSITIVE,
    COPULAR,
    NESTED,
    TypingConfig,
    builtin_predicates,
    find_head,
    is_appositive,
    is_compound,
    is_copular,
    is_nested,
    is_on_generic,
    is_verb_phrase,
    resolve_types,
    type_all,
)


def fixture_doc(fid, doc_id):
    return load_fixture(fid).corpus()[doc_id]


def type_expectations():
    for fid in fixture_ids():
        fx = load_fixture(fid)
        for i, exp in enumerate(fx.expectations):
            if exp["kind"] in ("types", "head"):
                yield pytest.param(fid, exp, id=f"{fid}-{exp['kind']}-{i}")


@pytest.mark.parametrize("fid,exp", list(type_expectations()))
def test_fixture_expectations(fid, exp):
    doc = fixture_doc(fid, exp["doc"])
    span = Span(*exp["span"])
    if exp["kind"] == "head":
        assert find_head(span, doc) == exp["value"]
    else:
        typed = {t.span: t.types for t in type_all(doc, doc.gold)}
        assert typed[span] == frozenset(exp["value"])


class TestHead:
    def test_farm(self):
        doc = fixture_doc("sec4-farm-generic", "farm_0")
        assert doc.token(0, find_head(sp(5, 6), doc)).form == "farm"

    def test_single_token(self):
        doc = fixture_doc("sec4-taiwan-compound", "taiwan_0")
        assert find_head(sp(3), doc) == 3

    def test_bed_itself(self):
        doc = fixture_doc("sec5-bed-itself", "bed_0")
        assert doc.token(0, find_head(sp(7, 9), doc)).form == "bed"

    def test_no_external_head_falls_back_to_rightmost(self):
        # a cycle-free parse cannot produce this, so force it by hand
        from corefgap.ingest import Document, Token

        toks = (Token(0, "a", "DT", 1, "det"), Token(1, "b", "NN", 0, "dep"))
        doc = Document("d", (toks,), EntityPartition())
        assert find_head(sp(0, 1), doc) == 1

    def test_unparsed_document_is_an_error(self):
        from corefgap.ingest import Document, Token

        doc = Document("d", ((Token(0, "a"),),), EntityPartition())
        with pytest.raises(InvariantError):
            find_head(sp(0), doc)


class TestNested:
    def test_disjoint_mentions_are_not_nested(self):
        p = EntityPartition([[sp(0), sp(2)]])
        assert not is_nested(sp(0), p)

    def test_overlap_across_clusters_is_not_nested(self):
        p = EntityPartition([[sp(0, 1), sp(5)], [sp(1), sp(7)]])
        assert not is_nested(sp(1), p)
        assert not is_nested(sp(0, 1), p)

    def test_partial_overlap_counts(self):
        p = EntityPartition([[sp(0, 2), sp(2, 4)]])
        assert is_nested(sp(0, 2), p)

    def test_non_member_is_an_error(self):
        with pytest.raises(InvariantError):
            is_nested(sp(9), EntityPartition([[sp(0), sp(1)]]))


class TestOnGeneric:
    def test_bridges_blocked_by_definite_det(self):
        doc = fixture_doc("table1-ontonotes-bridges", "bridges_0")
        assert not is_on_generic(Span(1, 8, 10), doc.gold, doc)

    def test_plural_with_indefinite_quantifier_det(self):
        text = conll("g", [("some", "(0"), ("trees", "0)"), ("grow", "-"), ("trees", "(0)")])
        parse = conllu("g_0", [[("some", "DT", 2, "det"), ("trees", "NNS", 3, "nsubj"),
                                ("grow", "VBP", 0, "root"), ("trees", "NNS", 3, "obj")]])
        doc = aligned_doc(text, parse)
        # a non-indefinite det blocks the plural clause
        assert not is_on_generic(sp(0, 1), doc.gold, doc)
        assert is_on_generic(sp(3), doc.gold, doc)

    def test_configurable_articles(self):
        doc = fixture_doc("sec4-farm-generic", "farm_0")
        cfg = TypingConfig(indefinite_articles=frozenset({"un"}))
        assert not is_on_generic(sp(5, 6), doc.gold, doc, cfg)


class TestCompound:
    def test_taiwan_as_subject(self):
        text = conll("t", [("Taiwan", "(0)"), ("won", "-"), ("and", "-"), ("Taiwan", "(0)"), ("cheered", "-")])
        parse = conllu("t_0", [[("Taiwan", "NNP", 2, "nsubj"), ("won", "VBD", 0, "root"), ("and", "CC", 5, "cc"),
                                ("Taiwan", "NNP", 5, "nsubj"), ("cheered", "VBD", 2, "conj")]])
        doc = aligned_doc(text, parse)
        assert not is_compound(sp(0), doc.gold, doc)

    def test_dairy_with_compound_label(self):
        doc = fixture_doc("sec4-farm-generic", "farm_0")
        assert is_compound(Span(1, 10, 10), None, doc)


GIRL = [("I", "(0)"), ("will", "-"), ("always", "-"), ("be", "-"), ("his", "(1"), ("little", "-"), ("girl", "1)"),
        (",", "-"), ("me", "(0)"), ("and", "-"), ("her", "(1)")]
GIRL_PARSE = conllu("c_0", [[("I", "PRP", 7, "nsubj"), ("will", "MD", 7, "aux"), ("always", "RB", 7, "advmod"),
                             ("be", "VB", 7, "cop"), ("his", "PRP$", 7, "nmod:poss"), ("little", "JJ", 7, "amod"),
                             ("girl", "NN", 0, "root"), (",", ",", 7, "punct"), ("me", "PRP", 7, "appos"),
                             ("and", "CC", 11, "cc"), ("her", "PRP", 9, "conj")]])


class TestCopular:
    def test_different_clusters_are_not_copular(self):
        doc = aligned_doc(conll("c", GIRL), GIRL_PARSE)
        assert not is_copular(sp(0), doc.gold, doc)
        assert not is_copular(sp(4, 6), doc.gold, doc)

    def test_zhou(self):
        doc = load_fixture("sec5-zhou-hanhug").corpus().documents[0]
        typed = [t for t in type_all(doc, doc.gold) if COPULAR in t.types]
        assert len(typed) == 2

    def test_non_member_is_an_error(self):
        doc = aligned_doc(conll("c", GIRL), GIRL_PARSE)
        with pytest.raises(InvariantError):
            is_copular(sp(1), doc.gold, doc)


class TestVerbPhrase:
    def test_the_growth(self):
        doc = load_fixture("table1-vp-grow").corpus().documents[0]
        typed = {t.span: t.types for t in type_all(doc, doc.gold)}
        assert sum("VerbPhrase" in v for v in typed.values()) == 1

    def test_all_tokens_must_be_verbal(self):
        doc = aligned_doc(conll("c", GIRL), GIRL_PARSE)
        assert not is_verb_phrase(sp(4, 6), None, doc)


class TestAppositive:
    ROWS = [("Abe", "(0)"), (",", "-"), ("the", "(0"), ("chef", "0)"), ("left", "-"), (".", "-")]
    PARSE = [("Abe", "NNP", 5, "nsubj"), (",", ",", 1, "punct"), ("the", "DT", 4, "det"),
             ("chef", "NN", 1, "appos"), ("left", "VBD", 0, "root"), (".", ".", 5, "punct")]

    def test_two_sentences_apart(self):
        rows = [("Abe", "(0)"), ("left", "-"), None, ("the", "(0"), ("chef", "0)"), ("sang", "-")]
        parse = conllu("a_0", [[("Abe", "NNP", 2, "nsubj"), ("left", "VBD", 0, "root")],
                               [("the", "DT", 2, "det"), ("chef", "NN", 3, "nsubj"), ("sang", "VBD", 0, "root")]])
        doc = aligned_doc(conll("a", rows), parse)
        assert not is_appositive(sp(0), doc.gold, doc)

    def test_adjacent_non_coreferring(self):
        rows = [("Abe", "(0)"), (",", "-"), ("the", "(1"), ("chef", "1)"), ("left", "-"), ("him", "(0)"),
                ("her", "(1)")]
        parse = conllu("a_0", [self.PARSE[:5] + [("him", "PRP", 5, "obj"), ("her", "PRP", 5, "iobj")]])
        doc = aligned_doc(conll("a", rows), parse)
        assert not is_appositive(sp(0), doc.gold, doc)
        assert not is_appositive(sp(2, 3), doc.gold, doc)

    def test_punctuation_set_is_configurable(self):
        doc = aligned_doc(conll("a", self.ROWS), conllu("a_0", [self.PARSE]))
        assert is_appositive(sp(0), doc.gold, doc)
        assert not is_appositive(sp(0), doc.gold, doc, TypingConfig(punctuation_pos=frozenset({":"})))


def test_type_all_empty_document():
    doc = aligned_doc(conll("e", [("x", "-")]), conllu("e_0", [[("x", "NN", 0, "root")]]))
    assert type_all(doc, doc.gold) == []


def test_types_are_not_exclusive():
    doc = fixture_doc("table1-abe-chef", "abe_nested_0")
    typed = {t.span: t.types for t in type_all(doc, doc.gold)}
    assert typed[sp(0)] == {APPOSITIVE, NESTED}


def test_typed_mentions_record_origin_and_head():
    doc = fixture_doc("sec5-bed-itself", "bed_0")
    for t in type_all(doc, doc.gold, "predicted"):
        assert t.partition_origin == "predicted"
        assert t.span.start <= t.head_token[1] <= t.span.end


def test_resolve_types():
    assert [p.name for p in resolve_types("nested, vp,on-generic")] == ["Nested", "VerbPhrase", "OnGeneric"]
    assert [p.name for p in resolve_types(None)] == ["Nested", "OnGeneric", "Compound", "Copular"]
    with pytest.raises(ConfigError):
        resolve_types("bogus")
    assert set(builtin_predicates()) == set(ALL_TYPES)


def test_typing_config_rejects_unknown_keys():
    with pytest.raises(ConfigError):
        TypingConfig.from_dict({"colour": ["red"]})
