"""Mention-type predicates driven by POS tags, dependency edges and clusters.

Every predicate has the signature ``test(mention, partition, document,
config)``. Relation-dependent types (Nested, Copular, Appositive) read only
the partition they are given; pass the gold partition to type gold mentions
and the predicted partition to type predicted mentions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Iterable, TextIO

from .errors import ConfigError, InvariantError
from .ingest import ROOT, Document, EntityPartition, Span

NESTED = "Nested"
ON_GENERIC = "OnGeneric"
COMPOUND = "Compound"
COPULAR = "Copular"
VERB_PHRASE = "VerbPhrase"
APPOSITIVE = "Appositive"

DISPLAY_NAMES = {
    NESTED: "Nested",
    ON_GENERIC: "ON Generic",
    COMPOUND: "Compound",
    COPULAR: "Copular",
    VERB_PHRASE: "VP",
    APPOSITIVE: "Appositive",
}


@dataclass(frozen=True)
class TypingConfig:
    compound_labels: frozenset[str] = frozenset({"compound:nn", "compound", "nn"})
    punctuation_pos: frozenset[str] = frozenset({",", ":", "-LRB-", "-RRB-", "HYPH"})
    indefinite_articles: frozenset[str] = frozenset({"a", "an"})
    plural_pos: frozenset[str] = frozenset({"NNS"})

    @classmethod
    def from_dict(cls, data: dict | None) -> "TypingConfig":
        if not data:
            return cls()
        known = {"compound_labels", "punctuation_pos", "indefinite_articles", "plural_pos"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown typing options: {sorted(unknown)}")
        return cls(**{k: frozenset(v) for k, v in data.items()})


DEFAULT_CONFIG = TypingConfig()


def _require_parse(document: Document, span: Span):
    for tok in document.span_tokens(span):
        if tok.head is None:
            raise InvariantError(f"{document.doc_id}: mention {span.to_list()} has no parse")


def _require_member(mention: Span, partition: EntityPartition):
    if mention not in partition:
        raise InvariantError(f"mention {mention.to_list()} is not in the partition")


def find_head(span: Span, document: Document) -> int:
    """Index (within the sentence) of the span's syntactic head.

    The head is the token whose governor lies outside the span or is ROOT;
    ties go to the leftmost such token, and the rightmost token is returned
    when none qualifies.
    """
    _require_parse(document, span)
    for tok in document.span_tokens(span):
        if tok.head == ROOT or not (span.start <= tok.head <= span.end):
            return tok.index
    return span.end


def _dependents(document: Document, sentence: int, head: int, lo: int = None, hi: int = None):
    tokens = document.sentences[sentence]
    if lo is None:
        lo, hi = 0, len(tokens) - 1
    return [t for t in tokens[lo : hi + 1] if t.head == head]


def is_nested(mention: Span, partition: EntityPartition, document: Document = None, config=DEFAULT_CONFIG) -> bool:
    _require_member(mention, partition)
    return any(other != mention and other.overlaps(mention) for other in partition.cluster_of(mention))


def is_on_generic(mention: Span, partition=None, document: Document = None, config=DEFAULT_CONFIG) -> bool:
    head = find_head(mention, document)
    dets = [
        t
        for t in _dependents(document, mention.sentence_index, head, mention.start, mention.end)
        if t.deprel == "det"
    ]
    if any(t.form.lower() in config.indefinite_articles for t in dets):
        return True
    return not dets and document.token(mention.sentence_index, head).pos in config.plural_pos


def is_compound(mention: Span, partition=None, document: Document = None, config=DEFAULT_CONFIG) -> bool:
    head = find_head(mention, document)
    return document.token(mention.sentence_index, head).deprel in config.compound_labels


def _is_nsubj(deprel: str | None) -> bool:
    return deprel is not None and deprel.split(":", 1)[0] == "nsubj"


def is_copular(mention: Span, partition: EntityPartition, document: Document, config=DEFAULT_CONFIG) -> bool:
    _require_member(mention, partition)
    s = mention.sentence_index
    head = find_head(mention, document)
    tokens = document.sentences[s]
    for other in partition.cluster_of(mention):
        if other == mention or other.sentence_index != s:
            continue
        other_head = find_head(other, document)
        if head == other_head:
            continue
        linked = (_is_nsubj(tokens[head].deprel) and tokens[head].head == other_head) or (
            _is_nsubj(tokens[other_head].deprel) and tokens[other_head].head == head
        )
        if not linked:
            continue
        rightmost_head = head if (mention.start, mention.end) > (other.start, other.end) else other_head
        if any(t.deprel == "cop" for t in _dependents(document, s, rightmost_head)):
            return True
    return False


def is_verb_phrase(mention: Span, partition=None, document: Document = None, config=DEFAULT_CONFIG) -> bool:
    tokens = document.span_tokens(mention)
    if any(t.pos is None for t in tokens):
        _require_parse(document, mention)
    return all(t.pos.startswith("V") for t in tokens)


def is_appositive(mention: Span, partition: EntityPartition, document: Document, config=DEFAULT_CONFIG) -> bool:
    _require_member(mention, partition)
    tokens = document.sentences[mention.sentence_index]
    for other in partition.cluster_of(mention):
        if other == mention or other.sentence_index != mention.sentence_index:
            continue
        if other.start > mention.end:
            gap = other.start - mention.end - 1
            between = mention.end + 1
        elif mention.start > other.end:
            gap = mention.start - other.end - 1
            between = other.end + 1
        else:
            continue
        if gap == 0:
            return True
        if gap == 1:
            pos = tokens[between].pos
            if pos is None:
                raise InvariantError(f"{document.doc_id}: appositive check needs POS tags")
            if pos in config.punctuation_pos:
                return True
    return False


@dataclass(frozen=True)
class TypePredicate:
    name: str
    test: Callable[..., bool]
    relational: bool = False
    config: TypingConfig = field(default=DEFAULT_CONFIG, compare=False)

    def __call__(self, mention: Span, partition: EntityPartition, document: Document) -> bool:
        return self.test(mention, partition, document, self.config)

    @property
    def display_name(self) -> str:
        return DISPLAY_NAMES.get(self.name, self.name)


def builtin_predicates(config: TypingConfig = DEFAULT_CONFIG) -> dict[str, TypePredicate]:
    return {
        NESTED: TypePredicate(NESTED, is_nested, True, config),
        ON_GENERIC: TypePredicate(ON_GENERIC, is_on_generic, False, config),
        COMPOUND: TypePredicate(COMPOUND, is_compound, False, config),
        COPULAR: TypePredicate(COPULAR, is_copular, True, config),
        VERB_PHRASE: TypePredicate(VERB_PHRASE, is_verb_phrase, False, config),
        APPOSITIVE: TypePredicate(APPOSITIVE, is_appositive, True, config),
    }


DEFAULT_TYPES = (NESTED, ON_GENERIC, COMPOUND, COPULAR)
ALL_TYPES = (NESTED, ON_GENERIC, COMPOUND, COPULAR, VERB_PHRASE, APPOSITIVE)

_ALIASES = {
    "nested": NESTED,
    "ongeneric": ON_GENERIC,
    "generic": ON_GENERIC,
    "compound": COMPOUND,
    "copular": COPULAR,
    "verbphrase": VERB_PHRASE,
    "vp": VERB_PHRASE,
    "appositive": APPOSITIVE,
}


def resolve_type_name(name: str) -> str:
    key = name.replace("_", "").replace("-", "").replace(" ", "").lower()
    try:
        return _ALIASES[key]
    except KeyError:
        raise ConfigError(f"unknown mention type {name!r}; choose from {', '.join(ALL_TYPES)}") from None


def resolve_types(names: Iterable[str] | str | None, config: TypingConfig = DEFAULT_CONFIG) -> list[TypePredicate]:
    if names is None:
        names = DEFAULT_TYPES
    elif isinstance(names, str):
        names = [n for n in names.split(",") if n.strip()]
    table = builtin_predicates(config)
    return [table[resolve_type_name(n.strip())] for n in names]


@dataclass(frozen=True)
class TypedMention:
    span: Span
    head_token: tuple[int, int]
    types: frozenset[str]
    partition_origin: str

    def to_dict(self, doc_id: str | None = None) -> dict:
        out = {
            "span": self.span.to_list(),
            "head": list(self.head_token),
            "types": sorted(self.types),
            "origin": self.partition_origin,
        }
        if doc_id is not None:
            out = {"doc_id": doc_id, **out}
        return out


def type_all(
    document: Document,
    partition: EntityPartition,
    origin: str = "gold",
    predicates: Iterable[TypePredicate] | None = None,
) -> list[TypedMention]:
    if origin not in ("gold", "predicted"):
        raise ValueError(f"origin must be gold or predicted, got {origin!r}")
    predicates = list(builtin_predicates().values()) if predicates is None else list(predicates)
    out = []
    for span in partition.mentions:
        head = find_head(span, document)
        types = frozenset(p.name for p in predicates if p(span, partition, document))
        out.append(TypedMention(span, (span.sentence_index, head), types, origin))
    return out


def dump_typed_mentions(documents: Iterable[Document], stream: TextIO, predicates=None) -> None:
    """Write one JSON line per typed mention for gold and, if attached, predicted partitions."""
    for doc in documents:
        if not doc.parsed:
            continue
        sides = [("gold", doc.gold)]
        if doc.predicted is not None:
            sides.append(("predicted", doc.predicted))
        for origin, partition in sides:
            for tm in type_all(doc, partition, origin, predicates):
                stream.write(json.dumps(tm.to_dict(doc.doc_id), sort_keys=True) + "\n")
