"""Reading CoNLL-2012 coreference files and CoNLL-U dependency sidecars.

Gold and system files share one reader. Cluster brackets live in the last
column; stacked brackets are separated by ``|``. A label of the form
``12#3`` marks one fragment of discontinuous mention 3 in cluster 12: every
fragment carrying the same label in a document belongs to the same mention.
Discontinuous mentions are kept only so that :func:`filter_scope` can count
what it drops.
"""

from __future__ import annotations

import dataclasses
import io
import json
import logging
import random
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, TextIO

from .errors import AlignmentError, ConfigError, InvariantError, ParseError

logger = logging.getLogger(__name__)

ROOT = -1
SPLITS = ("train", "dev", "test")

DEFAULT_NORMALIZATION = {
    "-LRB-": "(",
    "-RRB-": ")",
    "-LSB-": "[",
    "-RSB-": "]",
    "-LCB-": "{",
    "-RCB-": "}",
    "``": '"',
    "''": '"',
    "/.": ".",
    "/?": "?",
    "/-": "-",
}


@dataclass(frozen=True)
class Token:
    index: int
    form: str
    pos: str | None = None
    # 0-based governor index within the sentence, ROOT, or None if unparsed
    head: int | None = None
    deprel: str | None = None


@dataclass(frozen=True, order=True)
class Span:
    """Contiguous token interval ``[start, end]`` (inclusive) in one sentence."""

    sentence_index: int
    start: int
    end: int

    def __post_init__(self):
        if self.start < 0 or self.sentence_index < 0 or self.end < self.start:
            raise InvariantError(f"invalid span {self!r}")

    def __len__(self):
        return self.end - self.start + 1

    def overlaps(self, other: "Span") -> bool:
        return (
            self.sentence_index == other.sentence_index
            and self.start <= other.end
            and other.start <= self.end
        )

    def positions(self) -> range:
        return range(self.start, self.end + 1)

    def to_list(self) -> list[int]:
        return [self.sentence_index, self.start, self.end]


class EntityPartition:
    """Disjoint mention clusters over one document.

    Clusters are stored as sorted tuples of spans and ordered by their first
    mention, so two partitions with the same set-of-sets compare equal and
    iterate identically.
    """

    __slots__ = ("clusters", "mention_index")

    def __init__(self, clusters: Iterable[Iterable[Span]] = ()):
        built = []
        for cluster in clusters:
            spans = tuple(sorted(set(cluster)))
            if not spans:
                raise InvariantError("empty cluster")
            built.append(spans)
        built.sort()
        self.clusters: tuple[tuple[Span, ...], ...] = tuple(built)
        self.mention_index: dict[Span, int] = {}
        for cid, spans in enumerate(self.clusters):
            for span in spans:
                if span in self.mention_index:
                    raise InvariantError(f"span {span} appears in two clusters")
                self.mention_index[span] = cid

    def __len__(self):
        return len(self.clusters)

    def __iter__(self):
        return iter(self.clusters)

    def __contains__(self, span):
        return span in self.mention_index

    def __eq__(self, other):
        if not isinstance(other, EntityPartition):
            return NotImplemented
        return self.clusters == other.clusters

    def __hash__(self):
        return hash(self.clusters)

    def __repr__(self):
        return f"EntityPartition({[list(c) for c in self.clusters]!r})"

    @property
    def mentions(self) -> list[Span]:
        return sorted(self.mention_index)

    def cluster_of(self, span: Span) -> tuple[Span, ...]:
        return self.clusters[self.mention_index[span]]

    def as_set(self) -> frozenset:
        return frozenset(frozenset(c) for c in self.clusters)

    def without_cluster(self, index: int) -> "EntityPartition":
        return EntityPartition(c for i, c in enumerate(self.clusters) if i != index)

    def to_list(self) -> list[list[list[int]]]:
        return [[s.to_list() for s in c] for c in self.clusters]

    @classmethod
    def from_list(cls, data) -> "EntityPartition":
        return cls([Span(*s) for s in c] for c in data)


@dataclass(frozen=True)
class DiscontinuousMention:
    cluster: str
    fragments: tuple[Span, ...]


@dataclass(frozen=True)
class ScopeCounts:
    discontinuous_mentions: int = 0
    singleton_mentions: int = 0
    clusters_removed: int = 0


@dataclass(frozen=True)
class Document:
    doc_id: str
    sentences: tuple[tuple[Token, ...], ...]
    gold: EntityPartition
    discontinuous: tuple[DiscontinuousMention, ...] = ()
    predicted: EntityPartition | None = None
    pred_discontinuous: tuple[DiscontinuousMention, ...] = ()

    @property
    def word_count(self) -> int:
        return sum(len(s) for s in self.sentences)

    @property
    def parsed(self) -> bool:
        return all(t.head is not None for s in self.sentences for t in s)

    def token(self, sentence_index: int, index: int) -> Token:
        return self.sentences[sentence_index][index]

    def span_tokens(self, span: Span) -> tuple[Token, ...]:
        return self.sentences[span.sentence_index][span.start : span.end + 1]

    def span_text(self, span: Span) -> str:
        return " ".join(t.form for t in self.span_tokens(span))

    def check_span(self, span: Span) -> bool:
        return span.sentence_index < len(self.sentences) and span.end < len(
            self.sentences[span.sentence_index]
        )

    def to_dict(self) -> dict:
        out = {
            "doc_id": self.doc_id,
            "sentences": [
                [
                    {"form": t.form, "pos": t.pos, "head": t.head, "deprel": t.deprel}
                    for t in sent
                ]
                for sent in self.sentences
            ],
            "clusters": self.gold.to_list(),
        }
        if self.predicted is not None:
            out["predicted"] = self.predicted.to_list()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Document":
        sentences = tuple(
            tuple(
                Token(i, t["form"], t.get("pos"), t.get("head"), t.get("deprel"))
                for i, t in enumerate(sent)
            )
            for sent in data["sentences"]
        )
        predicted = data.get("predicted")
        return cls(
            doc_id=data["doc_id"],
            sentences=sentences,
            gold=EntityPartition.from_list(data["clusters"]),
            predicted=None if predicted is None else EntityPartition.from_list(predicted),
        )


@dataclass(frozen=True)
class Corpus:
    name: str
    split: str
    documents: tuple[Document, ...]
    warnings: tuple[str, ...] = ()
    scope: ScopeCounts | None = None
    _index: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.split not in SPLITS:
            raise InvariantError(f"split must be one of {SPLITS}, got {self.split!r}")
        index = {}
        for doc in self.documents:
            if doc.doc_id in index:
                raise InvariantError(f"duplicate document id {doc.doc_id!r} in {self.name}")
            index[doc.doc_id] = doc
        object.__setattr__(self, "_index", index)

    def __len__(self):
        return len(self.documents)

    def __iter__(self) -> Iterator[Document]:
        return iter(self.documents)

    def __getitem__(self, doc_id: str) -> Document:
        return self._index[doc_id]

    def __contains__(self, doc_id):
        return doc_id in self._index

    @property
    def doc_ids(self) -> list[str]:
        return [d.doc_id for d in self.documents]

    def replace(self, **changes) -> "Corpus":
        return dataclasses.replace(self, **changes)

    def partitions(self) -> dict[str, frozenset]:
        return {d.doc_id: d.gold.as_set() for d in self.documents}


@dataclass
class IngestOptions:
    # None picks the CoNLL-2012 word column (3) for wide rows, else 1, else 0
    word_column: int | None = None
    source: str | None = None


def _lines(stream: TextIO | str) -> Iterable[str]:
    if isinstance(stream, str):
        return io.StringIO(stream)
    return stream


_BEGIN_RE = re.compile(r"^#\s*begin document\s*(.*?)\s*$")
_PART_RE = re.compile(r"^\((.*)\);\s*part\s+(\S+)$")
_BRACKET_RE = re.compile(r"^(\(?)([^()|]+)(\)?)$")


def _doc_id(header: str) -> str:
    m = _PART_RE.match(header)
    if m:
        name, part = m.groups()
        return f"{name}_{int(part)}" if part.isdigit() else f"{name}_{part}"
    if header.startswith("(") and header.endswith(")"):
        return header[1:-1]
    return header


def _word_column(ncols: int, options: IngestOptions) -> int:
    if options.word_column is not None:
        return options.word_column
    if ncols >= 5:
        return 3
    if ncols >= 3:
        return 1
    return 0


class _DocBuilder:
    def __init__(self, doc_id, line_no, source):
        self.doc_id = doc_id
        self.line_no = line_no
        self.source = source
        self.sentences: list[tuple[Token, ...]] = []
        self.current: list[Token] = []
        self.stacks: dict[str, list[tuple[int, int]]] = {}
        # (label, span, line of opening bracket)
        self.mentions: list[tuple[str, Span, int]] = []

    def add_token(self, form, coref, line_no):
        sent = len(self.sentences)
        index = len(self.current)
        self.current.append(Token(index, form))
        if coref in ("-", "_"):
            return
        for part in coref.split("|"):
            m = _BRACKET_RE.match(part)
            if not m or not (m.group(1) or m.group(3)):
                raise ParseError(f"malformed coreference field {coref!r}", line_no, self.source)
            opened, label, closed = m.groups()
            if opened and closed:
                self.mentions.append((label, Span(sent, index, index), line_no))
            elif opened:
                self.stacks.setdefault(label, []).append((index, line_no))
            else:
                stack = self.stacks.get(label)
                if not stack:
                    raise ParseError(
                        f"closing bracket for cluster {label} without matching open",
                        line_no,
                        self.source,
                    )
                start, open_line = stack.pop()
                self.mentions.append((label, Span(sent, start, index), open_line))

    def end_sentence(self):
        for label, stack in self.stacks.items():
            if stack:
                raise ParseError(
                    f"cluster {label} opened but not closed before sentence end",
                    stack[-1][1],
                    self.source,
                )
        if self.current:
            self.sentences.append(tuple(self.current))
            self.current = []

    def build(self) -> tuple[Document, list[str]]:
        self.end_sentence()
        warnings = []
        contiguous: dict[str, list[Span]] = {}
        fragments: dict[str, list[Span]] = {}
        first_line: dict[Span, int] = {}
        for label, span, line in self.mentions:
            if "#" in label:
                fragments.setdefault(label, []).append(span)
                continue
            spans = contiguous.setdefault(label, [])
            if span in spans:
                msg = f"{self.doc_id}: duplicate mention {span.to_list()} in cluster {label} collapsed"
                warnings.append(msg)
                logger.warning(msg)
                continue
            spans.append(span)
            first_line.setdefault(span, line)
        discontinuous = []
        for label, frags in fragments.items():
            cluster = label.split("#", 1)[0]
            if len(frags) == 1:
                spans = contiguous.setdefault(cluster, [])
                if frags[0] not in spans:
                    spans.append(frags[0])
                continue
            discontinuous.append(DiscontinuousMention(cluster, tuple(sorted(frags))))
            # a cluster made only of discontinuous mentions still counts as a cluster
            contiguous.setdefault(cluster, [])
        owner: dict[Span, str] = {}
        for label, spans in contiguous.items():
            for span in spans:
                if span in owner:
                    raise ParseError(
                        f"{self.doc_id}: span {span.to_list()} appears in clusters "
                        f"{owner[span]} and {label}",
                        first_line.get(span),
                        self.source,
                    )
                owner[span] = label
        partition = EntityPartition(spans for spans in contiguous.values() if spans)
        discontinuous.sort(key=lambda d: (d.fragments, d.cluster))
        # keep the raw cluster labels for discontinuous mentions consistent with the
        # partition: we remap them to the index of the cluster they share, if any
        remapped = []
        for d in discontinuous:
            spans = contiguous.get(d.cluster) or []
            key = str(partition.mention_index[spans[0]]) if spans else f"orphan:{d.cluster}"
            remapped.append(DiscontinuousMention(key, d.fragments))
        doc = Document(self.doc_id, tuple(self.sentences), partition, tuple(remapped))
        return doc, warnings


def parse_coref_file(
    stream: TextIO | str,
    options: IngestOptions | None = None,
    name: str = "corpus",
    split: str = "test",
) -> Corpus:
    """Parse a CoNLL-2012 bracket-column file into a :class:`Corpus`.

    Singletons are kept; :func:`filter_scope` removes them.
    """
    options = options or IngestOptions()
    source = options.source
    documents = []
    warnings: list[str] = []
    seen = set()
    builder: _DocBuilder | None = None
    for line_no, raw in enumerate(_lines(stream), start=1):
        line = raw.rstrip("\r\n")
        stripped = line.strip()
        if stripped.startswith("#"):
            m = _BEGIN_RE.match(stripped)
            if m:
                if builder is not None:
                    raise ParseError("nested #begin document", line_no, source)
                doc_id = _doc_id(m.group(1))
                if doc_id in seen:
                    raise ParseError(f"duplicate document id {doc_id!r}", line_no, source)
                seen.add(doc_id)
                builder = _DocBuilder(doc_id, line_no, source)
            elif stripped.startswith("#end document"):
                if builder is None:
                    raise ParseError("#end document without #begin document", line_no, source)
                doc, doc_warnings = builder.build()
                documents.append(doc)
                warnings.extend(doc_warnings)
                builder = None
            continue
        if not stripped:
            if builder is not None:
                builder.end_sentence()
            continue
        if builder is None:
            raise ParseError("token line outside of a document", line_no, source)
        cols = stripped.split()
        if len(cols) < 2:
            raise ParseError("token line needs a word and a coreference column", line_no, source)
        col = _word_column(len(cols), options)
        if col >= len(cols) - 1:
            raise ParseError(f"word column {col} out of range", line_no, source)
        builder.add_token(cols[col], cols[-1], line_no)
    if builder is not None:
        raise ParseError(f"document {builder.doc_id!r} not terminated", builder.line_no, source)
    return Corpus(name, split, tuple(documents), tuple(warnings))


def read_coref_file(path, name=None, split="test", options=None) -> Corpus:
    options = options or IngestOptions()
    if options.source is None:
        options = dataclasses.replace(options, source=str(path))
    with open(path, encoding="utf-8") as f:
        return parse_coref_file(f, options, name=name or str(path), split=split)


def _bracket_columns(doc: Document, partition: EntityPartition, discontinuous) -> list[list[str]]:
    cols = [[[] for _ in sent] for sent in doc.sentences]
    entries = []
    for cid, cluster in enumerate(partition.clusters):
        for i, a in enumerate(cluster):
            for b in cluster[i + 1 :]:
                if a.sentence_index == b.sentence_index and a.start < b.start <= a.end < b.end:
                    raise InvariantError(
                        f"{doc.doc_id}: crossing spans {a.to_list()} and {b.to_list()} of one cluster "
                        "cannot be written with bracket labels"
                    )
            entries.append((str(cid), a))
    labels_by_cluster: dict[str, int] = {}
    for d in discontinuous:
        idx = labels_by_cluster.get(d.cluster, 0)
        labels_by_cluster[d.cluster] = idx + 1
        # orphan labels get a prefix so they cannot collide with partition indices
        cluster = "x" + d.cluster.split(":", 1)[1] if d.cluster.startswith("orphan:") else d.cluster
        for frag in d.fragments:
            entries.append((f"{cluster}#{idx}", frag))
    per_token: dict[tuple[int, int], dict[str, list]] = {}
    for label, span in entries:
        s = span.sentence_index
        if span.start == span.end:
            per_token.setdefault((s, span.start), {}).setdefault("single", []).append(label)
            continue
        per_token.setdefault((s, span.start), {}).setdefault("open", []).append((span.end, label))
        per_token.setdefault((s, span.end), {}).setdefault("close", []).append((span.start, label))
    for (s, t), groups in per_token.items():
        parts = []
        # closes of earlier mentions go first so that LIFO matching of a same-id
        # mention starting on this token cannot grab them
        for start, label in sorted(groups.get("close", []), key=lambda x: -x[0]):
            parts.append(f"{label})")
        for end, label in sorted(groups.get("open", []), key=lambda x: -x[0]):
            parts.append(f"({label}")
        for label in groups.get("single", []):
            parts.append(f"({label})")
        cols[s][t] = parts
    return cols


def write_coref_file(corpus: Corpus, stream: TextIO, which: str = "gold") -> None:
    """Serialize ``corpus`` in bracket format (``which`` is gold or predicted)."""
    for doc in corpus:
        partition = doc.gold if which == "gold" else (doc.predicted or EntityPartition())
        disc = doc.discontinuous if which == "gold" else doc.pred_discontinuous
        cols = _bracket_columns(doc, partition, disc)
        stream.write(f"#begin document ({doc.doc_id})\n")
        for s, sent in enumerate(doc.sentences):
            for tok in sent:
                coref = "|".join(cols[s][tok.index]) or "-"
                stream.write(f"{doc.doc_id}\t0\t{tok.index}\t{tok.form}\t{coref}\n")
            stream.write("\n")
        stream.write("#end document\n")


def dumps_coref(corpus: Corpus, which: str = "gold") -> str:
    buf = io.StringIO()
    write_coref_file(corpus, buf, which)
    return buf.getvalue()


# -- dependency sidecars ----------------------------------------------------


@dataclass(frozen=True)
class DepToken:
    form: str
    pos: str
    head: int
    deprel: str


@dataclass
class DependencyLayers:
    """Parsed sidecar: documents in file order mapped to their sentences.

    When the file has no ``# newdoc`` markers every sentence lands under the
    ``None`` key and :func:`align` assigns sentences to documents by position.
    """

    documents: dict[str | None, list[list[DepToken]]]

    @property
    def has_doc_ids(self) -> bool:
        return None not in self.documents

    @property
    def sentence_count(self) -> int:
        return sum(len(v) for v in self.documents.values())


_NEWDOC_RE = re.compile(r"^#\s*newdoc(?:\s+id\s*=\s*(.*?))?\s*$")


def parse_dependency_file(stream: TextIO | str, source: str | None = None) -> DependencyLayers:
    documents: dict[str | None, list[list[DepToken]]] = {}
    current_doc: str | None = None
    rows: list[tuple[int, list[str]]] = []

    def flush():
        if not rows:
            return
        n = len(rows)
        sentence = []
        roots = 0
        for position, (line_no, cols) in enumerate(rows):
            try:
                head = int(cols[6])
            except ValueError:
                raise ParseError(f"non-integer HEAD {cols[6]!r}", line_no, source) from None
            if head < 0 or head > n:
                raise ParseError(f"HEAD {head} out of range for {n}-token sentence", line_no, source)
            if head == position + 1:
                raise ParseError("token is its own head", line_no, source)
            deprel = cols[7]
            if head == 0:
                roots += 1
                head_index = ROOT
            else:
                head_index = head - 1
                if deprel in ("", "_"):
                    raise ParseError("missing DEPREL on non-root token", line_no, source)
            pos = cols[4] if cols[4] != "_" else cols[3]
            sentence.append(DepToken(cols[1], pos, head_index, deprel))
        if roots != 1:
            raise ParseError(f"sentence has {roots} root tokens", rows[0][0], source)
        documents.setdefault(current_doc, []).append(sentence)
        rows.clear()

    for line_no, raw in enumerate(_lines(stream), start=1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            flush()
            continue
        if line.startswith("#"):
            m = _NEWDOC_RE.match(line.strip())
            if m:
                flush()
                doc_id = m.group(1) or f"doc{len(documents)}"
                if doc_id in documents:
                    raise ParseError(f"duplicate newdoc id {doc_id!r}", line_no, source)
                current_doc = doc_id
                documents[doc_id] = []
            continue
        cols = line.split("\t")
        if len(cols) < 8:
            cols = line.split()
        if len(cols) < 8:
            raise ParseError(f"expected at least 8 columns, got {len(cols)}", line_no, source)
        tid = cols[0]
        if "-" in tid or "." in tid:
            continue
        if not tid.isdigit() or int(tid) != len(rows) + 1:
            raise ParseError(f"unexpected token ID {tid!r}", line_no, source)
        rows.append((line_no, cols))
    flush()
    if None in documents and len(documents) > 1:
        raise ParseError("sentences found before the first # newdoc marker", None, source)
    return DependencyLayers(documents)


def read_dependency_file(path) -> DependencyLayers:
    with open(path, encoding="utf-8") as f:
        return parse_dependency_file(f, source=str(path))


# -- alignment --------------------------------------------------------------


def normalize_form(form: str, table: dict[str, str]) -> str:
    form = "".join(form.split())
    return table.get(form, form)


def align(
    corpus: Corpus,
    deps: DependencyLayers,
    normalization: dict[str, str] | None = None,
    mismatch_threshold: float = 0.05,
    allow_missing_parse: bool = False,
) -> Corpus:
    """Attach POS, head and deprel layers to every token of ``corpus``.

    Cluster structure is never touched. Raises :class:`AlignmentError` on a
    token count mismatch, on a missing document (unless
    ``allow_missing_parse``), or when the share of form mismatches after
    normalization exceeds ``mismatch_threshold``.
    """
    table = DEFAULT_NORMALIZATION if normalization is None else normalization
    warnings = list(corpus.warnings)
    if deps.has_doc_ids:
        per_doc = {doc_id: sents for doc_id, sents in deps.documents.items()}
    else:
        flat = deps.documents.get(None, [])
        needed = sum(len(d.sentences) for d in corpus)
        if len(flat) != needed:
            raise AlignmentError(
                f"{corpus.name}: sidecar has {len(flat)} sentences but corpus has {needed}"
                " (no # newdoc markers, positional alignment)"
            )
        per_doc = {}
        pos = 0
        for doc in corpus:
            per_doc[doc.doc_id] = flat[pos : pos + len(doc.sentences)]
            pos += len(doc.sentences)

    new_docs = []
    mismatches = 0
    total = 0
    examples = []
    for doc in corpus:
        sents = per_doc.get(doc.doc_id)
        if sents is None:
            if not allow_missing_parse:
                raise AlignmentError(f"{corpus.name}: document {doc.doc_id!r} missing from parse sidecar")
            msg = f"{doc.doc_id}: no parse, typed metrics skipped for this document"
            warnings.append(msg)
            logger.warning(msg)
            new_docs.append(doc)
            continue
        if len(sents) != len(doc.sentences):
            raise AlignmentError(
                f"{corpus.name}: document {doc.doc_id!r} has {len(doc.sentences)} sentences, "
                f"parse has {len(sents)}"
            )
        new_sents = []
        for s, (tokens, parsed) in enumerate(zip(doc.sentences, sents)):
            if len(tokens) != len(parsed):
                raise AlignmentError(
                    f"{corpus.name}: document {doc.doc_id!r} sentence {s}: "
                    f"{len(tokens)} tokens vs {len(parsed)} in parse"
                )
            row = []
            for tok, dep in zip(tokens, parsed):
                total += 1
                if normalize_form(tok.form, table) != normalize_form(dep.form, table):
                    mismatches += 1
                    if len(examples) < 5:
                        examples.append(f"{doc.doc_id}[{s}:{tok.index}] {tok.form!r}/{dep.form!r}")
                row.append(Token(tok.index, tok.form, dep.pos, dep.head, dep.deprel))
            new_sents.append(tuple(row))
        new_docs.append(dataclasses.replace(doc, sentences=tuple(new_sents)))
    if mismatches:
        if total and mismatches / total > mismatch_threshold:
            raise AlignmentError(
                f"{corpus.name}: {mismatches}/{total} token forms differ from the parse "
                f"(threshold {mismatch_threshold:.0%}); e.g. {', '.join(examples)}"
            )
        msg = f"{corpus.name}: {mismatches}/{total} token forms differ from the parse"
        warnings.append(msg)
        logger.warning(msg)
    return corpus.replace(documents=tuple(new_docs), warnings=tuple(warnings))


def attach_predictions(gold: Corpus, pred: Corpus) -> Corpus:
    """Attach each system document's partition to the gold document of the same id.

    Gold documents without a prediction get an empty partition.
    """
    warnings = list(gold.warnings)
    extra = [d for d in pred.doc_ids if d not in gold]
    if extra:
        msg = f"{pred.name}: {len(extra)} predicted documents not in gold, ignored"
        warnings.append(msg)
        logger.warning(msg)
    docs = []
    missing = 0
    for doc in gold:
        if doc.doc_id in pred:
            p = pred[doc.doc_id]
            for span in p.gold.mention_index:
                if not doc.check_span(span):
                    raise AlignmentError(
                        f"{pred.name}: predicted span {span.to_list()} outside document {doc.doc_id!r}"
                    )
            docs.append(
                dataclasses.replace(doc, predicted=p.gold, pred_discontinuous=p.discontinuous)
            )
        else:
            missing += 1
            docs.append(dataclasses.replace(doc, predicted=EntityPartition()))
    if missing:
        msg = f"{pred.name}: {missing} gold documents have no prediction"
        warnings.append(msg)
        logger.warning(msg)
    return gold.replace(documents=tuple(docs), warnings=tuple(warnings))


# -- scope filters ----------------------------------------------------------


def _filter_partition(partition: EntityPartition, discontinuous) -> tuple[EntityPartition, int, int, int]:
    kept = []
    singletons = 0
    removed = 0
    disc_clusters = {d.cluster for d in discontinuous}
    for cid, cluster in enumerate(partition.clusters):
        if len(cluster) >= 2:
            kept.append(cluster)
        else:
            singletons += len(cluster)
            removed += 1
    # clusters consisting only of discontinuous mentions never reached the partition
    removed += len({c for c in disc_clusters if c.startswith("orphan:")})
    return EntityPartition(kept), len(discontinuous), singletons, removed


def filter_scope(corpus: Corpus) -> Corpus:
    """Drop discontinuous mentions, then every cluster left with fewer than 2 mentions.

    Applies to gold and, when attached, predicted partitions. The returned
    corpus carries the gold-side removal counts in ``scope``.
    """
    docs = []
    n_disc = n_single = n_clusters = 0
    for doc in corpus:
        gold, d, s, c = _filter_partition(doc.gold, doc.discontinuous)
        n_disc += d
        n_single += s
        n_clusters += c
        predicted = doc.predicted
        if predicted is not None:
            predicted = _filter_partition(predicted, doc.pred_discontinuous)[0]
        docs.append(
            dataclasses.replace(
                doc, gold=gold, discontinuous=(), predicted=predicted, pred_discontinuous=()
            )
        )
    counts = ScopeCounts(n_disc, n_single, n_clusters)
    if n_disc or n_single:
        logger.info(
            "%s: removed %d discontinuous and %d singleton mentions (%d clusters)",
            corpus.name, n_disc, n_single, n_clusters,
        )
    return corpus.replace(documents=tuple(docs), scope=counts)


# -- splits -----------------------------------------------------------------


@dataclass(frozen=True)
class SplitRule:
    kind: str  # identity | take_last | random | percent
    n: int | None = None
    percents: tuple[float, float, float] | None = None

    @classmethod
    def parse(cls, value) -> "SplitRule":
        if value is None or value == "identity":
            return cls("identity")
        if isinstance(value, SplitRule):
            return value
        if isinstance(value, dict) and len(value) == 1:
            (kind, arg), = value.items()
            kind = kind.replace("-", "_")
            if kind in ("take_last", "random"):
                if not isinstance(arg, int) or arg < 0:
                    raise ConfigError(f"split rule {kind} needs a non-negative integer")
                return cls(kind, n=arg)
            if kind == "percent":
                if len(arg) != 3 or abs(sum(arg) - 100) > 1e-9:
                    raise ConfigError("percent split needs three values summing to 100")
                return cls(kind, percents=tuple(float(a) for a in arg))
        raise ConfigError(f"unknown split rule {value!r}")


def split_corpus(corpus: Corpus, rule: SplitRule | str | dict, seed: int = 0) -> dict[str, Corpus]:
    """Partition ``corpus`` into train/dev/test according to ``rule``.

    Random rules draw with ``random.Random(seed)``; within each output split
    the input document order is kept.
    """
    rule = SplitRule.parse(rule)
    docs = list(corpus.documents)
    n = len(docs)
    assign: list[str]
    if rule.kind == "identity":
        assign = [corpus.split] * n
    elif rule.kind == "take_last":
        if rule.n > n:
            raise ConfigError(f"cannot take {rule.n} dev documents from {n}")
        assign = ["train"] * (n - rule.n) + ["dev"] * rule.n
    elif rule.kind == "random":
        if rule.n > n:
            raise ConfigError(f"cannot sample {rule.n} dev documents from {n}")
        dev = set(random.Random(seed).sample(range(n), rule.n))
        assign = ["dev" if i in dev else "train" for i in range(n)]
    else:
        _, p_dev, p_test = rule.percents
        n_dev = int(round(n * p_dev / 100))
        n_test = int(round(n * p_test / 100))
        if n_dev + n_test > n:
            raise ConfigError("percent split leaves a negative train set")
        order = list(range(n))
        random.Random(seed).shuffle(order)
        assign = ["train"] * n
        for i in order[:n_dev]:
            assign[i] = "dev"
        for i in order[n_dev : n_dev + n_test]:
            assign[i] = "test"
    return {
        split: corpus.replace(
            split=split, documents=tuple(d for d, a in zip(docs, assign) if a == split)
        )
        for split in SPLITS
    }


# -- JSON lines dump --------------------------------------------------------


def dump_jsonl(corpus: Corpus, stream: TextIO) -> None:
    for doc in corpus:
        stream.write(json.dumps(doc.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")


def load_jsonl(stream: TextIO | str, name="corpus", split="test") -> Corpus:
    docs = [Document.from_dict(json.loads(line)) for line in _lines(stream) if line.strip()]
    return Corpus(name, split, tuple(docs))
