import pytest

from corefgap.ingest import EntityPartition, IngestOptions, Span, align, filter_scope, parse_coref_file
from corefgap.ingest import parse_dependency_file


def sp(i, j=None, sent=0):
    return Span(sent, i, i if j is None else j)


def letters(*clusters):
    """Partition over single-token mentions named by letter: letters("ab", "cd")."""
    return EntityPartition([[sp(ord(ch) - ord("a")) for ch in c] for c in clusters])


def conll(doc, rows, part=0):
    """Build a CoNLL-2012 document from (form, coref) pairs; None separates sentences."""
    out = [f"#begin document ({doc}); part {part:03d}"]
    i = 0
    for row in rows:
        if row is None:
            out.append("")
            i = 0
            continue
        form, coref = row
        out.append(f"{doc}\t{part}\t{i}\t{form}\tX\t*\t-\t-\t-\t-\t*\t{coref}")
        i += 1
    out += ["", "#end document", ""]
    return "\n".join(out)


def conllu(doc_id, sentences):
    """Build CoNLL-U from sentences of (form, xpos, head, deprel) tuples (head 1-based, 0 = root)."""
    out = [f"# newdoc id = {doc_id}"] if doc_id else []
    for sent in sentences:
        for i, (form, pos, head, rel) in enumerate(sent, start=1):
            out.append(f"{i}\t{form}\t_\t_\t{pos}\t_\t{head}\t{rel}\t_\t_")
        out.append("")
    return "\n".join(out) + "\n"


def aligned_doc(coref_text, parse_text):
    corpus = parse_coref_file(coref_text, IngestOptions(source="test"))
    corpus = align(filter_scope(corpus), parse_dependency_file(parse_text))
    return corpus.documents[0]


@pytest.fixture
def micro():
    from corefgap.fixtures import load_fixture

    return load_fixture("micro-3doc")


def fixture_dir(fid):
    from pathlib import Path

    from corefgap.fixtures import DATA

    return Path(str(DATA)) / fid


def combine_fixtures(fids, out_dir, name):
    """Concatenate the gold and parse files of several text fixtures into one dataset."""
    gold = out_dir / f"{name}.conll"
    parse = out_dir / f"{name}.conllu"
    gold.write_text("".join((fixture_dir(f) / "gold.conll").read_text() for f in fids))
    parse.write_text("".join((fixture_dir(f) / "parse.conllu").read_text() for f in fids))
    return gold, parse


def write_config(path, data):
    import yaml

    path.write_text(yaml.safe_dump(data, sort_keys=False))
    return path


ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[number])
