"""Render an :class:`EvalReport` as Markdown, CSV or JSON tables."""

from __future__ import annotations

import csv
import io
import json

from .generalization import APPENDIX
from .harness import LOW_SUPPORT, EvalReport
from .mention_types import DISPLAY_NAMES
from .metrics import ALL, B_CUBED, CONLL, METRIC_LABELS

FORMATS = ("md", "csv", "json")
INDENT = "&emsp;"
LOW_MARK = "†"

SCORE_FIELDS = [
    "dataset", "split", "system", "metric", "type", "R", "P", "F1",
    "support_gold", "support_pred", "significant", "low_support",
]
GAP_FIELDS = ["test_set", "out_model", "scope", "gap", "p_value", "significant"]


def points(value) -> str:
    """Fraction to one-decimal points; N/A renders blank."""
    return "" if value is None else f"{100 * value:.1f}"


def _gap(value) -> str:
    return "" if value is None else f"{value:.1f}"


def _bold(text: str, flag: bool) -> str:
    return f"**{text}**" if flag and text else text


def _type_label(name: str) -> str:
    return DISPLAY_NAMES.get(name, name)


def _md_row(cells) -> str:
    return "| " + " | ".join(cells) + " |"


def score_rows(report: EvalReport):
    """Yield ``(label, dataset, metric, type)`` row specs in table order."""
    for ds in report.datasets:
        if ds in report.errors:
            continue
        yield f"{ds} ({METRIC_LABELS[CONLL]})", ds, CONLL, ALL
        yield f"{ds} ({METRIC_LABELS[B_CUBED]})", ds, B_CUBED, ALL
        for t in report.types:
            yield INDENT + _type_label(t), ds, B_CUBED, t


def scores_markdown(report: EvalReport) -> str:
    header = ["Test", "# Ments."]
    align = ["---", "---:"]
    for s in report.systems:
        header += [f"{s} R", f"{s} P", f"{s} F1"]
        align += ["---:"] * 3
    lines = [_md_row(header), _md_row(align)]
    any_low = False
    for label, ds, metric, t in score_rows(report):
        count = "" if metric == CONLL else report.mention_counts.get(ds, {}).get(t)
        count = "" if count is None else str(count)
        if report.low_support(ds, t):
            count += LOW_MARK
            any_low = True
        cells = [label, count]
        for s in report.systems:
            triple = report.score(ds, s, metric, t)
            if triple is None:
                cells += ["", "", ""]
                continue
            sig = t != ALL and report.significant(ds, s, t)
            cells += [points(triple.recall), points(triple.precision), _bold(points(triple.f1), sig)]
        lines.append(_md_row(cells))
    if any_low:
        lines.append("")
        lines.append(f"{LOW_MARK} fewer than {LOW_SUPPORT} gold mentions of this type.")
    return "\n".join(lines)


def _gap_groups(report: EvalReport):
    """Group gap reports into tables: one per reference run (appendix) or model (body)."""
    groups: dict[tuple, list] = {}
    for g in report.gaps:
        key = (g.orientation, g.in_run, g.in_test_set if g.orientation != APPENDIX else None)
        groups.setdefault(key, []).append(g)
    return groups


def gaps_markdown(report: EvalReport) -> str:
    blocks = []
    for (orientation, ref, in_test), gaps in _gap_groups(report).items():
        metric = METRIC_LABELS.get(gaps[0].metric, gaps[0].metric)
        if orientation == APPENDIX:
            title = f"Gaps against {ref} ({metric} F1 points)"
            columns = list(dict.fromkeys(g.out_run for g in gaps))
            rows_by = list(dict.fromkeys(g.test_set for g in gaps))
            cell = {(g.test_set, g.out_run): g for g in gaps}
        else:
            title = f"Gaps of {ref} from {in_test} ({metric} F1 points)"
            columns = list(dict.fromkeys(g.test_set for g in gaps))
            rows_by = [in_test]
            cell = {(in_test, g.test_set): g for g in gaps}
        lines = [title, "", _md_row(["Test"] + columns), _md_row(["---"] + ["---:"] * len(columns))]
        for block in rows_by:
            present = [cell.get((block, c)) for c in columns]
            lines.append(_md_row([block] + [_gap(g.agg) if g else "" for g in present]))
            for t in report.types:
                cells = []
                for g in present:
                    tg = g.per_type.get(t) if g else None
                    cells.append(_bold(_gap(tg.tgg), tg.significant) if tg else "")
                lines.append(_md_row([INDENT + _type_label(t)] + cells))
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks)


def to_markdown(report: EvalReport) -> str:
    parts = [scores_markdown(report)]
    gaps = gaps_markdown(report)
    if gaps:
        parts.append(gaps)
    if report.absent:
        parts.append("Absent cells: " + ", ".join(f"{s} on {d}" for d, s in report.absent))
    if report.errors:
        parts.append("\n".join(f"Error in {k}: {v}" for k, v in sorted(report.errors.items())))
    return "\n\n".join(parts) + "\n"


def score_records_csv(report: EvalReport) -> list[dict]:
    out = []
    for rec in report.records():
        t = rec["type"]
        out.append(
            {
                "dataset": rec["dataset"],
                "split": rec["split"],
                "system": rec["system"],
                "metric": rec["metric"],
                "type": t,
                "R": points(rec["R"]),
                "P": points(rec["P"]),
                "F1": points(rec["F1"]),
                "support_gold": rec["support_gold"],
                "support_pred": rec["support_pred"],
                "significant": t != ALL and report.significant(rec["dataset"], rec["system"], t),
                "low_support": report.low_support(rec["dataset"], t),
            }
        )
    return out


def gap_records_csv(report: EvalReport) -> list[dict]:
    out = []
    for g in report.gaps:
        for row in g.rows():
            row = dict(row)
            row["gap"] = _gap(row["gap"])
            row["p_value"] = "" if row["p_value"] is None else f"{row['p_value']:.4f}"
            out.append(row)
    return out


def _csv(fields, rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def to_csv(report: EvalReport) -> str:
    """Scores CSV, a blank line, then the gaps CSV."""
    return _csv(SCORE_FIELDS, score_records_csv(report)) + "\n" + _csv(GAP_FIELDS, gap_records_csv(report))


def to_json(report: EvalReport) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"


def emit_tables(report: EvalReport, fmt: str = "md") -> str:
    if fmt == "md":
        return to_markdown(report)
    if fmt == "csv":
        return to_csv(report)
    if fmt == "json":
        return to_json(report)
    raise ValueError(f"unknown format {fmt!r}; choose from {FORMATS}")
