"""Text serializations of patient data for language-model prompts.

The EHR goes out as an XML day-block listing, newest day first, one
<code> line per concept with its per-day maximum value, capped at a
fixed day budget. Notes go out as labeled blocks, newest first.
"""

from __future__ import annotations

from collections import defaultdict
from datetime import date

from ..cohort import WindowSpec
from ..store import PatientRecord
from ..store.vocab import describe


def _fmt_value(v: float) -> str:
    if v == int(v):
        return str(int(v))
    return f"{v:g}"


def _code_line(code: str, value: float) -> str:
    desc = describe(code)
    token = f"{code}: {desc}" if desc else code
    return f"    <code>[{token}] - {_fmt_value(value)}</code>"


def serialize_ehr_xml(record: PatientRecord, window: WindowSpec, day_budget: int) -> str:
    """<record> of <day start="MM/DD/YYYY HH:MM"> blocks, newest first, at
    most `day_budget` event days; a demographics block leads at the index
    date. Multiple same-day values of one code collapse to the daily max."""
    if day_budget < 1:
        raise ValueError("day_budget must be >= 1")
    by_day: dict[date, dict[str, float]] = defaultdict(dict)
    for e in record.events:
        if window.in_observation(e.date):
            cur = by_day[e.date].get(e.code)
            if cur is None or e.value > cur:
                by_day[e.date][e.code] = e.value
    days = sorted(by_day, reverse=True)[:day_budget]
    lines = ["<record>"]
    demo = record.demographics
    idx = window.observation_end
    age_at_index = demo["age_at_cutoff"]  # age at cutoff stands in when no finer data
    lines.append(f'  <day start="{idx.strftime("%m/%d/%Y")} 00:00">')
    lines.append(f"    <code>[demographics_age] - {_fmt_value(round(age_at_index))}</code>")
    lines.append(f"    <code>[demographics_SEX_{demo['sex'].capitalize()}] - 1</code>")
    lines.append(f"    <code>[demographics_RACE_{demo['race'].capitalize()}] - 1</code>")
    lines.append("  </day>")
    for d in days:
        lines.append(f'  <day start="{d.strftime("%m/%d/%Y")} 00:00">')
        for code in sorted(by_day[d]):
            lines.append(_code_line(code, by_day[d][code]))
        lines.append("  </day>")
    lines.append("</record>")
    return "\n".join(lines)


def serialize_notes(record: PatientRecord, window: WindowSpec, max_notes: int | None = None) -> str:
    """[PROGRESS_NOTE - timestamp] / [RADIOLOGY_NOTE - timestamp] blocks,
    newest first."""
    kind_label = {"progress": "PROGRESS_NOTE", "radiology": "RADIOLOGY_NOTE"}
    selected = [n for n in record.notes if window.in_observation(n.date.date())]
    selected.sort(key=lambda n: n.date, reverse=True)
    if max_notes is not None:
        selected = selected[:max_notes]
    blocks = []
    for n in selected:
        ts = n.date.strftime("%Y-%m-%d %H:%M:%S")
        blocks.append(f"[{kind_label[n.kind]} - {ts}]\n{n.text}")
    return "\n\n".join(blocks)


def serialize_image_summary(record: PatientRecord, window: WindowSpec) -> str:
    """Feature listing of the most recent in-window imaging study."""
    in_window = [im for im in record.imaging if window.in_observation(im.date.date())]
    if not in_window:
        return "No imaging study available."
    study = in_window[-1]
    lines = [f"{study.modality} study on {study.date.strftime('%Y-%m-%d')}:"]
    for name in sorted(study.features):
        lines.append(f"  {name}: {_fmt_value(study.features[name])}")
    return "\n".join(lines)
