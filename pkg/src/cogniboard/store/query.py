"""In-memory cohort store with a three-mode structured query engine.

The store is immutable after load. Queries run as a structured plan
(training / inference / exploration); natural language reaches a plan
either through a scripted phrase table or a language-model backend, and
anything untranslatable comes back as an explicit clarification request
instead of a guessed plan.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

from .generate import CohortConfig
from .records import IMAGING_SCHEMAS, PatientRecord, read_ndjson

FILTER_FIELDS = ("age", "sex", "race", "has_code", "has_modality", "patient_id")
FILTER_OPS = (">", ">=", "<", "<=", "=", "!=")


class QueryError(ValueError):
    pass


@dataclass(frozen=True)
class Filter:
    field: str
    op: str
    value: object

    def __post_init__(self):
        if self.field not in FILTER_FIELDS:
            raise QueryError(f"unknown filter field {self.field!r}")
        if self.op not in FILTER_OPS:
            raise QueryError(f"unknown filter op {self.op!r}")


@dataclass
class QueryPlan:
    mode: str  # training | inference | exploration
    filters: list[Filter] = field(default_factory=list)
    projection: list[str] = field(default_factory=list)
    label_spec: dict | None = None  # training mode only
    target_patient: str | None = None  # inference mode only
    as_of: date | None = None
    exploration_kind: str = "summary"  # schema | summary

    def validate(self) -> None:
        if self.mode not in ("training", "inference", "exploration"):
            raise QueryError(f"unknown query mode {self.mode!r}")
        if self.mode == "training" and not self.label_spec:
            raise QueryError("training mode requires a label specification")
        if self.mode == "inference" and not self.target_patient:
            raise QueryError("inference mode targets exactly one patient")

    def to_json_dict(self) -> dict:
        return {
            "mode": self.mode,
            "filters": [{"field": f.field, "op": f.op, "value": f.value} for f in self.filters],
            "projection": self.projection,
            "label_spec": self.label_spec,
            "target_patient": self.target_patient,
            "as_of": self.as_of.isoformat() if self.as_of else None,
            "exploration_kind": self.exploration_kind,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "QueryPlan":
        return cls(
            mode=d["mode"],
            filters=[Filter(f["field"], f["op"], f["value"]) for f in d.get("filters", [])],
            projection=d.get("projection", []),
            label_spec=d.get("label_spec"),
            target_patient=d.get("target_patient"),
            as_of=date.fromisoformat(d["as_of"]) if d.get("as_of") else None,
            exploration_kind=d.get("exploration_kind", "summary"),
        )


@dataclass
class RecordSet:
    mode: str
    records: list[PatientRecord] = field(default_factory=list)
    schema: dict | None = None
    summary: dict | None = None
    label_spec: dict | None = None


@dataclass
class NeedsClarification:
    message: str


class CohortStore:
    """Read-only view over a generated cohort directory."""

    def __init__(self, records: list[PatientRecord], config: CohortConfig, manifest: dict):
        self._records = sorted(records, key=lambda r: r.patient_id)
        self._by_id = {r.patient_id: r for r in self._records}
        self.config = config
        self.manifest = manifest

    @classmethod
    def load(cls, cohort_dir: str | Path) -> "CohortStore":
        cohort_dir = Path(cohort_dir)
        manifest = json.loads((cohort_dir / "manifest.json").read_text())
        config = CohortConfig.from_json_dict(manifest["config"])
        records = [PatientRecord.from_json_dict(d) for d in read_ndjson(cohort_dir / "patients.ndjson")]
        return cls(records, config, manifest)

    def __len__(self) -> int:
        return len(self._records)

    @property
    def records(self) -> list[PatientRecord]:
        return list(self._records)

    @property
    def patient_ids(self) -> list[str]:
        return [r.patient_id for r in self._records]

    def get(self, patient_id: str) -> PatientRecord:
        rec = self._by_id.get(patient_id)
        if rec is None:
            raise QueryError(f"patient {patient_id!r} not found")
        return rec

    def content_hash(self) -> str:
        return self.manifest["content_hash"]

    # --- filtering ---

    def _matches(self, record: PatientRecord, flt: Filter) -> bool:
        if flt.field == "age":
            return _compare(record.demographics["age_at_cutoff"], flt.op, float(flt.value))
        if flt.field in ("sex", "race"):
            return _compare(record.demographics[flt.field], flt.op, flt.value)
        if flt.field == "patient_id":
            return _compare(record.patient_id, flt.op, flt.value)
        if flt.field == "has_code":
            has = any(_code_matches(str(flt.value), e.code) for e in record.events)
            return has if flt.op in ("=", ">=") else not has
        if flt.field == "has_modality":
            has = record.has_modality(str(flt.value))
            return has if flt.op in ("=", ">=") else not has
        raise QueryError(f"unknown filter field {flt.field!r}")

    def select(self, filters: list[Filter]) -> list[PatientRecord]:
        out = []
        for rec in self._records:
            if all(self._matches(rec, f) for f in filters):
                out.append(rec)
        return out

    def schema_listing(self) -> dict:
        return {
            "tables": {
                "patients": ["patient_id", "age_at_cutoff", "sex", "race"],
                "events": ["patient_id", "date", "system", "code", "value"],
                "notes": ["patient_id", "date", "kind", "text"],
                "imaging": ["patient_id", "date", "modality"] ,
            },
            "imaging_schemas": {k: list(v) for k, v in IMAGING_SCHEMAS.items()},
            "filter_fields": list(FILTER_FIELDS),
        }

    def execute(self, plan: QueryPlan) -> RecordSet:
        plan.validate()
        if plan.mode == "exploration":
            if plan.exploration_kind == "schema":
                return RecordSet(mode="exploration", schema=self.schema_listing())
            matched = self.select(plan.filters)
            summary = {
                "n_patients": len(matched),
                "patient_ids": [r.patient_id for r in matched],
                "mean_age": (
                    round(sum(r.demographics["age_at_cutoff"] for r in matched) / len(matched), 2)
                    if matched
                    else None
                ),
            }
            return RecordSet(mode="exploration", records=matched, summary=summary)
        if plan.mode == "inference":
            rec = self.get(plan.target_patient)
            if plan.as_of is not None:
                rec = rec.truncated(plan.as_of)
            return RecordSet(mode="inference", records=[rec])
        matched = self.select(plan.filters)
        return RecordSet(mode="training", records=matched, label_spec=plan.label_spec)


def _compare(lhs, op: str, rhs) -> bool:
    if op == ">":
        return lhs > rhs
    if op == ">=":
        return lhs >= rhs
    if op == "<":
        return lhs < rhs
    if op == "<=":
        return lhs <= rhs
    if op == "=":
        return lhs == rhs
    if op == "!=":
        return lhs != rhs
    raise QueryError(f"unknown op {op!r}")


def _code_matches(pattern: str, code: str) -> bool:
    if pattern.endswith(".*"):
        stem = pattern[:-2]
        return code == stem or code.startswith(stem + ".")
    return code == pattern


# --- natural language translation ---

_PHRASES = [
    (
        re.compile(r"^show (the )?(database )?schema$", re.I),
        lambda m: QueryPlan(mode="exploration", exploration_kind="schema"),
    ),
    (
        re.compile(r"^show patients over (\d+) with mri$", re.I),
        lambda m: QueryPlan(
            mode="exploration",
            filters=[Filter("age", ">", float(m.group(1))), Filter("has_modality", "=", "brain_volumes")],
        ),
    ),
    (
        re.compile(r"^show patients over (\d+)$", re.I),
        lambda m: QueryPlan(mode="exploration", filters=[Filter("age", ">", float(m.group(1)))]),
    ),
    (
        re.compile(r"^history of patient (\S+) before (\d{4})$", re.I),
        lambda m: QueryPlan(
            mode="inference", target_patient=m.group(1), as_of=date(int(m.group(2)), 1, 1)
        ),
    ),
    (
        re.compile(r"^history of patient (\S+)$", re.I),
        lambda m: QueryPlan(mode="inference", target_patient=m.group(1)),
    ),
    (
        re.compile(r"^training cohort for (prediction|diagnosis|survival|conversion)$", re.I),
        lambda m: QueryPlan(mode="training", label_spec={"task": m.group(1).lower()}),
    ),
]


def translate_query(natural_language: str, backend=None) -> QueryPlan | NeedsClarification:
    """Map a natural-language request to a QueryPlan.

    With no backend (or a scripted one) only the fixed phrase table is
    consulted. A live backend is asked for a JSON plan; anything that does
    not validate becomes a clarification request, never a guess.
    """
    text = " ".join(natural_language.split())
    if not text:
        return NeedsClarification("empty request; describe the cohort or patient of interest")
    for pattern, builder in _PHRASES:
        m = pattern.match(text)
        if m:
            plan = builder(m)
            plan.validate()
            return plan
    if backend is not None and getattr(backend, "kind", "scripted") == "http_chat":
        from ..llm.gateway import complete_structured

        try:
            parsed = complete_structured(backend, "query_translation", {"REQUEST": text}, schema="plan")
            plan = QueryPlan.from_json_dict(parsed)
            plan.validate()
            return plan
        except Exception as e:  # noqa: BLE001 - any failure means "ask, don't guess"
            return NeedsClarification(f"could not translate request: {e}")
    return NeedsClarification(f"request not understood: {text!r}")
