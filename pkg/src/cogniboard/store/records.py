"""Patient record types and their NDJSON persistence."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import date, datetime
from pathlib import Path

SEXES = ("female", "male")
RACES = ("white", "black", "asian", "pacific", "multirace", "unknown")
EVENT_SYSTEMS = ("diagnosis", "medication", "lab", "demographic")
NOTE_KINDS = ("progress", "radiology")
IMAGING_MODALITIES = ("brain_volumes", "retinal_thickness")

BRAIN_REGIONS = [
    "hippocampus_left",
    "hippocampus_right",
    "entorhinal_cortex",
    "amygdala",
    "lateral_ventricles",
    "inferior_lateral_ventricles",
    "temporal_gray_matter",
    "parietal_gray_matter",
    "frontal_gray_matter",
    "white_matter_hypointensities",
    "total_gray_matter",
    "intracranial_volume",
]

RETINA_SECTORS = [
    "etdrs_center",
    "etdrs_inner_superior",
    "etdrs_inner_nasal",
    "etdrs_inner_inferior",
    "etdrs_inner_temporal",
    "etdrs_outer_superior",
    "etdrs_outer_nasal",
    "etdrs_outer_inferior",
    "etdrs_outer_temporal",
]

IMAGING_SCHEMAS = {
    "brain_volumes": BRAIN_REGIONS,
    "retinal_thickness": RETINA_SECTORS,
}


class RecordError(ValueError):
    pass


@dataclass(frozen=True)
class CodedEvent:
    date: date
    system: str
    code: str
    value: float

    def __post_init__(self):
        if self.system not in EVENT_SYSTEMS:
            raise RecordError(f"unknown event system {self.system!r}")
        if not self.code:
            raise RecordError("event code must be non-empty")
        if not (self.value == self.value and abs(self.value) != float("inf")):
            raise RecordError("event value must be finite")


@dataclass(frozen=True)
class ClinicalNote:
    date: datetime
    kind: str
    text: str

    def __post_init__(self):
        if self.kind not in NOTE_KINDS:
            raise RecordError(f"unknown note kind {self.kind!r}")
        if not self.text:
            raise RecordError("note text must be non-empty")


@dataclass(frozen=True)
class ImagingStudy:
    date: datetime
    modality: str
    features: dict[str, float]

    def __post_init__(self):
        schema = IMAGING_SCHEMAS.get(self.modality)
        if schema is None:
            raise RecordError(f"unknown imaging modality {self.modality!r}")
        if set(self.features) != set(schema):
            raise RecordError(f"feature names must match the {self.modality} schema")
        for name, v in self.features.items():
            if not (v > 0 and v != float("inf")):
                raise RecordError(f"non-positive or non-finite feature {name}")


@dataclass
class PatientRecord:
    patient_id: str
    demographics: dict  # age_at_cutoff, sex, race
    events: list[CodedEvent] = field(default_factory=list)
    notes: list[ClinicalNote] = field(default_factory=list)
    imaging: list[ImagingStudy] = field(default_factory=list)

    def validate(self, cohort_start: date, cohort_cutoff: date) -> None:
        if self.demographics.get("age_at_cutoff", 0) < 65:
            raise RecordError("included patients must be at least 65 at cutoff")
        for seq, key in ((self.events, "events"), (self.notes, "notes"), (self.imaging, "imaging")):
            dates = [e.date for e in seq]
            if any(a > b for a, b in zip(dates, dates[1:])):
                raise RecordError(f"{key} not sorted by date")
        for e in self.events:
            if not (cohort_start <= e.date <= cohort_cutoff):
                raise RecordError("event date outside cohort window")
        for n in self.notes:
            if not (cohort_start <= n.date.date() <= cohort_cutoff):
                raise RecordError("note date outside cohort window")
        for im in self.imaging:
            if not (cohort_start <= im.date.date() <= cohort_cutoff):
                raise RecordError("imaging date outside cohort window")

    def first_event_date(self) -> date | None:
        return self.events[0].date if self.events else None

    def last_event_date(self) -> date | None:
        return self.events[-1].date if self.events else None

    def visit_dates(self) -> list[date]:
        """Distinct days with any coded activity, ascending."""
        return sorted({e.date for e in self.events})

    def has_modality(self, modality: str) -> bool:
        if modality == "ehr":
            return bool(self.events)
        if modality == "note":
            return bool(self.notes)
        if modality == "image":
            return bool(self.imaging)
        return any(im.modality == modality for im in self.imaging)

    def truncated(self, as_of: date) -> "PatientRecord":
        """Copy with every stream cut to strictly before `as_of`."""
        return PatientRecord(
            patient_id=self.patient_id,
            demographics=dict(self.demographics),
            events=[e for e in self.events if e.date < as_of],
            notes=[n for n in self.notes if n.date.date() < as_of],
            imaging=[im for im in self.imaging if im.date.date() < as_of],
        )

    def to_json_dict(self) -> dict:
        return {
            "patient_id": self.patient_id,
            "demographics": self.demographics,
            "events": [
                {"date": e.date.isoformat(), "system": e.system, "code": e.code, "value": e.value}
                for e in self.events
            ],
            "notes": [
                {"date": n.date.isoformat(), "kind": n.kind, "text": n.text} for n in self.notes
            ],
            "imaging": [
                {"date": im.date.isoformat(), "modality": im.modality, "features": im.features}
                for im in self.imaging
            ],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "PatientRecord":
        return cls(
            patient_id=d["patient_id"],
            demographics=d["demographics"],
            events=[
                CodedEvent(date.fromisoformat(e["date"]), e["system"], e["code"], float(e["value"]))
                for e in d["events"]
            ],
            notes=[
                ClinicalNote(datetime.fromisoformat(n["date"]), n["kind"], n["text"])
                for n in d["notes"]
            ],
            imaging=[
                ImagingStudy(
                    datetime.fromisoformat(im["date"]),
                    im["modality"],
                    {k: float(v) for k, v in im["features"].items()},
                )
                for im in d["imaging"]
            ],
        )


def write_ndjson(path: str | Path, dicts) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for d in dicts:
            f.write(json.dumps(d, sort_keys=True))
            f.write("\n")


def read_ndjson(path: str | Path) -> list[dict]:
    out = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return out
