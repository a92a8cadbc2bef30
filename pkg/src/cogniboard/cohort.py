"""Task dataset construction: label extraction by concept matching,
rolling observation windows, survival and conversion labeling, and
patient-level splits.

Temporal discipline is the whole point here. Six months is fixed at 182
days throughout; horizons of H years are 365*H days; the prediction-task
label window must end at least 182 days before the cohort cutoff so every
label has full follow-up.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from .store import CohortStore, PatientRecord
from .store.records import write_ndjson
from .store.vocab import ADRD_CODE_PATTERNS, DEMENTIA_MEDICATIONS, MCI_CODE_PATTERNS

SIX_MONTHS_DAYS = 182
DAYS_PER_YEAR = 365

TASKS = ("prediction", "diagnosis", "survival", "conversion")


class CohortBuildError(ValueError):
    pass


def code_matches(pattern: str, code: str) -> bool:
    """Family wildcard semantics: "X.*" matches X itself and any code with
    prefix "X."; everything else is an exact match."""
    if pattern.endswith(".*"):
        stem = pattern[:-2]
        return code == stem or code.startswith(stem + ".")
    return code == pattern


@dataclass(frozen=True)
class ConceptCriteria:
    adrd_codes: tuple[str, ...] = tuple(ADRD_CODE_PATTERNS)
    mci_codes: tuple[str, ...] = tuple(MCI_CODE_PATTERNS)
    dementia_medications: tuple[str, ...] = tuple(DEMENTIA_MEDICATIONS)

    def __post_init__(self):
        for mci in self.mci_codes:
            for adrd in self.adrd_codes:
                if code_matches(adrd, mci.rstrip(".*")) or code_matches(mci, adrd.rstrip(".*")):
                    raise CohortBuildError(f"ADRD and MCI patterns overlap: {adrd} vs {mci}")

    def hash(self) -> str:
        payload = json.dumps(
            {
                "adrd": sorted(self.adrd_codes),
                "mci": sorted(self.mci_codes),
                "medications": sorted(self.dementia_medications),
            },
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def is_adrd_token(self, event) -> bool:
        if event.system == "diagnosis":
            return any(code_matches(p, event.code) for p in self.adrd_codes)
        if event.system == "medication":
            return event.code in self.dementia_medications
        return False

    def is_mci_token(self, event) -> bool:
        return event.system == "diagnosis" and any(code_matches(p, event.code) for p in self.mci_codes)


@dataclass(frozen=True)
class OnsetInfo:
    adrd_onset: date | None
    mci_onset: date | None


def extract_onset(record: PatientRecord, criteria: ConceptCriteria) -> OnsetInfo:
    """Earliest ADRD-defining day (diagnosis code or dementia medication,
    whichever comes first) and earliest MCI day."""
    adrd = None
    mci = None
    for e in record.events:
        if adrd is None and criteria.is_adrd_token(e):
            adrd = e.date
        if mci is None and criteria.is_mci_token(e):
            mci = e.date
        if adrd is not None and mci is not None:
            break
    return OnsetInfo(adrd_onset=adrd, mci_onset=mci)


@dataclass(frozen=True)
class WindowSpec:
    observation_start: date
    observation_end: date  # the index date
    prediction_days: int
    label_days: int

    def __post_init__(self):
        if self.observation_start >= self.observation_end:
            raise CohortBuildError("observation_start must precede the index date")

    @property
    def index_date(self) -> date:
        return self.observation_end

    @property
    def prediction_end(self) -> date:
        return self.observation_end + timedelta(days=self.prediction_days)

    @property
    def label_start(self) -> date:
        return self.prediction_end  # label window is (prediction_end, label_end]

    @property
    def label_end(self) -> date:
        return self.prediction_end + timedelta(days=self.label_days)

    def in_observation(self, d: date) -> bool:
        return self.observation_start <= d <= self.observation_end

    def in_prediction(self, d: date) -> bool:
        return self.observation_end < d <= self.prediction_end

    def in_label(self, d: date) -> bool:
        return self.prediction_end < d <= self.label_end

    def to_json_dict(self) -> dict:
        return {
            "observation_start": self.observation_start.isoformat(),
            "observation_end": self.observation_end.isoformat(),
            "prediction_days": self.prediction_days,
            "label_days": self.label_days,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "WindowSpec":
        return cls(
            date.fromisoformat(d["observation_start"]),
            date.fromisoformat(d["observation_end"]),
            int(d["prediction_days"]),
            int(d["label_days"]),
        )


@dataclass
class TaskSample:
    patient_id: str
    window: WindowSpec
    task: str
    y: int | None = None
    time_days: int | None = None
    event: int | None = None
    horizon_years: int | None = None

    def __post_init__(self):
        if self.task not in TASKS:
            raise CohortBuildError(f"unknown task {self.task!r}")
        if self.task == "survival":
            if self.time_days is None or self.event is None:
                raise CohortBuildError("survival samples need (time_days, event)")
            if self.time_days < 0:
                raise CohortBuildError("time must be non-negative")
        elif self.y not in (0, 1):
            raise CohortBuildError("classification samples need y in {0, 1}")

    def to_json_dict(self) -> dict:
        return {
            "patient_id": self.patient_id,
            "window": self.window.to_json_dict(),
            "task": self.task,
            "y": self.y,
            "time_days": self.time_days,
            "event": self.event,
            "horizon_years": self.horizon_years,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "TaskSample":
        return cls(
            patient_id=d["patient_id"],
            window=WindowSpec.from_json_dict(d["window"]),
            task=d["task"],
            y=d["y"],
            time_days=d["time_days"],
            event=d["event"],
            horizon_years=d["horizon_years"],
        )


def _adrd_token_in(record: PatientRecord, criteria: ConceptCriteria, pred) -> bool:
    return any(pred(e.date) and criteria.is_adrd_token(e) for e in record.events)


def build_prediction_dataset(
    store: CohortStore,
    criteria: ConceptCriteria,
    horizon_years: int,
    prediction_days: int = 180,
    step_days: int = SIX_MONTHS_DAYS,
    initial_obs_days: int = SIX_MONTHS_DAYS,
) -> list[TaskSample]:
    """Rolling-window forecasting samples.

    Window k ends at record_start + k*step_days; the sample is positive iff
    the ADRD onset lands in the label window; samples whose observation or
    prediction window already contains any ADRD token are dropped; the last
    window must keep its label end at least 182 days before the cutoff.
    """
    if horizon_years not in (1, 2, 3):
        raise CohortBuildError("horizon must be 1, 2, or 3 years")
    label_days = DAYS_PER_YEAR * horizon_years
    cutoff = store.config.cohort_cutoff
    samples: list[TaskSample] = []
    for record in store.records:
        record_start = record.first_event_date()
        record_end = record.last_event_date()
        if record_start is None or (record_end - record_start).days < initial_obs_days:
            continue
        onset = extract_onset(record, criteria).adrd_onset
        k = 1
        while True:
            index = record_start + timedelta(days=initial_obs_days + (k - 1) * step_days)
            if index > record_end:
                break
            label_end = index + timedelta(days=prediction_days + label_days)
            if label_end > cutoff - timedelta(days=SIX_MONTHS_DAYS):
                break
            window = WindowSpec(record_start, index, prediction_days, label_days)
            contaminated = onset is not None and onset <= window.prediction_end
            if not contaminated:
                y = 1 if (onset is not None and window.in_label(onset)) else 0
                samples.append(
                    TaskSample(record.patient_id, window, "prediction", y=y, horizon_years=horizon_years)
                )
            k += 1
    samples.sort(key=lambda s: (s.patient_id, s.window.observation_end))
    return samples


def build_diagnosis_dataset(
    store: CohortStore, criteria: ConceptCriteria, seed: int = 0
) -> list[TaskSample]:
    """Backtracked diagnosis samples: positives index at the first ADRD
    token; negatives draw a random visit (never the first) so the model
    always has history to look at. Observation is strictly before index."""
    rng = np.random.default_rng(seed)
    samples: list[TaskSample] = []
    for record in store.records:
        onset = extract_onset(record, criteria).adrd_onset
        visits = record.visit_dates()
        if onset is not None:
            if not any(v < onset for v in visits):
                continue
            window = WindowSpec(record.first_event_date(), onset, 0, 0)
            samples.append(TaskSample(record.patient_id, window, "diagnosis", y=1))
        else:
            if len(visits) < 2:
                continue
            index = visits[int(rng.integers(1, len(visits)))]
            window = WindowSpec(record.first_event_date(), index, 0, 0)
            samples.append(TaskSample(record.patient_id, window, "diagnosis", y=0))
    samples.sort(key=lambda s: (s.patient_id, s.window.observation_end))
    return samples


def build_survival_dataset(store: CohortStore, criteria: ConceptCriteria) -> list[TaskSample]:
    """Scan-indexed time-to-event samples: index at the first imaging
    study; events at ADRD onset, administrative censoring at the cutoff;
    patients already diagnosed by their first scan are excluded."""
    cutoff = store.config.cohort_cutoff
    samples: list[TaskSample] = []
    for record in store.records:
        if not record.imaging:
            continue
        index = record.imaging[0].date.date()
        onset = extract_onset(record, criteria).adrd_onset
        if onset is not None and onset <= index:
            continue
        first = record.first_event_date()
        obs_start = min(first, index - timedelta(days=1)) if first else index - timedelta(days=1)
        window = WindowSpec(obs_start, index, 0, 0)
        if onset is not None:
            t = (onset - index).days
            samples.append(TaskSample(record.patient_id, window, "survival", time_days=t, event=1))
        else:
            t = (cutoff - index).days
            samples.append(TaskSample(record.patient_id, window, "survival", time_days=t, event=0))
    samples.sort(key=lambda s: (s.patient_id, s.window.observation_end))
    return samples


def build_conversion_dataset(
    store: CohortStore, criteria: ConceptCriteria, horizon_years: int
) -> list[TaskSample]:
    """MCI-to-ADRD conversion: index at the first MCI day, inputs strictly
    before it, positive iff onset falls in (index, index + 365*H]; negatives
    must have follow-up through index + 365*H or they are excluded."""
    if horizon_years not in (1, 2, 3):
        raise CohortBuildError("horizon must be 1, 2, or 3 years")
    h_days = DAYS_PER_YEAR * horizon_years
    cutoff = store.config.cohort_cutoff
    samples: list[TaskSample] = []
    for record in store.records:
        onsets = extract_onset(record, criteria)
        mci = onsets.mci_onset
        if mci is None:
            continue
        adrd = onsets.adrd_onset
        if adrd is not None and adrd <= mci:
            continue  # ADRD on/before the MCI index disqualifies the patient
        first = record.first_event_date()
        if first is None or first >= mci - timedelta(days=1):
            continue
        horizon_end = mci + timedelta(days=h_days)
        if adrd is not None and adrd <= horizon_end:
            y = 1
        else:
            if horizon_end > cutoff:
                continue  # insufficient follow-up
            y = 0
        # inputs strictly before index: observation ends the day before
        window = WindowSpec(first, mci - timedelta(days=1), 0, h_days)
        samples.append(
            TaskSample(record.patient_id, window, "conversion", y=y, horizon_years=horizon_years)
        )
    samples.sort(key=lambda s: (s.patient_id, s.window.observation_end))
    return samples


@dataclass
class SplitAssignment:
    assignment: dict[str, str]
    warning: str | None = None

    def bucket(self, patient_id: str) -> str:
        return self.assignment[patient_id]

    def ids(self, bucket: str) -> list[str]:
        return sorted(pid for pid, b in self.assignment.items() if b == bucket)


def split_patients(patient_ids: list[str], seed: int = 0) -> SplitAssignment:
    """Patient-level 80/10/10 partition. Fewer than 10 patients cannot be
    partitioned meaningfully, so everything lands in train with a warning."""
    ids = sorted(patient_ids)
    if len(ids) < 10:
        return SplitAssignment({pid: "train" for pid in ids}, warning="fewer than 10 patients; all assigned to train")
    rng = np.random.default_rng(seed)
    perm = list(rng.permutation(ids))
    n = len(ids)
    n_val = round(0.1 * n)
    n_test = round(0.1 * n)
    assignment = {}
    for i, pid in enumerate(perm):
        if i < n - n_val - n_test:
            assignment[pid] = "train"
        elif i < n - n_test:
            assignment[pid] = "val"
        else:
            assignment[pid] = "test"
    return SplitAssignment(assignment)


def scan_for_leakage(
    store: CohortStore, criteria: ConceptCriteria, samples: list[TaskSample]
) -> list[str]:
    """Exhaustive scan: any ADRD token inside observation or prediction
    windows of prediction/conversion samples is a leak. Returns offender
    descriptions (empty list = clean)."""
    leaks = []
    by_id = {r.patient_id: r for r in store.records}
    for s in samples:
        if s.task not in ("prediction", "conversion"):
            continue
        record = by_id[s.patient_id]
        for e in record.events:
            if (s.window.in_observation(e.date) or s.window.in_prediction(e.date)) and criteria.is_adrd_token(e):
                leaks.append(f"{s.patient_id} {e.code} on {e.date.isoformat()} inside {s.window.observation_end}")
    return leaks


def dataset_manifest(samples: list[TaskSample], criteria: ConceptCriteria, task: str, horizon: int | None) -> dict:
    n = len(samples)
    if task == "survival":
        pos = sum(1 for s in samples if s.event == 1)
    else:
        pos = sum(1 for s in samples if s.y == 1)
    return {
        "task": task,
        "horizon_years": horizon,
        "n_samples": n,
        "n_positive": pos,
        "positive_rate": round(pos / n, 6) if n else None,
        "criteria_hash": criteria.hash(),
    }


def write_dataset(
    path: str | Path,
    samples: list[TaskSample],
    criteria: ConceptCriteria,
    task: str,
    horizon: int | None,
) -> None:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    write_ndjson(path / "samples.ndjson", (s.to_json_dict() for s in samples))
    (path / "manifest.json").write_text(
        json.dumps(dataset_manifest(samples, criteria, task, horizon), indent=2, sort_keys=True) + "\n"
    )


def load_dataset(path: str | Path) -> tuple[list[TaskSample], dict]:
    from .store.records import read_ndjson

    path = Path(path)
    samples = [TaskSample.from_json_dict(d) for d in read_ndjson(path / "samples.ndjson")]
    manifest = json.loads((path / "manifest.json").read_text())
    return samples, manifest
