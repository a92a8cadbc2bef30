"""EHR modality agent: daily-max featurization over consolidated code
families, task-model training, and categorized evidence extraction."""

from __future__ import annotations

import hashlib
import json
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from ..cohort import TaskSample, WindowSpec
from ..llm.gateway import complete_structured
from ..models import (
    FittedModel,
    ModelSpec,
    SparseMatrix,
    feature_importance,
    fit_classifier,
    fit_cox,
    model_fingerprint,
    predict_risk,
)
from ..store import PatientRecord
from ..store.vocab import CODE_INDEX
from .base import EvidenceItem, ModalityAssessment

DEMO_FEATURES = {
    "demo_age": "patient age",
    "demo_sex_male": "male sex",
    "demo_race_white": "race white",
    "demo_race_black": "race black",
    "demo_race_asian": "race asian",
    "demo_race_pacific": "race pacific",
    "demo_race_multirace": "race multirace",
    "demo_race_unknown": "race unknown",
}


@dataclass
class EhrFeatureSpace:
    """Raw code -> consolidated family mapping plus passthrough
    demographics. Diagnosis and medication families aggregate as
    day-counts inside the window; labs keep the last observed value."""

    family_map: dict[str, str]
    feature_names: list[str]
    descriptions: dict[str, str]
    version: str = ""

    @classmethod
    def build(cls) -> "EhrFeatureSpace":
        family_map = {code: info.family for code, info in CODE_INDEX.items()}
        families = sorted(set(family_map.values()))
        names = families + sorted(DEMO_FEATURES)
        descriptions = dict(DEMO_FEATURES)
        for code, info in CODE_INDEX.items():
            descriptions.setdefault(info.family, info.description)
        version = hashlib.sha256(json.dumps(sorted(family_map.items())).encode()).hexdigest()[:12]
        return cls(family_map, names, descriptions, version)

    def manifest(self) -> dict:
        return {
            "n_raw_codes": len(self.family_map),
            "n_features": len(self.feature_names),
            "version": self.version,
            "aggregation": {
                "diagnosis": "count of days with any family occurrence (after per-day max)",
                "medication": "count of days with any family occurrence (after per-day max)",
                "lab": "last observed value in window",
                "demographics": "static passthrough (age at cutoff, one-hot sex/race)",
            },
        }


def featurize(record: PatientRecord, window: WindowSpec, space: EhrFeatureSpace) -> dict[str, float]:
    """One sample row: window-restricted, per-day max within code, then
    family aggregation. Events outside the window are ignored."""
    day_code_max: dict[tuple, float] = {}
    for e in record.events:
        if not window.in_observation(e.date):
            continue
        if e.code not in space.family_map:
            continue
        key = (e.date, e.code)
        if key not in day_code_max or e.value > day_code_max[key]:
            day_code_max[key] = e.value
    counts: dict[str, float] = defaultdict(float)
    lab_last: dict[str, tuple] = {}
    for (d, code), value in day_code_max.items():
        info = CODE_INDEX[code]
        family = space.family_map[code]
        if info.system == "lab":
            cur = lab_last.get(family)
            if cur is None or d > cur[0]:
                lab_last[family] = (d, value)
        else:
            counts[family] += 1.0
    row: dict[str, float] = dict(counts)
    for family, (_, value) in lab_last.items():
        row[family] = value
    demo = record.demographics
    row["demo_age"] = float(demo["age_at_cutoff"])
    if demo["sex"] == "male":
        row["demo_sex_male"] = 1.0
    race_key = f"demo_race_{demo['race']}"
    if race_key in DEMO_FEATURES:
        row[race_key] = 1.0
    return row


def build_matrix(
    records: dict[str, PatientRecord], samples: list[TaskSample], space: EhrFeatureSpace
) -> SparseMatrix:
    rows = [featurize(records[s.patient_id], s.window, space) for s in samples]
    return SparseMatrix.from_rows(rows, space.feature_names)


@dataclass
class EhrAgent:
    space: EhrFeatureSpace = field(default_factory=EhrFeatureSpace.build)
    top_k: int = 10
    _importance_cache: dict = field(default_factory=dict, repr=False)

    def _ranked_importance(self, model, background):
        key = (id(model), id(background))
        hit = self._importance_cache.get(key)
        if hit is None:
            # keep refs alive so the id() key cannot be recycled
            hit = (feature_importance(model, background=background), model, background)
            self._importance_cache[key] = hit
        return hit[0]

    def train(
        self,
        records: dict[str, PatientRecord],
        train_samples: list[TaskSample],
        spec: ModelSpec | None = None,
        val_samples: list[TaskSample] | None = None,
    ) -> FittedModel:
        x = build_matrix(records, train_samples, self.space)
        task = train_samples[0].task if train_samples else "prediction"
        if task == "survival":
            times = np.array([s.time_days for s in train_samples], dtype=float)
            events = np.array([s.event for s in train_samples], dtype=int)
            model = fit_cox(x, times, events, spec or ModelSpec(kind="cox"))
        else:
            y = np.array([s.y for s in train_samples], dtype=int)
            validation = None
            if val_samples:
                xv = build_matrix(records, val_samples, self.space)
                yv = np.array([s.y for s in val_samples], dtype=int)
                validation = (xv, yv)
            model = fit_classifier(x, y, spec or ModelSpec(kind="logistic"), validation=validation)
        model.training_meta["feature_space_version"] = self.space.version
        model.training_meta["task"] = task
        return model

    def assess(
        self,
        record: PatientRecord,
        window: WindowSpec,
        model: FittedModel,
        backend,
        background: SparseMatrix | None = None,
    ) -> ModalityAssessment:
        row_dict = featurize(record, window, self.space)
        x = SparseMatrix.from_rows([row_dict], self.space.feature_names)
        risk = float(predict_risk(model, x)[0])
        ranked = self._ranked_importance(model, background)
        present = {name for name, v in row_dict.items() if v != 0.0}
        evidence: list[EvidenceItem] = []
        for item in ranked:
            if item.feature not in present or item.direction == "neutral":
                continue
            desc = self.space.descriptions.get(item.feature, item.feature)
            value = row_dict[item.feature]
            text = f"{desc} [{item.feature}] observed (window value {value:g})"
            polarity = complete_structured(backend, "polarity", {"ITEM": text}, schema="polarity")
            evidence.append(EvidenceItem(item=text, weight=item.importance, polarity=polarity))
            if len(evidence) >= self.top_k:
                break
        return ModalityAssessment(
            modality="ehr",
            risk=risk,
            evidence=evidence,
            model_ref=model_fingerprint(model)[:12],
            is_cox_score=model.kind == "cox",
        )
