"""Imaging modality agent over precomputed regional feature vectors.

Features are z-normalized against training-split statistics only; top
model importances map straight back to named regions for evidence.
"""

from __future__ import annotations

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
from ..store import ImagingStudy, PatientRecord
from ..store.records import IMAGING_SCHEMAS
from .base import EvidenceItem, ModalityAssessment, ModalityUnavailable


class ImagingError(ValueError):
    pass


@dataclass
class ImagingScaler:
    """Per-region mean/sd computed from training studies only."""

    modality: str
    mean: dict[str, float] = field(default_factory=dict)
    sd: dict[str, float] = field(default_factory=dict)

    @property
    def regions(self) -> list[str]:
        return list(IMAGING_SCHEMAS[self.modality])

    def fit(self, studies: list[ImagingStudy]) -> "ImagingScaler":
        if not studies:
            raise ImagingError("no training studies to fit normalization statistics")
        for region in self.regions:
            values = np.array([s.features[region] for s in studies], dtype=float)
            self.mean[region] = float(values.mean())
            sd = float(values.std())
            self.sd[region] = sd if sd > 0 else 1.0
        return self

    def transform(self, study: ImagingStudy) -> dict[str, float]:
        if study.modality != self.modality:
            raise ImagingError(f"study modality {study.modality!r} does not match scaler {self.modality!r}")
        if not self.mean:
            raise ImagingError("scaler not fitted")
        out = {}
        for region in self.regions:
            if region not in study.features:
                raise ImagingError(f"missing region {region!r}")
            v = study.features[region]
            if not (v > 0):
                raise ImagingError(f"non-positive volume for {region!r}")
            out[region] = (v - self.mean[region]) / self.sd[region]
        return out


def extract_features(study: ImagingStudy, scaler: ImagingScaler) -> dict[str, float]:
    return scaler.transform(study)


def study_in_window(record: PatientRecord, window: WindowSpec, modality: str) -> ImagingStudy | None:
    """Most recent study of the given modality inside the observation window."""
    eligible = [
        im
        for im in record.imaging
        if im.modality == modality and window.in_observation(im.date.date())
    ]
    return eligible[-1] if eligible else None


@dataclass
class ImageAgent:
    modality: str = "brain_volumes"
    scaler: ImagingScaler | None = None
    top_k: int = 10
    _importance_cache: dict = field(default_factory=dict, repr=False)

    def _ranked_importance(self, model, background):
        key = (id(model), id(background))
        hit = self._importance_cache.get(key)
        if hit is None:
            hit = (feature_importance(model, background=background), model, background)
            self._importance_cache[key] = hit
        return hit[0]

    def fit_scaler(self, records: dict[str, PatientRecord], samples: list[TaskSample]) -> ImagingScaler:
        studies = []
        for s in samples:
            study = study_in_window(records[s.patient_id], s.window, self.modality)
            if study is not None:
                studies.append(study)
        self.scaler = ImagingScaler(self.modality).fit(studies)
        return self.scaler

    def _matrix(
        self, records: dict[str, PatientRecord], samples: list[TaskSample]
    ) -> tuple[SparseMatrix, list[int]]:
        """Feature matrix over samples that have an in-window study;
        returns kept sample indices alongside."""
        assert self.scaler is not None
        rows = []
        kept = []
        for i, s in enumerate(samples):
            study = study_in_window(records[s.patient_id], s.window, self.modality)
            if study is None:
                continue
            rows.append(self.scaler.transform(study))
            kept.append(i)
        names = self.scaler.regions
        return SparseMatrix.from_rows(rows, names), kept

    def train(
        self,
        records: dict[str, PatientRecord],
        train_samples: list[TaskSample],
        spec: ModelSpec | None = None,
        val_samples: list[TaskSample] | None = None,
    ) -> FittedModel:
        if self.scaler is None:
            self.fit_scaler(records, train_samples)
        x, kept = self._matrix(records, train_samples)
        samples = [train_samples[i] for i in kept]
        task = samples[0].task if samples else "prediction"
        if task == "survival":
            times = np.array([s.time_days for s in samples], dtype=float)
            events = np.array([s.event for s in samples], dtype=int)
            model = fit_cox(x, times, events, spec or ModelSpec(kind="cox"))
        else:
            y = np.array([s.y for s in samples], dtype=int)
            validation = None
            if val_samples:
                xv, kv = self._matrix(records, val_samples)
                if kv:
                    yv = np.array([val_samples[i].y for i in kv], dtype=int)
                    validation = (xv, yv)
            model = fit_classifier(x, y, spec or ModelSpec(kind="logistic"), validation=validation)
        model.training_meta["task"] = task
        model.training_meta["imaging_modality"] = self.modality
        return model

    def assess(
        self,
        record: PatientRecord,
        window: WindowSpec,
        model: FittedModel,
        backend,
        background: SparseMatrix | None = None,
    ) -> ModalityAssessment | ModalityUnavailable:
        assert self.scaler is not None
        study = study_in_window(record, window, self.modality)
        if study is None:
            return ModalityUnavailable("image", "no imaging study inside the observation window")
        z = self.scaler.transform(study)
        x = SparseMatrix.from_rows([z], self.scaler.regions)
        risk = float(predict_risk(model, x)[0])
        ranked = self._ranked_importance(model, background)
        coef = None
        if model.kind in ("logistic", "cox"):
            coef = dict(zip(model.feature_names, model.beta[1:] if model.kind == "logistic" else model.beta))
        evidence = []
        for item in ranked:
            if item.direction == "neutral":
                continue
            zv = z[item.feature]
            # the patient-level contribution (coefficient times z-score)
            # decides the phrasing, so mild anatomical noise reads neutral
            if coef is not None:
                contribution = coef[item.feature] * zv
            else:
                contribution = (1.0 if item.direction == "raises" else -1.0) * zv * min(abs(item.importance), 1.0)
            if contribution > 0.15:
                phrase = "indicates elevated risk"
            elif contribution < -0.15:
                phrase = "argues against elevated risk"
            else:
                phrase = "near the training mean"
            text = f"{item.feature} (z={zv:+.2f}) {phrase}"
            polarity = complete_structured(backend, "polarity", {"ITEM": text}, schema="polarity")
            evidence.append(
                EvidenceItem(
                    item=text,
                    weight=item.importance,
                    polarity=polarity,
                    source_date=study.date.date().isoformat(),
                )
            )
            if len(evidence) >= self.top_k:
                break
        return ModalityAssessment(
            modality="image",
            risk=risk,
            evidence=evidence,
            model_ref=model_fingerprint(model)[:12],
            is_cox_score=model.kind == "cox",
        )
