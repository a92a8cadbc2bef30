"""Cohort-to-models pipeline: build task datasets, split by patient, train
each modality model on the training split only, and assess samples.

This is the shared engine behind the evaluation harness, the CLI, and the
service. Determinism: every random choice is seeded, encoders and
normalization statistics see training data only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .agents import (
    EhrAgent,
    HashingTfidfEncoder,
    ImageAgent,
    ModalityAssessment,
    ModalityUnavailable,
    NoteAgent,
    train_note_model,
)
from .agents.ehr import build_matrix
from .agents.notes import AttentionModel
from .cohort import (
    ConceptCriteria,
    SplitAssignment,
    TaskSample,
    build_conversion_dataset,
    build_diagnosis_dataset,
    build_prediction_dataset,
    build_survival_dataset,
    split_patients,
)
from .models import ModelSpec, predict_risk
from .orchestrator import ModelBundle
from .store import CohortStore

DEFAULT_GRID = {"l2": [1e-3, 1e-2, 1e-1, 1.0]}
NOTE_TRAIN_CAP = 2500


class PipelineError(RuntimeError):
    pass


def build_task_dataset(store: CohortStore, criteria: ConceptCriteria, task: str, horizon: int | None, seed: int = 0) -> list[TaskSample]:
    if task == "prediction":
        return build_prediction_dataset(store, criteria, horizon_years=horizon or 3)
    if task == "diagnosis":
        return build_diagnosis_dataset(store, criteria, seed=seed)
    if task == "survival":
        return build_survival_dataset(store, criteria)
    if task == "conversion":
        return build_conversion_dataset(store, criteria, horizon_years=horizon or 1)
    raise PipelineError(f"unknown task {task!r}")


@dataclass
class TrainedPipeline:
    store: CohortStore
    criteria: ConceptCriteria
    task: str
    horizon_years: int | None
    split: SplitAssignment
    samples: dict[str, list[TaskSample]]  # train | val | test
    bundle: ModelBundle
    ehr_agent: EhrAgent
    note_agent: NoteAgent
    image_agent: ImageAgent
    seed: int = 0

    def records(self) -> dict:
        return {r.patient_id: r for r in self.store.records}

    def assess_sample(self, sample: TaskSample, backend) -> list[ModalityAssessment]:
        """All available modality assessments for one sample."""
        record = self.store.get(sample.patient_id)
        out = []
        if self.bundle.ehr_model is not None:
            out.append(
                self.ehr_agent.assess(
                    record, sample.window, self.bundle.ehr_model, backend, background=self.bundle.ehr_background
                )
            )
        if self.bundle.note_model is not None:
            result = self.note_agent.assess(record, sample.window, self.bundle.note_model, backend)
            if isinstance(result, ModalityAssessment):
                out.append(result)
        if self.bundle.image_model is not None:
            result = self.image_agent.assess(
                record, sample.window, self.bundle.image_model, backend, background=self.bundle.image_background
            )
            if isinstance(result, ModalityAssessment):
                out.append(result)
        return out

    def modality_scores(self, samples: list[TaskSample], modality: str) -> tuple[list[int], np.ndarray]:
        """(kept indices, scores) for one modality across samples; samples
        where the modality is unavailable are dropped from `kept`."""
        records = self.records()
        if modality == "ehr":
            x = build_matrix(records, samples, self.ehr_agent.space)
            return list(range(len(samples))), predict_risk(self.bundle.ehr_model, x)
        if modality == "image":
            x, kept = self.image_agent._matrix(records, samples)
            return kept, predict_risk(self.bundle.image_model, x)
        if modality == "note":
            kept, scores = [], []
            for i, s in enumerate(samples):
                sentences = self.note_agent.sentences_in_window(records[s.patient_id], s.window)
                if not sentences:
                    continue
                kept.append(i)
                scores.append(self.bundle.note_model.score(sentences)[0])
            return kept, np.asarray(scores, dtype=float)
        raise PipelineError(f"unknown modality {modality!r}")


def _subsample_for_notes(samples: list[TaskSample], cap: int, seed: int) -> list[TaskSample]:
    if len(samples) <= cap:
        return samples
    pos = [s for s in samples if s.task == "survival" or s.y == 1]
    neg = [s for s in samples if not (s.task == "survival" or s.y == 1)]
    rng = np.random.default_rng(seed)
    n_neg = max(cap - len(pos), len(pos))
    idx = rng.choice(len(neg), size=min(n_neg, len(neg)), replace=False)
    kept = pos + [neg[i] for i in sorted(idx)]
    kept.sort(key=lambda s: (s.patient_id, s.window.observation_end))
    return kept


def _train_note_model_for(
    store: CohortStore,
    note_agent: NoteAgent,
    samples: list[TaskSample],
    seed: int,
    dim: int,
    epochs: int,
) -> AttentionModel | None:
    records = {r.patient_id: r for r in store.records}
    usable = []
    for s in samples:
        sentences = note_agent.sentences_in_window(records[s.patient_id], s.window)
        if sentences:
            usable.append((s, sentences))
    if not usable:
        return None
    if all(s.task != "survival" for s, _ in usable):
        labels = {s.y for s, _ in usable}
        if len(labels) < 2:
            return None
    docs = [" ".join(x.text for x in sentences) for _, sentences in usable]
    encoder = HashingTfidfEncoder(dim=dim).fit(docs)
    batches = [sentences for _, sentences in usable]
    if usable[0][0].task == "survival":
        times = np.array([s.time_days for s, _ in usable], dtype=float)
        events = np.array([s.event for s, _ in usable], dtype=int)
        if events.sum() == 0:
            return None
        return train_note_model(encoder, batches, survival=(times, events), seed=seed, epochs=epochs)
    y = np.array([s.y for s, _ in usable], dtype=float)
    return train_note_model(encoder, batches, y, seed=seed, epochs=epochs)


def save_bundle(pipeline: TrainedPipeline, directory: str | Path) -> None:
    """Persist everything assessment needs: models, scaler, background
    standard deviations, and a manifest tying it to the cohort."""
    from .models import BackgroundStats, save_model
    from .agents.notes import save_note_model

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    b = pipeline.bundle
    manifest = {
        "format_version": 1,
        "task": pipeline.task,
        "horizon_years": pipeline.horizon_years,
        "seed": pipeline.seed,
        "criteria_hash": pipeline.criteria.hash(),
        "cohort_hash": pipeline.store.content_hash(),
        "imaging_modality": pipeline.image_agent.modality,
        "has_ehr": b.ehr_model is not None,
        "has_note": b.note_model is not None,
        "has_image": b.image_model is not None,
    }
    if b.ehr_model is not None:
        save_model(b.ehr_model, directory / "ehr.model")
        if b.ehr_background is not None:
            stats = BackgroundStats.from_matrix(b.ehr_background)
            (directory / "ehr_background.json").write_text(json.dumps(stats.to_json_dict(), sort_keys=True))
    if b.image_model is not None:
        save_model(b.image_model, directory / "image.model")
        scaler = pipeline.image_agent.scaler
        (directory / "image_scaler.json").write_text(
            json.dumps({"modality": scaler.modality, "mean": scaler.mean, "sd": scaler.sd}, sort_keys=True)
        )
        if b.image_background is not None:
            stats = BackgroundStats.from_matrix(b.image_background)
            (directory / "image_background.json").write_text(json.dumps(stats.to_json_dict(), sort_keys=True))
    if b.note_model is not None:
        save_note_model(b.note_model, directory / "note.model")
    (directory / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def load_bundle(directory: str | Path) -> tuple[ModelBundle, EhrAgent, NoteAgent, ImageAgent, dict]:
    """Load a serving bundle; returns (bundle, ehr agent, note agent,
    image agent, manifest)."""
    from .models import BackgroundStats, load_model
    from .agents.imaging import ImagingScaler
    from .agents.notes import load_note_model

    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text())
    if manifest.get("format_version") != 1:
        raise PipelineError(f"unsupported bundle format {manifest.get('format_version')!r}")
    ehr_agent = EhrAgent()
    note_agent = NoteAgent()
    image_agent = ImageAgent(modality=manifest["imaging_modality"])
    ehr_model = load_model(directory / "ehr.model") if manifest["has_ehr"] else None
    ehr_background = None
    if (directory / "ehr_background.json").exists():
        ehr_background = BackgroundStats.from_json_dict(json.loads((directory / "ehr_background.json").read_text()))
    image_model = None
    image_background = None
    if manifest["has_image"]:
        image_model = load_model(directory / "image.model")
        scaler_data = json.loads((directory / "image_scaler.json").read_text())
        image_agent.scaler = ImagingScaler(
            scaler_data["modality"], mean=scaler_data["mean"], sd=scaler_data["sd"]
        )
        if (directory / "image_background.json").exists():
            image_background = BackgroundStats.from_json_dict(
                json.loads((directory / "image_background.json").read_text())
            )
    note_model = load_note_model(directory / "note.model") if manifest["has_note"] else None
    bundle = ModelBundle(
        task=manifest["task"],
        horizon_years=manifest["horizon_years"],
        ehr_model=ehr_model,
        note_model=note_model,
        image_model=image_model,
        ehr_background=ehr_background,
        image_background=image_background,
    )
    return bundle, ehr_agent, note_agent, image_agent, manifest


def train_pipeline(
    store: CohortStore,
    criteria: ConceptCriteria | None = None,
    task: str = "prediction",
    horizon_years: int | None = 3,
    seed: int = 0,
    use_grid: bool = True,
    note_dim: int = 512,
    note_epochs: int = 200,
    note_cap: int = NOTE_TRAIN_CAP,
) -> TrainedPipeline:
    criteria = criteria or ConceptCriteria()
    samples = build_task_dataset(store, criteria, task, horizon_years, seed=seed)
    if not samples:
        raise PipelineError(f"no samples for task {task!r} on this cohort")
    split = split_patients(sorted({s.patient_id for s in samples}), seed=seed)
    by_bucket: dict[str, list[TaskSample]] = {"train": [], "val": [], "test": []}
    for s in samples:
        by_bucket[split.bucket(s.patient_id)].append(s)
    records = {r.patient_id: r for r in store.records}

    ehr_agent = EhrAgent()
    image_agent = ImageAgent(modality=store.config.imaging_modality)
    note_agent = NoteAgent()

    train_samples = by_bucket["train"]
    val_samples = by_bucket["val"]
    if not train_samples:
        raise PipelineError("empty training split")

    if task == "survival":
        ehr_spec = ModelSpec(kind="cox", l2=1e-2, seed=seed)
        image_spec = ModelSpec(kind="cox", l2=1e-2, seed=seed)
    else:
        grid = DEFAULT_GRID if use_grid else None
        ehr_spec = ModelSpec(kind="logistic", l2=1e-2, grid=grid, seed=seed)
        image_spec = ModelSpec(kind="logistic", l2=1e-2, grid=grid, seed=seed)

    ehr_model = ehr_agent.train(records, train_samples, ehr_spec, val_samples=val_samples or None)
    ehr_background = build_matrix(records, train_samples, ehr_agent.space)

    image_model = None
    image_background = None
    has_imaging = any(records[s.patient_id].has_modality("image") for s in train_samples)
    if has_imaging:
        classes_ok = task == "survival" or len({s.y for s in train_samples if records[s.patient_id].has_modality("image")}) == 2
        if classes_ok:
            try:
                image_model = image_agent.train(records, train_samples, image_spec, val_samples=val_samples or None)
                image_background, _ = image_agent._matrix(records, train_samples)
            except Exception:
                image_model = None

    note_train = _subsample_for_notes(train_samples, note_cap, seed)
    note_model = _train_note_model_for(store, note_agent, note_train, seed, note_dim, note_epochs)

    bundle = ModelBundle(
        task=task,
        horizon_years=horizon_years,
        ehr_model=ehr_model,
        note_model=note_model,
        image_model=image_model,
        ehr_background=ehr_background,
        image_background=image_background,
    )
    return TrainedPipeline(
        store=store,
        criteria=criteria,
        task=task,
        horizon_years=horizon_years,
        split=split,
        samples=by_bucket,
        bundle=bundle,
        ehr_agent=ehr_agent,
        note_agent=note_agent,
        image_agent=image_agent,
        seed=seed,
    )
