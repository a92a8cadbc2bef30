"""Language-model baseline runner: serialize each sample into the task
prompt (XML EHR with a day budget, note blocks, imaging summary), collect
structured judgments, and score with the shared metrics."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..cohort import TaskSample
from ..llm.gateway import GatewayError, complete_structured
from ..llm.serialize import serialize_ehr_xml, serialize_image_summary, serialize_notes
from ..metrics import auprc, auroc, c_index
from ..store import CohortStore

TASK_TEMPLATES = {
    "prediction": "baseline_prediction",
    "conversion": "baseline_prediction",
    "diagnosis": "baseline_diagnosis",
    "survival": "baseline_survival",
}


@dataclass
class BaselineReport:
    task: str
    n_scored: int
    n_skipped: int
    skip_reasons: list[str] = field(default_factory=list)
    metrics: dict = field(default_factory=dict)
    judgments: list[dict] = field(default_factory=list)


def _bindings_for(sample: TaskSample, store: CohortStore, day_budget: int) -> dict:
    record = store.get(sample.patient_id)
    horizon_days = 365 * (sample.horizon_years or 3)
    return {
        "PREDICTION_WINDOW": sample.window.prediction_days or 180,
        "TOTAL_WINDOW": (sample.window.prediction_days or 180) + horizon_days,
        "CLINICAL_NOTES": serialize_notes(record, sample.window, max_notes=20) or "(no notes available)",
        "IMAGE_SUMMARY": serialize_image_summary(record, sample.window),
        "EHR_HISTORY": serialize_ehr_xml(record, sample.window, day_budget),
    }


def run_llm_baseline(
    store: CohortStore,
    samples: list[TaskSample],
    backend,
    day_budget: int = 100,
    max_samples: int | None = None,
) -> BaselineReport:
    if not samples:
        raise ValueError("no samples to score")
    task = samples[0].task
    template = TASK_TEMPLATES[task]
    schema = "judgment_survival" if task == "survival" else "judgment"
    if max_samples is not None:
        samples = samples[:max_samples]
    report = BaselineReport(task=task, n_scored=0, n_skipped=0)
    scored = []
    for sample in samples:
        try:
            bindings = _bindings_for(sample, store, day_budget)
            judgment = complete_structured(backend, template, bindings, schema=schema)
        except (GatewayError, Exception) as e:  # noqa: BLE001 - per-sample failures skip
            report.n_skipped += 1
            report.skip_reasons.append(f"{sample.patient_id}: {e}")
            continue
        report.n_scored += 1
        if task == "survival":
            # later predicted conversion = lower relative risk; negatives rank lowest
            score = -float(judgment.time_to_label) if judgment.label else -1e9
            scored.append((sample.time_days, sample.event, score))
            report.judgments.append(
                {"patient_id": sample.patient_id, "label": judgment.label, "time_to_label": judgment.time_to_label}
            )
        else:
            scored.append((sample.y, judgment.probability))
            report.judgments.append(
                {"patient_id": sample.patient_id, "y": sample.y, "probability": judgment.probability}
            )
    if task == "survival":
        t = [s[0] for s in scored]
        d = [s[1] for s in scored]
        r = [s[2] for s in scored]
        if sum(d) > 0:
            report.metrics = {"c_index": c_index(t, d, r), "n": len(scored)}
    else:
        y = [s[0] for s in scored]
        p = [s[1] for s in scored]
        if len(set(y)) == 2:
            report.metrics = {"auroc": auroc(y, p), "auprc": auprc(y, p), "n": len(scored)}
    return report
