"""Notebook scaling curve: distill increasing numbers of corrective
entries from mispredicted cases and re-run the fused evaluation."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..agents import run_discussion
from ..metrics import auroc
from ..notebook import NotebookStore
from ..pipeline import TrainedPipeline


@dataclass
class ScalingPoint:
    size: int
    auroc: float
    notebook_version: int
    n_entries: int


@dataclass
class ScalingCurve:
    points: list[ScalingPoint] = field(default_factory=list)
    eval_n: int = 0
    eval_positives: int = 0


def case_summary(assessments) -> str:
    lines = []
    for a in assessments:
        lines.append(f"modality {a.modality} risk {a.risk:.4f}")
        for e in a.evidence:
            lines.append(f"- {e.item}")
    return "\n".join(lines)


def collect_error_pool(
    pipeline: TrainedPipeline, backend, max_cases: int = 12
) -> tuple[list[dict], list[int]]:
    """Most underestimated positive test samples, packaged for the
    distillation prompts. Returns (pool, indices of the pooled samples)."""
    test = pipeline.samples["test"]
    nb = NotebookStore()
    scored = []
    for i, s in enumerate(test):
        if s.y != 1:
            continue
        assessments = pipeline.assess_sample(s, backend)
        if not assessments:
            continue
        consensus = run_discussion(assessments, nb.view(), backend, horizon_years=pipeline.horizon_years or 3)
        scored.append((consensus.risk, i, assessments))
    scored.sort(key=lambda t: (t[0], t[1]))
    pool = []
    indices = []
    for risk, i, assessments in scored[:max_cases]:
        pool.append(
            {
                "case_summary": case_summary(assessments),
                "truth": 1,
                "predicted_risk": risk,
                "patient_id": test[i].patient_id,
            }
        )
        indices.append(i)
    return pool, indices


def notebook_scaling_curve(
    pipeline: TrainedPipeline,
    backend,
    sizes: list[int],
    error_pool: list[dict],
    error_indices: list[int],
) -> ScalingCurve:
    """For each target size, distill until that many entries are accepted,
    then evaluate fused AUROC on the planted-error subset: the pooled
    positives plus every test negative."""
    if error_pool and max(sizes) > len(error_pool):
        raise ValueError("error pool smaller than the largest requested size")
    test = pipeline.samples["test"]
    eval_idx = sorted(set(error_indices) | {i for i, s in enumerate(test) if s.y == 0})
    eval_samples = [test[i] for i in eval_idx]
    y = [s.y for s in eval_samples]
    curve = ScalingCurve(eval_n=len(eval_samples), eval_positives=int(sum(y)))
    phi_ids = set(pipeline.store.patient_ids)
    for size in sizes:
        notebook = NotebookStore(phi_ids)
        accepted = 0
        for case in error_pool:
            if accepted >= size:
                break
            accepted += len(notebook.distill_from_errors([case], backend))
        view = notebook.view()
        risks = []
        for s in eval_samples:
            assessments = pipeline.assess_sample(s, backend)
            consensus = run_discussion(assessments, view, backend, horizon_years=pipeline.horizon_years or 3)
            risks.append(consensus.risk)
        curve.points.append(
            ScalingPoint(
                size=size,
                auroc=auroc(y, risks),
                notebook_version=view.version,
                n_entries=len(view.entries),
            )
        )
    return curve
