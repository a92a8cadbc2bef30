"""Summary agent: propose-and-critique fusion of modality assessments with
a hard min/max clamp, plus the heuristic and equal-participation baselines.

Whatever a backend says, the consensus risk is clamped into the interval
spanned by the available modality risks, so the bound invariant holds by
construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..llm.backends import BackendError
from ..llm.gateway import GatewayError, complete_structured, complete_text
from ..notebook import NotebookView
from .base import ModalityAssessment


class FusionError(ValueError):
    pass


@dataclass
class DiscussionTranscript:
    mode: str  # propose_critique | equal | single | fallback_mean
    proposer: str | None
    reviewers: list[str] = field(default_factory=list)
    argument: str = ""
    critiques: list[str] = field(default_factory=list)
    notebook_version: int = 0
    final_rationale: str = ""

    def to_json_dict(self) -> dict:
        return {
            "mode": self.mode,
            "proposer": self.proposer,
            "reviewers": self.reviewers,
            "argument": self.argument,
            "critiques": self.critiques,
            "notebook_version": self.notebook_version,
            "final_rationale": self.final_rationale,
        }


@dataclass
class ConsensusAssessment:
    risk: float
    confidence: float
    rationale: str
    min_modality_risk: float
    max_modality_risk: float
    transcript: DiscussionTranscript
    fallback: bool = False

    def __post_init__(self):
        if not (self.min_modality_risk - 1e-12 <= self.risk <= self.max_modality_risk + 1e-12):
            raise FusionError("consensus risk escaped the modality bounds")

    def to_json_dict(self) -> dict:
        return {
            "risk": self.risk,
            "confidence": self.confidence,
            "rationale": self.rationale,
            "bounds": {
                "min_modality_risk": self.min_modality_risk,
                "max_modality_risk": self.max_modality_risk,
            },
            "fallback": self.fallback,
            "transcript": self.transcript.to_json_dict(),
        }


def fuse_heuristic(assessments: list[ModalityAssessment], op: str) -> float:
    if not assessments:
        raise FusionError("no assessments to fuse")
    risks = [a.risk for a in assessments]
    if op == "min":
        return min(risks)
    if op == "max":
        return max(risks)
    if op == "mean":
        return sum(risks) / len(risks)
    raise FusionError(f"unknown fusion op {op!r}")


def _assessment_block(a: ModalityAssessment) -> str:
    return f"Modality {a.modality}: risk {a.risk:.4f}\n{a.evidence_text()}"


def _clamp(value: float, lo: float, hi: float) -> float:
    return max(lo, min(hi, value))


def _confidence(lo: float, hi: float) -> float:
    return _clamp(1.0 - (hi - lo), 0.0, 1.0)


def run_discussion(
    assessments: list[ModalityAssessment],
    notebook: NotebookView,
    backend,
    horizon_years: int = 3,
    reviewer_count: int | None = None,
) -> ConsensusAssessment:
    """Highest-risk modality proposes; the m lowest review; the final risk
    is parsed from the backend and clamped into [min, max]."""
    if not assessments:
        raise FusionError("at least one modality assessment required")
    ordered = sorted(assessments, key=lambda a: (-a.risk, a.modality))
    risks = [a.risk for a in assessments]
    lo, hi = min(risks), max(risks)
    avg = sum(risks) / len(risks)
    if len(assessments) == 1:
        only = assessments[0]
        transcript = DiscussionTranscript(
            mode="single",
            proposer=only.modality,
            notebook_version=notebook.version,
            final_rationale=f"single available modality {only.modality} passes through",
        )
        return ConsensusAssessment(only.risk, _confidence(lo, hi), transcript.final_rationale, lo, hi, transcript)
    proposer = ordered[0]
    reviewers = ordered[1:][::-1]  # lowest risk first
    if reviewer_count is not None:
        reviewers = reviewers[:reviewer_count]
    proposer_bindings = {
        "HIGHEST_MODALITY": proposer.modality,
        "HIGHEST_MODALITY_EVIDENCE": proposer.evidence_text(),
        "OTHER_MODALITY_INFO": "\n\n".join(_assessment_block(a) for a in reviewers),
        "NOTEBOOK_VERSION": notebook.version,
        "MEDICAL_NOTEBOOK": notebook.entries_text(),
    }
    opposition_bindings = {
        "OPPOSING_MODALITIES": ", ".join(a.modality for a in reviewers),
        "YEAR": horizon_years,
        "HIGHEST_MODALITY": proposer.modality,
        "OPPOSITION_INFO": "\n\n".join(_assessment_block(a) for a in reviewers),
        "NOTEBOOK_VERSION": notebook.version,
        "MEDICAL_NOTEBOOK": notebook.entries_text(),
        "HIGHEST_SCORE": f"{hi:.6f}",
        "LOWEST_SCORE": f"{lo:.6f}",
        "AVERAGE_SCORE": f"{avg:.6f}",
    }
    try:
        argument = complete_text(backend, "summary_proposer", proposer_bindings)
        opposition_bindings["HIGHEST_ARGUMENT"] = argument
        critique_prompt_reply = complete_text(backend, "summary_opposition", opposition_bindings)
        proposed = complete_structured(backend, "summary_opposition", opposition_bindings, schema="consensus")
    except (GatewayError, BackendError) as e:
        mean = fuse_heuristic(assessments, "mean")
        transcript = DiscussionTranscript(
            mode="fallback_mean",
            proposer=proposer.modality,
            reviewers=[a.modality for a in reviewers],
            notebook_version=notebook.version,
            final_rationale=f"backend failed ({e}); arithmetic-mean fusion applied",
        )
        return ConsensusAssessment(
            mean, _confidence(lo, hi), transcript.final_rationale, lo, hi, transcript, fallback=True
        )
    final = _clamp(float(proposed), lo, hi)
    transcript = DiscussionTranscript(
        mode="propose_critique",
        proposer=proposer.modality,
        reviewers=[a.modality for a in reviewers],
        argument=argument,
        critiques=[critique_prompt_reply],
        notebook_version=notebook.version,
        final_rationale=critique_prompt_reply.splitlines()[0] if critique_prompt_reply else "",
    )
    return ConsensusAssessment(final, _confidence(lo, hi), transcript.final_rationale, lo, hi, transcript)


def equal_discussion(
    assessments: list[ModalityAssessment],
    notebook: NotebookView,
    backend,
    horizon_years: int = 3,
) -> ConsensusAssessment:
    """Fixed sequential order (alphabetical by modality), one contribution
    each, synthesized by the backend under the same clamp."""
    if not assessments:
        raise FusionError("at least one modality assessment required")
    ordered = sorted(assessments, key=lambda a: a.modality)
    risks = [a.risk for a in assessments]
    lo, hi = min(risks), max(risks)
    avg = sum(risks) / len(risks)
    bindings = {
        "YEAR": horizon_years,
        "CONTRIBUTIONS": "\n\n".join(_assessment_block(a) for a in ordered),
        "NOTEBOOK_VERSION": notebook.version,
        "MEDICAL_NOTEBOOK": notebook.entries_text(),
        "HIGHEST_SCORE": f"{hi:.6f}",
        "LOWEST_SCORE": f"{lo:.6f}",
        "AVERAGE_SCORE": f"{avg:.6f}",
    }
    try:
        reply = complete_text(backend, "equal_discussion", bindings)
        proposed = complete_structured(backend, "equal_discussion", bindings, schema="consensus")
    except (GatewayError, BackendError) as e:
        mean = fuse_heuristic(assessments, "mean")
        transcript = DiscussionTranscript(
            mode="fallback_mean",
            proposer=None,
            reviewers=[a.modality for a in ordered],
            notebook_version=notebook.version,
            final_rationale=f"backend failed ({e}); arithmetic-mean fusion applied",
        )
        return ConsensusAssessment(
            mean, _confidence(lo, hi), transcript.final_rationale, lo, hi, transcript, fallback=True
        )
    final = _clamp(float(proposed), lo, hi)
    transcript = DiscussionTranscript(
        mode="equal",
        proposer=None,
        reviewers=[a.modality for a in ordered],
        critiques=[reply],
        notebook_version=notebook.version,
        final_rationale=reply.splitlines()[0] if reply else "",
    )
    return ConsensusAssessment(final, _confidence(lo, hi), transcript.final_rationale, lo, hi, transcript)


def fuse_survival_ranks(scores_by_modality: dict[str, list[float]]) -> list[float]:
    """Rank-average fusion for relative-risk (Cox) scores: per modality,
    scores become normalized ranks in [0, 1], then average across
    modalities. Order-preserving per modality, scale-free across them."""
    import numpy as np

    if not scores_by_modality:
        raise FusionError("no modality scores to fuse")
    lengths = {len(v) for v in scores_by_modality.values()}
    if len(lengths) != 1:
        raise FusionError("modality score vectors must align")
    n = lengths.pop()
    acc = np.zeros(n)
    for scores in scores_by_modality.values():
        arr = np.asarray(scores, dtype=float)
        order = np.argsort(arr, kind="mergesort")
        ranks = np.empty(n)
        ranks[order] = np.arange(n, dtype=float)
        if n > 1:
            ranks /= n - 1
        acc += ranks
    return (acc / len(scores_by_modality)).tolist()
