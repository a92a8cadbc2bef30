"""Shared modality-agent output types."""

from __future__ import annotations

from dataclasses import dataclass, field

MODALITIES = ("ehr", "image", "note")


@dataclass
class EvidenceItem:
    item: str
    weight: float
    polarity: str  # positive | neutral | negative
    source_date: str | None = None

    def to_json_dict(self) -> dict:
        return {
            "item": self.item,
            "weight": self.weight,
            "polarity": self.polarity,
            "source_date": self.source_date,
        }


@dataclass
class ModalityAssessment:
    modality: str
    risk: float
    evidence: list[EvidenceItem] = field(default_factory=list)
    model_ref: str = ""
    is_cox_score: bool = False

    def __post_init__(self):
        if self.modality not in MODALITIES:
            raise ValueError(f"unknown modality {self.modality!r}")
        if self.risk != self.risk:
            raise ValueError("risk must be finite")
        self.evidence.sort(key=lambda e: (-abs(e.weight), e.item))

    def evidence_text(self) -> str:
        return "\n".join(f"- {e.item} (weight {e.weight:+.4f}, {e.polarity})" for e in self.evidence)

    def to_json_dict(self) -> dict:
        return {
            "modality": self.modality,
            "risk": self.risk,
            "evidence": [e.to_json_dict() for e in self.evidence],
            "model_ref": self.model_ref,
            "is_cox_score": self.is_cox_score,
        }


@dataclass
class ModalityUnavailable:
    modality: str
    reason: str

    def to_json_dict(self) -> dict:
        return {"modality": self.modality, "unavailable": True, "reason": self.reason}
