"""Reasoning-agreement evaluation: five-option MCQs generated from paired
reports, answered with each report as context, scored as raw and
chance-corrected agreement."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..llm.gateway import complete_structured
from ..metrics import AgreementReport, agreement

CHOICES = ["A", "B", "C", "D", "E"]
INSUFFICIENT = "Insufficient evidence in the report"


def report_to_text(report: dict) -> str:
    """Render a FinalReport dict as the evidence-bearing text block the
    MCQ machinery consumes."""
    lines = []
    task = report.get("task", {})
    lines.append(f"Assessment report for task {task.get('kind', 'unknown')}.")
    consensus = report.get("consensus")
    if consensus:
        lines.append(f"Consensus risk {consensus['risk']:.4f} with confidence {consensus['confidence']:.2f}.")
    for mod in report.get("modalities", []):
        if mod.get("unavailable"):
            continue
        lines.append(f"Findings from the {mod['modality']} modality:")
        for e in mod.get("evidence", []):
            lines.append(f"- {e['item']}")
    return "\n".join(lines)


def _format_options(options: list[str]) -> str:
    return "\n".join(f"{letter}) {text}" for letter, text in zip(CHOICES, options))


@dataclass
class PairAgreement:
    report: AgreementReport
    n_insufficient_ref: int = 0
    n_insufficient_gen: int = 0


def icare_agreement(
    reference_text: str,
    generated_text: str,
    backend,
    n_questions: int = 10,
) -> PairAgreement:
    """Generate five-option MCQs from both reports, answer each question
    against both contexts, and score the answer agreement."""
    questions = []
    for source in (reference_text, generated_text):
        qs = complete_structured(
            backend,
            "mcq_generation",
            {"REPORT": source, "N_QUESTIONS": n_questions},
            schema="mcqs",
        )
        questions.extend(qs)
    for q in questions:
        if len(q["options"]) != 5 or q["options"][-1] != INSUFFICIENT:
            raise ValueError("every MCQ needs exactly five options ending with the insufficient-evidence option")
    answers_ref = []
    answers_gen = []
    for q in questions:
        opts = _format_options(q["options"])
        answers_ref.append(
            complete_structured(
                backend,
                "mcq_answer",
                {"CONTEXT": reference_text, "QUESTION": q["question"], "OPTIONS": opts},
                schema="choice",
            )
        )
        answers_gen.append(
            complete_structured(
                backend,
                "mcq_answer",
                {"CONTEXT": generated_text, "QUESTION": q["question"], "OPTIONS": opts},
                schema="choice",
            )
        )
    rep = agreement(answers_ref, answers_gen, CHOICES)
    return PairAgreement(
        report=rep,
        n_insufficient_ref=answers_ref.count("E"),
        n_insufficient_gen=answers_gen.count("E"),
    )


@dataclass
class AgreementDistribution:
    pairs: list[PairAgreement] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)

    def p_o_values(self) -> list[float]:
        return [p.report.p_o for p in self.pairs]

    def kappa_values(self) -> list[float]:
        return [p.report.kappa for p in self.pairs if p.report.kappa_defined]


def icare_agreement_many(
    paired_reports: list[tuple[str, str]],
    backend,
    n_questions: int = 10,
) -> AgreementDistribution:
    out = AgreementDistribution()
    for i, (ref, gen) in enumerate(paired_reports):
        try:
            out.pairs.append(icare_agreement(ref, gen, backend, n_questions=n_questions))
        except Exception as e:  # noqa: BLE001 - per-pair failures logged
            out.failures.append(f"pair {i}: {e}")
    return out
