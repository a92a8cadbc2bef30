from .agreement import (
    AgreementDistribution,
    PairAgreement,
    icare_agreement,
    icare_agreement_many,
    report_to_text,
)
from .llm_baseline import BaselineReport, run_llm_baseline
from .runner import (
    PUBLISHED_REFERENCE,
    ExperimentSpec,
    ablation_missing_modality,
    bundle_hash,
    evaluate_classification,
    evaluate_survival,
    fused_scores,
    run_experiment,
)
from .scaling import ScalingCurve, ScalingPoint, collect_error_pool, notebook_scaling_curve

__all__ = [
    "AgreementDistribution",
    "BaselineReport",
    "ExperimentSpec",
    "PUBLISHED_REFERENCE",
    "PairAgreement",
    "ScalingCurve",
    "ScalingPoint",
    "ablation_missing_modality",
    "bundle_hash",
    "collect_error_pool",
    "evaluate_classification",
    "evaluate_survival",
    "fused_scores",
    "icare_agreement",
    "icare_agreement_many",
    "notebook_scaling_curve",
    "report_to_text",
    "run_experiment",
    "run_llm_baseline",
]
