from .base import MODALITIES, EvidenceItem, ModalityAssessment, ModalityUnavailable
from .ehr import EhrAgent, EhrFeatureSpace, build_matrix, featurize
from .imaging import ImageAgent, ImagingError, ImagingScaler, extract_features, study_in_window
from .notes import (
    AttentionModel,
    EncodedBatch,
    HashingTfidfEncoder,
    NoteAgent,
    NoteAgentError,
    Sentence,
    attention_loss_and_grad,
    segment,
    stack_batches,
    train_note_model,
)
from .summary import (
    ConsensusAssessment,
    DiscussionTranscript,
    FusionError,
    equal_discussion,
    fuse_heuristic,
    fuse_survival_ranks,
    run_discussion,
)

__all__ = [
    "AttentionModel",
    "ConsensusAssessment",
    "DiscussionTranscript",
    "EhrAgent",
    "EhrFeatureSpace",
    "EncodedBatch",
    "EvidenceItem",
    "FusionError",
    "HashingTfidfEncoder",
    "ImageAgent",
    "ImagingError",
    "ImagingScaler",
    "MODALITIES",
    "ModalityAssessment",
    "ModalityUnavailable",
    "NoteAgent",
    "NoteAgentError",
    "Sentence",
    "attention_loss_and_grad",
    "build_matrix",
    "equal_discussion",
    "extract_features",
    "featurize",
    "fuse_heuristic",
    "fuse_survival_ranks",
    "run_discussion",
    "segment",
    "stack_batches",
    "study_in_window",
    "train_note_model",
]
