from .generate import CohortConfig, ConfigError, GroundTruth, generate_cohort
from .query import (
    CohortStore,
    Filter,
    NeedsClarification,
    QueryError,
    QueryPlan,
    RecordSet,
    translate_query,
)
from .records import (
    BRAIN_REGIONS,
    IMAGING_SCHEMAS,
    RETINA_SECTORS,
    ClinicalNote,
    CodedEvent,
    ImagingStudy,
    PatientRecord,
    RecordError,
    read_ndjson,
    write_ndjson,
)

__all__ = [
    "BRAIN_REGIONS",
    "ClinicalNote",
    "CodedEvent",
    "CohortConfig",
    "CohortStore",
    "ConfigError",
    "Filter",
    "GroundTruth",
    "IMAGING_SCHEMAS",
    "ImagingStudy",
    "NeedsClarification",
    "PatientRecord",
    "QueryError",
    "QueryPlan",
    "RecordError",
    "RecordSet",
    "RETINA_SECTORS",
    "generate_cohort",
    "read_ndjson",
    "translate_query",
    "write_ndjson",
]
