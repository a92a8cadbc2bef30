from .backends import (
    BackendError,
    HttpChatBackend,
    ScriptedBackend,
    count_strong_markers,
    find_factors,
)
from .gateway import GatewayError, complete_structured, complete_text
from .serialize import serialize_ehr_xml, serialize_image_summary, serialize_notes
from .structured import StructuredJudgment, StructuredOutputError
from .templates import PromptTemplate, TemplateError, checksum_manifest, get_template, render, verify_checksums

__all__ = [
    "BackendError",
    "GatewayError",
    "HttpChatBackend",
    "PromptTemplate",
    "ScriptedBackend",
    "StructuredJudgment",
    "StructuredOutputError",
    "TemplateError",
    "checksum_manifest",
    "complete_structured",
    "complete_text",
    "count_strong_markers",
    "find_factors",
    "get_template",
    "render",
    "serialize_ehr_xml",
    "serialize_image_summary",
    "serialize_notes",
    "verify_checksums",
]
