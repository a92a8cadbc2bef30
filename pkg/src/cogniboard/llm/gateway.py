"""Single entry point for completing a template against a backend and
parsing the reply into one of the structured schemas."""

from __future__ import annotations

from . import structured
from .templates import render

MAX_RETRIES = 2

SCHEMAS = ("judgment", "judgment_survival", "polarity", "plan", "consensus", "mcqs", "choice", "freeform")


class GatewayError(RuntimeError):
    def __init__(self, message: str, raw_text: str = ""):
        super().__init__(message)
        self.raw_text = raw_text


def _parse(schema: str, text: str, bindings: dict):
    if schema == "judgment":
        return structured.parse_judgment(text)
    if schema == "judgment_survival":
        return structured.parse_judgment_survival(text)
    if schema == "polarity":
        return structured.parse_polarity(text)
    if schema == "plan":
        return structured.parse_plan(text)
    if schema == "consensus":
        low = float(bindings.get("LOWEST_SCORE", 0.0))
        high = float(bindings.get("HIGHEST_SCORE", 1.0))
        return structured.parse_proposed_risk(text, low, high)
    if schema == "mcqs":
        return structured.parse_mcqs(text)
    if schema == "choice":
        return structured.parse_choice(text)
    if schema == "freeform":
        return text
    raise GatewayError(f"unknown schema {schema!r}")


def complete_structured(backend, template_id: str, bindings: dict, schema: str = "freeform", seed: int = 0):
    """Render, complete, parse. Parse failures retry the identical request
    up to MAX_RETRIES times, then surface the raw text."""
    prompt = render(template_id, bindings)
    last_error: Exception | None = None
    for _ in range(1 + MAX_RETRIES):
        text = backend.complete(prompt, template_id=template_id, bindings=bindings, seed=seed)
        try:
            return _parse(schema, text, bindings)
        except structured.StructuredOutputError as e:
            last_error = e
    raise GatewayError(
        f"backend reply failed schema {schema!r} after {MAX_RETRIES} retries: {last_error}",
        raw_text=getattr(last_error, "raw_text", ""),
    )


def complete_text(backend, template_id: str, bindings: dict, seed: int = 0) -> str:
    prompt = render(template_id, bindings)
    return backend.complete(prompt, template_id=template_id, bindings=bindings, seed=seed)
