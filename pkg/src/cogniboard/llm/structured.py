"""Structured-output parsing for backend replies.

Enforcement is post-hoc: pull a JSON object or regex the key fields out
of free text, then validate ranges. Out-of-range values raise with the
raw text attached; nothing is silently clamped.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass


class StructuredOutputError(ValueError):
    def __init__(self, message: str, raw_text: str = ""):
        super().__init__(message)
        self.raw_text = raw_text


@dataclass
class StructuredJudgment:
    justification: str
    label: bool
    probability: float | None = None
    time_to_label: int | None = None


_JSON_BLOCK = re.compile(r"\{.*\}", re.S)
_PROB_RE = re.compile(r'"?probability"?\s*[:=]\s*([0-9]*\.?[0-9]+)', re.I)
_LABEL_RE = re.compile(r'"?label"?\s*[:=]\s*(true|false|1|0|yes|no)', re.I)
_TTL_RE = re.compile(r'"?time_to_label"?\s*[:=]\s*(-?\d+)', re.I)
_RISK_RE = re.compile(r"proposed risk\s*:\s*([0-9]*\.?[0-9]+)", re.I)
_NUMBER_RE = re.compile(r"([0-9]*\.?[0-9]+)")


def extract_json(text: str):
    m = _JSON_BLOCK.search(text)
    if not m:
        raise StructuredOutputError("no JSON object found", text)
    candidate = m.group(0)
    # trim to the first balanced object
    depth = 0
    for i, ch in enumerate(candidate):
        if ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                candidate = candidate[: i + 1]
                break
    try:
        return json.loads(candidate)
    except json.JSONDecodeError as e:
        raise StructuredOutputError(f"malformed JSON: {e}", text) from e


def _as_bool(v) -> bool:
    if isinstance(v, bool):
        return v
    return str(v).strip().lower() in ("true", "1", "yes")


def parse_judgment(text: str) -> StructuredJudgment:
    try:
        obj = extract_json(text)
        justification = str(obj.get("justification", ""))
        label = _as_bool(obj["label"])
        probability = float(obj["probability"])
    except (StructuredOutputError, KeyError, TypeError, ValueError):
        pm = _PROB_RE.search(text)
        lm = _LABEL_RE.search(text)
        if not pm or not lm:
            raise StructuredOutputError("judgment missing label or probability", text)
        probability = float(pm.group(1))
        label = _as_bool(lm.group(1))
        justification = text.strip()
    if not (0.0 <= probability <= 1.0):
        raise StructuredOutputError(f"probability {probability} outside [0, 1]", text)
    return StructuredJudgment(justification=justification, label=label, probability=probability)


def parse_judgment_survival(text: str) -> StructuredJudgment:
    try:
        obj = extract_json(text)
        justification = str(obj.get("justification", ""))
        label = _as_bool(obj["label"])
        ttl = int(obj["time_to_label"])
    except (StructuredOutputError, KeyError, TypeError, ValueError):
        lm = _LABEL_RE.search(text)
        tm = _TTL_RE.search(text)
        if not lm or not tm:
            raise StructuredOutputError("survival judgment missing label or time_to_label", text)
        label = _as_bool(lm.group(1))
        ttl = int(tm.group(1))
        justification = text.strip()
    if (ttl == -1) != (not label):
        raise StructuredOutputError(
            f"time_to_label must be -1 exactly when label is false (got label={label}, time_to_label={ttl})",
            text,
        )
    return StructuredJudgment(justification=justification, label=label, time_to_label=ttl)


def parse_polarity(text: str) -> str:
    lowered = text.strip().lower()
    for word in ("positive", "negative", "neutral"):
        if re.search(rf"\b{word}\b", lowered):
            return word
    raise StructuredOutputError(f"polarity answer not recognized: {text!r}", text)


def parse_plan(text: str) -> dict:
    if "UNTRANSLATABLE" in text:
        raise StructuredOutputError("backend declared the request untranslatable", text)
    return extract_json(text)


def parse_proposed_risk(text: str, low: float, high: float) -> float:
    """Final consensus numeral: the 'Proposed risk:' line wins; any bare
    in-range numeral is a fallback. The caller clamps; out-of-range here
    only fails when nothing plausible is present."""
    m = _RISK_RE.search(text)
    if m:
        return float(m.group(1))
    candidates = [float(v) for v in _NUMBER_RE.findall(text)]
    in_range = [v for v in candidates if low - 1e-9 <= v <= high + 1e-9]
    if in_range:
        return in_range[-1]
    raise StructuredOutputError("no proposed risk numeral found", text)


def parse_mcqs(text: str, n_options: int = 5) -> list[dict]:
    m = re.search(r"\[.*\]", text, re.S)
    if not m:
        raise StructuredOutputError("no JSON list of questions found", text)
    try:
        items = json.loads(m.group(0))
    except json.JSONDecodeError as e:
        raise StructuredOutputError(f"malformed MCQ JSON: {e}", text) from e
    for q in items:
        if len(q.get("options", [])) != n_options:
            raise StructuredOutputError(f"each MCQ needs exactly {n_options} options", text)
    return items


def parse_choice(text: str) -> str:
    m = re.search(r"\b([A-E])\b", text.strip())
    if not m:
        raise StructuredOutputError(f"no A-E choice found: {text!r}", text)
    return m.group(1)
