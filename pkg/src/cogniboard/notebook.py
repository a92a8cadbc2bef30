"""Dynamic medical notebook: a versioned store of directional clinical
patterns distilled from clinician feedback and automated error review.

Mutations are curated through the backend, deduplicated, rejected on
factor-direction conflicts, scrubbed of patient identifiers, and logged
append-only so any historical view can be reconstructed.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .llm.gateway import complete_text
from .llm.structured import StructuredOutputError

SIZE_ADVISORY_LIMIT = 200

_FACTOR_TOKEN = re.compile(r"[a-z0-9][a-z0-9_-]*")
_ANSWER_BLOCK = re.compile(r"<answer>(.*?)</answer>", re.S)


class NotebookError(ValueError):
    pass


def normalize_factor(raw: str) -> str:
    tokens = _FACTOR_TOKEN.findall(raw.lower())
    return "_".join(tokens)


@dataclass(frozen=True)
class NotebookEntry:
    entry_id: str
    text: str
    factors: tuple[str, ...]
    direction: str  # higher | lower
    provenance: str  # clinician_feedback | auto_distilled
    created_version: int

    def __post_init__(self):
        if self.direction not in ("higher", "lower"):
            raise NotebookError(f"direction must be higher or lower, got {self.direction!r}")
        if not self.factors:
            raise NotebookError("entries need at least one factor")

    def to_json_dict(self) -> dict:
        return {
            "entry_id": self.entry_id,
            "text": self.text,
            "factors": list(self.factors),
            "direction": self.direction,
            "provenance": self.provenance,
            "created_version": self.created_version,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "NotebookEntry":
        return cls(
            entry_id=d["entry_id"],
            text=d["text"],
            factors=tuple(d["factors"]),
            direction=d["direction"],
            provenance=d["provenance"],
            created_version=d["created_version"],
        )


@dataclass
class NotebookView:
    version: int
    entries: list[NotebookEntry]

    def entries_text(self) -> str:
        if not self.entries:
            return "(empty)"
        return "\n".join(
            f"- [{e.direction}] factors={','.join(e.factors)} | {e.text}" for e in self.entries
        )

    def rendered(self) -> str:
        return f"Version: {self.version}\n{self.entries_text()}"


@dataclass
class IngestResult:
    status: str  # accepted | duplicate | conflict | skipped
    version: int
    entry: NotebookEntry | None = None
    conflicting: list[NotebookEntry] = field(default_factory=list)
    warning: str | None = None


class NotebookStore:
    """Single-writer notebook. `known_patient_ids` powers the PHI guard:
    identifiers are scrubbed from inputs and a scan runs on every write."""

    def __init__(self, known_patient_ids: set[str] | None = None):
        self._entries: list[NotebookEntry] = []
        self._version = 0
        self._audit: list[dict] = []
        self._phi_ids = set(known_patient_ids or set())

    @property
    def version(self) -> int:
        return self._version

    def view(self) -> NotebookView:
        return NotebookView(self._version, list(self._entries))

    def view_at(self, version: int) -> NotebookView:
        """Replay the audit log up to the given version."""
        entries: dict[str, NotebookEntry] = {}
        for event in self._audit:
            if event["version"] > version:
                break
            if event["action"] in ("accept", "merge"):
                e = NotebookEntry.from_json_dict(event["entry"])
                entries[e.entry_id] = e
        return NotebookView(version, list(entries.values()))

    # --- PHI guard ---

    def scrub(self, text: str) -> str:
        out = text
        for pid in self._phi_ids:
            out = out.replace(pid, "the patient")
        return out

    def _assert_no_phi(self, entry: NotebookEntry) -> None:
        blob = entry.text + " " + " ".join(entry.factors)
        for pid in self._phi_ids:
            if pid in blob:
                raise NotebookError(f"entry contains patient identifier {pid!r}")

    # --- curation core ---

    def _find_conflicts(self, factors: tuple[str, ...], direction: str) -> list[NotebookEntry]:
        opposite = "lower" if direction == "higher" else "higher"
        return [
            e for e in self._entries if e.direction == opposite and set(e.factors) & set(factors)
        ]

    def _find_duplicate(self, factors: tuple[str, ...], direction: str) -> NotebookEntry | None:
        fs = set(factors)
        for e in self._entries:
            if e.direction == direction and fs <= set(e.factors):
                return e
        return None

    def _find_mergeable(self, factors: tuple[str, ...], direction: str) -> NotebookEntry | None:
        # only a strict superset extends an existing entry; partial overlap
        # stays a separate pattern so distinct findings accumulate
        fs = set(factors)
        for e in self._entries:
            if e.direction == direction and set(e.factors) < fs:
                return e
        return None

    def add_entry(self, text: str, factors: list[str], direction: str, provenance: str) -> IngestResult:
        normalized = tuple(sorted({normalize_factor(f) for f in factors if normalize_factor(f)}))
        if not normalized:
            raise NotebookError("no usable factors after normalization")
        text = self.scrub(text).strip()
        conflicts = self._find_conflicts(normalized, direction)
        if conflicts:
            self._audit.append(
                {
                    "action": "conflict",
                    "version": self._version,
                    "candidate": {"text": text, "factors": list(normalized), "direction": direction},
                    "existing": [e.to_json_dict() for e in conflicts],
                }
            )
            return IngestResult("conflict", self._version, conflicting=conflicts)
        duplicate = self._find_duplicate(normalized, direction)
        if duplicate is not None:
            self._audit.append(
                {
                    "action": "duplicate",
                    "version": self._version,
                    "candidate": {"text": text, "factors": list(normalized), "direction": direction},
                    "existing": [duplicate.to_json_dict()],
                }
            )
            return IngestResult("duplicate", self._version, entry=duplicate)
        mergeable = self._find_mergeable(normalized, direction)
        self._version += 1
        if mergeable is not None:
            merged_factors = tuple(sorted(set(mergeable.factors) | set(normalized)))
            merged = NotebookEntry(
                entry_id=mergeable.entry_id,
                text=mergeable.text + " " + text,
                factors=merged_factors,
                direction=direction,
                provenance=mergeable.provenance,
                created_version=mergeable.created_version,
            )
            self._assert_no_phi(merged)
            self._entries[self._entries.index(mergeable)] = merged
            self._audit.append({"action": "merge", "version": self._version, "entry": merged.to_json_dict()})
            warning = self._size_warning()
            return IngestResult("accepted", self._version, entry=merged, warning=warning)
        entry = NotebookEntry(
            entry_id=f"nb-{self._version:05d}",
            text=text,
            factors=normalized,
            direction=direction,
            provenance=provenance,
            created_version=self._version,
        )
        self._assert_no_phi(entry)
        self._entries.append(entry)
        self._audit.append({"action": "accept", "version": self._version, "entry": entry.to_json_dict()})
        warning = self._size_warning()
        return IngestResult("accepted", self._version, entry=entry, warning=warning)

    def _size_warning(self) -> str | None:
        if len(self._entries) >= SIZE_ADVISORY_LIMIT:
            return f"notebook holds {len(self._entries)} entries; consider curation review"
        return None

    # --- backend-driven ingestion ---

    def ingest_feedback(self, feedback: dict, backend) -> IngestResult:
        """feedback: {case_ref, free_text, suggested_direction}."""
        free_text = (feedback.get("free_text") or "").strip()
        if not free_text:
            raise NotebookError("feedback text must be non-empty")
        question = self.scrub(free_text)
        direction_hint = feedback.get("suggested_direction")
        if direction_hint:
            question += f"\nSuggested direction: {direction_hint}"
        reply = complete_text(
            backend,
            "notebook_curator",
            {
                "PREVIOUS_CHEATSHEET": self.view().entries_text(),
                "CURRENT_QUESTION": question,
                "MODEL_ANSWER": "",
            },
        )
        candidates = _parse_curator_entries(reply)
        if not candidates:
            return IngestResult("skipped", self._version, warning="curator produced no entries")
        # one feedback item normalizes to one pattern; later candidates fold in
        result = None
        for cand in candidates:
            result = self.add_entry(
                cand["text"], cand["factors"], cand["direction"], "clinician_feedback"
            )
            if result.status in ("conflict", "duplicate"):
                return result
        return result

    def distill_from_errors(self, mispredicted: list[dict], backend) -> list[NotebookEntry]:
        """mispredicted items: {case_summary, truth, predicted_risk}. Each
        case runs the reviewer prompt, then the curator; unparseable
        generations are skipped and counted in the audit log."""
        accepted: list[NotebookEntry] = []
        for case in mispredicted:
            question = self.scrub(
                f"{case['case_summary']}\npredicted_risk: {case['predicted_risk']:.4f}\n"
                f"ground_truth: {int(case['truth'])}"
            )
            answer_text = complete_text(
                backend,
                "notebook_generator",
                {"CHEATSHEET": self.view().entries_text(), "QUESTION": question},
            )
            m = _ANSWER_BLOCK.search(answer_text)
            if not m:
                self._audit.append({"action": "skip_unparseable", "version": self._version})
                continue
            reply = complete_text(
                backend,
                "notebook_curator",
                {
                    "PREVIOUS_CHEATSHEET": self.view().entries_text(),
                    "CURRENT_QUESTION": question,
                    "MODEL_ANSWER": m.group(1).strip(),
                },
            )
            try:
                candidates = _parse_curator_entries(reply)
            except StructuredOutputError:
                self._audit.append({"action": "skip_unparseable", "version": self._version})
                continue
            for cand in candidates:
                result = self.add_entry(cand["text"], cand["factors"], cand["direction"], "auto_distilled")
                if result.status == "accepted" and result.entry is not None:
                    accepted.append(result.entry)
        return accepted

    def retrieve(self, case_evidence: str) -> list[NotebookEntry]:
        """Entries whose factor tokens appear in the case evidence text."""
        lowered = case_evidence.lower()
        hits = []
        for e in self._entries:
            if any(f.replace("_", " ") in lowered or f in lowered for f in e.factors):
                hits.append(e)
        return hits

    # --- persistence ---

    def save(self, directory: str | Path) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        with open(directory / "audit.ndjson", "w", encoding="utf-8") as f:
            for event in self._audit:
                f.write(json.dumps(event, sort_keys=True) + "\n")
        (directory / "view.json").write_text(
            json.dumps(
                {
                    "version": self._version,
                    "entries": [e.to_json_dict() for e in self._entries],
                    "known_patient_ids": sorted(self._phi_ids),
                },
                indent=2,
                sort_keys=True,
            )
            + "\n"
        )

    @classmethod
    def load(cls, directory: str | Path) -> "NotebookStore":
        directory = Path(directory)
        data = json.loads((directory / "view.json").read_text())
        store = cls(set(data.get("known_patient_ids", [])))
        store._version = data["version"]
        store._entries = [NotebookEntry.from_json_dict(d) for d in data["entries"]]
        audit_path = directory / "audit.ndjson"
        if audit_path.exists():
            with open(audit_path, encoding="utf-8") as f:
                store._audit = [json.loads(line) for line in f if line.strip()]
        return store


def _parse_curator_entries(reply: str) -> list[dict]:
    m = re.search(r"\[.*\]", reply, re.S)
    if not m:
        raise StructuredOutputError("curator reply carries no JSON list", reply)
    try:
        items = json.loads(m.group(0))
    except json.JSONDecodeError as e:
        raise StructuredOutputError(f"curator reply malformed: {e}", reply) from e
    out = []
    for item in items:
        if not isinstance(item, dict):
            continue
        if not item.get("factors") or item.get("direction") not in ("higher", "lower"):
            continue
        out.append(
            {
                "text": str(item.get("text", "")).strip() or "(no description)",
                "factors": [str(f) for f in item["factors"]],
                "direction": item["direction"],
            }
        )
    return out
