"""Prompt template registry.

Templates live as plain-text assets under prompts/ with {UPPER_SNAKE}
placeholders. Required placeholders are whatever the body mentions;
rendering with a missing binding fails, and a rendered prompt may not
contain any unresolved placeholder token. A checksum manifest pins the
shipped bodies so silent drift is detectable.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from importlib import resources

_PLACEHOLDER = re.compile(r"\{([A-Z][A-Z0-9_]*)\}")


class TemplateError(ValueError):
    pass


@dataclass(frozen=True)
class PromptTemplate:
    template_id: str
    body: str

    @property
    def required(self) -> frozenset[str]:
        return frozenset(_PLACEHOLDER.findall(self.body))

    def render(self, bindings: dict[str, object]) -> str:
        missing = self.required - set(bindings)
        if missing:
            raise TemplateError(
                f"template {self.template_id!r} missing bindings: {sorted(missing)}"
            )
        out = self.body
        for name in self.required:
            out = out.replace("{" + name + "}", str(bindings[name]))
        residual = _PLACEHOLDER.findall(out)
        if residual:
            raise TemplateError(
                f"template {self.template_id!r} left unresolved placeholders: {sorted(set(residual))}"
            )
        return out


def _prompt_dir():
    return resources.files("cogniboard.llm") / "prompts"


def _load_all() -> dict[str, PromptTemplate]:
    out: dict[str, PromptTemplate] = {}
    for entry in _prompt_dir().iterdir():
        if entry.name.endswith(".txt"):
            tid = entry.name[:-4]
            out[tid] = PromptTemplate(tid, entry.read_text(encoding="utf-8"))
    return out


_REGISTRY: dict[str, PromptTemplate] | None = None


def registry() -> dict[str, PromptTemplate]:
    global _REGISTRY
    if _REGISTRY is None:
        _REGISTRY = _load_all()
    return _REGISTRY


def get_template(template_id: str) -> PromptTemplate:
    reg = registry()
    if template_id not in reg:
        raise TemplateError(f"unknown template {template_id!r}")
    return reg[template_id]


def render(template_id: str, bindings: dict[str, object]) -> str:
    return get_template(template_id).render(bindings)


def checksum_manifest() -> dict[str, str]:
    """sha256 of every shipped template body, keyed by template id."""
    out = {}
    for tid, tpl in sorted(registry().items()):
        out[tid] = hashlib.sha256(tpl.body.encode("utf-8")).hexdigest()
    return out


def verify_checksums() -> list[str]:
    """Compare live bodies against prompts/manifest.json; returns the ids
    that diverge (empty = intact)."""
    manifest_path = _prompt_dir() / "manifest.json"
    pinned = json.loads(manifest_path.read_text(encoding="utf-8"))
    live = checksum_manifest()
    bad = [tid for tid in set(pinned) | set(live) if pinned.get(tid) != live.get(tid)]
    return sorted(bad)
