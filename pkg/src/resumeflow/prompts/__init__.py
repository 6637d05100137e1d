"""Versioned prompt templates with placeholder substitution.

Template bodies live as data files under ``templates/`` (UTF-8, small
front-matter header followed by system and user sections) so prompt
iteration never touches program logic. The registry is read-only after
startup; rendering is pure.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources

from ..errors import MissingBinding, UnknownTemplate

__all__ = [
    "PromptTemplate",
    "RESUME_PARSE",
    "JOB_EXTRACT",
    "SECTION_TAILOR",
    "COVER_LETTER",
    "render",
    "get_template",
    "registered_ids",
]

RESUME_PARSE = "RESUME_PARSE@1"
JOB_EXTRACT = "JOB_EXTRACT@1"
SECTION_TAILOR = "SECTION_TAILOR@1"
COVER_LETTER = "COVER_LETTER@1"

# Stable phrases the offline mock provider uses to recognize which task a
# rendered prompt belongs to. They are part of the template text; a test
# asserts each template body contains its marker.
MARKER_RESUME_PARSE = "Parse the resume text below"
MARKER_JOB_EXTRACT = "Extract the key details from the job description"
MARKER_SECTION_TAILOR = "Re-create the"
MARKER_COVER_LETTER = "Write a concise, job-aligned cover letter"

_PLACEHOLDER = re.compile(r"\{\{([a-z_]+)\}\}")

_TEMPLATE_FILES = {
    RESUME_PARSE: "resume_parse_v1.prompt",
    JOB_EXTRACT: "job_extract_v1.prompt",
    SECTION_TAILOR: "section_tailor_v1.prompt",
    COVER_LETTER: "cover_letter_v1.prompt",
}


@dataclass(frozen=True)
class PromptTemplate:
    id: str
    system_template: str
    user_template: str
    placeholders: tuple[str, ...]


def _parse_template_file(template_id: str, text: str) -> PromptTemplate:
    header, _, rest = text.partition("=== system ===")
    system, _, user = rest.partition("=== user ===")
    meta = {}
    for line in header.strip().splitlines():
        key, _, value = line.partition(":")
        meta[key.strip()] = value.strip()
    placeholders = tuple(
        p.strip() for p in meta.get("placeholders", "").split(",") if p.strip())
    template = PromptTemplate(
        id=meta.get("id", template_id),
        system_template=system.strip(),
        user_template=user.strip(),
        placeholders=placeholders,
    )
    declared = set(placeholders)
    used = set(_PLACEHOLDER.findall(template.system_template)) | \
        set(_PLACEHOLDER.findall(template.user_template))
    if used - declared:
        raise ValueError(
            f"{template_id}: undeclared placeholders {sorted(used - declared)}")
    return template


def _load_registry() -> dict[str, PromptTemplate]:
    registry = {}
    for template_id, filename in _TEMPLATE_FILES.items():
        text = (resources.files(__package__) / "templates" / filename).read_text("utf-8")
        registry[template_id] = _parse_template_file(template_id, text)
    return registry


_REGISTRY = _load_registry()


def registered_ids() -> tuple[str, ...]:
    return tuple(_REGISTRY)


def get_template(template_id: str) -> PromptTemplate:
    try:
        return _REGISTRY[template_id]
    except KeyError:
        raise UnknownTemplate(template_id) from None


def render(template_id: str, bindings: dict[str, str]) -> tuple[str, str]:
    """Substitute placeholders; returns (system_prompt, user_prompt).

    Every placeholder must be bound; an unbound one raises MissingBinding
    rather than leaking "{{name}}" into a live prompt.
    """
    template = get_template(template_id)
    for name in template.placeholders:
        if name not in bindings:
            raise MissingBinding(name)

    def substitute(text: str) -> str:
        return _PLACEHOLDER.sub(lambda m: bindings[m.group(1)], text)

    return substitute(template.system_template), substitute(template.user_template)
