"""End-to-end orchestration: extract user data, extract job details, tailor
section by section, verify the output against the source, assemble the result.

The personal-details block is copied verbatim and never included in any
tailoring prompt; immutability of identity data is enforced structurally, not
by prompt instruction. Individual section failures fall back to the original
section content (recorded in provenance) instead of aborting the run.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from typing import Any, Callable

from . import prompts
from .errors import ExtractionFailed, SectionTailorFailed, StructuredOutputFailed
from .ingest import SourceDocument, normalize_text
from .llm import (
    ChatRequest,
    Gateway,
    ModelSpec,
    ResponseFormat,
    default_gateway,
)
from .schema import (
    FlaggedEntry,
    JobDetails,
    ResumeDocument,
    SectionProvenance,
    TAILORABLE_SECTIONS,
    TailoredResume,
    job_to_dict,
    section_to_jsonable,
    validate_job_details,
    validate_resume,
    validate_section,
)

log = logging.getLogger(__name__)

EXTRACTION_TEMPERATURE = 0.0
GENERATION_TEMPERATURE = 0.2

MAX_SECTION_PARALLELISM = 16

# Anchor field used to match generated entries back to source entries.
_VERIFY_ANCHORS = {
    "education": "institution",
    "work_experience": "employer",
    "projects": "name",
    "certifications": "name",
}

FALLBACK_NOTE = "fallback: original content retained after tailoring failure"
EMPTIED_NOTE = "section emptied by model"
UNMATCHED_REASON = "no matching source entry"


@dataclass(frozen=True)
class TailorOptions:
    model: ModelSpec
    generate_cover_letter: bool = False
    section_parallelism: int = 4
    drop_unmatched_entries: bool = False

    def __post_init__(self):
        if not 1 <= self.section_parallelism <= MAX_SECTION_PARALLELISM:
            raise ValueError(
                f"section_parallelism must be in [1, {MAX_SECTION_PARALLELISM}]")


@dataclass(frozen=True)
class PipelineResult:
    tailored: TailoredResume
    user_data: ResumeDocument
    job: JobDetails
    cover_letter: str | None = None


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _extraction_model(model: ModelSpec) -> ModelSpec:
    return replace(model, temperature=EXTRACTION_TEMPERATURE)


def _generation_model(model: ModelSpec) -> ModelSpec:
    # honor an explicit non-zero temperature; otherwise use the stage default
    if model.temperature > 0:
        return model
    return replace(model, temperature=GENERATION_TEMPERATURE)


def _dump(value: Any) -> str:
    return json.dumps(value, ensure_ascii=False, indent=2)


def extract_user_data(source: SourceDocument, model: ModelSpec,
                      gateway: Gateway | None = None) -> ResumeDocument:
    if not source.raw_text.strip():
        raise ValueError("source document has no text")
    gateway = gateway or default_gateway()
    system, user = prompts.render(prompts.RESUME_PARSE,
                                  {"resume_text": source.raw_text})
    request = ChatRequest(system_prompt=system, user_prompt=user,
                          response_format=ResponseFormat.JSON_OBJECT,
                          model=_extraction_model(model))
    try:
        return gateway.complete_structured(request, validate_resume)
    except StructuredOutputFailed as exc:
        raise ExtractionFailed("user_data", exc) from exc


def extract_job_details(job_text: str, model: ModelSpec,
                        gateway: Gateway | None = None) -> JobDetails:
    normalized = normalize_text(job_text)
    if not normalized:
        raise ValueError("job description is empty")
    gateway = gateway or default_gateway()
    system, user = prompts.render(prompts.JOB_EXTRACT,
                                  {"job_description": normalized})
    request = ChatRequest(system_prompt=system, user_prompt=user,
                          response_format=ResponseFormat.JSON_OBJECT,
                          model=_extraction_model(model))
    try:
        return gateway.complete_structured(request, validate_job_details)
    except StructuredOutputFailed as exc:
        raise ExtractionFailed("job_details", exc) from exc


def tailor_section(section_name: str, section_value: Any, job: JobDetails,
                   model: ModelSpec, gateway: Gateway | None = None):
    """Tailor one section; returns a validated value of the section's shape.

    section_value is the JSON-ready current content (as produced by
    section_to_jsonable). Raises SectionTailorFailed when the model cannot
    produce a shape-valid replacement within the retry budget.
    """
    if section_name not in TAILORABLE_SECTIONS:
        raise ValueError(f"not a tailorable section: {section_name}")
    gateway = gateway or default_gateway()
    system, user = prompts.render(prompts.SECTION_TAILOR, {
        "section_name": section_name,
        "section_json": _dump(section_value),
        "job_details_json": _dump(job_to_dict(job)),
    })
    request = ChatRequest(system_prompt=system, user_prompt=user,
                          response_format=ResponseFormat.JSON_OBJECT,
                          model=_generation_model(model))
    try:
        return gateway.complete_structured(
            request, lambda value: validate_section(section_name, value))
    except StructuredOutputFailed as exc:
        raise SectionTailorFailed(section_name, exc) from exc


def generate_cover_letter(user_data: ResumeDocument, job: JobDetails,
                          model: ModelSpec,
                          gateway: Gateway | None = None) -> str:
    from .schema import resume_to_dict

    gateway = gateway or default_gateway()
    system, user = prompts.render(prompts.COVER_LETTER, {
        "user_data_json": _dump(resume_to_dict(user_data)),
        "job_details_json": _dump(job_to_dict(job)),
    })
    request = ChatRequest(system_prompt=system, user_prompt=user,
                          response_format=ResponseFormat.JSON_OBJECT,
                          model=_generation_model(model))

    def check(value: Any) -> str:
        if not isinstance(value, dict) or not isinstance(value.get("cover_letter"), str) \
                or not value["cover_letter"].strip():
            raise ValueError('expected {"cover_letter": "<non-empty string>"}')
        return value["cover_letter"].strip()

    return gateway.complete_structured(request, check)


def _normalize_anchor(text: str) -> str:
    return " ".join(text.split()).casefold()


def verify_entries(original: ResumeDocument,
                   generated: ResumeDocument) -> tuple[FlaggedEntry, ...]:
    """Flag generated entries whose anchor field matches no source entry.

    Matching is case-insensitive and whitespace-normalized on the anchor
    (institution / employer / project name / certification name). Flags never
    mutate the resume; dropping is the orchestrator's decision.
    """
    flags: list[FlaggedEntry] = []
    for section, attr in _VERIFY_ANCHORS.items():
        source_keys = {_normalize_anchor(getattr(entry, attr))
                       for entry in getattr(original, section)}
        for index, entry in enumerate(getattr(generated, section)):
            if _normalize_anchor(getattr(entry, attr)) not in source_keys:
                flags.append(FlaggedEntry(section=section, entry_index=index,
                                          reason=UNMATCHED_REASON))
    return tuple(flags)


def _drop_flagged(resume: ResumeDocument,
                  flags: tuple[FlaggedEntry, ...]) -> ResumeDocument:
    doomed: dict[str, set[int]] = {}
    for flag in flags:
        doomed.setdefault(flag.section, set()).add(flag.entry_index)
    updates = {
        section: tuple(entry for i, entry in enumerate(getattr(resume, section))
                       if i not in indices)
        for section, indices in doomed.items()
    }
    return replace(resume, **updates)


def tailor_resume(source: SourceDocument, job_text: str, opts: TailorOptions,
                  gateway: Gateway | None = None,
                  on_stage: Callable[[str], None] | None = None) -> PipelineResult:
    """Run the full pipeline. Extraction failures abort; section failures
    fall back to the original content and are recorded in provenance."""
    gateway = gateway or default_gateway()
    notify = on_stage or (lambda stage: None)

    notify("extracting_user")
    user_data = extract_user_data(source, opts.model, gateway)
    notify("extracting_job")
    job = extract_job_details(job_text, opts.model, gateway)
    notify("tailoring")

    # Personal details are copied verbatim below via dataclasses.replace;
    # they are never part of any section prompt.
    section_names = [name for name in TAILORABLE_SECTIONS if getattr(user_data, name)]

    def process(name: str):
        original_jsonable = section_to_jsonable(user_data, name)
        try:
            value = tailor_section(name, original_jsonable, job, opts.model, gateway)
            note = None if value else EMPTIED_NOTE
        except SectionTailorFailed as exc:
            log.warning("section %s fell back to original content: %s", name, exc)
            value = getattr(user_data, name)
            note = FALLBACK_NOTE
        return name, value, note

    updates: dict[str, Any] = {}
    provenance: dict[str, SectionProvenance] = {}
    if section_names:
        workers = min(opts.section_parallelism, len(section_names))
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for name, value, note in pool.map(process, section_names):
                updates[name] = value
                provenance[name] = SectionProvenance(
                    model_id=opts.model.model_id,
                    prompt_id=prompts.SECTION_TAILOR,
                    timestamp=_now(),
                    note=note,
                )

    resume = replace(user_data, **updates)
    flags = verify_entries(user_data, resume)
    if opts.drop_unmatched_entries and flags:
        resume = _drop_flagged(resume, flags)

    tailored = TailoredResume(resume=resume, provenance=provenance,
                              flagged_entries=flags)

    cover_letter = None
    if opts.generate_cover_letter:
        try:
            cover_letter = generate_cover_letter(user_data, job, opts.model, gateway)
        except StructuredOutputFailed as exc:
            log.warning("cover letter generation failed, continuing without: %s", exc)

    return PipelineResult(tailored=tailored, user_data=user_data, job=job,
                          cover_letter=cover_letter)
