"""Canonical data model: resume documents, job details, tailoring output, scores.

All types are immutable after construction (frozen dataclasses holding tuples),
so values can be shared freely across threads. The JSON shapes produced by
``to_dict`` / accepted by ``validate_resume`` and ``validate_job_details`` are
the wire contract between the pipeline, service, CLI, and web UI: snake_case
field names, exactly as declared here.

Validation is deliberately hand-rolled rather than delegated to a schema
library: LLM extraction output is noisy, and the contract calls for precise
error paths (``MissingField``, ``TypeMismatch``) plus warn-and-drop handling
of unknown keys, which is simpler to guarantee directly.
"""

from __future__ import annotations

import json
import unicodedata
from dataclasses import dataclass, field, fields
from typing import Any, Iterable

from .errors import EmptyDocument, MissingField, TypeMismatch

__all__ = [
    "PersonalDetails",
    "Link",
    "ResumeDocument",
    "EducationEntry",
    "ExperienceEntry",
    "ProjectEntry",
    "SkillGroup",
    "Certification",
    "ExtraSection",
    "JobDetails",
    "SectionProvenance",
    "FlaggedEntry",
    "TailoredResume",
    "ScoreReport",
    "SECTION_NAMES",
    "TAILORABLE_SECTIONS",
    "validate_resume",
    "validate_job_details",
    "validate_section",
    "canonical_flatten",
    "flatten_job",
    "resume_to_dict",
    "job_to_dict",
    "tailored_to_dict",
    "score_to_dict",
    "section_to_jsonable",
]


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Link:
    label: str
    url: str


@dataclass(frozen=True)
class PersonalDetails:
    """The identity block that is never sent to, or altered by, the LLM."""

    full_name: str
    email: str = ""
    phone: str | None = None
    location: str | None = None
    links: tuple[Link, ...] = ()


@dataclass(frozen=True)
class EducationEntry:
    institution: str
    degree: str
    field_of_study: str | None = None
    start_date: str = ""  # free-form text, preserved verbatim ("Fall 2021")
    end_date: str | None = None
    gpa: str | None = None
    coursework: tuple[str, ...] = ()


@dataclass(frozen=True)
class ExperienceEntry:
    employer: str
    role: str
    location: str | None = None
    start_date: str = ""
    end_date: str | None = None  # absent means "present"
    bullets: tuple[str, ...] = ()


@dataclass(frozen=True)
class ProjectEntry:
    name: str
    link: str | None = None
    technologies: tuple[str, ...] = ()
    date_range: str | None = None
    bullets: tuple[str, ...] = ()


@dataclass(frozen=True)
class SkillGroup:
    category: str
    skills: tuple[str, ...] = ()


@dataclass(frozen=True)
class Certification:
    name: str
    issuer: str | None = None
    date: str | None = None


@dataclass(frozen=True)
class ExtraSection:
    title: str
    bullets: tuple[str, ...] = ()


@dataclass(frozen=True)
class ResumeDocument:
    """A structured resume. Field order here fixes section order everywhere."""

    personal: PersonalDetails
    summary: str | None = None
    education: tuple[EducationEntry, ...] = ()
    work_experience: tuple[ExperienceEntry, ...] = ()
    projects: tuple[ProjectEntry, ...] = ()
    skill_groups: tuple[SkillGroup, ...] = ()
    achievements: tuple[str, ...] = ()
    certifications: tuple[Certification, ...] = ()
    extra_sections: tuple[ExtraSection, ...] = ()


# Section order is fixed by ResumeDocument field order.
SECTION_NAMES: tuple[str, ...] = tuple(
    f.name for f in fields(ResumeDocument) if f.name != "personal"
)
# Every section except the personal block may be tailored.
TAILORABLE_SECTIONS: tuple[str, ...] = SECTION_NAMES


@dataclass(frozen=True)
class JobDetails:
    title: str
    keywords: tuple[str, ...] = ()
    purpose: str = ""
    responsibilities: tuple[str, ...] = ()
    required_qualifications: tuple[str, ...] = ()
    preferred_qualifications: tuple[str, ...] = ()
    company_name: str = ""
    company_info: str = ""


@dataclass(frozen=True)
class SectionProvenance:
    model_id: str
    prompt_id: str
    timestamp: str  # UTC instant, ISO-8601
    note: str | None = None  # fallbacks and emptied sections are recorded here


@dataclass(frozen=True)
class FlaggedEntry:
    section: str
    entry_index: int
    reason: str


@dataclass(frozen=True)
class TailoredResume:
    resume: ResumeDocument
    provenance: dict[str, SectionProvenance] = field(default_factory=dict)
    flagged_entries: tuple[FlaggedEntry, ...] = ()


@dataclass(frozen=True)
class ScoreReport:
    job_alignment_token: float
    content_preservation_token: float
    tokenizer_version: str
    hallucination_risk: bool
    job_alignment_latent: float | None = None
    content_preservation_latent: float | None = None
    embedder_id: str | None = None
    flagged_entries: tuple[FlaggedEntry, ...] = ()


# ---------------------------------------------------------------------------
# Validation plumbing
# ---------------------------------------------------------------------------

def _type_name(value: Any) -> str:
    if value is None:
        return "null"
    return {dict: "object", list: "list", str: "string", bool: "boolean",
            int: "number", float: "number"}.get(type(value), type(value).__name__)


def _p(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _expect_map(value: Any, path: str) -> dict:
    if not isinstance(value, dict):
        raise TypeMismatch(path, "object", _type_name(value))
    return value


def _expect_list(value: Any, path: str) -> list:
    if not isinstance(value, list):
        raise TypeMismatch(path, "list", _type_name(value))
    return value


def _expect_str(value: Any, path: str) -> str:
    if not isinstance(value, str):
        raise TypeMismatch(path, "string", _type_name(value))
    return value.strip()


def _opt_str(raw: dict, key: str, path: str) -> str | None:
    value = raw.get(key)
    if value is None:
        return None
    text = _expect_str(value, _p(path, key))
    return text or None


def _str_field(raw: dict, key: str, path: str, *, required: bool = False) -> str:
    value = raw.get(key)
    if value is None:
        if required:
            raise MissingField(_p(path, key))
        return ""
    text = _expect_str(value, _p(path, key))
    if required and not text:
        raise MissingField(_p(path, key))
    return text


def _str_list(raw: dict, key: str, path: str, *, drop_empty: bool = True) -> tuple[str, ...]:
    value = raw.get(key)
    if value is None:
        return ()
    return _str_items(value, _p(path, key), drop_empty=drop_empty)


def _str_items(value: Any, path: str, *, drop_empty: bool = True) -> tuple[str, ...]:
    items = _expect_list(value, path)
    out = []
    for i, item in enumerate(items):
        text = _expect_str(item, f"{path}[{i}]")
        if text or not drop_empty:
            out.append(text)
    return tuple(out)


def _dedup_ci(items: Iterable[str]) -> tuple[str, ...]:
    """Deduplicate case-insensitively, keeping first-occurrence order."""
    seen: set[str] = set()
    out = []
    for item in items:
        key = item.casefold()
        if key not in seen:
            seen.add(key)
            out.append(item)
    return tuple(out)


def _warn_unknown(raw: dict, known: Iterable[str], path: str, warnings: list[str]) -> None:
    known_set = set(known)
    for key in raw:
        if key not in known_set:
            warnings.append(f"dropped unknown key: {_p(path, key)}")


# ---------------------------------------------------------------------------
# Entry validators (shared by whole-document and per-section validation)
# ---------------------------------------------------------------------------

_PERSONAL_KEYS = ("full_name", "email", "phone", "location", "links")
_EDUCATION_KEYS = ("institution", "degree", "field_of_study", "start_date",
                   "end_date", "gpa", "coursework")
_EXPERIENCE_KEYS = ("employer", "role", "location", "start_date", "end_date", "bullets")
_PROJECT_KEYS = ("name", "link", "technologies", "date_range", "bullets")
_SKILL_KEYS = ("category", "skills")
_CERT_KEYS = ("name", "issuer", "date")
_EXTRA_KEYS = ("title", "bullets")
_RESUME_KEYS = ("personal",) + SECTION_NAMES
_JOB_KEYS = ("title", "keywords", "purpose", "responsibilities",
             "required_qualifications", "preferred_qualifications",
             "company_name", "company_info")


def _validate_personal(value: Any, path: str, warnings: list[str]) -> PersonalDetails:
    raw = _expect_map(value, path)
    _warn_unknown(raw, _PERSONAL_KEYS, path, warnings)
    full_name = _str_field(raw, "full_name", path, required=True)
    email = _str_field(raw, "email", path)
    if email and email.count("@") != 1:
        raise TypeMismatch(f"{path}.email", "email address with exactly one '@'", repr(email))
    links_raw = raw.get("links")
    links: list[Link] = []
    seen_labels: set[str] = set()
    if links_raw is not None:
        for i, item in enumerate(_expect_list(links_raw, f"{path}.links")):
            lpath = f"{path}.links[{i}]"
            lmap = _expect_map(item, lpath)
            _warn_unknown(lmap, ("label", "url"), lpath, warnings)
            label = _str_field(lmap, "label", lpath, required=True)
            if label.casefold() in seen_labels:
                warnings.append(f"dropped duplicate link label: {lpath}.label={label!r}")
                continue
            seen_labels.add(label.casefold())
            links.append(Link(label=label, url=_str_field(lmap, "url", lpath)))
    return PersonalDetails(
        full_name=full_name,
        email=email,
        phone=_opt_str(raw, "phone", path),
        location=_opt_str(raw, "location", path),
        links=tuple(links),
    )


def _validate_education(value: Any, path: str, warnings: list[str]) -> EducationEntry:
    raw = _expect_map(value, path)
    _warn_unknown(raw, _EDUCATION_KEYS, path, warnings)
    return EducationEntry(
        institution=_str_field(raw, "institution", path, required=True),
        degree=_str_field(raw, "degree", path, required=True),
        field_of_study=_opt_str(raw, "field_of_study", path),
        start_date=_str_field(raw, "start_date", path),
        end_date=_opt_str(raw, "end_date", path),
        gpa=_opt_str(raw, "gpa", path),
        coursework=_str_list(raw, "coursework", path),
    )


def _validate_experience(value: Any, path: str, warnings: list[str]) -> ExperienceEntry:
    raw = _expect_map(value, path)
    _warn_unknown(raw, _EXPERIENCE_KEYS, path, warnings)
    bullets = _str_list(raw, "bullets", path)
    if not bullets:
        raise MissingField(f"{path}.bullets")
    return ExperienceEntry(
        employer=_str_field(raw, "employer", path, required=True),
        role=_str_field(raw, "role", path, required=True),
        location=_opt_str(raw, "location", path),
        start_date=_str_field(raw, "start_date", path),
        end_date=_opt_str(raw, "end_date", path),
        bullets=bullets,
    )


def _validate_project(value: Any, path: str, warnings: list[str]) -> ProjectEntry:
    raw = _expect_map(value, path)
    _warn_unknown(raw, _PROJECT_KEYS, path, warnings)
    return ProjectEntry(
        name=_str_field(raw, "name", path, required=True),
        link=_opt_str(raw, "link", path),
        technologies=_str_list(raw, "technologies", path),
        date_range=_opt_str(raw, "date_range", path),
        bullets=_str_list(raw, "bullets", path),
    )


def _validate_skill_group(value: Any, path: str, warnings: list[str]) -> SkillGroup:
    raw = _expect_map(value, path)
    _warn_unknown(raw, _SKILL_KEYS, path, warnings)
    skills = _dedup_ci(_str_list(raw, "skills", path))
    if not skills:
        raise MissingField(f"{path}.skills")
    return SkillGroup(
        category=_str_field(raw, "category", path, required=True),
        skills=skills,
    )


def _validate_certification(value: Any, path: str, warnings: list[str]) -> Certification:
    raw = _expect_map(value, path)
    _warn_unknown(raw, _CERT_KEYS, path, warnings)
    return Certification(
        name=_str_field(raw, "name", path, required=True),
        issuer=_opt_str(raw, "issuer", path),
        date=_opt_str(raw, "date", path),
    )


def _validate_extra_section(value: Any, path: str, warnings: list[str]) -> ExtraSection:
    raw = _expect_map(value, path)
    _warn_unknown(raw, _EXTRA_KEYS, path, warnings)
    return ExtraSection(
        title=_str_field(raw, "title", path, required=True),
        bullets=_str_list(raw, "bullets", path),
    )


def _entry_list(value: Any, path: str, warnings: list[str], validator) -> tuple:
    if value is None:
        return ()
    items = _expect_list(value, path)
    return tuple(validator(item, f"{path}[{i}]", warnings) for i, item in enumerate(items))


# ---------------------------------------------------------------------------
# Public validators
# ---------------------------------------------------------------------------

def validate_resume(candidate: Any, *, warnings: list[str] | None = None) -> ResumeDocument:
    """Validate an untyped structured value into a ResumeDocument.

    Optional lists are materialized as empty tuples, strings trimmed, unknown
    keys dropped (appended to *warnings* when a sink list is supplied).

    Raises MissingField / TypeMismatch with the offending path, or
    EmptyDocument when the resume carries no sections and no summary.
    """
    warnings = warnings if warnings is not None else []
    raw = _expect_map(candidate, "")
    _warn_unknown(raw, _RESUME_KEYS, "", warnings)
    if "personal" not in raw:
        raise MissingField("personal.full_name")
    summary_raw = raw.get("summary")
    summary = _expect_str(summary_raw, "summary") if summary_raw is not None else None
    doc = ResumeDocument(
        personal=_validate_personal(raw["personal"], "personal", warnings),
        summary=summary or None,
        education=_entry_list(raw.get("education"), "education", warnings, _validate_education),
        work_experience=_entry_list(raw.get("work_experience"), "work_experience",
                                    warnings, _validate_experience),
        projects=_entry_list(raw.get("projects"), "projects", warnings, _validate_project),
        skill_groups=_entry_list(raw.get("skill_groups"), "skill_groups",
                                 warnings, _validate_skill_group),
        achievements=_str_list(raw, "achievements", ""),
        certifications=_entry_list(raw.get("certifications"), "certifications",
                                   warnings, _validate_certification),
        extra_sections=_entry_list(raw.get("extra_sections"), "extra_sections",
                                   warnings, _validate_extra_section),
    )
    if doc.summary is None and all(not getattr(doc, name) for name in SECTION_NAMES):
        raise EmptyDocument()
    return doc


def validate_job_details(candidate: Any, *, warnings: list[str] | None = None) -> JobDetails:
    """Validate an untyped structured value into JobDetails.

    All eight fields are materialized; only title is mandatory. Keywords are
    deduplicated case-insensitively, preserving first-occurrence order.
    """
    warnings = warnings if warnings is not None else []
    raw = _expect_map(candidate, "")
    _warn_unknown(raw, _JOB_KEYS, "", warnings)
    return JobDetails(
        title=_str_field(raw, "title", "", required=True),
        keywords=_dedup_ci(_str_list(raw, "keywords", "")),
        purpose=_str_field(raw, "purpose", ""),
        responsibilities=_str_list(raw, "responsibilities", ""),
        required_qualifications=_str_list(raw, "required_qualifications", ""),
        preferred_qualifications=_str_list(raw, "preferred_qualifications", ""),
        company_name=_str_field(raw, "company_name", ""),
        company_info=_str_field(raw, "company_info", ""),
    )


_SECTION_VALIDATORS = {
    "education": lambda v, w: _entry_list(v, "education", w, _validate_education),
    "work_experience": lambda v, w: _entry_list(v, "work_experience", w, _validate_experience),
    "projects": lambda v, w: _entry_list(v, "projects", w, _validate_project),
    "skill_groups": lambda v, w: _entry_list(v, "skill_groups", w, _validate_skill_group),
    "certifications": lambda v, w: _entry_list(v, "certifications", w, _validate_certification),
    "extra_sections": lambda v, w: _entry_list(v, "extra_sections", w, _validate_extra_section),
    "achievements": lambda v, w: _str_items(v, "achievements"),
    "summary": lambda v, w: _expect_str(v, "summary"),
}


def validate_section(section_name: str, value: Any, *, warnings: list[str] | None = None):
    """Validate a single tailored section against its schema.

    The returned value has the same shape as the section field on
    ResumeDocument (a tuple of entries, a tuple of strings, or a string).
    """
    if section_name not in _SECTION_VALIDATORS:
        raise KeyError(f"not a tailorable section: {section_name}")
    return _SECTION_VALIDATORS[section_name](value, warnings if warnings is not None else [])


# ---------------------------------------------------------------------------
# Serialization (wire contract: snake_case JSON)
# ---------------------------------------------------------------------------

def resume_to_dict(doc: ResumeDocument) -> dict:
    return {
        "personal": {
            "full_name": doc.personal.full_name,
            "email": doc.personal.email,
            "phone": doc.personal.phone,
            "location": doc.personal.location,
            "links": [{"label": l.label, "url": l.url} for l in doc.personal.links],
        },
        "summary": doc.summary,
        "education": [
            {
                "institution": e.institution,
                "degree": e.degree,
                "field_of_study": e.field_of_study,
                "start_date": e.start_date,
                "end_date": e.end_date,
                "gpa": e.gpa,
                "coursework": list(e.coursework),
            }
            for e in doc.education
        ],
        "work_experience": [
            {
                "employer": e.employer,
                "role": e.role,
                "location": e.location,
                "start_date": e.start_date,
                "end_date": e.end_date,
                "bullets": list(e.bullets),
            }
            for e in doc.work_experience
        ],
        "projects": [
            {
                "name": p.name,
                "link": p.link,
                "technologies": list(p.technologies),
                "date_range": p.date_range,
                "bullets": list(p.bullets),
            }
            for p in doc.projects
        ],
        "skill_groups": [
            {"category": g.category, "skills": list(g.skills)} for g in doc.skill_groups
        ],
        "achievements": list(doc.achievements),
        "certifications": [
            {"name": c.name, "issuer": c.issuer, "date": c.date}
            for c in doc.certifications
        ],
        "extra_sections": [
            {"title": s.title, "bullets": list(s.bullets)} for s in doc.extra_sections
        ],
    }


def job_to_dict(details: JobDetails) -> dict:
    return {
        "title": details.title,
        "keywords": list(details.keywords),
        "purpose": details.purpose,
        "responsibilities": list(details.responsibilities),
        "required_qualifications": list(details.required_qualifications),
        "preferred_qualifications": list(details.preferred_qualifications),
        "company_name": details.company_name,
        "company_info": details.company_info,
    }


def section_to_jsonable(doc: ResumeDocument, section_name: str):
    """Extract one section of a document as a JSON-ready value."""
    if section_name not in SECTION_NAMES:
        raise KeyError(f"unknown section: {section_name}")
    return resume_to_dict(doc)[section_name]


def flagged_to_dict(entry: FlaggedEntry) -> dict:
    return {"section": entry.section, "entry_index": entry.entry_index,
            "reason": entry.reason}


def tailored_to_dict(tailored: TailoredResume) -> dict:
    return {
        "resume": resume_to_dict(tailored.resume),
        "provenance": {
            name: {
                "model_id": p.model_id,
                "prompt_id": p.prompt_id,
                "timestamp": p.timestamp,
                "note": p.note,
            }
            for name, p in tailored.provenance.items()
        },
        "flagged_entries": [flagged_to_dict(f) for f in tailored.flagged_entries],
    }


def score_to_dict(report: ScoreReport) -> dict:
    out: dict[str, Any] = {
        "job_alignment_token": report.job_alignment_token,
        "content_preservation_token": report.content_preservation_token,
        "tokenizer_version": report.tokenizer_version,
        "hallucination_risk": report.hallucination_risk,
        "flagged_entries": [flagged_to_dict(f) for f in report.flagged_entries],
    }
    # Latent fields appear on the wire iff an embedder was used.
    if report.embedder_id is not None:
        out["embedder_id"] = report.embedder_id
        out["job_alignment_latent"] = report.job_alignment_latent
        out["content_preservation_latent"] = report.content_preservation_latent
    return out


def dumps(value: dict) -> str:
    """Canonical JSON serialization used for artifacts and byte-level checks."""
    return json.dumps(value, ensure_ascii=False, indent=2, sort_keys=False) + "\n"


# ---------------------------------------------------------------------------
# Canonical flattening (what the token metrics measure)
# ---------------------------------------------------------------------------

def _lines_from_personal(p: PersonalDetails) -> list[str]:
    lines = [p.full_name]
    for value in (p.email, p.phone, p.location):
        if value:
            lines.append(value)
    for link in p.links:
        lines.extend(v for v in (link.label, link.url) if v)
    return lines


def canonical_flatten(doc: ResumeDocument) -> str:
    """Deterministic plain-text projection of a resume.

    One textual field per line, in schema field order, list items in list
    order, empty/absent fields skipped, no formatting markup. This text is
    the resume as seen by the token metrics, so it must stay byte-stable.
    """
    lines: list[str] = _lines_from_personal(doc.personal)
    if doc.summary:
        lines.append(doc.summary)
    for e in doc.education:
        lines.extend(v for v in (e.institution, e.degree, e.field_of_study,
                                 e.start_date, e.end_date, e.gpa) if v)
        lines.extend(e.coursework)
    for e in doc.work_experience:
        lines.extend(v for v in (e.employer, e.role, e.location,
                                 e.start_date, e.end_date) if v)
        lines.extend(e.bullets)
    for p in doc.projects:
        lines.extend(v for v in (p.name, p.link) if v)
        lines.extend(p.technologies)
        if p.date_range:
            lines.append(p.date_range)
        lines.extend(p.bullets)
    for g in doc.skill_groups:
        lines.append(g.category)
        lines.extend(g.skills)
    lines.extend(doc.achievements)
    for c in doc.certifications:
        lines.extend(v for v in (c.name, c.issuer, c.date) if v)
    for s in doc.extra_sections:
        lines.append(s.title)
        lines.extend(s.bullets)
    return "\n".join(unicodedata.normalize("NFC", line) for line in lines)


def flatten_job(details: JobDetails) -> str:
    """Deterministic plain-text projection of JobDetails, for diagnostics."""
    lines = [details.title]
    lines.extend(details.keywords)
    if details.purpose:
        lines.append(details.purpose)
    lines.extend(details.responsibilities)
    lines.extend(details.required_qualifications)
    lines.extend(details.preferred_qualifications)
    for value in (details.company_name, details.company_info):
        if value:
            lines.append(value)
    return "\n".join(unicodedata.normalize("NFC", line) for line in lines)
