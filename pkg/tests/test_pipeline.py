import json
import re

import pytest

from resumeflow import prompts
from resumeflow.errors import ExtractionFailed, SectionTailorFailed
from resumeflow.ingest import from_text
from resumeflow.llm import Gateway, MockProvider, ModelSpec, Provider
from resumeflow.pipeline import (
    EMPTIED_NOTE,
    FALLBACK_NOTE,
    PipelineResult,
    TailorOptions,
    UNMATCHED_REASON,
    extract_job_details,
    extract_user_data,
    generate_cover_letter,
    tailor_resume,
    tailor_section,
    verify_entries,
)
from resumeflow.schema import resume_to_dict, validate_job_details, validate_resume

MOCK_MODEL = ModelSpec(provider=Provider.MOCK)

JOB_FIXTURE = {
    "title": "Senior Backend Engineer",
    "keywords": ["Python", "Go", "Kubernetes", "Terraform"],
    "purpose": "Own the streaming ingestion pipeline.",
    "responsibilities": ["Design ingestion services", "Mentor engineers"],
    "required_qualifications": ["5+ years backend experience"],
    "preferred_qualifications": ["Kafka experience"],
    "company_name": "Rainier Data",
    "company_info": "Analytics company in Seattle.",
}


def gateway_with(mock: MockProvider) -> Gateway:
    return Gateway(providers={Provider.MOCK: mock}, sleep=lambda _: None)


def scripted_gateway(resume_fixture=None, job_fixture=None) -> tuple[Gateway, MockProvider]:
    mock = MockProvider()
    if resume_fixture is not None:
        mock.when(prompts.MARKER_RESUME_PARSE, [json.dumps(resume_fixture)])
    if job_fixture is not None:
        mock.when(prompts.MARKER_JOB_EXTRACT, [json.dumps(job_fixture)])
    return gateway_with(mock), mock


def section_calls(mock: MockProvider) -> dict[str, str]:
    out = {}
    for call in mock.calls:
        m = re.search(r'Re-create the "(\w+)" section', call.user_prompt)
        if m:
            out[m.group(1)] = call.user_prompt
    return out


# --- extract_user_data ----------------------------------------------------------

def test_extract_user_data_passthrough(resume_fixture):
    gateway, _ = scripted_gateway(resume_fixture=resume_fixture)
    source = from_text("anything")
    doc = extract_user_data(source, MOCK_MODEL, gateway)
    assert doc == validate_resume(resume_fixture)


def test_extract_user_data_retry_then_success(resume_fixture):
    mock = MockProvider()
    mock.when(prompts.MARKER_RESUME_PARSE,
              ["not even json", json.dumps(resume_fixture)])
    doc = extract_user_data(from_text("x"), MOCK_MODEL, gateway_with(mock))
    assert doc.personal.full_name == "Dana K. Rivera"
    assert len(mock.calls) == 2


def test_extract_user_data_persistent_garbage():
    mock = MockProvider()
    mock.when(prompts.MARKER_RESUME_PARSE, ["garbage", "garbage"])
    with pytest.raises(ExtractionFailed) as exc:
        extract_user_data(from_text("x"), MOCK_MODEL, gateway_with(mock))
    assert exc.value.stage == "user_data"


# --- extract_job_details -----------------------------------------------------------

def test_extract_job_details_passthrough():
    gateway, _ = scripted_gateway(job_fixture=JOB_FIXTURE)
    details = extract_job_details("posting text", MOCK_MODEL, gateway)
    assert details == validate_job_details(JOB_FIXTURE)


def test_extract_job_details_failure():
    mock = MockProvider()
    mock.when(prompts.MARKER_JOB_EXTRACT, ["nope", "nope"])
    with pytest.raises(ExtractionFailed) as exc:
        extract_job_details("posting", MOCK_MODEL, gateway_with(mock))
    assert exc.value.stage == "job_details"


def test_extract_job_details_rejects_empty():
    with pytest.raises(ValueError):
        extract_job_details("   \n  ", MOCK_MODEL, gateway_with(MockProvider()))


# --- tailor_section -----------------------------------------------------------------

def test_tailor_section_echo_identity(resume_fixture):
    user_data = validate_resume(resume_fixture)
    job = validate_job_details(JOB_FIXTURE)
    section = resume_to_dict(user_data)["work_experience"]
    result = tailor_section("work_experience", section, job, MOCK_MODEL,
                            gateway_with(MockProvider()))
    assert result == user_data.work_experience


def test_tailor_section_bullet_removed(resume_fixture):
    user_data = validate_resume(resume_fixture)
    job = validate_job_details(JOB_FIXTURE)
    section = resume_to_dict(user_data)["work_experience"]
    modified = json.loads(json.dumps(section))
    removed = modified[0]["bullets"].pop(1)
    mock = MockProvider()
    mock.when('Re-create the "work_experience"', [json.dumps(modified)])
    result = tailor_section("work_experience", section, job, MOCK_MODEL,
                            gateway_with(mock))
    bullets = [b for entry in result for b in entry.bullets]
    assert removed not in bullets
    assert len(result) == len(user_data.work_experience)


def test_tailor_section_wrong_shape_fails():
    job = validate_job_details(JOB_FIXTURE)
    mock = MockProvider()
    mock.when('Re-create the "work_experience"',
              ['{"employer": "X"}', '{"employer": "X"}'])
    with pytest.raises(SectionTailorFailed):
        tailor_section("work_experience", [], job, MOCK_MODEL, gateway_with(mock))


def test_tailor_section_rejects_personal():
    job = validate_job_details(JOB_FIXTURE)
    with pytest.raises(ValueError):
        tailor_section("personal", {}, job, MOCK_MODEL, gateway_with(MockProvider()))


# --- verify_entries -------------------------------------------------------------------

def test_verify_identity_no_flags(resume_fixture):
    doc = validate_resume(resume_fixture)
    assert verify_entries(doc, doc) == ()


def test_verify_fabricated_employer_flagged(resume_fixture):
    original = validate_resume(resume_fixture)
    raw = resume_to_dict(original)
    raw["work_experience"].append({
        "employer": "MadeUp Corp", "role": "Inventor", "start_date": "2020",
        "end_date": None, "location": None, "bullets": ["Imagined things."],
    })
    generated = validate_resume(raw)
    flags = verify_entries(original, generated)
    assert len(flags) == 1
    assert flags[0].section == "work_experience"
    assert flags[0].entry_index == 2
    assert flags[0].reason == UNMATCHED_REASON


def test_verify_normalized_rename_not_flagged(resume_fixture):
    original = validate_resume(resume_fixture)
    raw = resume_to_dict(original)
    raw["work_experience"][0]["employer"] = "cascade  ANALYTICS"
    generated = validate_resume(raw)
    assert verify_entries(original, generated) == ()


# --- tailor_resume ----------------------------------------------------------------------

def run_full(resume_fixture, opts=None, mock=None):
    mock = mock or MockProvider()
    mock.when(prompts.MARKER_RESUME_PARSE, [json.dumps(resume_fixture)])
    mock.when(prompts.MARKER_JOB_EXTRACT, [json.dumps(JOB_FIXTURE)])
    gateway = gateway_with(mock)
    opts = opts or TailorOptions(model=MOCK_MODEL)
    result = tailor_resume(from_text("resume text stand-in"), "job text",
                           opts, gateway)
    return result, mock


def test_echo_pipeline_is_identity(resume_fixture):
    result, mock = run_full(resume_fixture)
    assert isinstance(result, PipelineResult)
    assert result.tailored.resume == result.user_data
    assert result.tailored.flagged_entries == ()
    assert result.cover_letter is None
    # provenance covers every non-empty non-personal section
    assert set(result.tailored.provenance) == {
        "summary", "education", "work_experience", "projects",
        "skill_groups", "achievements", "certifications", "extra_sections",
    }
    for record in result.tailored.provenance.values():
        assert record.prompt_id == prompts.SECTION_TAILOR
        assert record.model_id == MOCK_MODEL.model_id
        assert record.note is None


def test_personal_block_verbatim_and_never_prompted(resume_fixture):
    result, mock = run_full(resume_fixture)
    assert result.tailored.resume.personal == result.user_data.personal
    for name, prompt in section_calls(mock).items():
        assert "dana.rivera@example.com" not in prompt
        assert "+1 555 010 7788" not in prompt


def test_exactly_one_call_per_nonempty_section(resume_fixture):
    trimmed = dict(resume_fixture)
    trimmed["projects"] = []
    trimmed["certifications"] = []
    result, mock = run_full(trimmed)
    calls = section_calls(mock)
    assert "projects" not in calls
    assert "certifications" not in calls
    # 1 resume parse + 1 job extract + 6 remaining sections
    assert len(mock.calls) == 8
    assert set(result.tailored.provenance) == set(calls)


def test_no_cross_section_leakage(resume_fixture):
    _, mock = run_full(resume_fixture)
    unique_markers = {
        "summary": "six years",
        "education": "Oregon State University",
        "work_experience": "Bridgetown Software",
        "projects": "queuectl",
        "skill_groups": "TypeScript",
        "achievements": "PyCascades",
        "certifications": "Solutions Architect",
        "extra_sections": "robotics",
    }
    calls = section_calls(mock)
    assert set(calls) == set(unique_markers)
    for section, prompt in calls.items():
        for other, marker in unique_markers.items():
            if other == section:
                assert marker in prompt
            else:
                assert marker not in prompt, (section, other)


def test_scripted_rewrite_touches_only_skills(resume_fixture):
    mock = MockProvider()
    rewritten = [{"category": "Core", "skills": ["Python", "Kubernetes"]}]
    mock.when('Re-create the "skill_groups"', [json.dumps(rewritten)])
    result, _ = run_full(resume_fixture, mock=mock)
    assert [g.category for g in result.tailored.resume.skill_groups] == ["Core"]
    for name in ("summary", "education", "work_experience", "projects",
                 "achievements", "certifications", "extra_sections"):
        assert getattr(result.tailored.resume, name) == getattr(result.user_data, name)


def test_fabricated_entry_flagged_in_result(resume_fixture):
    mock = MockProvider()
    original_section = json.loads(json.dumps(resume_fixture["work_experience"]))
    original_section.append({
        "employer": "MadeUp Corp", "role": "Chief Dreamer", "start_date": "2024",
        "bullets": ["Shipped vaporware."],
    })
    mock.when('Re-create the "work_experience"', [json.dumps(original_section)])
    result, _ = run_full(resume_fixture, mock=mock)
    assert len(result.tailored.flagged_entries) == 1
    flag = result.tailored.flagged_entries[0]
    assert flag.section == "work_experience"
    assert flag.reason == UNMATCHED_REASON
    # flag only: the entry stays in the resume
    assert len(result.tailored.resume.work_experience) == 3


def test_drop_unmatched_entries(resume_fixture):
    mock = MockProvider()
    section = json.loads(json.dumps(resume_fixture["work_experience"]))
    section.append({"employer": "MadeUp Corp", "role": "X", "start_date": "2024",
                    "bullets": ["y"]})
    mock.when('Re-create the "work_experience"', [json.dumps(section)])
    opts = TailorOptions(model=MOCK_MODEL, drop_unmatched_entries=True)
    result, _ = run_full(resume_fixture, opts=opts, mock=mock)
    assert len(result.tailored.flagged_entries) == 1
    employers = [e.employer for e in result.tailored.resume.work_experience]
    assert "MadeUp Corp" not in employers


def test_section_failure_falls_back_to_original(resume_fixture):
    mock = MockProvider()
    mock.when('Re-create the "projects"', ["[[[", "[[["])
    result, _ = run_full(resume_fixture, mock=mock)
    assert result.tailored.resume.projects == result.user_data.projects
    assert result.tailored.provenance["projects"].note == FALLBACK_NOTE


def test_emptied_section_accepted_with_note(resume_fixture):
    mock = MockProvider()
    mock.when('Re-create the "achievements"', ["[]"])
    result, _ = run_full(resume_fixture, mock=mock)
    assert result.tailored.resume.achievements == ()
    assert result.tailored.provenance["achievements"].note == EMPTIED_NOTE


def test_cover_letter_generated(resume_fixture):
    opts = TailorOptions(model=MOCK_MODEL, generate_cover_letter=True)
    result, mock = run_full(resume_fixture, opts=opts)
    assert result.cover_letter is not None
    assert "Dear Hiring Team" in result.cover_letter


def test_stage_callback_order(resume_fixture):
    stages: list[str] = []
    mock = MockProvider()
    mock.when(prompts.MARKER_RESUME_PARSE, [json.dumps(resume_fixture)])
    mock.when(prompts.MARKER_JOB_EXTRACT, [json.dumps(JOB_FIXTURE)])
    tailor_resume(from_text("x"), "job", TailorOptions(model=MOCK_MODEL),
                  gateway_with(mock), on_stage=stages.append)
    assert stages == ["extracting_user", "extracting_job", "tailoring"]


def test_parallelism_bounds():
    with pytest.raises(ValueError):
        TailorOptions(model=MOCK_MODEL, section_parallelism=0)
    with pytest.raises(ValueError):
        TailorOptions(model=MOCK_MODEL, section_parallelism=17)


def test_extraction_failure_aborts(resume_fixture):
    mock = MockProvider()
    mock.when(prompts.MARKER_RESUME_PARSE, ["junk", "junk"])
    with pytest.raises(ExtractionFailed):
        tailor_resume(from_text("x"), "job", TailorOptions(model=MOCK_MODEL),
                      gateway_with(mock))


def test_generate_cover_letter_direct(resume_fixture):
    user_data = validate_resume(resume_fixture)
    job = validate_job_details(JOB_FIXTURE)
    letter = generate_cover_letter(user_data, job, MOCK_MODEL,
                                   gateway_with(MockProvider()))
    assert letter.startswith("Dear")
