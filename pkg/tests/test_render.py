import random
import string
from pathlib import Path

import pytest

from resumeflow.errors import CompileError, EngineNotFound, UnknownTemplate
from resumeflow.render import (
    compile_pdf,
    escape_latex,
    find_latex_engine,
    to_latex,
    to_markdown,
)
from resumeflow.schema import TailoredResume, validate_resume

GOLDEN = Path(__file__).parent / "fixtures" / "golden"

engine_present = find_latex_engine() is not None
needs_engine = pytest.mark.skipif(not engine_present,
                                  reason="no LaTeX engine installed")


def tailored(resume_fixture) -> TailoredResume:
    return TailoredResume(resume=validate_resume(resume_fixture))


# --- escape_latex -------------------------------------------------------------

def test_escape_basics():
    assert escape_latex("50% C&D") == r"50\% C\&D"
    assert escape_latex("a_b") == r"a\_b"
    assert escape_latex("100$ #1 ~x ^y") == r"100\$ \#1 \textasciitilde{}x \textasciicircum{}y"


def test_escape_backslash_and_braces_single_pass():
    assert escape_latex(r"\cmd{arg}") == r"\textbackslash{}cmd\{arg\}"
    # the braces inserted by the backslash replacement are not re-escaped
    assert escape_latex("\\") == r"\textbackslash{}"


def test_escape_leaves_plain_text_alone():
    assert escape_latex("plain words 123") == "plain words 123"


# --- to_latex -------------------------------------------------------------------

def test_latex_golden_classic(resume_fixture):
    expected = (GOLDEN / "resume_classic.tex").read_text(encoding="utf-8")
    assert to_latex(tailored(resume_fixture), "classic") == expected


def test_latex_golden_compact(resume_fixture):
    expected = (GOLDEN / "resume_compact.tex").read_text(encoding="utf-8")
    assert to_latex(tailored(resume_fixture), "compact") == expected


def test_latex_unknown_template(resume_fixture):
    with pytest.raises(UnknownTemplate):
        to_latex(tailored(resume_fixture), "fancy")


def test_latex_empty_section_omitted(resume_fixture):
    resume_fixture["projects"] = []
    source = to_latex(tailored(resume_fixture), "classic")
    assert "Projects" not in source


def test_latex_special_chars_escaped():
    doc = validate_resume({
        "personal": {"full_name": "O'Brien & Söhne 100%"},
        "achievements": ["Saved 20% of $1M budget #win"],
    })
    source = to_latex(TailoredResume(resume=doc))
    assert r"O'Brien \& Söhne 100\%" in source
    assert r"Saved 20\% of \$1M budget \#win" in source


def test_latex_deterministic(resume_fixture):
    t = tailored(resume_fixture)
    assert to_latex(t, "classic") == to_latex(t, "classic")


def test_latex_contains_every_bullet(resume_fixture):
    t = tailored(resume_fixture)
    source = to_latex(t, "classic")
    for entry in t.resume.work_experience:
        for bullet in entry.bullets:
            assert escape_latex(bullet) in source


# --- to_markdown ------------------------------------------------------------------

def test_markdown_golden(resume_fixture):
    expected = (GOLDEN / "resume.md").read_text(encoding="utf-8")
    assert to_markdown(tailored(resume_fixture)) == expected


def test_markdown_empty_section_omitted(resume_fixture):
    resume_fixture["certifications"] = []
    markdown = to_markdown(tailored(resume_fixture))
    assert "## Certifications" not in markdown


def test_markdown_deterministic(resume_fixture):
    t = tailored(resume_fixture)
    assert to_markdown(t) == to_markdown(t)


# --- compile_pdf --------------------------------------------------------------------

def random_nasty_resume(rng: random.Random):
    specials = "\\{}$&#%_~^"
    alphabet = string.ascii_letters + string.digits + specials + " "

    def nasty(min_len=3, max_len=40):
        text = "".join(rng.choice(alphabet) for _ in range(rng.randint(min_len, max_len)))
        return text.strip() or "x"

    return validate_resume({
        "personal": {"full_name": nasty(), "email": "",
                     "links": [{"label": "Site", "url": nasty()}]},
        "summary": nasty(10, 80),
        "work_experience": [{
            "employer": nasty(), "role": nasty(), "start_date": nasty(4, 10),
            "bullets": [nasty(10, 60) for _ in range(rng.randint(1, 3))],
        }],
        "skill_groups": [{"category": nasty(), "skills": [nasty(2, 12)]}],
        "achievements": [nasty(5, 60)],
    })


def test_nasty_resumes_always_render(resume_fixture):
    rng = random.Random(42)
    for _ in range(25):
        t = TailoredResume(resume=random_nasty_resume(rng))
        source = to_latex(t, "classic")
        markdown = to_markdown(t)
        assert source.startswith("\\documentclass")
        assert markdown.startswith("# ")


@needs_engine
def test_compile_golden_pdf(resume_fixture):
    pdf = compile_pdf(to_latex(tailored(resume_fixture), "classic"))
    assert pdf.startswith(b"%PDF")


@needs_engine
def test_compile_error_reported():
    with pytest.raises(CompileError) as exc:
        compile_pdf("\\documentclass{article}\\begin{document}\\badmacro\\end{document}")
    assert exc.value.log_excerpt


def test_engine_not_found(monkeypatch):
    monkeypatch.setenv("RESUMEFLOW_LATEX_ENGINE", "definitely-not-a-real-engine")
    with pytest.raises(EngineNotFound):
        compile_pdf("\\documentclass{article}\\begin{document}x\\end{document}")
