"""Rendering: TailoredResume to LaTeX source, Markdown, and (when a LaTeX
engine is installed) PDF bytes.

PDF compilation is optional at runtime: engineless hosts still get .tex and
.md artifacts. Resume text is untrusted input to a macro language, so every
user-originated string passes through escape_latex exactly once and the
engine runs with shell-escape disabled inside a scratch directory.
"""

from __future__ import annotations

import os
import re
import shutil
import subprocess
import tempfile
from pathlib import Path

from .errors import CompileError, EngineNotFound, UnknownTemplate
from .schema import ResumeDocument, TailoredResume

ENGINE_ENV_VAR = "RESUMEFLOW_LATEX_ENGINE"
ENGINE_SEARCH_ORDER = ("tectonic", "latexmk", "pdflatex")

TEMPLATE_NAMES = ("classic", "compact")

_LATEX_ESCAPES = {
    "\\": r"\textbackslash{}",
    "{": r"\{",
    "}": r"\}",
    "$": r"\$",
    "&": r"\&",
    "#": r"\#",
    "%": r"\%",
    "_": r"\_",
    "~": r"\textasciitilde{}",
    "^": r"\textasciicircum{}",
}

_LATEX_SPECIALS = re.compile(r"[\\{}$&#%_~^]")


def escape_latex(text: str) -> str:
    """Escape LaTeX special characters in one pass (callers escape exactly once)."""
    return _LATEX_SPECIALS.sub(lambda m: _LATEX_ESCAPES[m.group(0)], text)


# ---------------------------------------------------------------------------
# LaTeX
# ---------------------------------------------------------------------------

_PREAMBLES = {
    "classic": "\n".join([
        r"\documentclass[11pt]{article}",
        r"\usepackage[T1]{fontenc}",
        r"\setlength{\parindent}{0pt}",
        r"\pagestyle{empty}",
    ]),
    "compact": "\n".join([
        r"\documentclass[10pt]{article}",
        r"\usepackage[T1]{fontenc}",
        r"\setlength{\parindent}{0pt}",
        r"\setlength{\parskip}{2pt}",
        r"\pagestyle{empty}",
        r"\addtolength{\topmargin}{-1.5cm}",
        r"\addtolength{\textheight}{3cm}",
        r"\addtolength{\oddsidemargin}{-1.5cm}",
        r"\addtolength{\textwidth}{3cm}",
    ]),
}

_SECTION_TITLES = {
    "summary": "Summary",
    "education": "Education",
    "work_experience": "Work Experience",
    "projects": "Projects",
    "skill_groups": "Skills",
    "achievements": "Achievements",
    "certifications": "Certifications",
}


def _heading(title: str, compact: bool) -> str:
    if compact:
        return r"\textbf{\large %s}\par\vspace{2pt}\hrule\vspace{4pt}" % title
    return r"\section*{%s}" % title


def _itemize(items: list[str], compact: bool) -> list[str]:
    out = [r"\begin{itemize}"]
    if compact:
        out[0] = r"\begin{itemize}\setlength{\itemsep}{0pt}"
    out.extend(rf"  \item {item}" for item in items)
    out.append(r"\end{itemize}")
    return out


def _join_present(parts: list[str | None], separator: str) -> str:
    return separator.join(p for p in parts if p)


def _latex_body(doc: ResumeDocument, compact: bool) -> list[str]:
    e = escape_latex
    lines: list[str] = []

    personal = doc.personal
    lines.append(r"\begin{center}")
    lines.append(r"{\LARGE \textbf{%s}}\\[4pt]" % e(personal.full_name))
    contact = _join_present(
        [e(personal.email) if personal.email else None,
         e(personal.phone) if personal.phone else None,
         e(personal.location) if personal.location else None],
        r" \textbar{} ")
    if contact:
        lines.append(contact + r"\\")
    for link in personal.links:
        lines.append(r"%s: \texttt{%s}\\" % (e(link.label), e(link.url)))
    lines.append(r"\end{center}")

    if doc.summary:
        lines.append(_heading(_SECTION_TITLES["summary"], compact))
        lines.append(e(doc.summary))

    if doc.education:
        lines.append(_heading(_SECTION_TITLES["education"], compact))
        for entry in doc.education:
            dates = _join_present([entry.start_date or None, entry.end_date], " -- ")
            title_line = _join_present(
                [r"\textbf{%s}" % e(entry.institution), e(entry.degree),
                 e(entry.field_of_study) if entry.field_of_study else None], ", ")
            if dates:
                title_line += r" \hfill %s" % e(dates)
            lines.append(title_line + r"\\")
            detail = _join_present(
                [("GPA: " + e(entry.gpa)) if entry.gpa else None,
                 ("Coursework: " + e(", ".join(entry.coursework)))
                 if entry.coursework else None], r"; ")
            if detail:
                lines.append(detail + r"\\")

    if doc.work_experience:
        lines.append(_heading(_SECTION_TITLES["work_experience"], compact))
        for entry in doc.work_experience:
            dates = _join_present([entry.start_date or None,
                                   entry.end_date or "Present"], " -- ")
            header = _join_present(
                [r"\textbf{%s}" % e(entry.role), e(entry.employer),
                 e(entry.location) if entry.location else None], ", ")
            if dates:
                header += r" \hfill %s" % e(dates)
            lines.append(header)
            lines.extend(_itemize([e(b) for b in entry.bullets], compact))

    if doc.projects:
        lines.append(_heading(_SECTION_TITLES["projects"], compact))
        for entry in doc.projects:
            header = r"\textbf{%s}" % e(entry.name)
            if entry.technologies:
                header += " (%s)" % e(", ".join(entry.technologies))
            if entry.date_range:
                header += r" \hfill %s" % e(entry.date_range)
            lines.append(header)
            if entry.link:
                lines.append(r"\texttt{%s}\\" % e(entry.link))
            if entry.bullets:
                lines.extend(_itemize([e(b) for b in entry.bullets], compact))

    if doc.skill_groups:
        lines.append(_heading(_SECTION_TITLES["skill_groups"], compact))
        for group in doc.skill_groups:
            lines.append(r"\textbf{%s:} %s\\" % (e(group.category),
                                                 e(", ".join(group.skills))))

    if doc.achievements:
        lines.append(_heading(_SECTION_TITLES["achievements"], compact))
        lines.extend(_itemize([e(a) for a in doc.achievements], compact))

    if doc.certifications:
        lines.append(_heading(_SECTION_TITLES["certifications"], compact))
        for cert in doc.certifications:
            lines.append(_join_present(
                [r"\textbf{%s}" % e(cert.name),
                 e(cert.issuer) if cert.issuer else None,
                 e(cert.date) if cert.date else None], ", ") + r"\\")

    for section in doc.extra_sections:
        lines.append(_heading(escape_latex(section.title), compact))
        if section.bullets:
            lines.extend(_itemize([e(b) for b in section.bullets], compact))

    return lines


def to_latex(resume: TailoredResume, template_name: str = "classic") -> str:
    """Deterministic LaTeX source for a tailored resume."""
    if template_name not in TEMPLATE_NAMES:
        raise UnknownTemplate(template_name)
    doc = resume.resume
    parts = [_PREAMBLES[template_name], r"\begin{document}"]
    parts.extend(_latex_body(doc, compact=template_name == "compact"))
    parts.append(r"\end{document}")
    return "\n".join(parts) + "\n"


# ---------------------------------------------------------------------------
# Markdown
# ---------------------------------------------------------------------------

def to_markdown(resume: TailoredResume) -> str:
    """Engine-free rendering used as the UI preview and PDF fallback."""
    doc = resume.resume
    personal = doc.personal
    lines = [f"# {personal.full_name}", ""]
    contact = _join_present([personal.email or None, personal.phone,
                             personal.location], " | ")
    if contact:
        lines.append(contact)
    for link in personal.links:
        lines.append(f"[{link.label}]({link.url})")
    if contact or personal.links:
        lines.append("")

    if doc.summary:
        lines.extend(["## Summary", "", doc.summary, ""])

    if doc.education:
        lines.extend(["## Education", ""])
        for entry in doc.education:
            dates = _join_present([entry.start_date or None, entry.end_date], " - ")
            header = _join_present(
                [f"**{entry.institution}**", entry.degree, entry.field_of_study], ", ")
            if dates:
                header += f" ({dates})"
            lines.append(f"- {header}")
            if entry.gpa:
                lines.append(f"  - GPA: {entry.gpa}")
            if entry.coursework:
                lines.append(f"  - Coursework: {', '.join(entry.coursework)}")
        lines.append("")

    if doc.work_experience:
        lines.extend(["## Work Experience", ""])
        for entry in doc.work_experience:
            dates = _join_present([entry.start_date or None,
                                   entry.end_date or "Present"], " - ")
            header = _join_present([f"**{entry.role}**", entry.employer,
                                    entry.location], ", ")
            if dates:
                header += f" ({dates})"
            lines.append(header)
            lines.extend(f"- {bullet}" for bullet in entry.bullets)
            lines.append("")

    if doc.projects:
        lines.extend(["## Projects", ""])
        for entry in doc.projects:
            header = f"**{entry.name}**"
            if entry.technologies:
                header += f" ({', '.join(entry.technologies)})"
            if entry.date_range:
                header += f" - {entry.date_range}"
            lines.append(header)
            if entry.link:
                lines.append(f"<{entry.link}>")
            lines.extend(f"- {bullet}" for bullet in entry.bullets)
            lines.append("")

    if doc.skill_groups:
        lines.extend(["## Skills", ""])
        for group in doc.skill_groups:
            lines.append(f"- **{group.category}:** {', '.join(group.skills)}")
        lines.append("")

    if doc.achievements:
        lines.extend(["## Achievements", ""])
        lines.extend(f"- {item}" for item in doc.achievements)
        lines.append("")

    if doc.certifications:
        lines.extend(["## Certifications", ""])
        for cert in doc.certifications:
            lines.append("- " + _join_present(
                [f"**{cert.name}**", cert.issuer, cert.date], ", "))
        lines.append("")

    for section in doc.extra_sections:
        lines.extend([f"## {section.title}", ""])
        lines.extend(f"- {bullet}" for bullet in section.bullets)
        lines.append("")

    while lines and lines[-1] == "":
        lines.pop()
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# PDF compilation
# ---------------------------------------------------------------------------

def find_latex_engine() -> str | None:
    override = os.environ.get(ENGINE_ENV_VAR)
    if override:
        return shutil.which(override)
    for name in ENGINE_SEARCH_ORDER:
        path = shutil.which(name)
        if path:
            return path
    return None


def _engine_command(engine: str, tex_path: Path) -> list[str]:
    name = Path(engine).name
    if name == "tectonic":
        return [engine, "--outdir", str(tex_path.parent), str(tex_path)]
    if name == "latexmk":
        return [engine, "-pdf", "-interaction=nonstopmode", "-halt-on-error",
                f"-output-directory={tex_path.parent}", str(tex_path)]
    return [engine, "-interaction=nonstopmode", "-halt-on-error",
            "-no-shell-escape", f"-output-directory={tex_path.parent}",
            str(tex_path)]


def compile_pdf(latex_source: str, timeout: float = 120.0) -> bytes:
    """Compile LaTeX source to PDF bytes in an isolated scratch directory."""
    engine = find_latex_engine()
    if engine is None:
        raise EngineNotFound()
    with tempfile.TemporaryDirectory(prefix="resumeflow-tex-") as tmp:
        tex_path = Path(tmp) / "resume.tex"
        tex_path.write_text(latex_source, encoding="utf-8")
        try:
            proc = subprocess.run(
                _engine_command(engine, tex_path),
                cwd=tmp, capture_output=True, timeout=timeout,
                env={**os.environ, "TEXMFVAR": tmp},
            )
        except subprocess.TimeoutExpired as exc:
            raise CompileError(f"engine timed out after {timeout}s") from exc
        pdf_path = tex_path.with_suffix(".pdf")
        if proc.returncode != 0 or not pdf_path.exists():
            log = (proc.stdout + b"\n" + proc.stderr).decode("utf-8", "replace")
            raise CompileError(log[-2000:])
        return pdf_path.read_bytes()
