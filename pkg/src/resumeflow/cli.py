"""Command-line interface: every pipeline stage as a scriptable subcommand.

stdout carries only the requested artifact (JSON or file paths); everything
else goes to stderr. Exit codes: 2 invalid arguments, 3 extraction failure,
4 provider/credential failure, 1 other errors.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import ingest, metrics, render
from .errors import (
    AuthError,
    ExtractionFailed,
    GatewayError,
    ProviderRefusal,
    RateLimited,
    ResumeFlowError,
    TransportError,
)
from .llm import Gateway, ModelSpec, Provider
from .pipeline import TailorOptions, extract_job_details, extract_user_data, tailor_resume
from .schema import (
    FlaggedEntry,
    dumps,
    job_to_dict,
    resume_to_dict,
    score_to_dict,
    tailored_to_dict,
    validate_resume,
)

EXIT_EXTRACTION = 3
EXIT_PROVIDER = 4

_PROVIDERS = {
    "openai": Provider.OPENAI_COMPATIBLE,
    "openai_compatible": Provider.OPENAI_COMPATIBLE,
    "gemini": Provider.GEMINI,
    "mock": Provider.MOCK,
}


def _model_spec(provider: str, model: str | None) -> ModelSpec:
    return ModelSpec(provider=_PROVIDERS[provider], model_id=model or "")


def _read_source(path: str) -> ingest.SourceDocument:
    data = Path(path).read_bytes()
    if data.startswith(ingest.PDF_MAGIC):
        return ingest.extract_pdf_text(data)
    return ingest.from_text(data.decode("utf-8"))


def _read_job_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text(encoding="utf-8")


def _fail(message: str, code: int) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _run(fn):
    """Execute a command body, mapping errors to the documented exit codes."""
    try:
        return fn()
    except (AuthError, RateLimited, TransportError, ProviderRefusal) as exc:
        _fail(str(exc), EXIT_PROVIDER)
    except ExtractionFailed as exc:
        _fail(str(exc), EXIT_EXTRACTION)
    except GatewayError as exc:
        _fail(str(exc), EXIT_PROVIDER)
    except ResumeFlowError as exc:
        _fail(str(exc), 1)
    except OSError as exc:
        _fail(str(exc), 1)


provider_option = click.option(
    "--provider", type=click.Choice(sorted(_PROVIDERS)), default="openai",
    show_default=True, help="LLM provider for the pipeline.")
model_option = click.option(
    "--model", default=None, help="Model id (provider default when omitted).")


@click.group()
@click.version_option(package_name="resumeflow")
def main() -> None:
    """Tailor a resume to a job posting with an LLM pipeline."""


@main.command()
@click.option("--resume", "resume_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Resume file: PDF or plain text.")
@click.option("--job", "job_path", required=True,
              help="Job posting text file, or '-' for stdin.")
@provider_option
@model_option
@click.option("--cover-letter", is_flag=True, help="Also generate a cover letter.")
@click.option("--out", "out_dir", default="resumeflow-out", show_default=True,
              type=click.Path(file_okay=False), help="Output directory.")
@click.option("--template", default="classic", show_default=True,
              type=click.Choice(render.TEMPLATE_NAMES),
              help="LaTeX resume template.")
def tailor(resume_path: str, job_path: str, provider: str, model: str | None,
           cover_letter: bool, out_dir: str, template: str) -> None:
    """Run the full pipeline and write all artifacts to the output directory."""

    def body():
        source = _read_source(resume_path)
        job_text = _read_job_text(job_path)
        opts = TailorOptions(model=_model_spec(provider, model),
                             generate_cover_letter=cover_letter)
        gateway = Gateway()
        click.echo("extracting user data, job details, tailoring sections...",
                   err=True)
        result = tailor_resume(source, job_text, opts, gateway)
        report = metrics.score(
            user_text=source.raw_text,
            generated_resume=result.tailored.resume,
            job_text=job_text,
            flags=result.tailored.flagged_entries,
        )

        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        artifacts = {
            "user_data.json": dumps(resume_to_dict(result.user_data)),
            "job_details.json": dumps(job_to_dict(result.job)),
            "tailored.json": dumps(tailored_to_dict(result.tailored)),
            "score.json": dumps(score_to_dict(report)),
            "resume.tex": render.to_latex(result.tailored, template),
            "resume.md": render.to_markdown(result.tailored),
        }
        if result.cover_letter:
            artifacts["cover_letter.md"] = result.cover_letter + "\n"
        for name, content in artifacts.items():
            (out / name).write_text(content, encoding="utf-8")

        if render.find_latex_engine() is not None:
            try:
                (out / "resume.pdf").write_bytes(
                    render.compile_pdf(artifacts["resume.tex"]))
            except ResumeFlowError as exc:
                click.echo(f"PDF compilation failed: {exc}", err=True)
        else:
            click.echo("no LaTeX engine found; delivering .tex and .md only",
                       err=True)

        _echo_score_table(report)
        if report.hallucination_risk:
            click.echo("warning: hallucination risk flagged; review "
                       "flagged_entries in score.json", err=True)
        for name in sorted(artifacts):
            click.echo(str(out / name))
        if (out / "resume.pdf").exists():
            click.echo(str(out / "resume.pdf"))

    _run(body)


@main.command("extract-user")
@click.option("--resume", "resume_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@provider_option
@model_option
def extract_user(resume_path: str, provider: str, model: str | None) -> None:
    """Parse a resume into UserData JSON on stdout."""

    def body():
        source = _read_source(resume_path)
        doc = extract_user_data(source, _model_spec(provider, model), Gateway())
        click.echo(dumps(resume_to_dict(doc)), nl=False)

    _run(body)


@main.command("extract-job")
@click.option("--job", "job_path", required=True,
              help="Job posting text file, or '-' for stdin.")
@provider_option
@model_option
def extract_job(job_path: str, provider: str, model: str | None) -> None:
    """Extract JobDetails JSON from a job posting, on stdout."""

    def body():
        details = extract_job_details(_read_job_text(job_path),
                                      _model_spec(provider, model), Gateway())
        click.echo(dumps(job_to_dict(details)), nl=False)

    _run(body)


def _echo_score_table(report) -> None:
    rows = [
        ("job_alignment_token", f"{report.job_alignment_token:.4f}"),
        ("content_preservation_token", f"{report.content_preservation_token:.4f}"),
    ]
    if report.embedder_id is not None:
        rows.append(("job_alignment_latent", f"{report.job_alignment_latent:.4f}"))
        rows.append(("content_preservation_latent",
                     f"{report.content_preservation_latent:.4f}"))
        rows.append(("embedder", report.embedder_id))
    rows.append(("hallucination_risk", str(report.hallucination_risk).lower()))
    width = max(len(name) for name, _ in rows)
    for name, value in rows:
        click.echo(f"{name.ljust(width)}  {value}", err=True)


@main.command()
@click.option("--original", "original_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="The user's original resume text.")
@click.option("--generated", "generated_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Generated resume JSON (plain or tailored).")
@click.option("--job", "job_path", required=True,
              help="Job posting text file, or '-' for stdin.")
@click.option("--embedder", default=None,
              help="Optional embedding provider for latent scores: "
                   "mock, openai, gemini, or provider:model_id.")
def score(original_path: str, generated_path: str, job_path: str,
          embedder: str | None) -> None:
    """Score a generated resume against the original and the job posting."""

    def body():
        user_text = Path(original_path).read_text(encoding="utf-8")
        job_text = _read_job_text(job_path)
        payload = json.loads(Path(generated_path).read_text(encoding="utf-8"))
        flags = ()
        if isinstance(payload, dict) and "resume" in payload:
            doc = validate_resume(payload["resume"])
            flags = tuple(
                FlaggedEntry(section=f["section"], entry_index=f["entry_index"],
                             reason=f["reason"])
                for f in payload.get("flagged_entries", []))
        else:
            doc = validate_resume(payload)

        embedder_model = None
        if embedder:
            name, _, model_id = embedder.partition(":")
            if name not in _PROVIDERS:
                raise click.BadParameter(f"unknown embedder provider: {name}")
            embedder_model = metrics.embedder_spec(_PROVIDERS[name], model_id)

        report = metrics.score(user_text=user_text, generated_resume=doc,
                               job_text=job_text, embedder=embedder_model,
                               flags=flags, gateway=Gateway())
        _echo_score_table(report)
        click.echo(dumps(score_to_dict(report)), nl=False)

    _run(body)


@main.command()
@click.option("--host", default=None, help="Bind address (default 127.0.0.1).")
@click.option("--port", default=None, type=int, help="Bind port (default 8087).")
@click.option("--data-dir", default=None,
              type=click.Path(file_okay=False),
              help="Artifact/journal directory (default from RESUMEFLOW_DATA_DIR).")
def serve(host: str | None, port: int | None, data_dir: str | None) -> None:
    """Run the HTTP service."""
    import uvicorn

    from .service import DEFAULT_BIND_HOST, DEFAULT_BIND_PORT, ServiceConfig, create_app

    config = ServiceConfig.from_env()
    if data_dir:
        config.data_dir = Path(data_dir)
    app = create_app(config)
    uvicorn.run(app, host=host or DEFAULT_BIND_HOST,
                port=port or DEFAULT_BIND_PORT, log_level="info")


if __name__ == "__main__":
    main()
