"""Exception taxonomy shared across the package.

Every error raised by resumeflow derives from ResumeFlowError so callers
(CLI, service) can map failures to exit codes / HTTP statuses in one place.
"""

from __future__ import annotations


class ResumeFlowError(Exception):
    """Base class for all resumeflow errors."""


# --- schema validation -------------------------------------------------------

class ValidationError(ResumeFlowError):
    """Base for structured-input validation failures."""


class MissingField(ValidationError):
    def __init__(self, path: str):
        self.path = path
        super().__init__(f"missing required field: {path}")


class TypeMismatch(ValidationError):
    def __init__(self, path: str, expected: str, got: str):
        self.path = path
        self.expected = expected
        self.got = got
        super().__init__(f"type mismatch at {path}: expected {expected}, got {got}")


class EmptyDocument(ValidationError):
    def __init__(self) -> None:
        super().__init__("resume has no sections and no summary")


# --- ingest -------------------------------------------------------------------

class IngestError(ResumeFlowError):
    pass


class NotAPdf(IngestError):
    def __init__(self) -> None:
        super().__init__("input does not start with the %PDF- magic header")


class EncryptedPdf(IngestError):
    def __init__(self) -> None:
        super().__init__("PDF is encrypted; please upload a decrypted copy")


class NoExtractableText(IngestError):
    def __init__(self) -> None:
        super().__init__(
            "no extractable text found; image-only scans are not supported (no OCR)"
        )


# --- llm gateway ---------------------------------------------------------------

class GatewayError(ResumeFlowError):
    pass


class AuthError(GatewayError):
    pass


class RateLimited(GatewayError):
    def __init__(self, retry_after: float | None = None):
        self.retry_after = retry_after
        suffix = f" (retry after {retry_after}s)" if retry_after is not None else ""
        super().__init__(f"provider rate limit hit{suffix}")


class TransportError(GatewayError):
    pass


class ProviderRefusal(GatewayError):
    pass


class Unrepairable(GatewayError):
    def __init__(self, raw: str):
        excerpt = raw[:160].replace("\n", "\\n")
        self.excerpt = excerpt
        super().__init__(f"could not recover JSON from model output: {excerpt!r}")


class StructuredOutputFailed(GatewayError):
    def __init__(self, attempts: int, last_error: Exception):
        self.attempts = attempts
        self.last_error = last_error
        super().__init__(
            f"no valid structured output after {attempts} attempts: {last_error}"
        )


# --- prompts --------------------------------------------------------------------

class UnknownTemplate(ResumeFlowError):
    def __init__(self, template_id: str):
        self.template_id = template_id
        super().__init__(f"unknown template: {template_id}")


class MissingBinding(ResumeFlowError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"missing binding for placeholder: {name}")


# --- pipeline --------------------------------------------------------------------

class ExtractionFailed(ResumeFlowError):
    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"extraction failed at stage {stage}: {cause}")


class SectionTailorFailed(ResumeFlowError):
    def __init__(self, section: str, cause: Exception):
        self.section = section
        self.cause = cause
        super().__init__(f"tailoring failed for section {section}: {cause}")


# --- metrics ---------------------------------------------------------------------

class MetricError(ResumeFlowError):
    pass


class EmptyWordSet(MetricError):
    def __init__(self, which: str = "word set"):
        super().__init__(f"{which} is empty; overlap coefficient is undefined")


class DimensionMismatch(MetricError):
    def __init__(self, a: int, b: int):
        super().__init__(f"embedding dimensions differ: {a} vs {b}")


class ZeroVector(MetricError):
    def __init__(self) -> None:
        super().__init__("cosine similarity is undefined for an all-zero vector")


class ModelMismatch(MetricError):
    def __init__(self, a: str, b: str):
        super().__init__(f"embeddings come from different models: {a} vs {b}")


# --- render ----------------------------------------------------------------------

class RenderError(ResumeFlowError):
    pass


class EngineNotFound(RenderError):
    def __init__(self) -> None:
        super().__init__(
            "no LaTeX engine found (tried tectonic, latexmk, pdflatex); "
            "delivering .tex and .md instead"
        )


class CompileError(RenderError):
    def __init__(self, log_excerpt: str):
        self.log_excerpt = log_excerpt
        super().__init__(f"LaTeX compilation failed:\n{log_excerpt}")
