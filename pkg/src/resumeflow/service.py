"""HTTP API around the pipeline: asynchronous jobs, artifact storage, scores.

Desk-scale by design: jobs run on a small worker-thread pool, job state is
journaled to a JSON-lines file (no database), artifacts are plain files under
the data directory. Done jobs survive restarts; jobs caught in flight by a
restart come back as Failed with a distinguishable error.
"""

from __future__ import annotations

import enum
import json
import logging
import queue
import threading
import uuid
from contextlib import asynccontextmanager
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from starlette.datastructures import UploadFile

from . import ingest, metrics, render
from .errors import IngestError, NotAPdf, ResumeFlowError
from .ingest import SourceDocument
from .llm import DEFAULT_MODEL_IDS, Gateway, ModelSpec, Provider
from .pipeline import TailorOptions, tailor_resume
from .schema import job_to_dict, resume_to_dict, score_to_dict, tailored_to_dict
from .schema import dumps as canonical_dumps

log = logging.getLogger(__name__)

DEFAULT_BIND_HOST = "127.0.0.1"
DEFAULT_BIND_PORT = 8087
DEFAULT_MAX_UPLOAD_BYTES = 10 * 1024 * 1024
DEFAULT_WORKERS = 2
DEFAULT_QUEUE_CAPACITY = 64

ENV_DATA_DIR = "RESUMEFLOW_DATA_DIR"
ENV_WORKERS = "RESUMEFLOW_WORKERS"
ENV_API_TOKEN = "RESUMEFLOW_API_TOKEN"
ENV_MAX_UPLOAD = "RESUMEFLOW_MAX_UPLOAD_BYTES"
ENV_UI_DIR = "RESUMEFLOW_UI_DIR"

RESTART_ERROR = "interrupted by service restart"


class JobState(enum.Enum):
    QUEUED = "queued"
    EXTRACTING_USER = "extracting_user"
    EXTRACTING_JOB = "extracting_job"
    TAILORING = "tailoring"
    SCORING = "scoring"
    RENDERING = "rendering"
    DONE = "done"
    FAILED = "failed"


CANONICAL_STATE_ORDER = (
    JobState.QUEUED, JobState.EXTRACTING_USER, JobState.EXTRACTING_JOB,
    JobState.TAILORING, JobState.SCORING, JobState.RENDERING, JobState.DONE,
)

_PIPELINE_STAGE_TO_STATE = {
    "extracting_user": JobState.EXTRACTING_USER,
    "extracting_job": JobState.EXTRACTING_JOB,
    "tailoring": JobState.TAILORING,
}

ARTIFACT_FILENAMES = {
    "user_data_json": "user_data.json",
    "job_details_json": "job_details.json",
    "tailored_json": "tailored.json",
    "score_json": "score.json",
    "tex": "resume.tex",
    "pdf": "resume.pdf",
    "md": "resume.md",
    "cover_letter_md": "cover_letter.md",
}

ARTIFACT_CONTENT_TYPES = {
    "user_data_json": "application/json",
    "job_details_json": "application/json",
    "tailored_json": "application/json",
    "score_json": "application/json",
    "tex": "application/x-tex",
    "pdf": "application/pdf",
    "md": "text/markdown; charset=utf-8",
    "cover_letter_md": "text/markdown; charset=utf-8",
}


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds")


@dataclass
class PipelineJob:
    id: str
    state: JobState
    created_at: str
    updated_at: str
    options: TailorOptions
    error: str | None = None
    artifacts: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "state": self.state.value,
            "created_at": self.created_at,
            "updated_at": self.updated_at,
            "options": {
                "model": {
                    "provider": self.options.model.provider.value,
                    "model_id": self.options.model.model_id,
                    "temperature": self.options.model.temperature,
                    "max_output_tokens": self.options.model.max_output_tokens,
                    "supports_native_json": self.options.model.supports_native_json,
                },
                "generate_cover_letter": self.options.generate_cover_letter,
                "section_parallelism": self.options.section_parallelism,
                "drop_unmatched_entries": self.options.drop_unmatched_entries,
            },
            "error": self.error,
            "artifacts": dict(self.artifacts),
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "PipelineJob":
        options = raw.get("options") or {}
        model = options.get("model") or {}
        return cls(
            id=raw["id"],
            state=JobState(raw["state"]),
            created_at=raw["created_at"],
            updated_at=raw["updated_at"],
            options=TailorOptions(
                model=ModelSpec(
                    provider=Provider(model.get("provider", "mock")),
                    model_id=model.get("model_id", ""),
                    temperature=model.get("temperature", 0.0),
                    max_output_tokens=model.get("max_output_tokens", 4096),
                    supports_native_json=model.get("supports_native_json"),
                ),
                generate_cover_letter=options.get("generate_cover_letter", False),
                section_parallelism=options.get("section_parallelism", 4),
                drop_unmatched_entries=options.get("drop_unmatched_entries", False),
            ),
            error=raw.get("error"),
            artifacts=dict(raw.get("artifacts") or {}),
        )


class JobStore:
    """In-memory job table backed by an append-only JSON-lines journal."""

    def __init__(self, data_dir: Path):
        self.data_dir = Path(data_dir)
        self.artifacts_dir = self.data_dir / "artifacts"
        self.journal_path = self.data_dir / "jobs.jsonl"
        self.artifacts_dir.mkdir(parents=True, exist_ok=True)
        self._jobs: dict[str, PipelineJob] = {}
        self._lock = threading.Lock()
        self._replay()

    def _replay(self) -> None:
        if not self.journal_path.exists():
            return
        for line in self.journal_path.read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if not line:
                continue
            try:
                job = PipelineJob.from_dict(json.loads(line))
            except (ValueError, KeyError) as exc:
                log.warning("skipping corrupt journal line: %s", exc)
                continue
            self._jobs[job.id] = job
        for job in self._jobs.values():
            if job.state not in (JobState.DONE, JobState.FAILED):
                job.state = JobState.FAILED
                job.error = RESTART_ERROR
                job.updated_at = _now()
                self._append(job)

    def _append(self, job: PipelineJob) -> None:
        with self.journal_path.open("a", encoding="utf-8") as handle:
            handle.write(json.dumps(job.to_dict(), ensure_ascii=False) + "\n")

    def create(self, options: TailorOptions) -> PipelineJob:
        now = _now()
        job = PipelineJob(id=uuid.uuid4().hex, state=JobState.QUEUED,
                          created_at=now, updated_at=now, options=options)
        with self._lock:
            self._jobs[job.id] = job
            self._append(job)
        return job

    def get(self, job_id: str) -> PipelineJob | None:
        with self._lock:
            job = self._jobs.get(job_id)
            return replace(job, artifacts=dict(job.artifacts)) if job else None

    def update(self, job_id: str, *, state: JobState | None = None,
               error: str | None = None,
               artifacts: dict[str, str] | None = None) -> None:
        with self._lock:
            job = self._jobs[job_id]
            if state is not None:
                job.state = state
            if error is not None:
                job.error = error
            if artifacts:
                job.artifacts.update(artifacts)
            job.updated_at = _now()
            self._append(job)

    def artifact_path(self, job_id: str, kind: str) -> Path:
        return self.artifacts_dir / job_id / ARTIFACT_FILENAMES[kind]

    def write_artifact(self, job_id: str, kind: str, data: bytes) -> str:
        path = self.artifact_path(job_id, kind)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)
        return str(path.relative_to(self.data_dir))


@dataclass
class ServiceConfig:
    data_dir: Path
    workers: int = DEFAULT_WORKERS
    api_token: str | None = None
    max_upload_bytes: int = DEFAULT_MAX_UPLOAD_BYTES
    queue_capacity: int = DEFAULT_QUEUE_CAPACITY
    gateway: Gateway | None = None
    ui_dir: Path | None = None

    @classmethod
    def from_env(cls) -> "ServiceConfig":
        import os

        data_dir = Path(os.environ.get(ENV_DATA_DIR, "resumeflow-data"))
        ui_dir = os.environ.get(ENV_UI_DIR)
        return cls(
            data_dir=data_dir,
            workers=int(os.environ.get(ENV_WORKERS, DEFAULT_WORKERS)),
            api_token=os.environ.get(ENV_API_TOKEN) or None,
            max_upload_bytes=int(os.environ.get(ENV_MAX_UPLOAD,
                                                DEFAULT_MAX_UPLOAD_BYTES)),
            ui_dir=Path(ui_dir) if ui_dir else None,
        )


@dataclass
class _QueuedWork:
    job_id: str
    source: SourceDocument
    job_text: str
    options: TailorOptions


_SHUTDOWN = object()


class JobRunner:
    """Bounded FIFO queue feeding a fixed pool of worker threads."""

    def __init__(self, store: JobStore, gateway: Gateway, workers: int,
                 capacity: int):
        self.store = store
        self.gateway = gateway
        self.queue: queue.Queue = queue.Queue(maxsize=capacity)
        self._threads = [
            threading.Thread(target=self._loop, name=f"resumeflow-worker-{i}",
                             daemon=True)
            for i in range(workers)
        ]

    def start(self) -> None:
        for thread in self._threads:
            thread.start()

    def stop(self) -> None:
        for _ in self._threads:
            self.queue.put(_SHUTDOWN)
        for thread in self._threads:
            thread.join(timeout=5)

    def submit(self, work: _QueuedWork) -> bool:
        try:
            self.queue.put_nowait(work)
            return True
        except queue.Full:
            return False

    def _loop(self) -> None:
        while True:
            item = self.queue.get()
            if item is _SHUTDOWN:
                return
            try:
                self._execute(item)
            except Exception as exc:  # defensive: a worker must never die
                log.exception("job %s failed", item.job_id)
                self.store.update(item.job_id, state=JobState.FAILED,
                                  error=str(exc))

    def _execute(self, work: _QueuedWork) -> None:
        store = self.store

        def on_stage(stage: str) -> None:
            state = _PIPELINE_STAGE_TO_STATE.get(stage)
            if state is not None:
                store.update(work.job_id, state=state)

        result = tailor_resume(work.source, work.job_text, work.options,
                               self.gateway, on_stage=on_stage)

        store.update(work.job_id, state=JobState.SCORING)
        report = metrics.score(
            user_text=work.source.raw_text,
            generated_resume=result.tailored.resume,
            job_text=work.job_text,
            flags=result.tailored.flagged_entries,
        )

        store.update(work.job_id, state=JobState.RENDERING)
        artifacts: dict[str, str] = {}

        def put(kind: str, payload: bytes) -> None:
            artifacts[kind] = store.write_artifact(work.job_id, kind, payload)

        put("user_data_json",
            canonical_dumps(resume_to_dict(result.user_data)).encode("utf-8"))
        put("job_details_json",
            canonical_dumps(job_to_dict(result.job)).encode("utf-8"))
        put("tailored_json",
            canonical_dumps(tailored_to_dict(result.tailored)).encode("utf-8"))
        put("score_json",
            canonical_dumps(score_to_dict(report)).encode("utf-8"))
        tex = render.to_latex(result.tailored, "classic")
        put("tex", tex.encode("utf-8"))
        put("md", render.to_markdown(result.tailored).encode("utf-8"))
        if result.cover_letter:
            put("cover_letter_md", result.cover_letter.encode("utf-8"))
        if render.find_latex_engine() is not None:
            try:
                put("pdf", render.compile_pdf(tex))
            except ResumeFlowError as exc:
                log.warning("PDF compilation failed for job %s: %s",
                            work.job_id, exc)

        store.update(work.job_id, state=JobState.DONE, artifacts=artifacts)


# ---------------------------------------------------------------------------
# FastAPI app
# ---------------------------------------------------------------------------

_PROVIDER_ALIASES = {
    "openai": Provider.OPENAI_COMPATIBLE,
    "openai_compatible": Provider.OPENAI_COMPATIBLE,
    "gemini": Provider.GEMINI,
    "mock": Provider.MOCK,
}


def _parse_bool(value: str | None, default: bool = False) -> bool:
    if value is None:
        return default
    return value.strip().lower() in ("1", "true", "yes", "on")


def _credentials_present(provider: Provider) -> bool:
    import os

    if provider is Provider.OPENAI_COMPATIBLE:
        return bool(os.environ.get("OPENAI_API_KEY"))
    if provider is Provider.GEMINI:
        return bool(os.environ.get("GEMINI_API_KEY"))
    return True  # mock needs none


def _error(status: int, message: str, reason: str | None = None) -> JSONResponse:
    body = {"error": message}
    if reason:
        body["reason"] = reason
    return JSONResponse(status_code=status, content=body)


def create_app(config: ServiceConfig) -> FastAPI:
    config.data_dir.mkdir(parents=True, exist_ok=True)
    store = JobStore(config.data_dir)
    gateway = config.gateway or Gateway()
    runner = JobRunner(store, gateway, workers=max(1, config.workers),
                       capacity=config.queue_capacity)

    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        runner.start()
        yield
        runner.stop()

    app = FastAPI(title="resumeflow", lifespan=lifespan)
    app.state.store = store
    app.state.runner = runner

    @app.middleware("http")
    async def check_token(request: Request, call_next):
        path = request.url.path
        if config.api_token and path.startswith("/v1/") and path != "/v1/health":
            header = request.headers.get("authorization", "")
            if header != f"Bearer {config.api_token}":
                return _error(401, "missing or invalid bearer token")
        return await call_next(request)

    @app.post("/v1/tailor", status_code=202)
    async def submit_tailor(request: Request):
        form = await request.form()
        resume_file = form.get("resume")
        resume_text = form.get("resume_text")
        job_description = form.get("job_description")

        has_file = isinstance(resume_file, UploadFile)
        has_text = isinstance(resume_text, str) and bool(resume_text.strip())
        if has_file == has_text:
            return _error(400, "provide exactly one of: resume file, resume_text")
        if not isinstance(job_description, str) or not job_description.strip():
            return _error(400, "job_description is required")
        if len(job_description.encode("utf-8")) > config.max_upload_bytes:
            return _error(413, "job_description too large")

        provider_name = (form.get("provider") or "mock")
        provider = _PROVIDER_ALIASES.get(str(provider_name).strip().lower())
        if provider is None:
            return _error(400, f"unknown provider: {provider_name}")
        model = ModelSpec(provider=provider,
                          model_id=str(form.get("model") or "").strip())
        options = TailorOptions(
            model=model,
            generate_cover_letter=_parse_bool(form.get("generate_cover_letter")),
            drop_unmatched_entries=_parse_bool(form.get("drop_unmatched_entries")),
        )

        try:
            if has_file:
                payload = await resume_file.read()
                if len(payload) > config.max_upload_bytes:
                    return _error(413, "resume upload exceeds the size limit")
                if payload.startswith(ingest.PDF_MAGIC):
                    source = ingest.extract_pdf_text(payload)
                else:
                    content_type = (resume_file.content_type or "").lower()
                    if content_type.startswith("application/pdf"):
                        raise NotAPdf()
                    source = ingest.from_text(payload.decode("utf-8", "replace"))
            else:
                if len(resume_text.encode("utf-8")) > config.max_upload_bytes:
                    return _error(413, "resume_text exceeds the size limit")
                source = ingest.from_text(resume_text)
        except IngestError as exc:
            return _error(422, str(exc), reason=type(exc).__name__)

        job = store.create(options)
        work = _QueuedWork(job_id=job.id, source=source,
                           job_text=job_description, options=options)
        if not runner.submit(work):
            store.update(job.id, state=JobState.FAILED, error="queue full")
            return _error(503, "job queue is full, retry later")
        return {"job_id": job.id}

    @app.get("/v1/jobs/{job_id}")
    def get_job(job_id: str):
        job = store.get(job_id)
        if job is None:
            return _error(404, "unknown job id")
        body = job.to_dict()
        if job.state is JobState.DONE and "score_json" in job.artifacts:
            score_path = store.artifact_path(job.id, "score_json")
            body["score"] = json.loads(score_path.read_text(encoding="utf-8"))
        return body

    @app.get("/v1/jobs/{job_id}/artifacts/{kind}")
    def get_artifact(job_id: str, kind: str):
        job = store.get(job_id)
        if job is None:
            return _error(404, "unknown job id")
        if kind not in ARTIFACT_FILENAMES:
            return _error(404, f"unknown artifact kind: {kind}")
        if job.state is not JobState.DONE:
            return _error(409, f"job is {job.state.value}, artifacts appear when done")
        if kind not in job.artifacts:
            if kind == "pdf":
                reason = ("latex_engine_absent" if render.find_latex_engine() is None
                          else "compile_failed")
                return _error(404, "no PDF was produced for this job", reason=reason)
            return _error(404, f"artifact not produced: {kind}")
        path = store.artifact_path(job_id, kind)
        return Response(content=path.read_bytes(),
                        media_type=ARTIFACT_CONTENT_TYPES[kind])

    @app.get("/v1/models")
    def list_models():
        entries = []
        for provider in (Provider.OPENAI_COMPATIBLE, Provider.GEMINI, Provider.MOCK):
            entries.append({
                "provider": provider.value,
                "model_id": DEFAULT_MODEL_IDS[provider],
                "is_default": provider is Provider.OPENAI_COMPATIBLE,
                "requires_credentials_present": _credentials_present(provider),
            })
        return entries

    @app.get("/v1/health")
    def health():
        return {
            "status": "ok",
            "queue_depth": runner.queue.qsize(),
            "latex_engine_present": render.find_latex_engine() is not None,
        }

    ui_dir = config.ui_dir
    if ui_dir and ui_dir.is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
