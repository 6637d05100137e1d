"""Provider-agnostic chat-completion access with structured-output handling.

Three providers: any OpenAI-compatible chat endpoint, Google Gemini, and a
deterministic offline mock used by every test and by ``--provider mock``
runs. JSON is requested natively where the provider supports it and
recovered by ``repair_json`` otherwise.
"""

from __future__ import annotations

import enum
import hashlib
import json
import os
import re
import threading
import time
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Sequence

import httpx

from . import prompts
from .errors import (
    AuthError,
    ProviderRefusal,
    RateLimited,
    StructuredOutputFailed,
    TransportError,
    Unrepairable,
)

MAX_ATTEMPTS = 3          # total transport attempts per completion
BACKOFF_BASE_SECONDS = 1.0
BACKOFF_FACTOR = 2.0

RETRY_SUFFIX = (
    "\n\nYour previous output failed validation: {error}. "
    "Emit only corrected JSON."
)
_RETRY_MARKER = "\n\nYour previous output failed validation:"


class Provider(enum.Enum):
    OPENAI_COMPATIBLE = "openai_compatible"
    GEMINI = "gemini"
    MOCK = "mock"


class ResponseFormat(enum.Enum):
    FREE_TEXT = "free_text"
    JSON_OBJECT = "json_object"


class FinishReason(enum.Enum):
    STOP = "stop"
    LENGTH = "length"
    CONTENT_FILTER = "content_filter"
    OTHER = "other"


DEFAULT_MODEL_IDS = {
    Provider.OPENAI_COMPATIBLE: "gpt-4-1106-preview",
    Provider.GEMINI: "gemini-pro",
    Provider.MOCK: "mock-echo",
}

_NATIVE_JSON_DEFAULT = {
    Provider.OPENAI_COMPATIBLE: True,
    Provider.GEMINI: False,  # recovered via repair_json instead
    Provider.MOCK: True,
}


@dataclass(frozen=True)
class ModelSpec:
    provider: Provider
    model_id: str = ""
    temperature: float = 0.0
    max_output_tokens: int = 4096
    supports_native_json: bool | None = None

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_output_tokens <= 0:
            raise ValueError("max_output_tokens must be > 0")
        if not self.model_id:
            object.__setattr__(self, "model_id", DEFAULT_MODEL_IDS[self.provider])
        if self.supports_native_json is None:
            object.__setattr__(self, "supports_native_json",
                               _NATIVE_JSON_DEFAULT[self.provider])


@dataclass(frozen=True)
class ChatRequest:
    system_prompt: str
    user_prompt: str
    response_format: ResponseFormat
    model: ModelSpec

    def __post_init__(self):
        if not self.user_prompt.strip():
            raise ValueError("user_prompt must be non-empty")


@dataclass(frozen=True)
class ChatResponse:
    text: str
    finish_reason: FinishReason = FinishReason.STOP
    input_tokens: int = 0
    output_tokens: int = 0


# ---------------------------------------------------------------------------
# JSON repair
# ---------------------------------------------------------------------------

_FENCE = re.compile(r"```[A-Za-z0-9_+-]*[ \t]*\r?\n?(.*?)(?:```|\Z)", re.S)


def _strip_trailing_commas(text: str) -> str:
    """Remove commas that directly precede '}' or ']', outside string literals."""
    out: list[str] = []
    in_string = False
    escaped = False
    n = len(text)
    for i, ch in enumerate(text):
        if in_string:
            out.append(ch)
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
            out.append(ch)
            continue
        if ch == ",":
            j = i + 1
            while j < n and text[j] in " \t\r\n":
                j += 1
            if j < n and text[j] in "}]":
                continue
        out.append(ch)
    return "".join(out)


def _try_parse(text: str) -> tuple[bool, Any]:
    try:
        return True, json.loads(text)
    except (json.JSONDecodeError, RecursionError):
        return False, None


def repair_json(raw: str) -> Any:
    """Recover a JSON value from a chatty model reply.

    Ladder: strip Markdown code fences, try a strict parse, fall back to the
    substring between the first '{' and the last '}', then retry both with
    trailing commas removed. The strict parse runs before the brace substring
    so that non-object values (lists, strings, numbers) round-trip too.
    """
    candidates: list[str] = []
    fenced = [m.group(1).strip() for m in _FENCE.finditer(raw) if m.group(1).strip()]
    candidates.extend(fenced)
    candidates.append(raw.strip())

    braced: list[str] = []
    for candidate in candidates:
        start, end = candidate.find("{"), candidate.rfind("}")
        if 0 <= start < end:
            braced.append(candidate[start:end + 1])

    for candidate in candidates + braced:
        ok, value = _try_parse(candidate)
        if ok:
            return value
    for candidate in candidates + braced:
        ok, value = _try_parse(_strip_trailing_commas(candidate))
        if ok:
            return value
    raise Unrepairable(raw)


# ---------------------------------------------------------------------------
# Mock provider
# ---------------------------------------------------------------------------

_EMAIL = re.compile(r"[^\s@]+@[^\s@]+\.[^\s@]+")
_PROMPT_FENCE_BLOCK = re.compile(r"```(?:json)?\n(.*?)\n```", re.S)


def _mock_parse_resume(resume_text: str) -> dict:
    """Deterministic line-based stand-in for LLM resume extraction."""
    lines = [line.strip() for line in resume_text.replace("\f", "\n").splitlines()
             if line.strip()]
    full_name = lines[0] if lines else "Unknown Applicant"
    email_match = _EMAIL.search(resume_text)
    rest = lines[1:]
    return {
        "personal": {
            "full_name": full_name,
            "email": email_match.group(0) if email_match else "",
            "phone": None,
            "location": None,
            "links": [],
        },
        "summary": None if rest else full_name,
        "education": [],
        "work_experience": [],
        "projects": [],
        "skill_groups": [],
        "achievements": rest,
        "certifications": [],
        "extra_sections": [],
    }


def _mock_extract_job(job_text: str) -> dict:
    lines = [line.strip() for line in job_text.splitlines() if line.strip()]
    title = lines[0] if lines else "Untitled Role"
    return {
        "title": title,
        "keywords": [],
        "purpose": "",
        "responsibilities": lines[1:],
        "required_qualifications": [],
        "preferred_qualifications": [],
        "company_name": "",
        "company_info": "",
    }


_MOCK_COVER_LETTER = (
    "Dear Hiring Team,\n\n"
    "I am writing to apply for the advertised position. My background matches "
    "the responsibilities described in the posting, and I would welcome the "
    "chance to discuss it.\n\nSincerely,\nThe Candidate"
)


class MockProvider:
    """Offline provider: scripted replies first, deterministic echo otherwise.

    Scripted replies are keyed by a hash of (system_prompt, user_prompt); the
    validation-retry suffix appended by complete_structured is stripped before
    hashing so one script covers the original call and its retry. Script
    entries may be exceptions, which are raised (fault injection). Without a
    script, the provider recognizes the pipeline's own prompts by their marker
    phrases and answers like a perfectly obedient model: resume and job text
    are extracted with small deterministic heuristics, and tailored sections
    echo their input unchanged.
    """

    def __init__(self, script: dict[str, Sequence[str | Exception]] | None = None):
        self._script: dict[str, list[str | Exception]] = {
            key: list(replies) for key, replies in (script or {}).items()
        }
        self._rules: list[tuple[str, list[str | Exception]]] = []
        self.calls: list[ChatRequest] = []
        self._lock = threading.Lock()

    @staticmethod
    def key_for(system_prompt: str, user_prompt: str) -> str:
        base_user = user_prompt.split(_RETRY_MARKER, 1)[0]
        digest = hashlib.sha256(
            (system_prompt + "\x1f" + base_user).encode("utf-8")).hexdigest()
        return digest[:16]

    def script_response(self, system_prompt: str, user_prompt: str,
                        replies: Sequence[str | Exception]) -> None:
        self._script[self.key_for(system_prompt, user_prompt)] = list(replies)

    def when(self, user_prompt_contains: str,
             replies: Sequence[str | Exception]) -> None:
        """Scripting by substring match, for tests that do not render prompts."""
        self._rules.append((user_prompt_contains, list(replies)))

    def complete(self, request: ChatRequest) -> ChatResponse:
        with self._lock:
            self.calls.append(request)
            reply = self._next_scripted(request)
        if reply is None:
            reply = self._default_reply(request)
        if isinstance(reply, Exception):
            raise reply
        return ChatResponse(
            text=reply,
            finish_reason=FinishReason.STOP,
            input_tokens=len(request.system_prompt.split()) + len(request.user_prompt.split()),
            output_tokens=len(reply.split()),
        )

    def _next_scripted(self, request: ChatRequest) -> str | Exception | None:
        queue = self._script.get(self.key_for(request.system_prompt, request.user_prompt))
        if queue:
            return queue.pop(0)
        for needle, replies in self._rules:
            if needle in request.user_prompt and replies:
                return replies.pop(0)
        return None

    def _default_reply(self, request: ChatRequest) -> str:
        user = request.user_prompt
        if prompts.MARKER_RESUME_PARSE in user:
            return json.dumps(_mock_parse_resume(self._embedded_block(user)))
        if prompts.MARKER_JOB_EXTRACT in user:
            return json.dumps(_mock_extract_job(self._embedded_block(user)))
        if prompts.MARKER_SECTION_TAILOR in user:
            blocks = _PROMPT_FENCE_BLOCK.findall(user)
            if blocks:
                return blocks[0]  # echo the section content untouched
        if prompts.MARKER_COVER_LETTER in user:
            return json.dumps({"cover_letter": _MOCK_COVER_LETTER})
        return json.dumps({"echo": user[:200]})

    @staticmethod
    def _embedded_block(user_prompt: str) -> str:
        blocks = _PROMPT_FENCE_BLOCK.findall(user_prompt)
        return blocks[0] if blocks else user_prompt

    def embed(self, text: str, model_id: str) -> list[float]:
        return mock_embedding(text)


def mock_embedding(text: str, dim: int = 64) -> list[float]:
    """Deterministic hash-derived embedding for offline latent metrics."""
    out: list[float] = []
    payload = text.encode("utf-8")
    counter = 0
    while len(out) < dim:
        digest = hashlib.sha256(payload + counter.to_bytes(4, "big")).digest()
        for i in range(0, len(digest), 4):
            value = int.from_bytes(digest[i:i + 4], "big")
            out.append(value / 2 ** 31 - 1.0)
        counter += 1
    return out[:dim]


# ---------------------------------------------------------------------------
# HTTP providers
# ---------------------------------------------------------------------------

def _raise_for_status(response: httpx.Response) -> None:
    if response.status_code in (401, 403):
        raise AuthError(f"provider rejected credentials (HTTP {response.status_code})")
    if response.status_code == 429:
        retry_after = response.headers.get("retry-after")
        raise RateLimited(float(retry_after) if retry_after else None)
    if response.status_code >= 500:
        raise TransportError(f"provider error HTTP {response.status_code}")
    if response.status_code >= 400:
        raise ProviderRefusal(
            f"HTTP {response.status_code}: {response.text[:300]}")


class OpenAiCompatibleProvider:
    """Client for the open chat-completions wire shape (OpenAI, local servers)."""

    def __init__(self, api_key: str | None = None, base_url: str | None = None,
                 client: httpx.Client | None = None):
        self.api_key = api_key if api_key is not None else os.environ.get("OPENAI_API_KEY", "")
        self.base_url = (base_url or os.environ.get("OPENAI_BASE_URL")
                         or "https://api.openai.com/v1").rstrip("/")
        self._client = client or httpx.Client(timeout=httpx.Timeout(120.0, connect=10.0))

    def _headers(self) -> dict[str, str]:
        if not self.api_key:
            raise AuthError("OPENAI_API_KEY is not set")
        return {"Authorization": f"Bearer {self.api_key}"}

    def complete(self, request: ChatRequest) -> ChatResponse:
        payload: dict[str, Any] = {
            "model": request.model.model_id,
            "messages": [
                {"role": "system", "content": request.system_prompt},
                {"role": "user", "content": request.user_prompt},
            ],
            "temperature": request.model.temperature,
            "max_tokens": request.model.max_output_tokens,
        }
        if (request.response_format is ResponseFormat.JSON_OBJECT
                and request.model.supports_native_json):
            payload["response_format"] = {"type": "json_object"}
        try:
            response = self._client.post(f"{self.base_url}/chat/completions",
                                         headers=self._headers(), json=payload)
        except httpx.HTTPError as exc:
            raise TransportError(str(exc)) from exc
        _raise_for_status(response)
        body = response.json()
        try:
            choice = body["choices"][0]
            text = choice["message"]["content"] or ""
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderRefusal(f"malformed completion payload: {exc}") from exc
        usage = body.get("usage") or {}
        return ChatResponse(
            text=text,
            finish_reason=_FINISH_MAP.get(choice.get("finish_reason"), FinishReason.OTHER),
            input_tokens=int(usage.get("prompt_tokens") or 0),
            output_tokens=int(usage.get("completion_tokens") or 0),
        )

    def embed(self, text: str, model_id: str) -> list[float]:
        try:
            response = self._client.post(
                f"{self.base_url}/embeddings", headers=self._headers(),
                json={"model": model_id, "input": text})
        except httpx.HTTPError as exc:
            raise TransportError(str(exc)) from exc
        _raise_for_status(response)
        try:
            return [float(v) for v in response.json()["data"][0]["embedding"]]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderRefusal(f"malformed embedding payload: {exc}") from exc


_FINISH_MAP = {
    "stop": FinishReason.STOP,
    "length": FinishReason.LENGTH,
    "content_filter": FinishReason.CONTENT_FILTER,
}

_GEMINI_FINISH_MAP = {
    "STOP": FinishReason.STOP,
    "MAX_TOKENS": FinishReason.LENGTH,
    "SAFETY": FinishReason.CONTENT_FILTER,
}


class GeminiProvider:
    def __init__(self, api_key: str | None = None, base_url: str | None = None,
                 client: httpx.Client | None = None):
        self.api_key = api_key if api_key is not None else os.environ.get("GEMINI_API_KEY", "")
        self.base_url = (base_url or os.environ.get("GEMINI_BASE_URL")
                         or "https://generativelanguage.googleapis.com/v1beta").rstrip("/")
        self._client = client or httpx.Client(timeout=httpx.Timeout(120.0, connect=10.0))

    def _check_key(self) -> None:
        if not self.api_key:
            raise AuthError("GEMINI_API_KEY is not set")

    def complete(self, request: ChatRequest) -> ChatResponse:
        self._check_key()
        generation_config: dict[str, Any] = {
            "temperature": request.model.temperature,
            "maxOutputTokens": request.model.max_output_tokens,
        }
        if (request.response_format is ResponseFormat.JSON_OBJECT
                and request.model.supports_native_json):
            generation_config["responseMimeType"] = "application/json"
        payload = {
            "systemInstruction": {"parts": [{"text": request.system_prompt}]},
            "contents": [{"role": "user", "parts": [{"text": request.user_prompt}]}],
            "generationConfig": generation_config,
        }
        url = (f"{self.base_url}/models/{request.model.model_id}:generateContent"
               f"?key={self.api_key}")
        try:
            response = self._client.post(url, json=payload)
        except httpx.HTTPError as exc:
            raise TransportError(str(exc)) from exc
        _raise_for_status(response)
        body = response.json()
        candidates = body.get("candidates") or []
        if not candidates:
            raise ProviderRefusal(f"no candidates returned: {str(body)[:300]}")
        candidate = candidates[0]
        parts = (candidate.get("content") or {}).get("parts") or []
        text = "".join(part.get("text", "") for part in parts)
        usage = body.get("usageMetadata") or {}
        return ChatResponse(
            text=text,
            finish_reason=_GEMINI_FINISH_MAP.get(candidate.get("finishReason"),
                                                 FinishReason.OTHER),
            input_tokens=int(usage.get("promptTokenCount") or 0),
            output_tokens=int(usage.get("candidatesTokenCount") or 0),
        )

    def embed(self, text: str, model_id: str) -> list[float]:
        self._check_key()
        model_path = model_id if model_id.startswith("models/") else f"models/{model_id}"
        url = f"{self.base_url}/{model_path}:embedContent?key={self.api_key}"
        try:
            response = self._client.post(
                url, json={"content": {"parts": [{"text": text}]}})
        except httpx.HTTPError as exc:
            raise TransportError(str(exc)) from exc
        _raise_for_status(response)
        try:
            return [float(v) for v in response.json()["embedding"]["values"]]
        except (KeyError, TypeError) as exc:
            raise ProviderRefusal(f"malformed embedding payload: {exc}") from exc


# ---------------------------------------------------------------------------
# Gateway
# ---------------------------------------------------------------------------

_PROVIDER_FACTORIES: dict[Provider, Callable[[], Any]] = {
    Provider.OPENAI_COMPATIBLE: OpenAiCompatibleProvider,
    Provider.GEMINI: GeminiProvider,
    Provider.MOCK: MockProvider,
}


@dataclass
class Gateway:
    """Shared entry point for completions and embeddings with retry handling.

    Provider clients are constructed lazily and reused; the mock can be
    injected pre-scripted. ``sleep`` is injectable so tests exercise the
    backoff schedule without waiting.
    """

    providers: dict[Provider, Any] = field(default_factory=dict)
    sleep: Callable[[float], None] = time.sleep
    max_attempts: int = MAX_ATTEMPTS

    def provider_for(self, spec: ModelSpec):
        provider = self.providers.get(spec.provider)
        if provider is None:
            provider = _PROVIDER_FACTORIES[spec.provider]()
            self.providers[spec.provider] = provider
        return provider

    def complete(self, request: ChatRequest) -> ChatResponse:
        provider = self.provider_for(request.model)
        delay = BACKOFF_BASE_SECONDS
        for attempt in range(1, self.max_attempts + 1):
            try:
                return provider.complete(request)
            except TransportError:
                if attempt == self.max_attempts:
                    raise
                self.sleep(delay)
                delay *= BACKOFF_FACTOR
        raise AssertionError("unreachable")

    def complete_structured(self, request: ChatRequest,
                            validator: Callable[[Any], Any]) -> Any:
        """complete -> repair_json -> validator, with one validation retry.

        The retry carries the validation error back to the model appended to
        the user prompt. At most 2 provider calls are made per invocation.
        """
        if request.response_format is not ResponseFormat.JSON_OBJECT:
            raise ValueError("complete_structured requires JSON_OBJECT response format")
        current = request
        last_error: Exception | None = None
        for _ in range(2):
            response = self.complete(current)
            try:
                return validator(repair_json(response.text))
            except Exception as exc:  # any repair/validation failure retries once
                last_error = exc
                current = replace(
                    request,
                    user_prompt=request.user_prompt + RETRY_SUFFIX.format(error=exc),
                )
        assert last_error is not None
        raise StructuredOutputFailed(2, last_error)

    def embed(self, text: str, spec: ModelSpec) -> list[float]:
        provider = self.provider_for(spec)
        delay = BACKOFF_BASE_SECONDS
        for attempt in range(1, self.max_attempts + 1):
            try:
                return provider.embed(text, spec.model_id)
            except TransportError:
                if attempt == self.max_attempts:
                    raise
                self.sleep(delay)
                delay *= BACKOFF_FACTOR
        raise AssertionError("unreachable")


def default_gateway() -> Gateway:
    return Gateway()
