"""Job-alignment and content-preservation scoring.

Token-space scores use the overlap coefficient over unique-word sets;
latent-space scores use cosine similarity between provider embeddings.
Token metrics are pure and always available offline; latent metrics are
optional because they need embedding credentials (or the mock).

Tokenization rule (version ``nfc-lower-alnum@1``): NFC-normalize, lowercase,
split on every maximal run of characters that are neither letters nor
digits. No stopword removal, no stemming - both would silently change the
scores. A documented consequence: "C++" and "C#" both tokenize to "c".
"""

from __future__ import annotations

import math
import re
import unicodedata
from dataclasses import dataclass

from .errors import DimensionMismatch, EmptyWordSet, ModelMismatch, ZeroVector
from .llm import Gateway, ModelSpec, Provider, default_gateway
from .schema import (
    FlaggedEntry,
    ResumeDocument,
    ScoreReport,
    canonical_flatten,
)

TOKENIZER_VERSION = "nfc-lower-alnum@1"

# Flag pattern: content preservation below the floor while job alignment is
# above the ceiling suggests the model invented job-matching content.
DEFAULT_PRESERVATION_FLOOR = 0.5
DEFAULT_ALIGNMENT_CEILING = 0.8

# Conservative per-request character cap before embedding calls.
EMBED_CHAR_LIMIT = 16000

DEFAULT_EMBEDDER_IDS = {
    Provider.OPENAI_COMPATIBLE: "text-embedding-ada-002",
    Provider.GEMINI: "models/embedding-001",
    Provider.MOCK: "mock-embedding-001",
}

# Letters and digits only: \w minus the underscore.
_TOKEN = re.compile(r"[^\W_]+", re.UNICODE)


@dataclass(frozen=True)
class WordSet:
    words: frozenset[str]
    source_token_count: int


@dataclass(frozen=True)
class EmbeddingVector:
    values: tuple[float, ...]
    model_id: str

    def __post_init__(self):
        if not self.values:
            raise ValueError("embedding vector must be non-empty")
        if any(not math.isfinite(v) for v in self.values):
            raise ValueError("embedding vector contains non-finite entries")


def tokenize_unique(text: str) -> WordSet:
    normalized = unicodedata.normalize("NFC", text).lower()
    tokens = _TOKEN.findall(normalized)
    return WordSet(words=frozenset(tokens), source_token_count=len(tokens))


def overlap_coefficient(a: WordSet, b: WordSet) -> float:
    """|A intersect B| / min(|A|, |B|), in [0, 1]."""
    if not a.words:
        raise EmptyWordSet("first word set")
    if not b.words:
        raise EmptyWordSet("second word set")
    intersection = len(a.words & b.words)
    return intersection / min(len(a.words), len(b.words))


def cosine_similarity(v: EmbeddingVector, w: EmbeddingVector) -> float:
    if v.model_id != w.model_id:
        raise ModelMismatch(v.model_id, w.model_id)
    if len(v.values) != len(w.values):
        raise DimensionMismatch(len(v.values), len(w.values))
    dot = sum(x * y for x, y in zip(v.values, w.values))
    norm_v = math.sqrt(sum(x * x for x in v.values))
    norm_w = math.sqrt(sum(y * y for y in w.values))
    if norm_v == 0.0 or norm_w == 0.0:
        raise ZeroVector()
    return max(-1.0, min(1.0, dot / (norm_v * norm_w)))


def embed(text: str, model: ModelSpec, gateway: Gateway | None = None,
          warnings: list[str] | None = None) -> EmbeddingVector:
    """Embed text with the given provider; truncates over-long input."""
    if not text.strip():
        raise ValueError("cannot embed empty text")
    if len(text) > EMBED_CHAR_LIMIT:
        if warnings is not None:
            warnings.append(
                f"embedding input truncated from {len(text)} to {EMBED_CHAR_LIMIT} chars")
        text = text[:EMBED_CHAR_LIMIT]
    gateway = gateway or default_gateway()
    values = gateway.embed(text, model)
    return EmbeddingVector(values=tuple(values), model_id=model.model_id)


def embedder_spec(provider: Provider, model_id: str = "") -> ModelSpec:
    return ModelSpec(provider=provider,
                     model_id=model_id or DEFAULT_EMBEDDER_IDS[provider])


def score(
    user_text: str,
    generated_resume: ResumeDocument,
    job_text: str,
    embedder: ModelSpec | None = None,
    flags: tuple[FlaggedEntry, ...] = (),
    gateway: Gateway | None = None,
    preservation_floor: float = DEFAULT_PRESERVATION_FLOOR,
    alignment_ceiling: float = DEFAULT_ALIGNMENT_CEILING,
) -> ScoreReport:
    """Compute the full score report for one pipeline run.

    job_text should be the raw posting text as the user pasted it, not the
    extracted JobDetails; callers that prefer scoring against the extraction
    can pass flatten_job(details) instead.
    """
    gen_text = canonical_flatten(generated_resume)
    gen_words = tokenize_unique(gen_text)
    job_alignment_token = overlap_coefficient(gen_words, tokenize_unique(job_text))
    content_preservation_token = overlap_coefficient(gen_words, tokenize_unique(user_text))

    job_alignment_latent = None
    content_preservation_latent = None
    embedder_id = None
    if embedder is not None:
        gen_vec = embed(gen_text, embedder, gateway)
        job_alignment_latent = cosine_similarity(gen_vec, embed(job_text, embedder, gateway))
        content_preservation_latent = cosine_similarity(
            gen_vec, embed(user_text, embedder, gateway))
        embedder_id = embedder.model_id

    risky_pattern = (content_preservation_token < preservation_floor
                     and job_alignment_token > alignment_ceiling)
    return ScoreReport(
        job_alignment_token=job_alignment_token,
        content_preservation_token=content_preservation_token,
        job_alignment_latent=job_alignment_latent,
        content_preservation_latent=content_preservation_latent,
        embedder_id=embedder_id,
        tokenizer_version=TOKENIZER_VERSION,
        hallucination_risk=risky_pattern or bool(flags),
        flagged_entries=tuple(flags),
    )
