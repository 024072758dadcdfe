"""Abstractive summarization through a pluggable generation backend.

Profiles carry the generation parameters verbatim and are transmitted to the
backend untouched; the core never interprets beam counts or length penalties
itself. Inputs are always capped to the profile's source budget before
dispatch. When the remote backend is unreachable and fallback is enabled, a
deterministic first-sentences generator stands in and the artifact's method
tag is suffixed ``-fallback``.

Named profiles:

* ``default``  - no explicit length bounds (backend defaults), 4 beams,
  length penalty 0.8, no-repeat-ngram 3, 1024-word source budget.
* ``adjusted`` - the long-summary variant: 250 to 300 words out, same beams
  and ngram blocking, length penalty pass-through.

Profiles speak words; a server maps words to model tokens with its own
tokenizer (documented default ratio 1.35 tokens per word).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, asdict
from typing import Callable

import requests

from .artifacts import SummaryArtifact
from .corpus import cap_tokens, word_count
from .embedding import BackendError, RETRY_ATTEMPTS, RETRY_BACKOFF_SECONDS
from .extractive import split_sentences

__all__ = [
    "GenerationProfile",
    "GenerationBackend",
    "RemoteGenerationBackend",
    "generate_summary",
    "fallback_generate",
    "PROFILES",
    "FALLBACK_MAX_WORDS",
    "WORDS_TO_TOKENS_RATIO",
]

WORDS_TO_TOKENS_RATIO = 1.35

# Used by the fallback generator when a profile leaves max_words unset; the
# top of the default profile's typical output range.
FALLBACK_MAX_WORDS = 100


@dataclass(frozen=True)
class GenerationProfile:
    """Generation parameters handed to the backend as-is."""

    name: str = "custom"
    min_words: int | None = None
    max_words: int | None = None
    num_beams: int = 4
    length_penalty: float = 0.8
    no_repeat_ngram: int = 3
    max_source_words: int = 1024
    checkpoint: str | None = None

    def __post_init__(self) -> None:
        if self.min_words is not None and self.max_words is not None and self.min_words > self.max_words:
            raise ValueError("min_words exceeds max_words")
        if self.num_beams < 1 or self.max_source_words < 1:
            raise ValueError("num_beams and max_source_words must be >= 1")
        if self.no_repeat_ngram < 0:
            raise ValueError("no_repeat_ngram must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)


PROFILES: dict[str, GenerationProfile] = {
    "default": GenerationProfile(name="default"),
    "adjusted": GenerationProfile(name="adjusted", min_words=250, max_words=300),
}


def get_profile(name: str) -> GenerationProfile:
    try:
        return PROFILES[name]
    except KeyError:
        raise ValueError(f"unknown profile {name!r}; expected one of {sorted(PROFILES)}") from None


def fallback_generate(text: str, profile: GenerationProfile) -> str:
    """Deterministic stand-in generator: leading whole sentences within budget.

    Sentences are taken from the start until adding the next one would exceed
    the profile's max_words; if the first sentence alone exceeds the budget,
    its first max_words words are used.
    """
    max_words = profile.max_words if profile.max_words is not None else FALLBACK_MAX_WORDS
    sentences = split_sentences(text)
    if not sentences:
        return ""
    picked: list[str] = []
    used = 0
    for sentence in sentences:
        words = word_count(sentence)
        if picked and used + words > max_words:
            break
        if not picked and words > max_words:
            return cap_tokens(sentence, max_words)
        picked.append(sentence)
        used += words
    return " ".join(picked)


class GenerationBackend:
    """Interface for summary generators; see :class:`RemoteGenerationBackend`."""

    backend_id: str = "generation"

    def summarize(self, text: str, profile: GenerationProfile) -> str:
        raise NotImplementedError


class RemoteGenerationBackend(GenerationBackend):
    """Client for the model server's summarize endpoint.

    POSTs ``{op: "summarize", text, ...profile fields}`` to
    ``<endpoint>/v1/summarize``; the response carries the generated ``text``.
    """

    def __init__(
        self,
        endpoint: str,
        model: str | None = None,
        session: requests.Session | None = None,
        attempts: int = RETRY_ATTEMPTS,
        backoff: float = RETRY_BACKOFF_SECONDS,
        sleep: Callable[[float], None] = time.sleep,
        timeout: float = 300.0,
    ):
        self.endpoint = endpoint.rstrip("/")
        self.model = model
        self.session = session or requests.Session()
        self.attempts = attempts
        self.backoff = backoff
        self.sleep = sleep
        self.timeout = timeout
        self.backend_id = model or f"remote:{self.endpoint}"

    def summarize(self, text: str, profile: GenerationProfile) -> str:
        payload = {"op": "summarize", "text": text, **profile.to_dict()}
        if self.model:
            payload["model"] = self.model
        url = f"{self.endpoint}/v1/summarize"
        last_error: Exception | None = None
        for attempt in range(self.attempts):
            if attempt:
                self.sleep(self.backoff * (2 ** (attempt - 1)))
            try:
                response = self.session.post(url, json=payload, timeout=self.timeout)
                response.raise_for_status()
                body = response.json()
                if "model" in body:
                    self.backend_id = body["model"]
                return body["text"]
            except (requests.RequestException, ValueError, KeyError) as exc:
                last_error = exc
        raise BackendError(f"summarize request to {url} failed after {self.attempts} attempts: {last_error}")


def generate_summary(
    text: str,
    profile: GenerationProfile,
    backend: GenerationBackend | None,
    doc_id: str = "",
    source: str = "description",
    fallback: bool = True,
) -> SummaryArtifact:
    """Generate an abstractive summary, capping the input before dispatch.

    With ``fallback`` enabled, a backend failure (or a missing backend)
    routes to :func:`fallback_generate` and tags the artifact accordingly;
    otherwise the failure propagates.
    """
    if not text.strip():
        raise ValueError("text must be non-empty")
    payload = cap_tokens(text, profile.max_source_words)

    method = "abstractive"
    backend_id = ""
    output: str | None = None
    if backend is not None:
        try:
            output = backend.summarize(payload, profile)
            backend_id = backend.backend_id
        except BackendError:
            if not fallback:
                raise
    elif not fallback:
        raise BackendError("no generation backend configured and fallback disabled")

    if output is None:
        output = fallback_generate(payload, profile)
        method += "-fallback"
        backend_id = "fallback-lead"
    if not output.strip():
        raise BackendError(f"backend {backend_id or 'fallback'} returned empty output for {doc_id!r}")

    return SummaryArtifact(
        doc_id=doc_id,
        method=method,
        source=source,
        text=output,
        profile=profile.name,
        backend_id=backend_id,
    )
