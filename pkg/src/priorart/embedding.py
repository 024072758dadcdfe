"""Embedding vectors from a deterministic hashing backend or a remote model server.

The local backend maps lowercased word unigrams and bigrams into a fixed-size
signed vector: each feature is hashed twice with BLAKE2b (64-bit digests,
distinct personalization strings); the first hash mod ``dim`` picks the bucket
and the low bit of the second picks the sign. The result is L2-normalized.
All-whitespace text yields a zero sentinel vector that is excluded from
normalization and scores 0 against everything.

The remote backend speaks the shared wire protocol: POST ``{op: "embed",
texts: [...], cap_tokens: int}`` to ``<endpoint>/v1/embed``, response
``{model, dim, vectors}``.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass
from typing import Callable, Protocol, Sequence

import numpy as np
import requests

__all__ = [
    "EmbeddingVector",
    "EmbeddingBackend",
    "HashedEmbeddingBackend",
    "RemoteEmbeddingBackend",
    "BackendError",
    "hashed_embed",
    "remote_embed",
    "cosine",
    "HASH_VERSION",
]

HASH_VERSION = "hashed-blake2b-v1"

RETRY_ATTEMPTS = 3
RETRY_BACKOFF_SECONDS = 0.25
NORM_TOLERANCE = 1e-3


class BackendError(Exception):
    """A backend (local or remote) failed to produce embeddings or text."""


@dataclass(frozen=True)
class EmbeddingVector:
    """A fixed-dimension, unit-normalized vector with backend provenance."""

    values: np.ndarray
    dim: int
    backend_id: str

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        if values.shape != (self.dim,):
            raise ValueError(f"expected {self.dim} values, got shape {values.shape}")

    @property
    def is_zero(self) -> bool:
        """True for the all-whitespace-text sentinel."""
        return not np.any(self.values)


def _feature_bucket_and_sign(feature: str, dim: int) -> tuple[int, float]:
    data = feature.encode("utf-8")
    bucket = int.from_bytes(hashlib.blake2b(data, digest_size=8, person=b"pa-bucket").digest(), "big") % dim
    sign_bit = hashlib.blake2b(data, digest_size=8, person=b"pa-sign").digest()[-1] & 1
    return bucket, 1.0 if sign_bit else -1.0


def hashed_embed(text: str, dim: int = 1024, bigrams: bool = True) -> EmbeddingVector:
    """Deterministic signed feature-hashing embedding of ``text``."""
    if dim < 2:
        raise ValueError(f"dim must be >= 2, got {dim}")
    backend_id = f"{HASH_VERSION}-d{dim}" + ("" if bigrams else "-uni")
    words = text.lower().split()
    vec = np.zeros(dim, dtype=np.float64)
    if not words:
        return EmbeddingVector(vec, dim, backend_id)
    features = [f"1:{w}" for w in words]
    if bigrams:
        features.extend(f"2:{a} {b}" for a, b in zip(words, words[1:]))
    for feature in features:
        bucket, sign = _feature_bucket_and_sign(feature, dim)
        vec[bucket] += sign
    norm = float(np.linalg.norm(vec))
    if norm > 0.0:
        vec /= norm
    return EmbeddingVector(vec, dim, backend_id)


def cosine(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """Cosine similarity of two unit vectors (dot product); 0 against the zero sentinel."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    if a.is_zero or b.is_zero:
        return 0.0
    return float(np.dot(a.values, b.values))


class EmbeddingBackend(Protocol):
    """Anything that turns a batch of texts into embedding vectors."""

    backend_id: str
    family: str

    def embed_batch(self, texts: Sequence[str], cap_tokens: int | None = None) -> list[EmbeddingVector]:
        ...


class HashedEmbeddingBackend:
    """Hermetic local backend built on :func:`hashed_embed`."""

    def __init__(self, dim: int = 1024, bigrams: bool = True, family: str = "hashed"):
        self.dim = dim
        self.bigrams = bigrams
        self.family = family
        self.backend_id = f"{HASH_VERSION}-d{dim}" + ("" if bigrams else "-uni")

    def embed_batch(self, texts: Sequence[str], cap_tokens: int | None = None) -> list[EmbeddingVector]:
        return [hashed_embed(t, self.dim, self.bigrams) for t in texts]


class RemoteEmbeddingBackend:
    """Client for the model server's embed endpoint, with retry and renormalization.

    Transport failures are retried ``attempts`` times with exponential backoff
    before raising; vectors whose norm deviates from 1 by more than 1e-3 are
    renormalized client-side. ``backend_id`` becomes the server-reported model
    name after the first successful call.
    """

    def __init__(
        self,
        endpoint: str,
        model: str | None = None,
        family: str = "sentence",
        session: requests.Session | None = None,
        attempts: int = RETRY_ATTEMPTS,
        backoff: float = RETRY_BACKOFF_SECONDS,
        sleep: Callable[[float], None] = time.sleep,
        timeout: float = 60.0,
    ):
        self.endpoint = endpoint.rstrip("/")
        self.model = model
        self.family = family
        self.session = session or requests.Session()
        self.attempts = attempts
        self.backoff = backoff
        self.sleep = sleep
        self.timeout = timeout
        self.backend_id = model or f"remote:{self.endpoint}"

    def embed_batch(self, texts: Sequence[str], cap_tokens: int | None = None) -> list[EmbeddingVector]:
        payload: dict = {"op": "embed", "texts": list(texts)}
        if cap_tokens is not None:
            payload["cap_tokens"] = cap_tokens
        if self.model:
            payload["model"] = self.model
        body = self._post(f"{self.endpoint}/v1/embed", payload)

        try:
            model, dim, vectors = body["model"], int(body["dim"]), body["vectors"]
        except (KeyError, TypeError, ValueError) as exc:
            raise BackendError(f"malformed embed response from {self.endpoint}: {exc}") from exc
        if len(vectors) != len(texts):
            raise BackendError(f"expected {len(texts)} vectors, got {len(vectors)}")
        self.backend_id = model

        out: list[EmbeddingVector] = []
        for raw in vectors:
            values = np.asarray(raw, dtype=np.float64)
            if values.shape != (dim,):
                raise BackendError(f"vector dimension mismatch: expected {dim}, got {values.shape}")
            norm = float(np.linalg.norm(values))
            if norm > 0.0 and abs(norm - 1.0) > NORM_TOLERANCE:
                values = values / norm
            out.append(EmbeddingVector(values, dim, model))
        return out

    def _post(self, url: str, payload: dict) -> dict:
        last_error: Exception | None = None
        for attempt in range(self.attempts):
            if attempt:
                self.sleep(self.backoff * (2 ** (attempt - 1)))
            try:
                response = self.session.post(url, json=payload, timeout=self.timeout)
                response.raise_for_status()
                return response.json()
            except (requests.RequestException, ValueError) as exc:
                last_error = exc
        raise BackendError(f"embed request to {url} failed after {self.attempts} attempts: {last_error}")


def remote_embed(texts: Sequence[str], endpoint: str, **kwargs) -> list[EmbeddingVector]:
    """One-shot batch embedding against a model server endpoint."""
    return RemoteEmbeddingBackend(endpoint, **kwargs).embed_batch(texts)
