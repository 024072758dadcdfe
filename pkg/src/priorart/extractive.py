"""Extractive summarization: embed sentences, cluster, pick centroid-nearest.

The pipeline splits text into sentences, embeds each one, clusters the
embeddings with seeded k-means, and keeps the sentence closest (by cosine) to
each cluster centroid, re-emitted in original order. Output sentences are
verbatim members of the input, so the summary never rephrases anything.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .artifacts import SummaryArtifact
from .corpus import word_count
from .embedding import EmbeddingBackend, EmbeddingVector

__all__ = [
    "SentenceRecord",
    "ExtractiveConfig",
    "split_sentences",
    "choose_k",
    "kmeans",
    "select_representatives",
    "extractive_summary",
    "SENTENCE_ABBREVIATIONS",
]

# Terminators after these tokens do not end a sentence ("FIG. 1", "U.S. Pat.").
SENTENCE_ABBREVIATIONS = ("FIG", "FIGS", "e.g", "i.e", "No", "U.S", "Pat", "et al", "approx", "vs")

_BOUNDARY = re.compile(r"[.!?](?=\s)")


@dataclass(frozen=True)
class SentenceRecord:
    """A sentence with its original position and embedding."""

    index: int
    text: str
    embedding: EmbeddingVector


@dataclass(frozen=True)
class ExtractiveConfig:
    """Knobs for the extractive pipeline; defaults favor reproducibility."""

    target_words: int = 100
    k_override: int | None = None
    seed: int = 42
    max_iters: int = 100
    tol: float = 1e-6

    def __post_init__(self) -> None:
        if self.target_words < 1:
            raise ValueError("target_words must be >= 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.k_override is not None and self.k_override < 1:
            raise ValueError("k_override must be >= 1")
        if self.tol < 0:
            raise ValueError("tol must be non-negative")


def _ends_with_abbreviation(text: str, terminator_pos: int) -> bool:
    prefix = text[:terminator_pos]
    for abbr in SENTENCE_ABBREVIATIONS:
        if prefix.endswith(abbr):
            before = terminator_pos - len(abbr) - 1
            if before < 0 or not (text[before].isalnum() or text[before] == "."):
                return True
    return False


def split_sentences(text: str) -> list[str]:
    """Split text into trimmed sentences at terminator boundaries.

    A split happens after ``.``, ``!``, or ``?`` followed by whitespace and
    then an uppercase letter or digit, unless the terminator closes a known
    abbreviation. Non-whitespace content is preserved exactly.
    """
    if not text.strip():
        return []
    boundaries = []
    for match in _BOUNDARY.finditer(text):
        rest = text[match.end():].lstrip()
        if not rest or not (rest[0].isupper() or rest[0].isdigit()):
            continue
        if text[match.start()] == "." and _ends_with_abbreviation(text, match.start()):
            continue
        boundaries.append(match.end())
    sentences = []
    start = 0
    for end in boundaries:
        piece = text[start:end].strip()
        if piece:
            sentences.append(piece)
        start = end
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


def choose_k(sentences: Sequence[str], config: ExtractiveConfig) -> int:
    """Cluster count from the word budget: target words over mean sentence length."""
    if not sentences:
        raise ValueError("sentences must be non-empty")
    if config.k_override is not None:
        return config.k_override
    mean_words = sum(word_count(s) for s in sentences) / len(sentences)
    return max(1, min(round(config.target_words / mean_words), len(sentences)))


def kmeans(
    embeddings: Sequence[EmbeddingVector],
    k: int,
    seed: int = 42,
    max_iters: int = 100,
    tol: float = 1e-6,
) -> tuple[np.ndarray, list[int]]:
    """Seeded k-means++ with Lloyd iterations; deterministic for fixed inputs.

    Empty clusters are re-seeded with the point currently farthest from its
    own centroid. Returns the (k, dim) centroid matrix and the cluster index
    of every input point.
    """
    n = len(embeddings)
    if k > n:
        raise ValueError(f"k={k} exceeds number of points {n}")
    if k < 1:
        raise ValueError("k must be >= 1")
    dims = {e.dim for e in embeddings}
    if len(dims) != 1:
        raise ValueError(f"mixed embedding dimensions: {sorted(dims)}")

    points = np.stack([e.values for e in embeddings])
    rng = np.random.default_rng(seed)

    # k-means++ seeding: next center drawn with probability proportional to
    # squared distance from the nearest chosen center.
    centroids = np.empty((k, points.shape[1]))
    centroids[0] = points[rng.integers(n)]
    closest_sq = np.sum((points - centroids[0]) ** 2, axis=1)
    for c in range(1, k):
        total = closest_sq.sum()
        if total <= 0.0:
            centroids[c] = points[rng.integers(n)]
        else:
            centroids[c] = points[rng.choice(n, p=closest_sq / total)]
        closest_sq = np.minimum(closest_sq, np.sum((points - centroids[c]) ** 2, axis=1))

    assignment = np.zeros(n, dtype=np.int64)
    for _ in range(max_iters):
        distances = np.sum((points[:, None, :] - centroids[None, :, :]) ** 2, axis=2)
        assignment = np.argmin(distances, axis=1)

        own_dist = distances[np.arange(n), assignment]
        for cluster in range(k):
            if not np.any(assignment == cluster):
                farthest = int(np.argmax(own_dist))
                centroids[cluster] = points[farthest]
                assignment[farthest] = cluster
                own_dist[farthest] = 0.0

        new_centroids = np.stack([points[assignment == c].mean(axis=0) for c in range(k)])
        shift = float(np.max(np.linalg.norm(new_centroids - centroids, axis=1)))
        centroids = new_centroids
        if shift < tol:
            break
    return centroids, [int(c) for c in assignment]


def select_representatives(
    sentences: Sequence[SentenceRecord],
    centroids: np.ndarray,
    assignment: Sequence[int],
) -> list[int]:
    """Per cluster, the sentence with maximal cosine to the centroid.

    Ties break toward the smaller original index; the result is sorted by
    original index.
    """
    if len(assignment) != len(sentences):
        raise ValueError("assignment must cover all sentences")
    selected: list[int] = []
    for cluster in range(centroids.shape[0]):
        centroid = centroids[cluster]
        norm = float(np.linalg.norm(centroid))
        best_index = None
        best_score = -np.inf
        for record, assigned in zip(sentences, assignment):
            if assigned != cluster:
                continue
            score = float(np.dot(record.embedding.values, centroid)) / norm if norm > 0.0 else 0.0
            if score > best_score:
                best_score, best_index = score, record.index
        if best_index is not None:
            selected.append(best_index)
    return sorted(selected)


def extractive_summary(
    text: str,
    backend: EmbeddingBackend,
    config: ExtractiveConfig | None = None,
    doc_id: str = "",
    source: str = "description",
) -> SummaryArtifact:
    """Summarize by selecting one centroid-nearest sentence per cluster.

    The output joins the selected sentences with single spaces in original
    order; the method tag records which embedding backend produced the
    sentence vectors.
    """
    if not text.strip():
        raise ValueError("text must be non-empty")
    config = config or ExtractiveConfig()

    sentences = split_sentences(text)
    embeddings = backend.embed_batch(sentences)
    records = [SentenceRecord(i, s, e) for i, (s, e) in enumerate(zip(sentences, embeddings))]
    usable = [r for r in records if not r.embedding.is_zero]
    if not usable:
        raise ValueError("no embeddable sentences in text")

    k = min(choose_k([r.text for r in usable], config), len(usable))
    centroids, assignment = kmeans(
        [r.embedding for r in usable], k, config.seed, config.max_iters, config.tol
    )
    # select_representatives works in positions within `usable`; map back to
    # original sentence indices afterwards.
    local = [SentenceRecord(i, r.text, r.embedding) for i, r in enumerate(usable)]
    chosen = sorted(usable[p].index for p in select_representatives(local, centroids, assignment))
    return SummaryArtifact(
        doc_id=doc_id,
        method=f"extractive-{backend.family}",
        source=source,
        text=" ".join(records[i].text for i in chosen),
        backend_id=backend.backend_id,
    )
