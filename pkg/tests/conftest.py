"""Shared fixtures: tiny corpora, instrumented backends, synthetic dataset."""

from __future__ import annotations

import json

import pytest

from priorart.abstractive import GenerationBackend, GenerationProfile
from priorart.corpus import ingest_corpus, word_count
from priorart.embedding import HashedEmbeddingBackend
from priorart.synthetic import planted_corpus


class RecordingBackend(HashedEmbeddingBackend):
    """Hashed backend that records every dispatched payload and cap."""

    def __init__(self, dim: int = 1024):
        super().__init__(dim=dim)
        self.payloads: list[tuple[str, int | None]] = []

    def embed_batch(self, texts, cap_tokens=None):
        self.payloads.extend((t, cap_tokens) for t in texts)
        return super().embed_batch(texts, cap_tokens)


class RecordingGenerationBackend(GenerationBackend):
    """Generation stub honoring profile word bounds, with payload capture."""

    backend_id = "stub-generator"

    def __init__(self):
        self.payloads: list[tuple[str, GenerationProfile]] = []

    def summarize(self, text: str, profile: GenerationProfile) -> str:
        self.payloads.append((text, profile))
        words = text.split()
        low = profile.min_words or 1
        high = profile.max_words or max(low, min(len(words), 60))
        target = min(high, max(low, len(words)))
        out = (words * (target // max(len(words), 1) + 1))[:target]
        return " ".join(out)


@pytest.fixture
def recording_backend():
    return RecordingBackend()


@pytest.fixture
def generation_backend():
    return RecordingGenerationBackend()


SAMPLE_DOCS = [
    {
        "doc_id": "US1",
        "title": "Rotor control",
        "abstract": "A rotor blade pitch control system.",
        "claims": [
            "1. A device comprising a rotor and a pitch controller.",
            "2. The device of claim 1, wherein the controller is digital.",
        ],
        "description": (
            "BACKGROUND\nRotors are known.\n"
            "SUMMARY OF THE INVENTION\nThe invention controls pitch with feedback.\n"
            "DETAILED DESCRIPTION\nReferring to FIG. 1, the device is shown."
        ),
        "cpc_codes": ["B64C27/00"],
    },
    {
        "doc_id": "US2",
        "title": "Polymerase method",
        "abstract": "A polymerase chain reaction method.",
        "claims": ["1. A method comprising amplifying a nucleic acid sequence."],
        "description": "BACKGROUND\nAmplification is slow.\nDETAILED DESCRIPTION\nSteps follow.",
        "cpc_codes": [],
    },
    {
        "doc_id": "US3",
        "title": "",
        "abstract": "A widget.",
        "claims": "1. A widget comprising a gear.\n2. The widget of claim 1, wherein the gear is round.",
        "description": "The widget has no conventional headings in its description.",
    },
]


@pytest.fixture
def sample_corpus_path(tmp_path):
    path = tmp_path / "corpus.jsonl"
    path.write_text("".join(json.dumps(d) + "\n" for d in SAMPLE_DOCS), encoding="utf-8")
    return path


@pytest.fixture
def sample_corpus(sample_corpus_path):
    return ingest_corpus(sample_corpus_path)


@pytest.fixture(scope="session")
def planted():
    """The bundled 200-document planted-relevance dataset."""
    return planted_corpus()


@pytest.fixture(scope="session")
def planted_files(planted, tmp_path_factory):
    from priorart.synthetic import write_dataset

    out = tmp_path_factory.mktemp("planted")
    return write_dataset(planted, out)


def assert_payloads_capped(payloads, cap):
    """Every payload dispatched to a backend stays within the token cap."""
    for text, _ in payloads:
        assert word_count(text) <= cap
