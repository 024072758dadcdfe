"""The retrieval toolkit's remote clients against this server, end to end.

Skipped when the toolkit is not installed; the only coupling is the wire
protocol itself.
"""

import numpy as np
import pytest

priorart = pytest.importorskip("priorart")

from priorart.abstractive import RemoteGenerationBackend, get_profile
from priorart.embedding import RemoteEmbeddingBackend


def test_remote_embedding_backend_round_trip(client):
    backend = RemoteEmbeddingBackend("http://testserver", session=client, sleep=lambda s: None)
    vectors = backend.embed_batch(["rotor blade pitch", "rotor blade pitch", "polymerase"], cap_tokens=3000)
    assert backend.backend_id == "hash-embed"
    assert [v.dim for v in vectors] == [1024, 1024, 1024]
    np.testing.assert_array_equal(vectors[0].values, vectors[1].values)
    assert abs(np.linalg.norm(vectors[0].values) - 1.0) < 1e-9


def test_remote_generation_backend_round_trip(client):
    backend = RemoteGenerationBackend("http://testserver", session=client, sleep=lambda s: None)
    text = " ".join(f"Sentence number {i} describes the mechanism in detail." for i in range(80))
    out = backend.summarize(text, get_profile("adjusted"))
    assert backend.backend_id == "lead-summarizer"
    assert 250 <= len(out.split()) <= 300


def test_end_to_end_search_through_server(client):
    from priorart.corpus import Claim, Corpus, PatentDocument
    from priorart.retrieval import build_index, search

    backend = RemoteEmbeddingBackend("http://testserver", session=client, sleep=lambda s: None)
    corpus = Corpus(
        [
            PatentDocument(doc_id=f"US{i}", claims=(Claim(1, f"a distinct gadget {i} with parts {i}"),))
            for i in range(6)
        ]
    )
    index = build_index(corpus, backend, cap=3000)
    hits = search(index, "a distinct gadget 3 with parts 3", 3, backend)
    assert hits[0][0] == "US3"
    assert hits[0][1] == pytest.approx(1.0, abs=1e-6)
