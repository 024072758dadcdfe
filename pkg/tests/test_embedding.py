"""Hashed embeddings, cosine, and the remote embedding client."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from priorart.embedding import (
    BackendError,
    EmbeddingVector,
    HashedEmbeddingBackend,
    RemoteEmbeddingBackend,
    cosine,
    hashed_embed,
)


class TestHashedEmbed:
    def test_deterministic(self):
        a = hashed_embed("rotor blade pitch control")
        b = hashed_embed("rotor blade pitch control")
        np.testing.assert_array_equal(a.values, b.values)

    def test_self_similarity(self):
        v = hashed_embed("rotor blade pitch control")
        assert cosine(v, v) == pytest.approx(1.0, abs=1e-9)

    def test_disjoint_vocabulary_less_similar(self):
        a = hashed_embed("rotor blade pitch control")
        b = hashed_embed("rotor blade pitch control")
        c = hashed_embed("polymerase chain reaction")
        assert cosine(a, b) > cosine(a, c)
        assert abs(cosine(a, c)) < 0.2

    def test_unit_norm(self):
        v = hashed_embed("some text with several words", dim=64)
        assert np.linalg.norm(v.values) == pytest.approx(1.0, abs=1e-9)

    def test_zero_sentinel(self):
        v = hashed_embed("   \t \n ")
        assert v.is_zero
        assert cosine(v, hashed_embed("anything")) == 0.0

    def test_backend_id_version_stamped(self):
        assert hashed_embed("x", dim=64).backend_id == "hashed-blake2b-v1-d64"

    def test_dim_too_small(self):
        with pytest.raises(ValueError):
            hashed_embed("x", dim=1)

    def test_case_insensitive(self):
        np.testing.assert_array_equal(hashed_embed("Rotor Blade").values, hashed_embed("rotor blade").values)

    @given(words=st.lists(st.sampled_from("alpha beta gamma delta epsilon".split()), min_size=1, max_size=8))
    def test_unigram_only_variant_order_invariant(self, words):
        shuffled = list(reversed(words))
        a = hashed_embed(" ".join(words), dim=128, bigrams=False)
        b = hashed_embed(" ".join(shuffled), dim=128, bigrams=False)
        np.testing.assert_allclose(a.values, b.values, atol=1e-12)

    def test_bigrams_make_order_matter(self):
        a = hashed_embed("alpha beta gamma", dim=128)
        b = hashed_embed("gamma beta alpha", dim=128)
        assert not np.array_equal(a.values, b.values)


class TestCosine:
    def test_identity(self):
        v = hashed_embed("a b c")
        assert cosine(v, v) == pytest.approx(1.0)

    def test_orthogonal_basis(self):
        e1 = EmbeddingVector(np.array([1.0, 0.0]), 2, "t")
        e2 = EmbeddingVector(np.array([0.0, 1.0]), 2, "t")
        assert cosine(e1, e2) == 0.0

    def test_negation(self):
        e1 = EmbeddingVector(np.array([1.0, 0.0]), 2, "t")
        e2 = EmbeddingVector(np.array([-1.0, 0.0]), 2, "t")
        assert cosine(e1, e2) == -1.0

    def test_symmetry_exact(self):
        a = hashed_embed("one two three")
        b = hashed_embed("three four five")
        assert cosine(a, b) == cosine(b, a)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            cosine(hashed_embed("a", dim=64), hashed_embed("a", dim=128))

    def test_normalization_idempotent(self):
        v = hashed_embed("several words in here")
        renorm = v.values / np.linalg.norm(v.values)
        np.testing.assert_allclose(v.values, renorm, atol=1e-12)


from _fakes import FakeResponse, FakeSession


def unit_rows(n, dim, scale=1.0):
    rng = np.random.default_rng(7)
    rows = rng.normal(size=(n, dim))
    rows /= np.linalg.norm(rows, axis=1, keepdims=True)
    return (rows * scale).tolist()


class TestRemoteEmbed:
    def test_order_preserving_batch(self):
        vectors = unit_rows(3, 8)
        session = FakeSession([FakeResponse({"model": "gte-test", "dim": 8, "vectors": vectors})])
        backend = RemoteEmbeddingBackend("http://srv", session=session, sleep=lambda s: None)
        out = backend.embed_batch(["a", "b", "c"], cap_tokens=3000)
        assert len(out) == 3
        for got, sent in zip(out, vectors):
            np.testing.assert_allclose(got.values, sent, atol=1e-12)
        assert backend.backend_id == "gte-test"
        url, payload = session.requests[0]
        assert url.endswith("/v1/embed")
        assert payload["op"] == "embed"
        assert payload["cap_tokens"] == 3000

    def test_renormalizes_drifted_vectors(self):
        vectors = unit_rows(1, 8, scale=0.98)
        session = FakeSession([FakeResponse({"model": "m", "dim": 8, "vectors": vectors})])
        backend = RemoteEmbeddingBackend("http://srv", session=session, sleep=lambda s: None)
        out = backend.embed_batch(["a"])
        assert np.linalg.norm(out[0].values) == pytest.approx(1.0, abs=1e-9)

    def test_retries_then_success(self):
        import requests

        vectors = unit_rows(1, 4)
        session = FakeSession(
            [
                requests.ConnectionError("down"),
                requests.ConnectionError("still down"),
                FakeResponse({"model": "m", "dim": 4, "vectors": vectors}),
            ]
        )
        sleeps = []
        backend = RemoteEmbeddingBackend("http://srv", session=session, sleep=sleeps.append)
        out = backend.embed_batch(["a"])
        assert len(out) == 1
        assert sleeps == [0.25, 0.5]

    def test_retries_exhausted(self):
        import requests

        session = FakeSession([requests.ConnectionError("down")] * 3)
        backend = RemoteEmbeddingBackend("http://srv", session=session, sleep=lambda s: None)
        with pytest.raises(BackendError, match="http://srv"):
            backend.embed_batch(["a"])

    def test_dimension_mismatch_rejected(self):
        body = {"model": "m", "dim": 8, "vectors": [[1.0, 0.0]]}
        session = FakeSession([FakeResponse(body)])
        backend = RemoteEmbeddingBackend("http://srv", session=session, sleep=lambda s: None)
        with pytest.raises(BackendError, match="dimension"):
            backend.embed_batch(["a"])

    def test_server_dim_1024_respected(self):
        vectors = unit_rows(2, 1024)
        session = FakeSession([FakeResponse({"model": "gte-large", "dim": 1024, "vectors": vectors})])
        backend = RemoteEmbeddingBackend("http://srv", session=session, sleep=lambda s: None)
        out = backend.embed_batch(["a", "b"])
        assert all(v.dim == 1024 for v in out)

    def test_wrong_count_rejected(self):
        session = FakeSession([FakeResponse({"model": "m", "dim": 4, "vectors": unit_rows(1, 4)})])
        backend = RemoteEmbeddingBackend("http://srv", session=session, sleep=lambda s: None)
        with pytest.raises(BackendError, match="expected 2"):
            backend.embed_batch(["a", "b"])


class TestHashedBackend:
    def test_batch_matches_single(self):
        backend = HashedEmbeddingBackend(dim=64)
        batch = backend.embed_batch(["one two", "three"])
        np.testing.assert_array_equal(batch[0].values, hashed_embed("one two", 64).values)
        np.testing.assert_array_equal(batch[1].values, hashed_embed("three", 64).values)
