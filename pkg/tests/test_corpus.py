"""Corpus ingestion, word counting, and topics/qrels parsing."""

import json

import pytest
from hypothesis import given, strategies as st

from priorart.corpus import (
    Claim,
    InputError,
    PatentDocument,
    cap_tokens,
    ingest_corpus,
    ingest_qrels,
    ingest_topics,
    serialize_corpus,
    word_count,
)


class TestWordCount:
    def test_empty(self):
        assert word_count("") == 0

    def test_mixed_whitespace(self):
        assert word_count("a  b\tc\n") == 3

    def test_hand_count(self):
        assert word_count("claim 1, wherein") == 3

    @given(st.text(), st.text())
    def test_additive_over_space_join(self, a, b):
        assert word_count(a + " " + b) == word_count(a) + word_count(b)


class TestCapTokens:
    def test_prefix(self):
        assert cap_tokens("a b c", 2) == "a b"

    def test_under_cap_unchanged(self):
        assert cap_tokens("a b c", 5) == "a b c"

    def test_large_text_capped_exactly(self):
        text = " ".join(f"w{i}" for i in range(3500))
        capped = cap_tokens(text, 3000)
        assert word_count(capped) == 3000
        assert text.startswith(capped)

    def test_preserves_internal_whitespace(self):
        assert cap_tokens("a  b\t c d", 3) == "a  b\t c"

    def test_bad_cap(self):
        with pytest.raises(ValueError):
            cap_tokens("a", 0)

    @given(st.text(), st.integers(min_value=1, max_value=50))
    def test_never_exceeds_cap(self, text, cap):
        assert word_count(cap_tokens(text, cap)) <= cap

    @given(st.text(), st.integers(min_value=1, max_value=50))
    def test_output_is_prefix(self, text, cap):
        assert text.startswith(cap_tokens(text, cap))


def write_jsonl(tmp_path, lines, name="corpus.jsonl"):
    path = tmp_path / name
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


class TestIngestCorpus:
    def test_well_formed(self, tmp_path):
        lines = [
            json.dumps({"doc_id": f"US{i}", "abstract": f"Abstract {i}.", "claims": ["1. A thing."]})
            for i in range(3)
        ]
        corpus = ingest_corpus(write_jsonl(tmp_path, lines))
        assert len(corpus) == 3
        assert corpus.errors == []

    def test_truncated_record_collected(self, tmp_path):
        lines = [
            json.dumps({"doc_id": "US1", "abstract": "One."}),
            '{"doc_id": "US2", "abstract": "Tw',
            json.dumps({"doc_id": "US3", "abstract": "Three."}),
        ]
        corpus = ingest_corpus(write_jsonl(tmp_path, lines))
        assert len(corpus) == 2
        assert len(corpus.errors) == 1
        assert corpus.errors[0].line == 2

    def test_duplicate_doc_id(self, tmp_path):
        lines = [
            json.dumps({"doc_id": "US1", "abstract": "First."}),
            json.dumps({"doc_id": "US2", "abstract": "Other."}),
            json.dumps({"doc_id": "US3", "abstract": "Another."}),
            json.dumps({"doc_id": "US1", "abstract": "Second."}),
        ]
        corpus = ingest_corpus(write_jsonl(tmp_path, lines))
        assert len(corpus) == 3
        assert corpus.get("US1").abstract == "First."
        assert len(corpus.errors) == 1
        assert corpus.errors[0].line == 4
        assert "duplicate" in corpus.errors[0].message

    def test_unreadable_path_fatal(self, tmp_path):
        with pytest.raises(InputError):
            ingest_corpus(tmp_path / "missing.jsonl")

    def test_unknown_format(self, sample_corpus_path):
        with pytest.raises(InputError):
            ingest_corpus(sample_corpus_path, "xml")

    def test_claims_single_string_split(self, tmp_path):
        record = {
            "doc_id": "US1",
            "claims": "1. A device with a gear.\n2. The device of claim 1, wherein the gear is round.",
        }
        corpus = ingest_corpus(write_jsonl(tmp_path, [json.dumps(record)]))
        claims = corpus.get("US1").claims
        assert [c.number for c in claims] == [1, 2]
        assert claims[0].text == "A device with a gear."

    def test_claims_list_without_numbers(self, tmp_path):
        record = {"doc_id": "US1", "claims": ["A device.", "The device of claim 1, improved."]}
        corpus = ingest_corpus(write_jsonl(tmp_path, [json.dumps(record)]))
        assert [c.number for c in corpus.get("US1").claims] == [1, 2]

    def test_hupd_shape(self, tmp_path):
        record = {
            "publication_number": "US-123-A1",
            "abstract": "An abstract.",
            "claims": ["1. A claim."],
            "full_description": "BACKGROUND\nText.",
            "main_cpc_label": "G06F",
        }
        corpus = ingest_corpus(write_jsonl(tmp_path, [json.dumps(record)]), "hupd")
        doc = corpus.get("US-123-A1")
        assert doc.description == "BACKGROUND\nText."
        assert doc.cpc_codes == ("G06F",)

    def test_round_trip(self, sample_corpus, tmp_path):
        out = tmp_path / "round.jsonl"
        out.write_text(serialize_corpus(sample_corpus), encoding="utf-8")
        again = ingest_corpus(out)
        assert [d for d in again] == [d for d in sample_corpus]


@st.composite
def documents(draw):
    word = st.text(alphabet="abcdefghij", min_size=1, max_size=8)
    doc_id = draw(st.text(alphabet="ABC0123456789", min_size=1, max_size=10))
    n_claims = draw(st.integers(min_value=1, max_value=4))
    claims = tuple(
        Claim(i + 1, " ".join(draw(st.lists(word, min_size=1, max_size=6))))
        for i in range(n_claims)
    )
    return PatentDocument(
        doc_id=doc_id,
        title=draw(st.text(max_size=20)),
        abstract=" ".join(draw(st.lists(word, min_size=1, max_size=8))),
        claims=claims,
        description=draw(st.text(max_size=80)),
        cpc_codes=tuple(draw(st.lists(st.sampled_from(["A1", "B2", "C3"]), max_size=2))),
    )


class TestRoundTripProperty:
    @given(docs=st.lists(documents(), min_size=1, max_size=5, unique_by=lambda d: d.doc_id))
    def test_ingest_serialize_ingest_identity(self, docs):
        import tempfile
        from pathlib import Path

        from priorart.corpus import Corpus

        first = Corpus(docs)
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "c.jsonl"
            path.write_text(serialize_corpus(first), encoding="utf-8")
            second = ingest_corpus(path)
            path2 = Path(tmp) / "c2.jsonl"
            path2.write_text(serialize_corpus(second), encoding="utf-8")
            third = ingest_corpus(path2)
        assert list(second) == list(third)


class TestTopics:
    def test_basic(self, tmp_path):
        path = tmp_path / "topics.txt"
        path.write_text("# comment\nT1 US1\nT2 US9\n", encoding="utf-8")
        topics = ingest_topics(path)
        assert topics.topics == [("T1", "US1"), ("T2", "US9")]

    def test_missing_doc_reported_topic_retained(self, tmp_path, sample_corpus):
        path = tmp_path / "topics.txt"
        path.write_text("T1 US1\nT2 NOPE\n", encoding="utf-8")
        topics = ingest_topics(path)
        assert topics.missing_docs(sample_corpus) == [("T2", "NOPE")]
        assert len(topics.topics) == 2

    def test_malformed_line_collected(self, tmp_path):
        path = tmp_path / "topics.txt"
        path.write_text("T1 US1 extra\nT2 US2\n", encoding="utf-8")
        topics = ingest_topics(path)
        assert len(topics.topics) == 1
        assert topics.errors[0].line == 1


class TestQrels:
    def test_trec_field_order(self, tmp_path):
        path = tmp_path / "qrels.txt"
        path.write_text("T1 0 US2 1\n", encoding="utf-8")
        qrels = ingest_qrels(path)
        assert qrels.judgments[("T1", "US2")] == 1

    def test_empty_file_error(self, tmp_path):
        path = tmp_path / "qrels.txt"
        path.write_text("", encoding="utf-8")
        with pytest.raises(InputError, match="no judgments"):
            ingest_qrels(path)

    def test_malformed_line(self, tmp_path):
        path = tmp_path / "qrels.txt"
        path.write_text("T1 0 US2 1\nbroken line\nT1 0 US3 x\n", encoding="utf-8")
        qrels = ingest_qrels(path)
        assert len(qrels.judgments) == 1
        assert [e.line for e in qrels.errors] == [2, 3]

    def test_relevant_docs(self, tmp_path):
        path = tmp_path / "qrels.txt"
        path.write_text("T1 0 US1 1\nT1 0 US2 0\nT1 0 US3 2\n", encoding="utf-8")
        assert ingest_qrels(path).relevant_docs("T1") == {"US1", "US3"}


class TestDocumentInvariants:
    def test_empty_doc_rejected(self):
        with pytest.raises(ValueError):
            PatentDocument(doc_id="X")

    def test_claim_numbers_must_increase(self):
        with pytest.raises(ValueError):
            PatentDocument(doc_id="X", claims=(Claim(2, "a"), Claim(1, "b")))

    def test_empty_doc_id_rejected(self):
        with pytest.raises(ValueError):
            PatentDocument(doc_id="", abstract="a")
