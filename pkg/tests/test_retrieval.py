"""Index building, query formulation, exact search, and strategy runs."""

import math
import random

import pytest

from priorart.artifacts import SummaryArtifact, SummaryStore
from priorart.corpus import Claim, Corpus, InputError, PatentDocument, word_count
from priorart.embedding import HashedEmbeddingBackend, hashed_embed
from priorart.retrieval import (
    QueryStrategy,
    RunTable,
    StrategySkipped,
    build_index,
    formulate_query,
    load_index,
    parse_run,
    run_strategy,
    save_index,
    search,
)
from priorart.segmenter import extract_first_independent_claim, extract_segments


def exhaustive_oracle(index, query_text, k, backend, exclude=None):
    """Independent naive top-k: pure-Python cosine over every entry."""
    query = backend.embed_batch([query_text])[0]
    scored = []
    for doc_id, vec in index.entries:
        if doc_id == exclude:
            continue
        score = math.fsum(x * y for x, y in zip(query.values, vec.values))
        if query.is_zero or vec.is_zero:
            score = 0.0
        scored.append((doc_id, score))
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    return [doc_id for doc_id, _ in scored[:k]]


def doc(doc_id, claims_text="A device comprising a gear.", **kwargs):
    return PatentDocument(doc_id=doc_id, claims=(Claim(1, claims_text),), **kwargs)


class TestBuildIndex:
    def test_three_documents(self, recording_backend):
        corpus = Corpus([doc(f"US{i}") for i in range(3)])
        index = build_index(corpus, recording_backend)
        assert len(index) == 3
        assert index.backend_id == recording_backend.backend_id

    def test_empty_representation_skipped_with_warning(self, recording_backend, caplog):
        docs = [doc("US1"), PatentDocument(doc_id="US2", abstract="only an abstract")]
        with caplog.at_level("WARNING"):
            index = build_index(Corpus(docs), recording_backend)
        assert len(index) == 1
        assert index.skipped == ["US2"]
        assert "US2" in caplog.text

    def test_cap_applied_before_embedding(self, recording_backend):
        long_claims = " ".join(f"w{i}" for i in range(5000))
        index = build_index(Corpus([doc("US1", long_claims)]), recording_backend, cap=3000)
        payload, cap = recording_backend.payloads[0]
        assert word_count(payload) == 3000
        assert cap == 3000
        assert index.cap == 3000

    def test_empty_corpus_rejected(self, recording_backend):
        with pytest.raises(InputError):
            build_index(Corpus([]), recording_backend)

    def test_alternate_representations(self, recording_backend):
        d = PatentDocument(doc_id="US1", abstract="An abstract.", description="A description.")
        assert len(build_index(Corpus([d]), recording_backend, representation="abstract")) == 1
        assert len(build_index(Corpus([d]), recording_backend, representation="description")) == 1

    def test_save_load_round_trip(self, recording_backend, tmp_path):
        corpus = Corpus([doc(f"US{i}", f"A gadget numbered {i} with parts.") for i in range(4)])
        index = build_index(corpus, recording_backend)
        path = tmp_path / "index.jsonl"
        save_index(index, path)
        loaded = load_index(path)
        assert loaded.backend_id == index.backend_id
        assert loaded.cap == index.cap
        assert [d for d, _ in loaded.entries] == [d for d, _ in index.entries]
        for (_, a), (_, b) in zip(loaded.entries, index.entries):
            assert a.values.tolist() == b.values.tolist()


def topic_doc(doc_id="US1"):
    description = (
        "BACKGROUND\nOld systems failed.\n"
        "SUMMARY OF THE INVENTION\nA quantum flux capacitor stabilizes the rotor.\n"
        "DETAILED DESCRIPTION\nDetails follow."
    )
    return PatentDocument(
        doc_id=doc_id,
        abstract="A flux capacitor for rotors.",
        claims=(
            Claim(1, "A capacitor comprising flux elements."),
            Claim(2, "The capacitor of claim 1, wherein the elements glow."),
        ),
        description=description,
    )


class TestFormulateQuery:
    def setup_method(self):
        self.doc = topic_doc()
        self.segments = extract_segments(self.doc.description)
        self.segments.first_claim = extract_first_independent_claim(self.doc.claims)

    def test_abstract_verbatim(self):
        assert formulate_query(self.doc, self.segments, QueryStrategy("abstract")) == self.doc.abstract

    def test_claims_concatenated(self):
        query = formulate_query(self.doc, self.segments, QueryStrategy("claims"))
        assert query == "A capacitor comprising flux elements. The capacitor of claim 1, wherein the elements glow."

    def test_summary_plus_first_claim_order(self):
        query = formulate_query(self.doc, self.segments, QueryStrategy("summary_plus_first_claim"))
        assert query == f"{self.segments.summary_segment} {self.segments.first_claim.text}"

    def test_brief_plus_first_claim_order(self):
        query = formulate_query(self.doc, self.segments, QueryStrategy("brief_plus_first_claim"))
        assert query == f"{self.segments.brief_description} {self.segments.first_claim.text}"

    def test_missing_segment_skips_topic(self):
        bare = PatentDocument(doc_id="US9", abstract="abs", description="no headings here")
        segments = extract_segments(bare.description)
        with pytest.raises(StrategySkipped, match="US9"):
            formulate_query(bare, segments, QueryStrategy("summary_segment"))

    def test_generated_returns_registry_text(self):
        store = SummaryStore(
            [SummaryArtifact("US1", "extractive-hashed", "description", "the registered summary text")]
        )
        strategy = QueryStrategy.parse("generated:extractive-hashed:description")
        assert formulate_query(self.doc, self.segments, strategy, store) == "the registered summary text"

    def test_generated_missing_registration_skips(self):
        strategy = QueryStrategy.parse("generated:extractive-hashed:description")
        with pytest.raises(StrategySkipped):
            formulate_query(self.doc, self.segments, strategy, SummaryStore())

    def test_unknown_strategy_rejected(self):
        with pytest.raises(ValueError):
            QueryStrategy("fulltext")

    def test_strategy_parse_round_trip(self):
        for name in ("claims", "generated:abstractive:claims", "generated:abstractive:claims:adjusted"):
            assert QueryStrategy.parse(name).name == name

    def test_generated_profile_variants_distinguished(self):
        store = SummaryStore(
            [
                SummaryArtifact("US1", "abstractive", "claims", "short variant", profile="default"),
                SummaryArtifact("US1", "abstractive", "claims", "long variant words", profile="adjusted"),
            ]
        )
        adjusted = QueryStrategy.parse("generated:abstractive:claims:adjusted")
        default = QueryStrategy.parse("generated:abstractive:claims:default")
        assert formulate_query(self.doc, self.segments, adjusted, store) == "long variant words"
        assert formulate_query(self.doc, self.segments, default, store) == "short variant"
        unqualified = QueryStrategy.parse("generated:abstractive:claims")
        assert formulate_query(self.doc, self.segments, unqualified, store) in (
            "short variant", "long variant words",
        )


class TestSearch:
    def test_identical_document_rank_one(self, recording_backend):
        texts = [f"device number {i} with distinct parts {i}" for i in range(10)]
        corpus = Corpus([doc(f"US{i}", t) for i, t in enumerate(texts)])
        index = build_index(corpus, recording_backend)
        hits = search(index, texts[4], 3, recording_backend)
        assert hits[0][0] == "US4"
        assert hits[0][1] == pytest.approx(1.0, abs=1e-6)

    def test_exclusion(self, recording_backend):
        texts = [f"gadget {i} alpha beta" for i in range(5)]
        corpus = Corpus([doc(f"US{i}", t) for i, t in enumerate(texts)])
        index = build_index(corpus, recording_backend)
        hits = search(index, texts[2], 10, recording_backend, exclude="US2")
        assert all(doc_id != "US2" for doc_id, _ in hits)

    def test_planted_rare_bigrams_occupy_top_ranks(self, recording_backend):
        rare = "zyxqv wubblet kroomp"
        docs = [doc(f"US{i}", f"a common device with part {i} and housing {i}") for i in range(8)]
        docs.append(doc("US8", f"a common device using {rare} throughout {rare}"))
        docs.append(doc("US9", f"another apparatus with {rare} inside {rare}"))
        index = build_index(Corpus(docs), recording_backend)
        hits = search(index, f"query about {rare} please", 10, recording_backend)
        assert {hits[0][0], hits[1][0]} == {"US8", "US9"}
        oracle = exhaustive_oracle(index, f"query about {rare} please", 10, recording_backend)
        assert [doc_id for doc_id, _ in hits] == oracle

    def test_tie_broken_by_doc_id(self, recording_backend):
        same = "identical claim text for everyone"
        corpus = Corpus([doc(f"US{i}", same) for i in (3, 1, 2)])
        index = build_index(corpus, recording_backend)
        hits = search(index, same, 3, recording_backend)
        assert [doc_id for doc_id, _ in hits] == ["US1", "US2", "US3"]

    def test_empty_query_rejected(self, recording_backend):
        corpus = Corpus([doc("US1")])
        index = build_index(corpus, recording_backend)
        with pytest.raises(ValueError):
            search(index, "  ", 5, recording_backend)

    def test_cross_backend_warns(self, recording_backend):
        corpus = Corpus([doc("US1")])
        index = build_index(corpus, recording_backend)
        other = HashedEmbeddingBackend(dim=recording_backend.dim, bigrams=False)
        with pytest.warns(UserWarning, match="backend"):
            search(index, "query", 5, other)

    def test_query_capped(self, recording_backend):
        corpus = Corpus([doc("US1")])
        index = build_index(corpus, recording_backend, cap=50)
        long_query = " ".join(f"q{i}" for i in range(500))
        search(index, long_query, 5, recording_backend)
        payload, _ = recording_backend.payloads[-1]
        assert word_count(payload) == 50

    def test_oracle_agreement_random_corpora(self):
        backend = HashedEmbeddingBackend(dim=64)
        rng = random.Random(5)
        vocab = [f"term{i}" for i in range(60)]
        for trial in range(10):
            n = rng.randint(2, 40)
            corpus = Corpus(
                [doc(f"D{i:03d}", " ".join(rng.choices(vocab, k=rng.randint(3, 25)))) for i in range(n)]
            )
            index = build_index(corpus, backend)
            query = " ".join(rng.choices(vocab, k=10))
            hits = search(index, query, 10, backend)
            assert [d for d, _ in hits] == exhaustive_oracle(index, query, 10, backend)


def small_world():
    """Corpus of 10 docs; topics T1/T2 point at docs with summary segments."""
    docs = [topic_doc("US1")]
    second = topic_doc("US2")
    docs.append(second)
    for i in range(3, 11):
        docs.append(doc(f"US{i}", f"an ordinary machine with widget {i} and lever {i}"))
    corpus = Corpus(docs)
    from priorart.corpus import TopicSet

    topics = TopicSet([("T1", "US1"), ("T2", "US2")])
    return corpus, topics


class TestRunStrategy:
    def test_shape_and_exclusion(self, recording_backend):
        corpus, topics = small_world()
        index = build_index(corpus, recording_backend)
        result = run_strategy(topics, corpus, index, QueryStrategy("claims"), recording_backend, k=5)
        result.table.validate()
        assert len(result.table.rows) <= 10
        for row in result.table.rows:
            assert 1 <= row.rank <= 5
            assert row.doc_id != {"T1": "US1", "T2": "US2"}[row.topic_id]
            assert row.tag == "claims"

    def test_byte_identical_reruns(self, recording_backend, tmp_path):
        corpus, topics = small_world()
        index = build_index(corpus, recording_backend)
        outputs = []
        for run in range(2):
            result = run_strategy(topics, corpus, index, QueryStrategy("summary_segment"), recording_backend, k=5)
            outputs.append(result.table.to_trec().encode())
        assert outputs[0] == outputs[1]

    def test_generated_strategy_uses_registry(self, recording_backend):
        corpus, topics = small_world()
        index = build_index(corpus, recording_backend)
        store = SummaryStore(
            [
                SummaryArtifact("US1", "extractive-hashed", "description", "registry text one"),
                SummaryArtifact("US2", "extractive-hashed", "description", "registry text two"),
            ]
        )

        issued = []

        class SpyBackend(HashedEmbeddingBackend):
            def embed_batch(self, texts, cap_tokens=None):
                issued.extend(texts)
                return super().embed_batch(texts, cap_tokens)

        spy = SpyBackend()
        strategy = QueryStrategy.parse("generated:extractive-hashed:description")
        result = run_strategy(topics, corpus, index, strategy, spy, k=5, summaries=store)
        assert result.table.rows
        assert "registry text one" in issued
        assert "registry text two" in issued

    def test_missing_segment_topic_skipped_and_reported(self, recording_backend):
        corpus, topics = small_world()
        from priorart.corpus import TopicSet

        topics = TopicSet(topics.topics + [("T3", "US5")])  # US5 has no summary heading
        index = build_index(corpus, recording_backend)
        result = run_strategy(topics, corpus, index, QueryStrategy("summary_segment"), recording_backend, k=5)
        assert ("T3", ) == tuple(t for t, _ in result.skipped)
        assert set(result.table.topics()) == {"T1", "T2"}

    def test_missing_document_reported(self, recording_backend):
        corpus, topics = small_world()
        from priorart.corpus import TopicSet

        topics = TopicSet(topics.topics + [("T9", "NOPE")])
        index = build_index(corpus, recording_backend)
        result = run_strategy(topics, corpus, index, QueryStrategy("claims"), recording_backend, k=5)
        assert any(t == "T9" for t, _ in result.skipped)

    def test_query_word_counts_recorded(self, recording_backend):
        corpus, topics = small_world()
        index = build_index(corpus, recording_backend)
        result = run_strategy(topics, corpus, index, QueryStrategy("abstract"), recording_backend, k=5)
        assert set(result.query_words) == {"T1", "T2"}
        assert result.avg_query_words > 0

    def test_cross_backend_flagged_in_tag(self, recording_backend):
        corpus, topics = small_world()
        index = build_index(corpus, recording_backend)
        other = HashedEmbeddingBackend(dim=recording_backend.dim, bigrams=False)
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            result = run_strategy(topics, corpus, index, QueryStrategy("claims"), other, k=5)
        assert all(row.tag == "claims-xbackend" for row in result.table.rows)


class TestRunTable:
    def test_trec_format_and_parse(self, tmp_path, recording_backend):
        corpus, topics = small_world()
        index = build_index(corpus, recording_backend)
        result = run_strategy(topics, corpus, index, QueryStrategy("claims"), recording_backend, k=3)
        path = tmp_path / "claims.run"
        result.table.write(path)
        first_line = path.read_text().splitlines()[0].split()
        assert first_line[1] == "Q0"
        assert len(first_line) == 6
        assert "." in first_line[4] and len(first_line[4].split(".")[1]) == 6
        parsed = parse_run(path)
        assert [(r.topic_id, r.doc_id, r.rank) for r in parsed.rows] == [
            (r.topic_id, r.doc_id, r.rank) for r in result.table.rows
        ]

    def test_validate_rejects_bad_tables(self):
        from priorart.retrieval import RunRow

        bad_rank = RunTable([RunRow("T1", "A", 2, 1.0, "t")])
        with pytest.raises(ValueError):
            bad_rank.validate()
        increasing = RunTable([RunRow("T1", "A", 1, 0.1, "t"), RunRow("T1", "B", 2, 0.9, "t")])
        with pytest.raises(ValueError):
            increasing.validate()
        duplicate = RunTable([RunRow("T1", "A", 1, 0.9, "t"), RunRow("T1", "A", 2, 0.8, "t")])
        with pytest.raises(ValueError):
            duplicate.validate()
