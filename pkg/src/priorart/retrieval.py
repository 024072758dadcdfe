"""Dense indexing and ranked retrieval for every query-formulation strategy.

The index stores one embedding per document over a chosen representation
(claims by default, capped before embedding). Search is exact brute force:
cosine against every entry, descending score, ties broken by ascending doc_id,
with optional exclusion of the query's own document. Run tables serialize to
TREC format: ``topic_id Q0 doc_id rank score tag``.
"""

from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .artifacts import SummaryStore
from .corpus import Corpus, InputError, PatentDocument, TopicSet, cap_tokens, word_count
from .embedding import EmbeddingBackend, EmbeddingVector
from .segmenter import DescriptionSegments, HeadingDictionary, extract_first_independent_claim, extract_segments

__all__ = [
    "QueryStrategy",
    "VectorIndex",
    "RunRow",
    "RunTable",
    "StrategyRun",
    "SECTION_STRATEGIES",
    "build_index",
    "formulate_query",
    "search",
    "run_strategy",
    "save_index",
    "load_index",
    "parse_run",
    "DEFAULT_CAP",
]

log = logging.getLogger(__name__)

DEFAULT_CAP = 3000
DEFAULT_REPRESENTATION = "claims"

SECTION_STRATEGIES = (
    "abstract",
    "claims",
    "description",
    "brief_description",
    "summary_segment",
    "summary_plus_first_claim",
    "brief_plus_first_claim",
)


@dataclass(frozen=True)
class QueryStrategy:
    """How a topic patent becomes a query string.

    Section strategies use the named section or extracted segment verbatim;
    ``generated`` strategies look up a registered summary by method, source,
    and (optionally) generation profile. Parsed from names like ``claims``,
    ``generated:extractive-hashed:description``, or
    ``generated:abstractive:claims:adjusted``.
    """

    kind: str
    method: str | None = None
    source: str | None = None
    profile: str | None = None

    def __post_init__(self) -> None:
        if self.kind == "generated":
            if not self.method or not self.source:
                raise ValueError("generated strategies need a method and a source")
        elif self.kind not in SECTION_STRATEGIES:
            raise ValueError(f"unknown strategy {self.kind!r}; expected one of {SECTION_STRATEGIES} or generated:...")

    @classmethod
    def parse(cls, name: str) -> "QueryStrategy":
        parts = name.split(":")
        if parts[0] == "generated":
            if len(parts) not in (3, 4):
                raise ValueError(
                    f"generated strategy must be 'generated:<method>:<source>[:<profile>]', got {name!r}"
                )
            profile = parts[3] if len(parts) == 4 else None
            return cls("generated", method=parts[1], source=parts[2], profile=profile)
        return cls(name)

    @property
    def name(self) -> str:
        if self.kind == "generated":
            base = f"generated:{self.method}:{self.source}"
            return f"{base}:{self.profile}" if self.profile else base
        return self.kind


class StrategySkipped(Exception):
    """The topic lacks a segment or summary this strategy needs."""


@dataclass
class VectorIndex:
    """Embeddings for every indexed document, plus build provenance."""

    entries: list[tuple[str, EmbeddingVector]]
    representation: str = DEFAULT_REPRESENTATION
    cap: int = DEFAULT_CAP
    backend_id: str = ""
    skipped: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        ids = [doc_id for doc_id, _ in self.entries]
        if len(set(ids)) != len(ids):
            raise ValueError("index doc_ids must be unique")
        if len({v.dim for _, v in self.entries}) > 1:
            raise ValueError("index vectors must share one dimension")

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def dim(self) -> int:
        return self.entries[0][1].dim if self.entries else 0


def _representation_text(doc: PatentDocument, representation: str) -> str:
    if representation == "claims":
        return doc.claims_text
    if representation == "abstract":
        return doc.abstract
    if representation == "description":
        return doc.description
    raise ValueError(f"unknown representation {representation!r}")


def build_index(
    corpus: Corpus,
    backend: EmbeddingBackend,
    representation: str = DEFAULT_REPRESENTATION,
    cap: int = DEFAULT_CAP,
) -> VectorIndex:
    """Embed every document's representation text, capped, into an index.

    Documents with an empty representation are skipped with a warning naming
    the doc_id; they are recorded on the returned index.
    """
    if len(corpus) == 0:
        raise InputError("cannot index an empty corpus")
    doc_ids: list[str] = []
    texts: list[str] = []
    skipped: list[str] = []
    for doc in corpus:
        text = _representation_text(doc, representation).strip()
        if not text:
            skipped.append(doc.doc_id)
            log.warning("skipping %s: empty %s representation", doc.doc_id, representation)
            continue
        doc_ids.append(doc.doc_id)
        texts.append(cap_tokens(text, cap))
    vectors = backend.embed_batch(texts, cap_tokens=cap)
    return VectorIndex(
        entries=list(zip(doc_ids, vectors)),
        representation=representation,
        cap=cap,
        backend_id=backend.backend_id,
        skipped=skipped,
    )


def formulate_query(
    doc: PatentDocument,
    segments: DescriptionSegments | None,
    strategy: QueryStrategy,
    summaries: SummaryStore | None = None,
) -> str:
    """Build the query string for one topic under one strategy.

    Combination strategies concatenate in row-name order with a single space
    (summary then first claim; brief description then first claim). Raises
    :class:`StrategySkipped` when a needed segment or registered summary is
    missing, so the caller can exclude the topic from that run.
    """
    if strategy.kind == "generated":
        if summaries is None:
            raise ValueError("generated strategies need a summary registry")
        artifact = summaries.lookup(strategy.method, strategy.source, doc.doc_id, strategy.profile)
        if artifact is None:
            raise StrategySkipped(
                f"no registered {strategy.method} summary of {strategy.source} for {doc.doc_id}"
            )
        return artifact.text

    first_claim = segments.first_claim if segments else extract_first_independent_claim(doc.claims)

    def need(value: str | None, what: str) -> str:
        if not value or not value.strip():
            raise StrategySkipped(f"{what} not identifiable for {doc.doc_id}")
        return value

    kind = strategy.kind
    if kind == "abstract":
        return need(doc.abstract, "abstract")
    if kind == "claims":
        return need(doc.claims_text, "claims")
    if kind == "description":
        return need(doc.description, "description")
    if kind == "brief_description":
        return need(segments.brief_description if segments else None, "brief description")
    if kind == "summary_segment":
        return need(segments.summary_segment if segments else None, "summary segment")
    if kind == "summary_plus_first_claim":
        summary = need(segments.summary_segment if segments else None, "summary segment")
        if first_claim is None:
            raise StrategySkipped(f"first independent claim not identifiable for {doc.doc_id}")
        return f"{summary} {first_claim.text}"
    if kind == "brief_plus_first_claim":
        brief = need(segments.brief_description if segments else None, "brief description")
        if first_claim is None:
            raise StrategySkipped(f"first independent claim not identifiable for {doc.doc_id}")
        return f"{brief} {first_claim.text}"
    raise ValueError(f"unhandled strategy {kind!r}")


def search(
    index: VectorIndex,
    query_text: str,
    k: int,
    backend: EmbeddingBackend,
    exclude: str | None = None,
) -> list[tuple[str, float]]:
    """Exact brute-force top-k: cosine against every entry.

    The query is capped with the index's cap before embedding. Results are
    ordered by descending score, ties by ascending doc_id; ``exclude`` removes
    one document before ranking. Fewer than ``k`` results come back when the
    index is small.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not query_text.strip():
        raise ValueError("query must be non-empty")

    query = backend.embed_batch([cap_tokens(query_text, index.cap)], cap_tokens=index.cap)[0]
    # Remote backends report their model name on the first call, so identity
    # is only trustworthy after embedding.
    if backend.backend_id != index.backend_id:
        warnings.warn(
            f"query backend {backend.backend_id!r} differs from index backend "
            f"{index.backend_id!r}; scores are not comparable",
            stacklevel=2,
        )
    candidates = [(doc_id, vec) for doc_id, vec in index.entries if doc_id != exclude]
    if not candidates:
        return []
    matrix = np.stack([vec.values for _, vec in candidates])
    # Correctly rounded dot products: elementwise products are exact IEEE
    # roundings and fsum rounds the sum once, so equal cosines compare equal
    # and any independent recomputation ranks identically.
    products = matrix * query.values
    if query.is_zero:
        scores = [0.0] * len(candidates)
    else:
        scores = [0.0 if vec.is_zero else math.fsum(row) for (_, vec), row in zip(candidates, products)]
    ranked = sorted(
        ((doc_id, score) for (doc_id, _), score in zip(candidates, scores)),
        key=lambda pair: (-pair[1], pair[0]),
    )
    return ranked[:k]


@dataclass(frozen=True)
class RunRow:
    topic_id: str
    doc_id: str
    rank: int
    score: float
    tag: str


@dataclass
class RunTable:
    """Ranked results for all topics of one strategy run."""

    rows: list[RunRow] = field(default_factory=list)

    def topics(self) -> list[str]:
        seen: dict[str, None] = {}
        for row in self.rows:
            seen.setdefault(row.topic_id)
        return list(seen)

    def ranking(self, topic_id: str) -> list[str]:
        return [r.doc_id for r in self.rows if r.topic_id == topic_id]

    def validate(self) -> None:
        """Check rank contiguity, score monotonicity, and doc uniqueness per topic."""
        by_topic: dict[str, list[RunRow]] = {}
        for row in self.rows:
            by_topic.setdefault(row.topic_id, []).append(row)
        for topic_id, rows in by_topic.items():
            if [r.rank for r in rows] != list(range(1, len(rows) + 1)):
                raise ValueError(f"topic {topic_id}: ranks not contiguous from 1")
            if any(a.score < b.score for a, b in zip(rows, rows[1:])):
                raise ValueError(f"topic {topic_id}: scores increase with rank")
            if len({r.doc_id for r in rows}) != len(rows):
                raise ValueError(f"topic {topic_id}: duplicate doc_id")

    def to_trec(self) -> str:
        return "".join(
            f"{r.topic_id} Q0 {r.doc_id} {r.rank} {r.score:.6f} {r.tag}\n" for r in self.rows
        )

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_trec(), encoding="utf-8")


def parse_run(path: str | Path) -> RunTable:
    """Read a TREC run file back into a RunTable."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise InputError(f"cannot read run file {path}: {exc}") from exc
    rows = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 6:
            raise InputError(f"{path} line {lineno}: expected 6 fields, got {len(parts)}")
        topic_id, _, doc_id, rank, score, tag = parts
        rows.append(RunRow(topic_id, doc_id, int(rank), float(score), tag))
    return RunTable(rows)


@dataclass
class StrategyRun:
    """A run table plus the sidecar facts evaluation needs."""

    strategy: QueryStrategy
    table: RunTable
    skipped: list[tuple[str, str]] = field(default_factory=list)  # (topic_id, reason)
    query_words: dict[str, int] = field(default_factory=dict)

    @property
    def avg_query_words(self) -> float:
        if not self.query_words:
            return 0.0
        return sum(self.query_words.values()) / len(self.query_words)


def run_strategy(
    topics: TopicSet,
    corpus: Corpus,
    index: VectorIndex,
    strategy: QueryStrategy,
    backend: EmbeddingBackend,
    k: int = 100,
    segments: dict[str, DescriptionSegments] | None = None,
    summaries: SummaryStore | None = None,
    headings: HeadingDictionary | None = None,
    exclude_self: bool = True,
) -> StrategyRun:
    """Execute one strategy over all topics: formulate, search, collect rows.

    Topics whose document is missing from the corpus, or whose query cannot be
    formulated, are recorded as skipped rather than failing the run. The tag
    on every row is the strategy name, suffixed ``-xbackend`` when the query
    backend does not match the index backend.
    """
    # Warm-up resolves lazily identified backends (remote ids are
    # server-reported) before the identity comparison below.
    backend.embed_batch([])
    tag = strategy.name
    if backend.backend_id != index.backend_id:
        tag += "-xbackend"

    result = StrategyRun(strategy=strategy, table=RunTable())
    for topic_id, doc_id in topics.topics:
        doc = corpus.get(doc_id)
        if doc is None:
            result.skipped.append((topic_id, f"document {doc_id} not in corpus"))
            continue
        if segments is not None:
            doc_segments = segments.get(doc_id)
        elif doc.description:
            doc_segments = extract_segments(doc.description, headings)
        else:
            doc_segments = None
        if doc_segments is not None and doc_segments.first_claim is None:
            doc_segments.first_claim = extract_first_independent_claim(doc.claims)
        try:
            query = formulate_query(doc, doc_segments, strategy, summaries)
        except StrategySkipped as skip:
            result.skipped.append((topic_id, str(skip)))
            continue
        result.query_words[topic_id] = word_count(query)
        hits = search(index, query, k, backend, exclude=doc_id if exclude_self else None)
        for rank, (hit_id, score) in enumerate(hits, start=1):
            result.table.rows.append(RunRow(topic_id, hit_id, rank, score, tag))
    return result


def save_index(index: VectorIndex, path: str | Path) -> None:
    """Write an index as line-delimited JSON with a leading metadata record."""
    with open(path, "w", encoding="utf-8") as fh:
        meta = {
            "kind": "vector_index",
            "representation": index.representation,
            "cap": index.cap,
            "backend_id": index.backend_id,
            "dim": index.dim,
            "skipped": index.skipped,
        }
        fh.write(json.dumps(meta) + "\n")
        for doc_id, vec in index.entries:
            fh.write(json.dumps({"doc_id": doc_id, "values": [float(v) for v in vec.values]}) + "\n")


def load_index(path: str | Path) -> VectorIndex:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise InputError(f"cannot read index {path}: {exc}") from exc
    if not lines:
        raise InputError(f"index file {path} is empty")
    meta = json.loads(lines[0])
    if meta.get("kind") != "vector_index":
        raise InputError(f"{path} is not a vector index file")
    entries = []
    for line in lines[1:]:
        if not line.strip():
            continue
        record = json.loads(line)
        values = np.asarray(record["values"], dtype=np.float64)
        entries.append((record["doc_id"], EmbeddingVector(values, meta["dim"], meta["backend_id"])))
    return VectorIndex(
        entries=entries,
        representation=meta["representation"],
        cap=meta["cap"],
        backend_id=meta["backend_id"],
        skipped=list(meta.get("skipped", [])),
    )
