"""Patent corpus loading, topic/qrels parsing, and canonical word counting.

Corpus files are UTF-8 line-delimited JSON, one document per line. Two record
shapes are accepted: the canonical shape (``doc_id``, ``title``, ``abstract``,
``claims``, ``description``, optional ``cpc_codes`` / ``filing_date``) and a
HUPD-like shape whose identifier and description live under different keys.
Topics are whitespace-separated ``topic_id doc_id`` lines; qrels are TREC
format ``topic_id 0 doc_id grade``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

__all__ = [
    "Claim",
    "PatentDocument",
    "Corpus",
    "IngestIssue",
    "TopicSet",
    "QrelsTable",
    "InputError",
    "word_count",
    "tokenize",
    "cap_tokens",
    "ingest_corpus",
    "serialize_corpus",
    "document_to_record",
    "ingest_topics",
    "ingest_qrels",
    "CORPUS_FORMATS",
]

CORPUS_FORMATS = ("jsonl", "hupd")

# Lines like "1." / "12)" open a new claim when claims arrive as one string.
_CLAIM_BOUNDARY = re.compile(r"^\s*(\d+)\s*[.)]\s*", re.MULTILINE)
_CLAIM_PREFIX = re.compile(r"^\s*(\d+)\s*[.)]\s*")


class InputError(Exception):
    """Fatal problem with an input file (unreadable, empty, wrong shape)."""


def tokenize(text: str) -> list[str]:
    """Split text into maximal whitespace-delimited tokens."""
    return text.split()


def word_count(text: str) -> int:
    """Number of whitespace-delimited tokens in ``text``."""
    return len(text.split())


def cap_tokens(text: str, cap: int) -> str:
    """Prefix of ``text`` containing at most ``cap`` whitespace-delimited tokens.

    Intra-prefix whitespace is preserved; text at or under the cap is returned
    unchanged.
    """
    if cap < 1:
        raise ValueError(f"cap must be >= 1, got {cap}")
    count = 0
    in_token = False
    for i, ch in enumerate(text):
        if ch.isspace():
            in_token = False
        elif not in_token:
            in_token = True
            count += 1
            if count > cap:
                return text[:i].rstrip()
    return text


@dataclass(frozen=True)
class Claim:
    """A single numbered patent claim."""

    number: int
    text: str

    def __post_init__(self) -> None:
        if self.number < 1:
            raise ValueError(f"claim number must be >= 1, got {self.number}")
        if not self.text.strip():
            raise ValueError("claim text must be non-empty")


@dataclass(frozen=True)
class PatentDocument:
    """One patent: identifier, abstract, ordered claims, description, metadata."""

    doc_id: str
    title: str = ""
    abstract: str = ""
    claims: tuple[Claim, ...] = ()
    description: str = ""
    cpc_codes: tuple[str, ...] = ()
    filing_date: str | None = None

    def __post_init__(self) -> None:
        if not self.doc_id:
            raise ValueError("doc_id must be non-empty")
        if not (self.abstract.strip() or self.claims or self.description.strip()):
            raise ValueError(f"document {self.doc_id!r} has no abstract, claims, or description")
        numbers = [c.number for c in self.claims]
        if numbers != sorted(numbers) or len(set(numbers)) != len(numbers):
            raise ValueError(f"document {self.doc_id!r} claim numbers must be strictly increasing")

    @property
    def claims_text(self) -> str:
        """All claim texts concatenated in order, space separated."""
        return " ".join(c.text for c in self.claims)


@dataclass(frozen=True)
class IngestIssue:
    """A non-fatal problem found while parsing one input line."""

    line: int
    message: str

    def __str__(self) -> str:
        return f"line {self.line}: {self.message}"


class Corpus:
    """An immutable, order-preserving collection of unique patent documents."""

    def __init__(self, documents: Iterable[PatentDocument], errors: Iterable[IngestIssue] = ()):
        self._docs: dict[str, PatentDocument] = {}
        self.errors: list[IngestIssue] = list(errors)
        for doc in documents:
            if doc.doc_id in self._docs:
                raise ValueError(f"duplicate doc_id {doc.doc_id!r}")
            self._docs[doc.doc_id] = doc

    def __len__(self) -> int:
        return len(self._docs)

    def __iter__(self) -> Iterator[PatentDocument]:
        return iter(self._docs.values())

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self._docs

    def get(self, doc_id: str) -> PatentDocument | None:
        return self._docs.get(doc_id)

    def doc_ids(self) -> list[str]:
        return list(self._docs)


def _split_claims_string(raw: str) -> list[Claim]:
    """Split a single claims blob at numbered-line boundaries."""
    matches = list(_CLAIM_BOUNDARY.finditer(raw))
    if not matches:
        text = raw.strip()
        return [Claim(1, text)] if text else []
    claims = []
    for i, m in enumerate(matches):
        end = matches[i + 1].start() if i + 1 < len(matches) else len(raw)
        text = raw[m.end():end].strip()
        if text:
            claims.append(Claim(int(m.group(1)), text))
    return claims


def _parse_claims(raw: object) -> list[Claim]:
    if raw is None:
        return []
    if isinstance(raw, str):
        return _split_claims_string(raw)
    if isinstance(raw, list):
        claims = []
        for i, entry in enumerate(raw):
            if not isinstance(entry, str):
                raise ValueError(f"claim entry {i} is not a string")
            m = _CLAIM_PREFIX.match(entry)
            if m:
                number, text = int(m.group(1)), entry[m.end():].strip()
            else:
                number, text = len(claims) + 1, entry.strip()
            if text:
                claims.append(Claim(number, text))
        return claims
    raise ValueError("claims must be a string or a list of strings")


_HUPD_ID_KEYS = ("doc_id", "publication_number", "application_number", "patent_number")
_HUPD_DESC_KEYS = ("description", "full_description")


def _record_to_document(record: dict, fmt: str) -> PatentDocument:
    if fmt == "hupd":
        doc_id = next((str(record[k]) for k in _HUPD_ID_KEYS if record.get(k)), "")
        description = next((record[k] for k in _HUPD_DESC_KEYS if record.get(k)), "")
        cpc = record.get("cpc_codes") or record.get("cpc_labels") or []
        if not cpc and record.get("main_cpc_label"):
            cpc = [record["main_cpc_label"]]
    else:
        doc_id = str(record.get("doc_id") or "")
        description = record.get("description") or ""
        cpc = record.get("cpc_codes") or []
    return PatentDocument(
        doc_id=doc_id,
        title=record.get("title") or "",
        abstract=record.get("abstract") or "",
        claims=tuple(_parse_claims(record.get("claims"))),
        description=description,
        cpc_codes=tuple(str(c) for c in cpc),
        filing_date=record.get("filing_date"),
    )


def ingest_corpus(path: str | Path, fmt: str = "jsonl") -> Corpus:
    """Load all parseable documents from a line-delimited corpus file.

    Malformed records and duplicate doc_ids are collected in ``Corpus.errors``
    with their line numbers; the first occurrence of a duplicate wins. A record
    is never dropped silently.
    """
    if fmt not in CORPUS_FORMATS:
        raise InputError(f"unsupported corpus format {fmt!r}; expected one of {CORPUS_FORMATS}")
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise InputError(f"cannot read corpus {path}: {exc}") from exc

    docs: dict[str, PatentDocument] = {}
    errors: list[IngestIssue] = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            if not isinstance(record, dict):
                raise ValueError("record is not a JSON object")
            doc = _record_to_document(record, fmt)
        except (ValueError, TypeError) as exc:
            errors.append(IngestIssue(lineno, f"malformed record: {exc}"))
            continue
        if doc.doc_id in docs:
            errors.append(IngestIssue(lineno, f"duplicate doc_id {doc.doc_id!r}; first occurrence kept"))
            continue
        docs[doc.doc_id] = doc
    return Corpus(docs.values(), errors)


def document_to_record(doc: PatentDocument) -> dict:
    """Canonical JSON-serializable record for one document."""
    record = {
        "doc_id": doc.doc_id,
        "title": doc.title,
        "abstract": doc.abstract,
        "claims": [f"{c.number}. {c.text}" for c in doc.claims],
        "description": doc.description,
        "cpc_codes": list(doc.cpc_codes),
    }
    if doc.filing_date is not None:
        record["filing_date"] = doc.filing_date
    return record


def serialize_corpus(corpus: Corpus) -> str:
    """Render a corpus back to canonical line-delimited JSON."""
    return "".join(json.dumps(document_to_record(d), ensure_ascii=False) + "\n" for d in corpus)


@dataclass
class TopicSet:
    """Ordered (topic_id, doc_id) pairs naming the query-side patents."""

    topics: list[tuple[str, str]] = field(default_factory=list)
    errors: list[IngestIssue] = field(default_factory=list)

    def topic_ids(self) -> list[str]:
        return [t for t, _ in self.topics]

    def missing_docs(self, corpus: Corpus) -> list[tuple[str, str]]:
        """Topics whose document is absent from ``corpus`` (kept, but reported)."""
        return [(t, d) for t, d in self.topics if d not in corpus]


def ingest_topics(path: str | Path) -> TopicSet:
    """Parse a topics file: ``topic_id doc_id`` per line, ``#`` comments allowed."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise InputError(f"cannot read topics {path}: {exc}") from exc

    topics: list[tuple[str, str]] = []
    seen: set[str] = set()
    errors: list[IngestIssue] = []
    for lineno, line in enumerate(lines, start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        parts = body.split()
        if len(parts) != 2:
            errors.append(IngestIssue(lineno, f"expected 'topic_id doc_id', got {body!r}"))
            continue
        topic_id, doc_id = parts
        if topic_id in seen:
            errors.append(IngestIssue(lineno, f"duplicate topic_id {topic_id!r}; first occurrence kept"))
            continue
        seen.add(topic_id)
        topics.append((topic_id, doc_id))
    return TopicSet(topics, errors)


@dataclass
class QrelsTable:
    """Relevance judgments: (topic_id, doc_id) -> non-negative integer grade."""

    judgments: dict[tuple[str, str], int] = field(default_factory=dict)
    errors: list[IngestIssue] = field(default_factory=list)

    def topic_ids(self) -> list[str]:
        seen: dict[str, None] = {}
        for topic_id, _ in self.judgments:
            seen.setdefault(topic_id)
        return list(seen)

    def relevant_docs(self, topic_id: str) -> set[str]:
        """Documents judged relevant (grade > 0) for a topic."""
        return {d for (t, d), grade in self.judgments.items() if t == topic_id and grade > 0}


def ingest_qrels(path: str | Path) -> QrelsTable:
    """Parse TREC qrels: ``topic_id 0 doc_id grade`` per line."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise InputError(f"cannot read qrels {path}: {exc}") from exc

    judgments: dict[tuple[str, str], int] = {}
    errors: list[IngestIssue] = []
    for lineno, line in enumerate(lines, start=1):
        body = line.strip()
        if not body or body.startswith("#"):
            continue
        parts = body.split()
        if len(parts) != 4:
            errors.append(IngestIssue(lineno, f"expected 'topic_id 0 doc_id grade', got {body!r}"))
            continue
        topic_id, _, doc_id, grade_str = parts
        try:
            grade = int(grade_str)
            if grade < 0:
                raise ValueError
        except ValueError:
            errors.append(IngestIssue(lineno, f"grade must be a non-negative integer, got {grade_str!r}"))
            continue
        key = (topic_id, doc_id)
        if key in judgments:
            errors.append(IngestIssue(lineno, f"duplicate judgment for {key}; first occurrence kept"))
            continue
        judgments[key] = grade
    if not judgments:
        raise InputError(f"no judgments in qrels file {path}")
    return QrelsTable(judgments, errors)
