"""Summary artifacts and their line-delimited store format."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .corpus import InputError, word_count

__all__ = ["SummaryArtifact", "SummaryStore", "save_summaries", "load_summaries"]


@dataclass(frozen=True)
class SummaryArtifact:
    """A generated summary with its method, source section, and provenance."""

    doc_id: str
    method: str
    source: str
    text: str
    profile: str | None = None
    backend_id: str = ""

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError(f"summary for {self.doc_id!r} is empty")

    @property
    def words(self) -> int:
        return word_count(self.text)

    def to_record(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "method": self.method,
            "source": self.source,
            "profile": self.profile,
            "text": self.text,
            "words": self.words,
            "backend_id": self.backend_id,
        }

    @classmethod
    def from_record(cls, record: dict) -> "SummaryArtifact":
        return cls(
            doc_id=record["doc_id"],
            method=record["method"],
            source=record["source"],
            text=record["text"],
            profile=record.get("profile"),
            backend_id=record.get("backend_id", ""),
        )


class SummaryStore:
    """Summaries addressable by (method, source, profile, doc_id); the query registry.

    Lookups without a profile match any profile (first registered wins), so
    variants generated under different profiles can coexist and be targeted
    individually.
    """

    def __init__(self, artifacts: Iterable[SummaryArtifact] = ()):
        self._exact: dict[tuple[str, str, str | None, str], SummaryArtifact] = {}
        self._loose: dict[tuple[str, str, str], SummaryArtifact] = {}
        for artifact in artifacts:
            self.add(artifact)

    def add(self, artifact: SummaryArtifact) -> None:
        self._exact[(artifact.method, artifact.source, artifact.profile, artifact.doc_id)] = artifact
        self._loose.setdefault((artifact.method, artifact.source, artifact.doc_id), artifact)

    def __len__(self) -> int:
        return len(self._exact)

    def __iter__(self):
        return iter(self._exact.values())

    def lookup(
        self, method: str, source: str, doc_id: str, profile: str | None = None
    ) -> SummaryArtifact | None:
        if profile is None:
            return self._loose.get((method, source, doc_id))
        return self._exact.get((method, source, profile, doc_id))

    def has_config(self, method: str, source: str, profile: str | None = None) -> bool:
        if profile is None:
            return any(k[:2] == (method, source) for k in self._loose)
        return any(k[:3] == (method, source, profile) for k in self._exact)


def save_summaries(artifacts: Iterable[SummaryArtifact], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for artifact in artifacts:
            fh.write(json.dumps(artifact.to_record(), ensure_ascii=False) + "\n")


def load_summaries(path: str | Path) -> SummaryStore:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise InputError(f"cannot read summary store {path}: {exc}") from exc
    store = SummaryStore()
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            store.add(SummaryArtifact.from_record(json.loads(line)))
        except (ValueError, KeyError) as exc:
            raise InputError(f"{path} line {lineno}: bad summary record: {exc}") from exc
    return store
