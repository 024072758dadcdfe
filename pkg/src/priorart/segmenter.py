"""Description segmentation by conventional headings, plus claim heuristics.

A heading is a short line that, after normalization (uppercase, leading
numbering and surrounding punctuation stripped, whitespace collapsed), exactly
matches a dictionary entry. Each heading opens a span running to the next
heading or to the end of the description. The summary segment is the content
under the first run of summary headings; the brief description is the
description prefix ending exactly where the summary segment ends; the first
independent claim is the first claim in list order that references no other
claim.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .corpus import Claim, Corpus, InputError, PatentDocument, word_count

__all__ = [
    "HeadingDictionary",
    "SegmentSpan",
    "DescriptionSegments",
    "FinetunePair",
    "FinetuneFunnel",
    "detect_headings",
    "extract_segments",
    "extract_first_independent_claim",
    "build_finetune_pairs",
    "normalize_heading",
    "save_segment_store",
    "load_segment_store",
    "DEFAULT_HEADINGS",
]

SUMMARY = "summary"
BACKGROUND = "background"
DRAWINGS = "drawings"
DETAILED_DESCRIPTION = "detailed_description"
OTHER = "other"

MAX_HEADING_CHARS = 120

DEFAULT_HEADINGS = {
    SUMMARY: (
        "SUMMARY",
        "BRIEF SUMMARY",
        "SUMMARY OF THE INVENTION",
        "SUMMARY OF THE DISCLOSURE",
        "SUMMARY OF EMBODIMENTS",
        "BRIEF SUMMARY OF THE INVENTION",
    ),
    BACKGROUND: (
        "BACKGROUND",
        "BACKGROUND OF THE INVENTION",
        "BACKGROUND ART",
        "TECHNICAL FIELD",
        "FIELD OF THE INVENTION",
    ),
    OTHER: (
        "BRIEF DESCRIPTION OF THE DRAWINGS",
        "DETAILED DESCRIPTION",
        "DETAILED DESCRIPTION OF THE INVENTION",
        "DESCRIPTION OF EMBODIMENTS",
    ),
}

# "1.", "(2)", "IV.", "A." style prefixes, only when followed by more text.
_LEADING_NUMBERING = re.compile(r"^(?:\(?\d+\)?|[IVXLCDM]+|[A-Za-z])[.):\-]\s+(?=\S)")
_EDGE_PUNCT = re.compile(r"^[^\w\s]+|[^\w\s]+$")

# Phrasings that mark a claim as dependent on another claim.
_DEPENDENCY_PATTERNS = tuple(
    re.compile(p, re.IGNORECASE)
    for p in (
        r"\bclaim \d+",
        r"\bclaims \d+",
        r"\bany (one )?of (the )?(preceding|previous) claims",
        r"\baccording to claim",
        r"\bas claimed in",
    )
)


def normalize_heading(line: str) -> str:
    """Canonical form of a candidate heading line."""
    text = line.strip()
    text = _LEADING_NUMBERING.sub("", text)
    text = _EDGE_PUNCT.sub("", text.strip())
    return " ".join(text.split()).upper()


@dataclass(frozen=True)
class HeadingDictionary:
    """Normalized heading entries, grouped by the segment kind they open."""

    summary_headings: frozenset[str]
    background_headings: frozenset[str]
    other_headings: frozenset[str]

    def __post_init__(self) -> None:
        groups = (self.summary_headings, self.background_headings, self.other_headings)
        total = sum(len(g) for g in groups)
        if len(frozenset().union(*groups)) != total:
            raise ValueError("heading sets must be pairwise disjoint")

    @classmethod
    def default(cls) -> "HeadingDictionary":
        return cls(
            frozenset(DEFAULT_HEADINGS[SUMMARY]),
            frozenset(DEFAULT_HEADINGS[BACKGROUND]),
            frozenset(DEFAULT_HEADINGS[OTHER]),
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "HeadingDictionary":
        """Load entries from a config file: ``summary: HEADING`` etc., one per line."""
        path = Path(path)
        try:
            lines = path.read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise InputError(f"cannot read heading dictionary {path}: {exc}") from exc
        groups: dict[str, set[str]] = {SUMMARY: set(), BACKGROUND: set(), OTHER: set()}
        for lineno, line in enumerate(lines, start=1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            tag, _, entry = body.partition(":")
            tag = tag.strip().lower()
            if tag not in groups or not entry.strip():
                raise InputError(f"{path} line {lineno}: expected 'summary|background|other: HEADING'")
            groups[tag].add(normalize_heading(entry))
        return cls(frozenset(groups[SUMMARY]), frozenset(groups[BACKGROUND]), frozenset(groups[OTHER]))

    def label_for(self, normalized: str) -> str | None:
        if normalized in self.summary_headings:
            return SUMMARY
        if normalized in self.background_headings:
            return BACKGROUND
        if normalized in self.other_headings:
            return DRAWINGS if "DRAWING" in normalized else DETAILED_DESCRIPTION
        return None


@dataclass(frozen=True)
class SegmentSpan:
    """One labeled region of the description.

    ``start``/``end`` are character offsets covering the heading line itself;
    ``body_start`` points just past the heading line, so the span's content
    without its heading is ``description[body_start:end]``.
    """

    label: str
    start: int
    end: int
    heading_text: str = ""
    body_start: int | None = None

    def __post_init__(self) -> None:
        if not (0 <= self.start < self.end):
            raise ValueError(f"invalid span offsets [{self.start}, {self.end})")

    def body(self, description: str) -> str:
        begin = self.start if self.body_start is None else self.body_start
        return description[begin:self.end]


@dataclass
class DescriptionSegments:
    """Detected spans plus the extracted high-value parts of one description."""

    spans: list[SegmentSpan] = field(default_factory=list)
    summary_segment: str | None = None
    background: str | None = None
    brief_description: str | None = None
    first_claim: Claim | None = None


def detect_headings(description: str, headings: HeadingDictionary | None = None) -> list[SegmentSpan]:
    """Locate dictionary headings and tile the description into labeled spans.

    Spans are sorted, non-overlapping, and cover [0, len) exactly; text before
    the first heading (or all text when nothing matches) is labeled ``other``.
    """
    if not description:
        raise ValueError("description must be non-empty")
    headings = headings or HeadingDictionary.default()

    marks: list[tuple[int, int, str, str]] = []  # (line_start, line_end, label, raw line)
    offset = 0
    for line in description.split("\n"):
        if len(line) <= MAX_HEADING_CHARS and line.strip():
            label = headings.label_for(normalize_heading(line))
            if label is not None:
                marks.append((offset, offset + len(line), label, line))
        offset += len(line) + 1

    spans: list[SegmentSpan] = []
    total = len(description)
    if not marks:
        return [SegmentSpan(OTHER, 0, total)]
    first_start = marks[0][0]
    if first_start > 0:
        spans.append(SegmentSpan(OTHER, 0, first_start, body_start=0))
    for i, (start, line_end, label, raw) in enumerate(marks):
        end = marks[i + 1][0] if i + 1 < len(marks) else total
        spans.append(SegmentSpan(label, start, end, heading_text=raw, body_start=min(line_end + 1, end)))
    return spans


def _trimmed_body_end(description: str, start: int, end: int) -> int:
    """Offset just past the last non-whitespace character in [start, end)."""
    return start + len(description[start:end].rstrip())


def extract_segments(description: str, headings: HeadingDictionary | None = None) -> DescriptionSegments:
    """Extract the summary segment, background, and brief description.

    The summary segment is the content of the first contiguous run of
    summary-labeled spans (heading lines excluded, bodies joined by a blank
    line); a later, non-contiguous summary run is ignored. The brief
    description runs from character 0 to the exact end of the summary segment.
    All fields are absent (None) when no summary heading is found; the
    background is the first background-labeled span's content regardless.
    """
    if not description:
        return DescriptionSegments()
    headings = headings or HeadingDictionary.default()
    spans = detect_headings(description, headings)
    segments = DescriptionSegments(spans=spans)

    for span in spans:
        if span.label == BACKGROUND:
            segments.background = span.body(description).strip()
            break

    first_summary = next((i for i, s in enumerate(spans) if s.label == SUMMARY), None)
    if first_summary is None:
        return segments
    run = [spans[first_summary]]
    for span in spans[first_summary + 1:]:
        if span.label != SUMMARY:
            break
        run.append(span)

    bodies = [s.body(description).strip() for s in run]
    summary = "\n\n".join(b for b in bodies if b)
    if not summary:
        return segments
    segments.summary_segment = summary
    segments.brief_description = description[: _trimmed_body_end(description, run[-1].start, run[-1].end)]
    return segments


def is_dependent_claim(text: str) -> bool:
    """Whether the claim text references another claim."""
    return any(p.search(text) for p in _DEPENDENCY_PATTERNS)


def extract_first_independent_claim(claims: Iterable[Claim]) -> Claim | None:
    """First claim in list order whose text matches no dependency pattern."""
    for claim in claims:
        if not is_dependent_claim(claim.text):
            return claim
    return None


@dataclass(frozen=True)
class FinetunePair:
    """One training example: brief description + first claim -> summary segment."""

    doc_id: str
    input: str
    target: str


@dataclass
class FinetuneFunnel:
    """Counts surviving each selection stage, in order."""

    total: int = 0
    has_summary_in_range: int = 0
    source_in_range: int = 0

    def stages(self) -> list[int]:
        return [self.total, self.has_summary_in_range, self.source_in_range]


def build_finetune_pairs(
    corpus: Corpus,
    headings: HeadingDictionary | None = None,
    summary_words: tuple[int, int] = (150, 250),
    source_words: tuple[int, int] = (700, 800),
) -> tuple[list[FinetunePair], FinetuneFunnel]:
    """Select (brief description + first claim, summary segment) training pairs.

    A document survives when its summary segment's word count falls in
    ``summary_words`` and the combined brief description + first claim falls in
    ``source_words``; both ranges are inclusive. Pairs come out in corpus
    order, together with the per-stage survival counts.
    """
    for low, high in (summary_words, source_words):
        if low > high:
            raise ValueError(f"range low {low} exceeds high {high}")
    headings = headings or HeadingDictionary.default()

    pairs: list[FinetunePair] = []
    funnel = FinetuneFunnel()
    for doc in corpus:
        funnel.total += 1
        segments = extract_segments(doc.description, headings)
        if segments.summary_segment is None:
            continue
        if not summary_words[0] <= word_count(segments.summary_segment) <= summary_words[1]:
            continue
        funnel.has_summary_in_range += 1
        first_claim = extract_first_independent_claim(doc.claims)
        if first_claim is None:
            continue
        source = f"{segments.brief_description} {first_claim.text}"
        if not source_words[0] <= word_count(source) <= source_words[1]:
            continue
        funnel.source_in_range += 1
        pairs.append(FinetunePair(doc.doc_id, source, segments.summary_segment))
    return pairs, funnel


def segments_to_record(doc_id: str, segments: DescriptionSegments) -> dict:
    return {
        "doc_id": doc_id,
        "spans": [
            {
                "label": s.label,
                "start": s.start,
                "end": s.end,
                "heading_text": s.heading_text,
                "body_start": s.body_start,
            }
            for s in segments.spans
        ],
        "summary_segment": segments.summary_segment,
        "background": segments.background,
        "brief_description": segments.brief_description,
        "first_claim": (
            {"number": segments.first_claim.number, "text": segments.first_claim.text}
            if segments.first_claim
            else None
        ),
    }


def segments_from_record(record: dict) -> tuple[str, DescriptionSegments]:
    first = record.get("first_claim")
    return record["doc_id"], DescriptionSegments(
        spans=[
            SegmentSpan(
                label=s["label"],
                start=s["start"],
                end=s["end"],
                heading_text=s.get("heading_text", ""),
                body_start=s.get("body_start"),
            )
            for s in record.get("spans", [])
        ],
        summary_segment=record.get("summary_segment"),
        background=record.get("background"),
        brief_description=record.get("brief_description"),
        first_claim=Claim(first["number"], first["text"]) if first else None,
    )


def save_segment_store(segments: dict[str, DescriptionSegments], path: str | Path) -> None:
    """Write one line-delimited JSON record per document, in mapping order."""
    with open(path, "w", encoding="utf-8") as fh:
        for doc_id, segs in segments.items():
            fh.write(json.dumps(segments_to_record(doc_id, segs), ensure_ascii=False) + "\n")


def load_segment_store(path: str | Path) -> dict[str, DescriptionSegments]:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise InputError(f"cannot read segment store {path}: {exc}") from exc
    store: dict[str, DescriptionSegments] = {}
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            doc_id, segs = segments_from_record(json.loads(line))
        except (ValueError, KeyError) as exc:
            raise InputError(f"{path} line {lineno}: bad segment record: {exc}") from exc
        store[doc_id] = segs
    return store
