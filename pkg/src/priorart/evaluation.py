"""Summary-quality metrics (ROUGE, semantic similarity) and retrieval metrics.

ROUGE tokenization is lowercase with splits on any non-alphanumeric character,
no stemming or stopword removal; the headline ROUGE number is F1, with
precision and recall kept alongside. Retrieval metrics follow the classic
trec-eval definitions: P@k divides by k even when fewer results came back,
AP@K divides by the full relevant count, and relevance is binary (grade > 0).
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import InputError, QrelsTable, word_count
from .embedding import EmbeddingBackend, cosine
from .retrieval import RunTable, StrategyRun

__all__ = [
    "RougeScore",
    "MetricReport",
    "rouge_tokenize",
    "rouge_n",
    "rouge_l",
    "semantic_similarity",
    "precision_at_k",
    "recall_at_k",
    "average_precision",
    "evaluate_run",
    "IntrinsicRow",
    "intrinsic_row",
    "render_extrinsic_table",
    "render_intrinsic_table",
    "DEFAULT_METRICS",
]

_TOKEN = re.compile(r"[a-z0-9]+")

DEFAULT_METRICS = ("MAP@100", "P@5", "P@10", "P@30", "R@5", "R@10", "R@30")


def rouge_tokenize(text: str) -> list[str]:
    """Lowercased tokens split on any non-alphanumeric character."""
    return _TOKEN.findall(text.lower())


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float

    @property
    def f1(self) -> float:
        if self.precision + self.recall == 0.0:
            return 0.0
        return 2.0 * self.precision * self.recall / (self.precision + self.recall)


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def rouge_n(candidate: str, reference: str, n: int = 1) -> RougeScore:
    """N-gram overlap: clipped counts over candidate / reference totals."""
    if n < 1:
        raise ValueError("n must be >= 1")
    cand = _ngram_counts(rouge_tokenize(candidate), n)
    ref = _ngram_counts(rouge_tokenize(reference), n)
    overlap = sum(min(count, ref[gram]) for gram, count in cand.items())
    cand_total = sum(cand.values())
    ref_total = sum(ref.values())
    return RougeScore(
        precision=overlap / cand_total if cand_total else 0.0,
        recall=overlap / ref_total if ref_total else 0.0,
    )


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        current = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                current.append(prev[j - 1] + 1)
            else:
                current.append(max(prev[j], current[j - 1]))
        prev = current
    return prev[-1]


def rouge_l(candidate: str, reference: str) -> RougeScore:
    """Summary-level longest common subsequence over token sequences."""
    cand = rouge_tokenize(candidate)
    ref = rouge_tokenize(reference)
    lcs = _lcs_length(cand, ref)
    return RougeScore(
        precision=lcs / len(cand) if cand else 0.0,
        recall=lcs / len(ref) if ref else 0.0,
    )


def semantic_similarity(candidate: str, reference: str, backend: EmbeddingBackend) -> float:
    """Cosine between the embeddings of candidate and reference."""
    vectors = backend.embed_batch([candidate, reference])
    return cosine(vectors[0], vectors[1])


def precision_at_k(ranked: Sequence[str], relevant: set[str], k: int) -> float:
    """|top-k that are relevant| / k; the denominator stays k when fewer results exist."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not relevant:
        raise ValueError("relevant set must be non-empty")
    hits = sum(1 for doc_id in ranked[:k] if doc_id in relevant)
    return hits / k


def recall_at_k(ranked: Sequence[str], relevant: set[str], k: int) -> float:
    """|top-k that are relevant| / |relevant|."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not relevant:
        raise ValueError("relevant set must be non-empty")
    hits = sum(1 for doc_id in ranked[:k] if doc_id in relevant)
    return hits / len(relevant)


def average_precision(ranked: Sequence[str], relevant: set[str], cutoff: int = 100) -> float:
    """AP@K: mean of P@i over relevant hits at ranks i <= K, over |relevant|."""
    if cutoff < 1:
        raise ValueError("cutoff must be >= 1")
    if not relevant:
        raise ValueError("relevant set must be non-empty")
    hits = 0
    ap_sum = 0.0
    for i, doc_id in enumerate(ranked[:cutoff], start=1):
        if doc_id in relevant:
            hits += 1
            ap_sum += hits / i
    return ap_sum / len(relevant)


def _parse_metric(name: str) -> tuple[str, int]:
    kind, _, depth = name.partition("@")
    kind = kind.upper()
    if kind not in ("MAP", "P", "R") or not depth.isdigit() or int(depth) < 1:
        raise ValueError(f"unknown metric {name!r}; expected MAP@K, P@k, or R@k")
    return kind, int(depth)


@dataclass
class MetricReport:
    """Per-topic metric values and their means for one strategy run."""

    strategy: str
    per_topic: dict[str, dict[str, float]] = field(default_factory=dict)  # metric -> topic -> value
    means: dict[str, float] = field(default_factory=dict)
    evaluated: int = 0
    skipped: list[tuple[str, str]] = field(default_factory=list)
    avg_query_words: float = 0.0

    def to_json(self) -> str:
        return json.dumps(
            {
                "strategy": self.strategy,
                "per_topic": self.per_topic,
                "means": self.means,
                "evaluated": self.evaluated,
                "skipped": list(self.skipped),
                "avg_query_words": self.avg_query_words,
            },
            indent=2,
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "MetricReport":
        data = json.loads(text)
        return cls(
            strategy=data["strategy"],
            per_topic=data["per_topic"],
            means=data["means"],
            evaluated=data["evaluated"],
            skipped=[tuple(pair) for pair in data["skipped"]],
            avg_query_words=data["avg_query_words"],
        )


def evaluate_run(
    run: RunTable,
    qrels: QrelsTable,
    metrics: Sequence[str] = DEFAULT_METRICS,
    skipped: Iterable[tuple[str, str]] = (),
    strategy: str = "",
    avg_query_words: float = 0.0,
) -> MetricReport:
    """Score one run against qrels; binary relevance, means over evaluated topics.

    Every run topic must appear in the qrels or in the ``skipped`` list;
    topics with no positive judgments are excluded from the means with a
    recorded reason.
    """
    parsed = [(name, *_parse_metric(name)) for name in metrics]
    report = MetricReport(strategy=strategy, skipped=list(skipped), avg_query_words=avg_query_words)
    for name, _, _ in parsed:
        report.per_topic[name] = {}

    skipped_topics = {topic for topic, _ in report.skipped}
    judged = set(qrels.topic_ids())
    unknown = [t for t in run.topics() if t not in judged and t not in skipped_topics]
    if unknown:
        raise InputError(f"run topics missing from qrels: {', '.join(unknown)}")

    for topic_id in run.topics():
        if topic_id in skipped_topics:
            continue
        relevant = qrels.relevant_docs(topic_id)
        if not relevant:
            report.skipped.append((topic_id, "no positive judgments"))
            continue
        ranked = run.ranking(topic_id)
        for name, kind, depth in parsed:
            if kind == "MAP":
                value = average_precision(ranked, relevant, depth)
            elif kind == "P":
                value = precision_at_k(ranked, relevant, depth)
            else:
                value = recall_at_k(ranked, relevant, depth)
            report.per_topic[name][topic_id] = value
        report.evaluated += 1

    for name, _, _ in parsed:
        values = report.per_topic[name]
        report.means[name] = math.fsum(values.values()) / len(values) if values else 0.0
    return report


def report_from_strategy_run(
    run: StrategyRun, qrels: QrelsTable, metrics: Sequence[str] = DEFAULT_METRICS
) -> MetricReport:
    """Evaluate a StrategyRun, carrying its skip list and query-length average."""
    return evaluate_run(
        run.table,
        qrels,
        metrics,
        skipped=run.skipped,
        strategy=run.strategy.name,
        avg_query_words=run.avg_query_words,
    )


@dataclass(frozen=True)
class IntrinsicRow:
    """One Table-style row of summary-quality scores against a reference."""

    reference: str
    method: str
    input: str
    avg_words: float
    rouge_1: float
    rouge_l: float
    semantic: float
    backend_id: str


def intrinsic_row(
    candidates: Sequence[tuple[str, str]],
    reference_label: str,
    method: str,
    input_label: str,
    backend: EmbeddingBackend,
) -> IntrinsicRow:
    """Mean ROUGE-1/ROUGE-L F1 and semantic similarity over (candidate, reference) pairs."""
    if not candidates:
        raise ValueError("need at least one (candidate, reference) pair")
    r1 = [rouge_n(c, r, 1).f1 for c, r in candidates]
    rl = [rouge_l(c, r).f1 for c, r in candidates]
    sim = [semantic_similarity(c, r, backend) for c, r in candidates]
    words = [word_count(c) for c, _ in candidates]
    n = len(candidates)
    return IntrinsicRow(
        reference=reference_label,
        method=method,
        input=input_label,
        avg_words=math.fsum(words) / n,
        rouge_1=math.fsum(r1) / n,
        rouge_l=math.fsum(rl) / n,
        semantic=math.fsum(sim) / n,
        backend_id=backend.backend_id,
    )


def _percent(value: float) -> str:
    return f"{value * 100:.2f}%"


def _source_and_method(strategy: str) -> tuple[str, str]:
    if strategy.startswith("generated:"):
        _, method, source = strategy.split(":", 2)
        return source, method
    return strategy, "section"


def _format_table(header: list[str], rows: list[list[str]]) -> str:
    widths = [max(len(str(cell)) for cell in column) for column in zip(header, *rows)]
    lines = [
        "  ".join(str(cell).ljust(w) for cell, w in zip(row, widths)).rstrip()
        for row in [header] + rows
    ]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def render_extrinsic_table(reports: Sequence[MetricReport], map_metric: str = "MAP@100") -> tuple[str, str]:
    """Extrinsic results table, machine-readable (TSV) and human-readable.

    Columns: Source, Method, Avg. #words, the MAP metric, P@{5,10,30},
    R@{5,10,30}; the best MAP per source group is marked with ``*``.
    """
    metric_names = [map_metric, "P@5", "P@10", "P@30", "R@5", "R@10", "R@30"]
    header = ["Source", "Method", "Avg. #words"] + metric_names + ["Best"]

    by_source: dict[str, list[float]] = {}
    for report in reports:
        source, _ = _source_and_method(report.strategy)
        by_source.setdefault(source, []).append(report.means.get(map_metric, 0.0))
    best_by_source = {source: max(values) for source, values in by_source.items()}

    rows = []
    for report in reports:
        source, method = _source_and_method(report.strategy)
        best = report.means.get(map_metric, 0.0) == best_by_source[source]
        rows.append(
            [source, method, f"{report.avg_query_words:.0f}"]
            + [_percent(report.means.get(name, 0.0)) for name in metric_names]
            + ["*" if best else ""]
        )
    tsv = "\n".join("\t".join(row) for row in [header] + rows) + "\n"
    return tsv, _format_table(header, rows)


def render_intrinsic_table(rows: Sequence[IntrinsicRow]) -> tuple[str, str]:
    """Summary-quality table: Reference, Method, Input, Avg. #words, ROUGE, similarity."""
    header = ["Reference", "Method", "Input", "Avg. #words", "Rouge-1", "Rouge-L",
              "Semantic Similarity", "Backend", "Best"]
    best_by_ref: dict[str, float] = {}
    for row in rows:
        best_by_ref[row.reference] = max(best_by_ref.get(row.reference, -math.inf), row.rouge_1)
    table = []
    for row in rows:
        table.append([
            row.reference,
            row.method,
            row.input,
            f"{row.avg_words:.0f}",
            f"{row.rouge_1:.2f}",
            f"{row.rouge_l:.2f}",
            f"{row.semantic:.2f}",
            row.backend_id,
            "*" if row.rouge_1 == best_by_ref[row.reference] else "",
        ])
    tsv = "\n".join("\t".join(r) for r in [header] + table) + "\n"
    return tsv, _format_table(header, table)


def save_report(report: MetricReport, path: str | Path) -> None:
    Path(path).write_text(report.to_json() + "\n", encoding="utf-8")


def load_report(path: str | Path) -> MetricReport:
    path = Path(path)
    try:
        return MetricReport.from_json(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputError(f"cannot read report {path}: {exc}") from exc
