"""Command-line pipeline: ingest, segment, summarize, index, run, eval, report.

Configuration comes from an optional flat key-value file (``section.key =
value``, ``#`` comments) merged with command-line flags; flags win. Exit
codes: 0 success, 1 fatal input error, 2 backend error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import abstractive, evaluation, retrieval, segmenter
from .artifacts import SummaryArtifact, load_summaries, save_summaries
from .corpus import Corpus, InputError, ingest_corpus, ingest_qrels, ingest_topics, serialize_corpus
from .embedding import BackendError, HashedEmbeddingBackend, RemoteEmbeddingBackend
from .extractive import ExtractiveConfig, extractive_summary
from .segmenter import HeadingDictionary, extract_first_independent_claim, extract_segments

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_BACKEND = 2

SOURCES = ("abstract", "claims", "description", "brief_description", "summary_segment")
METHODS = ("extractive", "abstractive")
BACKENDS = ("local-hashed", "remote")


class _Parser(argparse.ArgumentParser):
    """Argument errors are input errors; exit 1 rather than argparse's 2."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)


def load_config(path: str | Path | None) -> dict[str, str]:
    """Flat ``key = value`` config file with ``#`` comments."""
    if path is None:
        return {}
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    config: dict[str, str] = {}
    for lineno, line in enumerate(lines, start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        key, sep, value = body.partition("=")
        if not sep:
            raise InputError(f"{path} line {lineno}: expected 'key = value'")
        config[key.strip()] = value.strip()
    return config


class Settings:
    """Merged view of config-file values and flags; flags win."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.config = load_config(getattr(args, "config", None))

    def get(self, flag: str, key: str, default=None):
        value = getattr(self.args, flag, None)
        if value is not None:
            return value
        if key in self.config:
            return self.config[key]
        return default

    def get_int(self, flag: str, key: str, default: int) -> int:
        return int(self.get(flag, key, default))


def make_backend(settings: Settings):
    kind = settings.get("backend", "backend.kind", "local-hashed")
    if kind == "local-hashed":
        dim = settings.get_int("dim", "backend.dim", 1024)
        return HashedEmbeddingBackend(dim=dim)
    if kind == "remote":
        endpoint = settings.get("endpoint", "backend.endpoint")
        if not endpoint:
            raise InputError("remote backend needs --endpoint")
        return RemoteEmbeddingBackend(endpoint, model=settings.get("model", "backend.model"))
    raise InputError(f"unknown backend {kind!r}; expected one of {BACKENDS}")


def load_corpus(settings: Settings) -> Corpus:
    path = settings.get("corpus", "corpus.path")
    if not path:
        raise InputError("no corpus given (--corpus or corpus.path)")
    fmt = settings.get("format", "corpus.format", "jsonl")
    return ingest_corpus(path, fmt)


def load_headings(settings: Settings) -> HeadingDictionary:
    path = settings.get("dict", "dict.path")
    return HeadingDictionary.from_file(path) if path else HeadingDictionary.default()


def _print_issues(issues, limit: int = 20) -> None:
    for issue in issues[:limit]:
        print(f"  {issue}", file=sys.stderr)
    if len(issues) > limit:
        print(f"  ... and {len(issues) - limit} more", file=sys.stderr)


def cmd_ingest(settings: Settings) -> int:
    corpus = load_corpus(settings)
    print(f"documents: {len(corpus)}")
    print(f"errors: {len(corpus.errors)}")
    _print_issues(corpus.errors)
    out = settings.get("out", "out.corpus")
    if out:
        Path(out).write_text(serialize_corpus(corpus), encoding="utf-8")
        print(f"wrote {out}")
    return EXIT_OK


def cmd_segment(settings: Settings) -> int:
    corpus = load_corpus(settings)
    headings = load_headings(settings)
    out = settings.get("out", "out.segments")
    if not out:
        raise InputError("segment needs --out for the segment store")

    store: dict[str, segmenter.DescriptionSegments] = {}
    covered = 0
    for doc in corpus:
        segments = extract_segments(doc.description, headings)
        segments.first_claim = extract_first_independent_claim(doc.claims)
        store[doc.doc_id] = segments
        if segments.summary_segment is not None:
            covered += 1
    segmenter.save_segment_store(store, out)
    total = len(corpus)
    coverage = covered / total if total else 0.0
    print(f"{covered}/{total} documents with a summary segment (coverage {coverage:.2f})")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_summarize(settings: Settings) -> int:
    corpus = load_corpus(settings)
    method = settings.get("method", "summarize.method")
    source = settings.get("source", "summarize.source")
    if method not in METHODS:
        raise InputError(f"unknown method {method!r}; valid methods: {', '.join(METHODS)}")
    if source not in SOURCES:
        raise InputError(f"unknown source {source!r}; valid sources: {', '.join(SOURCES)}")
    out = settings.get("out", "out.summaries")
    if not out:
        raise InputError("summarize needs --out for the summary store")

    segments_path = settings.get("segments", "segments.path")
    if segments_path:
        segment_store = segmenter.load_segment_store(segments_path)
    else:
        segment_store = {
            doc.doc_id: extract_segments(doc.description, load_headings(settings)) for doc in corpus
        }

    def source_text(doc) -> str | None:
        if source == "abstract":
            return doc.abstract
        if source == "claims":
            return doc.claims_text
        if source == "description":
            return doc.description
        segs = segment_store.get(doc.doc_id)
        if segs is None:
            return None
        return segs.brief_description if source == "brief_description" else segs.summary_segment

    artifacts: list[SummaryArtifact] = []
    skipped: list[str] = []
    if method == "extractive":
        backend = make_backend(settings)
        k_raw = settings.get("k", "summarize.k")
        config = ExtractiveConfig(
            target_words=settings.get_int("target_words", "summarize.target_words", 100),
            k_override=int(k_raw) if k_raw else None,
            seed=settings.get_int("seed", "seed", 42),
        )
        for doc in corpus:
            text = source_text(doc)
            if not text or not text.strip():
                skipped.append(doc.doc_id)
                continue
            artifacts.append(extractive_summary(text, backend, config, doc_id=doc.doc_id, source=source))
    else:
        profile = abstractive.get_profile(settings.get("profile", "summarize.profile", "default"))
        endpoint = settings.get("endpoint", "backend.endpoint")
        backend = abstractive.RemoteGenerationBackend(endpoint) if endpoint else None
        fallback = settings.get("fallback", "summarize.fallback", "on") != "off"
        for doc in corpus:
            text = source_text(doc)
            if not text or not text.strip():
                skipped.append(doc.doc_id)
                continue
            artifacts.append(
                abstractive.generate_summary(
                    text, profile, backend, doc_id=doc.doc_id, source=source, fallback=fallback
                )
            )

    save_summaries(artifacts, out)
    print(f"summaries: {len(artifacts)}, skipped: {len(skipped)}")
    if skipped:
        print("skipped doc_ids: " + ", ".join(skipped[:20]), file=sys.stderr)
    print(f"wrote {out}")
    return EXIT_OK


def cmd_build_finetune_set(settings: Settings) -> int:
    import json

    corpus = load_corpus(settings)
    headings = load_headings(settings)

    def parse_range(raw: str, fallback: tuple[int, int]) -> tuple[int, int]:
        if not raw:
            return fallback
        low, _, high = raw.partition(":")
        return int(low), int(high)

    summary_words = parse_range(settings.get("summary_words", "finetune.summary_words", ""), (150, 250))
    source_words = parse_range(settings.get("source_words", "finetune.source_words", ""), (700, 800))
    pairs, funnel = segmenter.build_finetune_pairs(corpus, headings, summary_words, source_words)

    out = settings.get("out", "out.pairs")
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            for pair in pairs:
                fh.write(json.dumps({"doc_id": pair.doc_id, "input": pair.input, "target": pair.target},
                                    ensure_ascii=False) + "\n")
        print(f"wrote {out}")
    print(f"total: {funnel.total}")
    print(f"has_summary_in_range: {funnel.has_summary_in_range}")
    print(f"source_in_range: {funnel.source_in_range}")
    return EXIT_OK


def cmd_index(settings: Settings) -> int:
    corpus = load_corpus(settings)
    backend = make_backend(settings)
    out = settings.get("out", "out.index")
    if not out:
        raise InputError("index needs --out for the index file")
    index = retrieval.build_index(
        corpus,
        backend,
        representation=settings.get("representation", "index.representation", "claims"),
        cap=settings.get_int("cap", "index.cap", retrieval.DEFAULT_CAP),
    )
    retrieval.save_index(index, out)
    print(f"indexed: {len(index)}, skipped: {len(index.skipped)}")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_search(settings: Settings) -> int:
    index_path = settings.get("index", "index.path")
    if not index_path:
        raise InputError("search needs --index")
    query = settings.get("query", "search.query")
    query_file = settings.get("query_file", "search.query_file")
    if query_file:
        query = Path(query_file).read_text(encoding="utf-8")
    if not query:
        raise InputError("search needs --query or --query-file")
    index = retrieval.load_index(index_path)
    backend = make_backend(settings)
    hits = retrieval.search(index, query, settings.get_int("k", "run.k", 10), backend,
                            exclude=settings.get("exclude", "search.exclude"))
    for rank, (doc_id, score) in enumerate(hits, start=1):
        print(f"{rank}\t{doc_id}\t{score:.6f}")
    return EXIT_OK


def _safe_name(strategy_name: str) -> str:
    return strategy_name.replace(":", "_")


def cmd_run(settings: Settings) -> int:
    import json

    corpus = load_corpus(settings)
    topics = ingest_topics(settings.get("topics", "topics.path") or _missing("topics"))
    index = retrieval.load_index(settings.get("index", "index.path") or _missing("index"))
    backend = make_backend(settings)
    raw = settings.get("strategies", "run.strategies")
    if not raw:
        raise InputError("run needs --strategies (comma-separated)")
    strategies = [retrieval.QueryStrategy.parse(name.strip()) for name in raw.split(",") if name.strip()]
    if not strategies:
        raise InputError("strategy list is empty")

    out_dir = Path(settings.get("out", "out.runs") or _missing("out directory"))
    out_dir.mkdir(parents=True, exist_ok=True)

    segments_path = settings.get("segments", "segments.path")
    segments = segmenter.load_segment_store(segments_path) if segments_path else None
    summaries_path = settings.get("summaries", "summaries.path")
    summaries = load_summaries(summaries_path) if summaries_path else None
    headings = load_headings(settings)

    missing = topics.missing_docs(corpus)
    if missing:
        print(f"warning: {len(missing)} topics reference documents missing from the corpus", file=sys.stderr)

    k = settings.get_int("k", "run.k", 100)
    exclude_self = settings.get("exclude_self", "run.exclude_self", "on") != "off"
    for strategy in strategies:
        result = retrieval.run_strategy(
            topics, corpus, index, strategy, backend, k=k,
            segments=segments, summaries=summaries, headings=headings,
            exclude_self=exclude_self,
        )
        result.table.validate()
        run_path = out_dir / f"{_safe_name(strategy.name)}.run"
        result.table.write(run_path)
        meta_path = out_dir / f"{_safe_name(strategy.name)}.meta.json"
        meta_path.write_text(
            json.dumps(
                {
                    "strategy": strategy.name,
                    "skipped": result.skipped,
                    "query_words": result.query_words,
                    "avg_query_words": result.avg_query_words,
                },
                indent=2,
                sort_keys=True,
            )
            + "\n",
            encoding="utf-8",
        )
        print(f"{strategy.name}: {len(result.table.rows)} rows, {len(result.skipped)} topics skipped -> {run_path}")
    return EXIT_OK


def _missing(what: str):
    raise InputError(f"no {what} given")


def cmd_eval(settings: Settings) -> int:
    import json

    summaries_path = settings.get("summaries", "summaries.path")
    run_path = settings.get("run", "eval.run")
    if run_path:
        qrels = ingest_qrels(settings.get("qrels", "qrels.path") or _missing("qrels"))
        run = retrieval.parse_run(run_path)
        metric_names = [m.strip() for m in
                        (settings.get("metrics", "eval.metrics") or ",".join(evaluation.DEFAULT_METRICS)).split(",")]
        skipped: list[tuple[str, str]] = []
        avg_words = 0.0
        strategy = run.rows[0].tag if run.rows else ""
        meta_path = settings.get("meta", "eval.meta")
        if meta_path:
            meta = json.loads(Path(meta_path).read_text(encoding="utf-8"))
            skipped = [tuple(pair) for pair in meta.get("skipped", [])]
            avg_words = meta.get("avg_query_words", 0.0)
            strategy = meta.get("strategy", strategy)
        report = evaluation.evaluate_run(run, qrels, metric_names, skipped=skipped,
                                         strategy=strategy, avg_query_words=avg_words)
        out = settings.get("out", "eval.out")
        if out:
            evaluation.save_report(report, out)
            print(f"wrote {out}")
        for name in metric_names:
            print(f"{name}: {report.means[name]:.4f}")
        print(f"evaluated: {report.evaluated}, skipped: {len(report.skipped)}")
        return EXIT_OK

    if summaries_path:
        corpus = load_corpus(settings)
        store = load_summaries(summaries_path)
        reference = settings.get("reference", "eval.reference", "abstract")
        backend = make_backend(settings)
        headings = load_headings(settings)
        pairs_by_row: dict[tuple[str, str], list[tuple[str, str]]] = {}
        for artifact in store:
            doc = corpus.get(artifact.doc_id)
            if doc is None:
                continue
            if reference == "abstract":
                ref_text = doc.abstract
            elif reference == "summary_segment":
                ref_text = extract_segments(doc.description, headings).summary_segment or ""
            else:
                raise InputError(f"unknown reference {reference!r}; valid: abstract, summary_segment")
            if not ref_text.strip():
                continue
            pairs_by_row.setdefault((artifact.method, artifact.source), []).append((artifact.text, ref_text))
        rows = [
            evaluation.intrinsic_row(pairs, reference, method, source, backend)
            for (method, source), pairs in pairs_by_row.items()
        ]
        out = settings.get("out", "eval.out")
        if out:
            Path(out).write_text(
                json.dumps([row.__dict__ for row in rows], indent=2, sort_keys=True) + "\n",
                encoding="utf-8",
            )
            print(f"wrote {out}")
        _, pretty = evaluation.render_intrinsic_table(rows)
        print(pretty, end="")
        return EXIT_OK

    raise InputError("eval needs --run (extrinsic) or --summaries (intrinsic)")


def cmd_report(settings: Settings) -> int:
    import json

    report_paths = getattr(settings.args, "reports", None) or []
    intrinsic_path = settings.get("intrinsic", "report.intrinsic")
    if not report_paths and not intrinsic_path:
        raise InputError("report needs --reports and/or --intrinsic")
    out_prefix = settings.get("out", "report.out")

    if report_paths:
        reports = [evaluation.load_report(p) for p in report_paths]
        map_metric = settings.get("map_metric", "report.map_metric", "MAP@100")

        def emit(group, label):
            tsv, pretty = evaluation.render_extrinsic_table(group, map_metric)
            print(pretty, end="")
            if out_prefix:
                Path(f"{out_prefix}-{label}.tsv").write_text(tsv, encoding="utf-8")
                Path(f"{out_prefix}-{label}.txt").write_text(pretty, encoding="utf-8")
                print(f"wrote {out_prefix}-{label}.tsv")

        emit(reports, "extrinsic")
        # Section-query and generated-summary rows also come out separately,
        # mirroring the two table shapes of the result reports.
        sections = [r for r in reports if not r.strategy.startswith("generated:")]
        generated = [r for r in reports if r.strategy.startswith("generated:")]
        if sections and generated:
            emit(sections, "sections")
            emit(generated, "summaries")

    if intrinsic_path:
        rows = [
            evaluation.IntrinsicRow(**record)
            for record in json.loads(Path(intrinsic_path).read_text(encoding="utf-8"))
        ]
        tsv, pretty = evaluation.render_intrinsic_table(rows)
        print(pretty, end="")
        if out_prefix:
            Path(f"{out_prefix}-intrinsic.tsv").write_text(tsv, encoding="utf-8")
            Path(f"{out_prefix}-intrinsic.txt").write_text(pretty, encoding="utf-8")
            print(f"wrote {out_prefix}-intrinsic.tsv")
    return EXIT_OK


def build_parser() -> _Parser:
    shared = _Parser(add_help=False)
    shared.add_argument("--config", help="flat key-value config file")
    shared.add_argument("--seed", type=int, help="seed for clustering and sampling")
    shared.add_argument("--backend", choices=BACKENDS, help="embedding backend")
    shared.add_argument("--endpoint", help="model server base URL")
    shared.add_argument("--model", help="remote model name")
    shared.add_argument("--dim", type=int, help="local backend dimension")
    shared.add_argument("--out", help="output file or directory")
    shared.add_argument("--corpus", help="corpus jsonl path")
    shared.add_argument("--format", help="corpus format: jsonl or hupd")
    shared.add_argument("--dict", help="heading dictionary file")

    parser = _Parser(prog="priorart", description="patent prior-art retrieval pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("ingest", parents=[shared], help="load and validate a corpus")
    sub.add_parser("segment", parents=[shared], help="extract description segments")

    p = sub.add_parser("summarize", parents=[shared], help="generate summaries")
    p.add_argument("--segments", help="segment store path")
    p.add_argument("--method", help="extractive or abstractive")
    p.add_argument("--source", help="input section")
    p.add_argument("--profile", help="generation profile: default or adjusted")
    p.add_argument("--target-words", dest="target_words", type=int, help="extractive word budget")
    p.add_argument("--k", help="extractive cluster count override")
    p.add_argument("--fallback", choices=("on", "off"), help="fallback generator when backend down")

    p = sub.add_parser("build-finetune-set", parents=[shared], help="select training pairs")
    p.add_argument("--summary-words", dest="summary_words", help="inclusive range low:high")
    p.add_argument("--source-words", dest="source_words", help="inclusive range low:high")

    p = sub.add_parser("index", parents=[shared], help="build the vector index")
    p.add_argument("--representation", help="corpus representation (claims, abstract, description)")
    p.add_argument("--cap", type=int, help="token cap before embedding")

    p = sub.add_parser("search", parents=[shared], help="query an index")
    p.add_argument("--index", help="index file")
    p.add_argument("--query", help="query text")
    p.add_argument("--query-file", dest="query_file", help="file containing the query")
    p.add_argument("--k", help="result depth")
    p.add_argument("--exclude", help="doc_id to exclude")

    p = sub.add_parser("run", parents=[shared], help="run query strategies over topics")
    p.add_argument("--topics", help="topics file")
    p.add_argument("--index", help="index file")
    p.add_argument("--strategies", help="comma-separated strategy names")
    p.add_argument("--segments", help="segment store path")
    p.add_argument("--summaries", help="summary store path")
    p.add_argument("--k", help="result depth per topic")
    p.add_argument("--exclude-self", dest="exclude_self", choices=("on", "off"),
                   help="drop the topic's own document from its results (default on)")

    p = sub.add_parser("eval", parents=[shared], help="evaluate a run or summaries")
    p.add_argument("--run", help="TREC run file (extrinsic)")
    p.add_argument("--qrels", help="qrels file")
    p.add_argument("--meta", help="run sidecar metadata json")
    p.add_argument("--metrics", help="comma-separated metric names")
    p.add_argument("--summaries", help="summary store (intrinsic)")
    p.add_argument("--reference", help="intrinsic reference: abstract or summary_segment")

    p = sub.add_parser("report", parents=[shared], help="render merged result tables")
    p.add_argument("--reports", nargs="*", help="metric report json files")
    p.add_argument("--intrinsic", help="intrinsic rows json file")
    p.add_argument("--map-metric", dest="map_metric", help="MAP@100 or MAP@50")

    return parser


_COMMANDS = {
    "ingest": cmd_ingest,
    "segment": cmd_segment,
    "summarize": cmd_summarize,
    "build-finetune-set": cmd_build_finetune_set,
    "index": cmd_index,
    "search": cmd_search,
    "run": cmd_run,
    "eval": cmd_eval,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        settings = Settings(args)
        return _COMMANDS[args.command](settings)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND


if __name__ == "__main__":
    raise SystemExit(main())
