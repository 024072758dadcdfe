"""Patent prior-art retrieval toolkit.

Segments patent descriptions into high-value parts, generates extractive and
abstractive summaries, runs dense-vector retrieval with section- and
summary-based query strategies, and evaluates both summary quality and
retrieval effectiveness.
"""

from .abstractive import (
    PROFILES,
    GenerationProfile,
    RemoteGenerationBackend,
    fallback_generate,
    generate_summary,
)
from .artifacts import SummaryArtifact, SummaryStore, load_summaries, save_summaries
from .corpus import (
    Claim,
    Corpus,
    InputError,
    PatentDocument,
    QrelsTable,
    TopicSet,
    cap_tokens,
    ingest_corpus,
    ingest_qrels,
    ingest_topics,
    serialize_corpus,
    word_count,
)
from .embedding import (
    BackendError,
    EmbeddingVector,
    HashedEmbeddingBackend,
    RemoteEmbeddingBackend,
    cosine,
    hashed_embed,
    remote_embed,
)
from .evaluation import (
    MetricReport,
    RougeScore,
    average_precision,
    evaluate_run,
    precision_at_k,
    recall_at_k,
    rouge_l,
    rouge_n,
    semantic_similarity,
)
from .extractive import (
    ExtractiveConfig,
    choose_k,
    extractive_summary,
    kmeans,
    select_representatives,
    split_sentences,
)
from .retrieval import (
    QueryStrategy,
    RunTable,
    VectorIndex,
    build_index,
    formulate_query,
    run_strategy,
    search,
)
from .segmenter import (
    DescriptionSegments,
    HeadingDictionary,
    SegmentSpan,
    build_finetune_pairs,
    detect_headings,
    extract_first_independent_claim,
    extract_segments,
)

__version__ = "0.1.0"
