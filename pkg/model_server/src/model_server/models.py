"""Model registry and the models themselves: builtin deterministic + HF-backed.

Two builtin models are always resolvable and keep the server hermetic:

* ``hash-embed``  - signed feature hashing over word unigrams and bigrams,
  unit-normalized, 1024-dimensional.
* ``lead-summarizer`` - leading-sentence selection honoring the requested
  min/max word bounds exactly (its tokenizer is whitespace words, so the
  words-to-tokens ratio is exactly 1.0 rather than the 1.35 wire default).

Neural entries (sentence embedders, a long-document summarizer) name their
checkpoints explicitly and load lazily through transformers; they fail with a
clear error when weights are unreachable.
"""

from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass, field

__all__ = [
    "ModelSpec",
    "ModelRegistry",
    "ServerError",
    "HashEmbedder",
    "LeadSummarizer",
    "default_registry",
    "WORDS_TO_TOKENS_RATIO",
]

# Wire-protocol default for mapping word budgets to model tokens; overridden
# by exact tokenization for models whose tokens are words.
WORDS_TO_TOKENS_RATIO = 1.35

_SENTENCE_END = re.compile(r"(?<=[.!?])\s+")


class ServerError(Exception):
    """Structured server-side failure."""

    def __init__(self, code: str, message: str, status: int = 400):
        super().__init__(message)
        self.code = code
        self.message = message
        self.status = status


@dataclass(frozen=True)
class ModelSpec:
    """Registry entry describing one servable model."""

    name: str
    kind: str  # embed | summarize
    max_input_tokens: int
    checkpoint: str
    dim: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("embed", "summarize"):
            raise ValueError(f"unknown kind {self.kind!r}")
        if (self.dim is None) == (self.kind == "embed"):
            raise ValueError("dim must be present exactly for embed models")

    def describe(self) -> dict:
        record = {
            "name": self.name,
            "kind": self.kind,
            "max_input_tokens": self.max_input_tokens,
            "checkpoint": self.checkpoint,
        }
        if self.dim is not None:
            record["dim"] = self.dim
        return record


class HashEmbedder:
    """Deterministic signed-hash embedder over word unigrams and bigrams."""

    def __init__(self, spec: ModelSpec):
        self.spec = spec
        self.dim = spec.dim

    def tokenize(self, text: str) -> list[str]:
        return text.lower().split()

    def embed(self, tokens: list[str]) -> list[float]:
        vec = [0.0] * self.dim
        features = list(tokens) + [f"{a}\x1f{b}" for a, b in zip(tokens, tokens[1:])]
        for feature in features:
            digest = hashlib.sha256(feature.encode("utf-8")).digest()
            bucket = int.from_bytes(digest[:8], "big") % self.dim
            sign = 1.0 if digest[8] & 1 else -1.0
            vec[bucket] += sign
        norm = math.sqrt(math.fsum(v * v for v in vec))
        if norm > 0.0:
            vec = [v / norm for v in vec]
        return vec


class LeadSummarizer:
    """Leading-sentence summarizer that lands inside the requested word range.

    Whole sentences are taken from the start while they fit under max_words;
    if the total still falls short of min_words, words from the next sentence
    top the summary up to exactly min_words. Inputs shorter than min_words
    come back whole.
    """

    def __init__(self, spec: ModelSpec):
        self.spec = spec

    def tokenize(self, text: str) -> list[str]:
        return text.split()

    def summarize(self, text: str, min_words: int | None, max_words: int | None) -> str:
        words_total = len(text.split())
        low = min_words or 1
        high = max_words if max_words is not None else max(low, min(words_total, 100))

        sentences = [s for s in _SENTENCE_END.split(text) if s.strip()]
        picked: list[str] = []
        used = 0
        leftover: list[str] = []
        for sentence in sentences:
            count = len(sentence.split())
            if used + count > high:
                leftover = sentence.split()
                break
            picked.append(sentence.strip())
            used += count
        if not picked and sentences:
            words = sentences[0].split()
            return " ".join(words[:high])
        if used < low and leftover:
            picked.append(" ".join(leftover[: low - used]))
        return " ".join(picked)


class _HFEmbedder:
    """Sentence embedder backed by a transformers checkpoint (mean pooling)."""

    def __init__(self, spec: ModelSpec):
        self.spec = spec
        self.dim = spec.dim
        try:
            import torch  # noqa: F401
            from transformers import AutoModel, AutoTokenizer
        except ImportError as exc:
            raise ServerError("missing-dependency", f"transformers/torch required for {spec.name}: {exc}", 500)
        try:
            self._tokenizer = AutoTokenizer.from_pretrained(spec.checkpoint)
            self._model = AutoModel.from_pretrained(spec.checkpoint, trust_remote_code=True)
        except Exception as exc:
            raise ServerError("checkpoint-unresolvable", f"cannot load {spec.checkpoint}: {exc}", 500)
        self._model.eval()

    def tokenize(self, text: str) -> list[int]:
        return self._tokenizer.encode(text, add_special_tokens=False)

    def embed(self, tokens: list[int]) -> list[float]:
        import torch

        with torch.no_grad():
            ids = torch.tensor([tokens[: self.spec.max_input_tokens]])
            hidden = self._model(input_ids=ids).last_hidden_state[0]
            pooled = hidden.mean(dim=0)
            pooled = pooled / pooled.norm()
        return [float(v) for v in pooled]


class _HFSummarizer:
    """Abstractive summarizer backed by a seq2seq transformers checkpoint."""

    def __init__(self, spec: ModelSpec):
        self.spec = spec
        try:
            import torch  # noqa: F401
            from transformers import AutoModelForSeq2SeqLM, AutoTokenizer
        except ImportError as exc:
            raise ServerError("missing-dependency", f"transformers/torch required for {spec.name}: {exc}", 500)
        try:
            self._tokenizer = AutoTokenizer.from_pretrained(spec.checkpoint)
            self._model = AutoModelForSeq2SeqLM.from_pretrained(spec.checkpoint)
        except Exception as exc:
            raise ServerError("checkpoint-unresolvable", f"cannot load {spec.checkpoint}: {exc}", 500)
        self._model.eval()

    def tokenize(self, text: str) -> list[int]:
        return self._tokenizer.encode(text, add_special_tokens=False)

    def summarize_tokens(self, tokens: list[int], generation: dict) -> str:
        import torch

        ids = torch.tensor([tokens])
        with torch.no_grad():
            out = self._model.generate(ids, **generation)
        return self._tokenizer.decode(out[0], skip_special_tokens=True)

    def words_to_tokens(self, words: int, sample_text: str) -> int:
        # Exact ratio measured with the real tokenizer; wire default otherwise.
        sample_words = len(sample_text.split())
        if sample_words:
            ratio = len(self.tokenize(sample_text)) / sample_words
        else:
            ratio = WORDS_TO_TOKENS_RATIO
        return max(1, round(words * ratio))


BUILTIN_SPECS = (
    ModelSpec("hash-embed", "embed", max_input_tokens=8192, checkpoint="builtin:hash-v1", dim=1024),
    ModelSpec("lead-summarizer", "summarize", max_input_tokens=8192, checkpoint="builtin:lead-v1"),
)

NEURAL_SPECS = (
    ModelSpec("gte-large-en-v1.5", "embed", max_input_tokens=8192,
              checkpoint="Alibaba-NLP/gte-large-en-v1.5", dim=1024),
    ModelSpec("paraphrase-minilm-l6-v2", "embed", max_input_tokens=256,
              checkpoint="sentence-transformers/paraphrase-MiniLM-L6-v2", dim=384),
    ModelSpec("bert-for-patents", "embed", max_input_tokens=512,
              checkpoint="anferico/bert-for-patents", dim=1024),
    ModelSpec("bigbird-pegasus-bigpatent", "summarize", max_input_tokens=4096,
              checkpoint="google/bigbird-pegasus-large-bigpatent"),
)


@dataclass
class ModelRegistry:
    """Unique-name registry; models instantiate lazily on first use."""

    specs: dict[str, ModelSpec] = field(default_factory=dict)
    _instances: dict[str, object] = field(default_factory=dict)

    def register(self, spec: ModelSpec) -> None:
        if spec.name in self.specs:
            raise ValueError(f"duplicate model name {spec.name!r}")
        self.specs[spec.name] = spec

    def describe(self) -> list[dict]:
        return [spec.describe() for spec in self.specs.values()]

    def default_name(self, kind: str) -> str | None:
        for spec in self.specs.values():
            if spec.kind == kind:
                return spec.name
        return None

    def resolve(self, name: str | None, kind: str):
        name = name or self.default_name(kind)
        if name is None or name not in self.specs:
            raise ServerError("unknown-model", f"no registered model {name!r}", 404)
        spec = self.specs[name]
        if spec.kind != kind:
            raise ServerError("wrong-kind", f"model {name!r} is a {spec.kind} model, not {kind}", 400)
        if name not in self._instances:
            self._instances[name] = self._build(spec)
        return spec, self._instances[name]

    @staticmethod
    def _build(spec: ModelSpec):
        if spec.checkpoint == "builtin:hash-v1":
            return HashEmbedder(spec)
        if spec.checkpoint == "builtin:lead-v1":
            return LeadSummarizer(spec)
        if spec.kind == "embed":
            return _HFEmbedder(spec)
        return _HFSummarizer(spec)


def default_registry(include_neural: bool = False) -> ModelRegistry:
    registry = ModelRegistry()
    for spec in BUILTIN_SPECS:
        registry.register(spec)
    if include_neural:
        for spec in NEURAL_SPECS:
            registry.register(spec)
    return registry
