"""Offline fine-tuning of the long-document summarizer on extracted pairs.

The dataset is line-delimited JSON with ``input``, ``target``, and ``doc_id``
fields per record (the output of the toolkit's build-finetune-set command).
Training runs a plain seq2seq loop: batch size and gradient accumulation,
learning rate, and epoch count come from :class:`FinetuneParams`, whose
defaults are the published configuration; generation settings (beams, length
penalty, ngram blocking, target length bounds) are stamped onto the saved
checkpoint. A manifest echoing every hyperparameter is written next to the
weights.

Backends:

* ``hf``   - load the configured checkpoint through transformers and train it.
* ``tiny`` - build a word-level vocabulary from the dataset and train a small
  randomly initialized model of the same architecture family; exercises the
  full loop on CPU in seconds.
"""

from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass
from pathlib import Path

__all__ = ["FinetuneParams", "FinetunePair", "SchemaError", "load_pairs", "finetune"]

DEFAULT_CHECKPOINT = "google/bigbird-pegasus-large-bigpatent"


class SchemaError(Exception):
    """The dataset does not match the finetune-pairs schema."""


@dataclass(frozen=True)
class FinetuneParams:
    """Training and generation configuration; defaults are the published values."""

    max_source_length: int = 1024
    num_beams: int = 4
    length_penalty: float = 0.8
    no_repeat_ngram_size: int = 3
    max_target_length: int = 300
    min_target_length: int = 100
    learning_rate: float = 2e-5
    per_device_train_batch_size: int = 1
    gradient_accumulation_steps: int = 16
    num_train_epochs: int = 2

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class FinetunePair:
    doc_id: str
    input: str
    target: str


def load_pairs(path: str | Path) -> list[FinetunePair]:
    """Load and validate the pairs file; any malformed record is fatal."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise SchemaError(f"cannot read dataset {path}: {exc}") from exc
    pairs = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except ValueError as exc:
            raise SchemaError(f"{path} line {lineno}: not valid JSON: {exc}") from exc
        for field_name in ("input", "target", "doc_id"):
            if not isinstance(record.get(field_name), str) or not record[field_name].strip():
                raise SchemaError(f"{path} line {lineno}: record is missing field {field_name!r}")
        pairs.append(FinetunePair(record["doc_id"], record["input"], record["target"]))
    if not pairs:
        raise SchemaError(f"dataset {path} contains no training pairs")
    return pairs


class WordVocab:
    """Word-level vocabulary for the tiny backend: pad=0, bos=1, eos=2, unk=3."""

    PAD, BOS, EOS, UNK = 0, 1, 2, 3

    def __init__(self, texts: list[str], max_size: int = 4000):
        counts: dict[str, int] = {}
        for text in texts:
            for word in text.lower().split():
                counts[word] = counts.get(word, 0) + 1
        ranked = sorted(counts, key=lambda w: (-counts[w], w))[: max_size - 4]
        self.index = {w: i + 4 for i, w in enumerate(ranked)}

    def __len__(self) -> int:
        return len(self.index) + 4

    def encode(self, text: str, limit: int) -> list[int]:
        ids = [self.index.get(w, self.UNK) for w in text.lower().split()][: limit - 1]
        return ids + [self.EOS]


def _tiny_model(vocab_size: int, seed: int):
    import torch
    from transformers import BigBirdPegasusConfig, BigBirdPegasusForConditionalGeneration

    torch.manual_seed(seed)
    config = BigBirdPegasusConfig(
        vocab_size=vocab_size,
        d_model=32,
        encoder_layers=1,
        decoder_layers=1,
        encoder_attention_heads=2,
        decoder_attention_heads=2,
        encoder_ffn_dim=64,
        decoder_ffn_dim=64,
        max_position_embeddings=1280,
        attention_type="original_full",
        pad_token_id=WordVocab.PAD,
        bos_token_id=WordVocab.BOS,
        eos_token_id=WordVocab.EOS,
        decoder_start_token_id=WordVocab.EOS,
    )
    return BigBirdPegasusForConditionalGeneration(config)


def _encode_tiny(pairs, vocab: WordVocab, params: FinetuneParams):
    return [
        (vocab.encode(p.input, params.max_source_length), vocab.encode(p.target, params.max_target_length))
        for p in pairs
    ]


def _encode_hf(pairs, tokenizer, params: FinetuneParams):
    encoded = []
    for p in pairs:
        source = tokenizer.encode(p.input, truncation=True, max_length=params.max_source_length)
        target = tokenizer.encode(p.target, truncation=True, max_length=params.max_target_length)
        encoded.append((source, target))
    return encoded


def _train_loop(model, encoded, params: FinetuneParams, seed: int) -> dict:
    """Plain seq2seq training honoring batch size, accumulation, lr, epochs."""
    import torch

    pad = model.config.pad_token_id
    optimizer = torch.optim.AdamW(model.parameters(), lr=params.learning_rate)
    rng = random.Random(seed)
    order = list(range(len(encoded)))
    model.train()

    def batches():
        size = params.per_device_train_batch_size
        for start in range(0, len(order), size):
            chunk = [encoded[i] for i in order[start:start + size]]
            src_len = max(len(s) for s, _ in chunk)
            tgt_len = max(len(t) for _, t in chunk)
            input_ids = torch.tensor([s + [pad] * (src_len - len(s)) for s, _ in chunk])
            labels = torch.tensor([t + [-100] * (tgt_len - len(t)) for _, t in chunk])
            yield input_ids, labels

    optimizer_steps = 0
    micro_steps = 0
    last_loss = 0.0
    for _ in range(params.num_train_epochs):
        rng.shuffle(order)
        pending = 0
        for input_ids, labels in batches():
            loss = model(input_ids=input_ids, attention_mask=(input_ids != pad).long(), labels=labels).loss
            (loss / params.gradient_accumulation_steps).backward()
            last_loss = float(loss.detach())
            micro_steps += 1
            pending += 1
            if pending == params.gradient_accumulation_steps:
                optimizer.step()
                optimizer.zero_grad()
                optimizer_steps += 1
                pending = 0
        if pending:
            optimizer.step()
            optimizer.zero_grad()
            optimizer_steps += 1
    return {"optimizer_steps": optimizer_steps, "micro_steps": micro_steps, "final_loss": last_loss}


def _stamp_generation_config(model, params: FinetuneParams) -> None:
    generation = model.generation_config
    generation.num_beams = params.num_beams
    generation.length_penalty = params.length_penalty
    generation.no_repeat_ngram_size = params.no_repeat_ngram_size
    generation.max_length = params.max_target_length
    generation.min_length = params.min_target_length


def finetune(
    dataset_path: str | Path,
    out_dir: str | Path,
    params: FinetuneParams | None = None,
    backend: str = "tiny",
    checkpoint: str = DEFAULT_CHECKPOINT,
    seed: int = 42,
) -> dict:
    """Train the summarizer on the pairs file and write checkpoint + manifest.

    Returns the manifest, which echoes every hyperparameter actually used.
    """
    params = params or FinetuneParams()
    pairs = load_pairs(dataset_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    if backend == "tiny":
        vocab = WordVocab([p.input for p in pairs] + [p.target for p in pairs])
        model = _tiny_model(len(vocab), seed)
        encoded = _encode_tiny(pairs, vocab, params)
        stats = _train_loop(model, encoded, params, seed)
        _stamp_generation_config(model, params)
        import torch

        torch.save(model.state_dict(), out / "model.pt")
        (out / "vocab.json").write_text(json.dumps(vocab.index), encoding="utf-8")
        model_id = f"tiny-random:{len(vocab)}"
    elif backend == "hf":
        from transformers import AutoModelForSeq2SeqLM, AutoTokenizer

        tokenizer = AutoTokenizer.from_pretrained(checkpoint)
        model = AutoModelForSeq2SeqLM.from_pretrained(checkpoint)
        encoded = _encode_hf(pairs, tokenizer, params)
        stats = _train_loop(model, encoded, params, seed)
        _stamp_generation_config(model, params)
        model.save_pretrained(out)
        tokenizer.save_pretrained(out)
        model_id = checkpoint
    else:
        raise ValueError(f"unknown backend {backend!r}; expected 'tiny' or 'hf'")

    manifest = {
        "dataset": str(dataset_path),
        "pairs": len(pairs),
        "backend": backend,
        "checkpoint": model_id,
        "seed": seed,
        "parameters": params.to_dict(),
        **stats,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return manifest
