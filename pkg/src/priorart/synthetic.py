"""Deterministic synthetic corpus with planted relevance for end-to-end checks.

Each topic patent carries a signature of rare invented terms inside its
summary segment; exactly its relevant documents repeat those terms (and hence
their bigrams) in their claims. Every other document mixes common filler with
its own junk vocabulary, so a query built from the topic's summary segment
should rank the planted documents at the top under any reasonable embedding.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

__all__ = ["SyntheticDataset", "planted_corpus", "write_dataset"]

_COMMON = (
    "system device method apparatus signal module unit controller sensor output "
    "input data circuit layer surface member portion element assembly value "
    "configured operable coupled disposed formed received generated first second"
).split()

_SYLLABLES = (
    "vel trax quon mir zeph lod bran kyt fex dus plin gorv"
).split()


@dataclass
class SyntheticDataset:
    """Corpus records plus aligned topics and relevance judgments."""

    records: list[dict]
    topics: list[tuple[str, str]]
    qrels: list[tuple[str, str, int]]

    def corpus_jsonl(self) -> str:
        return "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in self.records)

    def topics_text(self) -> str:
        return "".join(f"{t} {d}\n" for t, d in self.topics)

    def qrels_text(self) -> str:
        return "".join(f"{t} 0 {d} {g}\n" for t, d, g in self.qrels)


def _rare_terms(topic: int, count: int, rng: random.Random) -> list[str]:
    terms = []
    for j in range(count):
        stem = "".join(rng.choice(_SYLLABLES) for _ in range(2))
        terms.append(f"{stem}{topic:02d}{j}")
    return terms


def _sentence(rng: random.Random, words: list[str], length: int) -> str:
    body = " ".join(rng.choice(words) for _ in range(length))
    return body.capitalize() + "."


def planted_corpus(
    n_docs: int = 200,
    n_topics: int = 20,
    relevant_per_topic: int = 3,
    seed: int = 93041,
) -> SyntheticDataset:
    """Build a corpus where each topic's relevant documents are knowable by construction."""
    if n_topics * (1 + relevant_per_topic) > n_docs:
        raise ValueError("not enough documents for the requested topics and judgments")
    rng = random.Random(seed)

    records: list[dict] = []
    topics: list[tuple[str, str]] = []
    qrels: list[tuple[str, str, int]] = []

    for t in range(1, n_topics + 1):
        topic_id = f"T{t:03d}"
        topic_doc = f"SYN-T{t:03d}"
        rare = _rare_terms(t, 6, rng)
        signature = " ".join(rare)

        summary = " ".join(
            [
                f"The invention provides a {rng.choice(_COMMON)} employing {signature}.",
                f"In one aspect the {signature} arrangement drives the {rng.choice(_COMMON)}.",
                f"Embodiments combine {signature} with a {rng.choice(_COMMON)} {rng.choice(_COMMON)}.",
            ]
        )
        description = "\n".join(
            [
                "BACKGROUND",
                _sentence(rng, _COMMON, 25),
                "SUMMARY OF THE INVENTION",
                summary,
                "DETAILED DESCRIPTION",
                _sentence(rng, _COMMON, 30),
            ]
        )
        records.append(
            {
                "doc_id": topic_doc,
                "title": f"Topic invention {t}",
                "abstract": _sentence(rng, _COMMON, 18),
                "claims": [
                    f"1. A {rng.choice(_COMMON)} comprising {signature} and a {rng.choice(_COMMON)}.",
                    f"2. The {rng.choice(_COMMON)} of claim 1, wherein the {rng.choice(_COMMON)} is {rng.choice(_COMMON)}.",
                ],
                "description": description,
                "cpc_codes": [f"G06F{t}/00"],
            }
        )
        topics.append((topic_id, topic_doc))

        for r in range(1, relevant_per_topic + 1):
            rel_doc = f"SYN-R{t:03d}-{r}"
            claim_one = (
                f"1. A {rng.choice(_COMMON)} comprising {signature}, wherein {signature} "
                f"couples the {rng.choice(_COMMON)} to {signature}."
            )
            records.append(
                {
                    "doc_id": rel_doc,
                    "title": f"Related invention {t}-{r}",
                    "abstract": _sentence(rng, _COMMON, 15),
                    "claims": [
                        claim_one,
                        f"2. The {rng.choice(_COMMON)} of claim 1, further comprising a {rng.choice(_COMMON)}.",
                    ],
                    "description": "BACKGROUND\n" + _sentence(rng, _COMMON, 30),
                    "cpc_codes": [f"G06F{t}/00"],
                }
            )
            qrels.append((topic_id, rel_doc, 1))

    n_fillers = n_docs - len(records)
    for d in range(1, n_fillers + 1):
        doc_id = f"SYN-D{d:04d}"
        junk = [f"obl{d:04d}n{j}" for j in range(4)]
        vocabulary = junk * 3 + list(_COMMON)
        records.append(
            {
                "doc_id": doc_id,
                "title": f"Filler invention {d}",
                "abstract": _sentence(rng, vocabulary, 15),
                "claims": [
                    f"1. A {rng.choice(_COMMON)} comprising " + " ".join(rng.choice(vocabulary) for _ in range(18)) + ".",
                    f"2. The {rng.choice(_COMMON)} of claim 1, wherein " + " ".join(rng.choice(vocabulary) for _ in range(8)) + ".",
                ],
                "description": "BACKGROUND\n" + _sentence(rng, vocabulary, 40),
                "cpc_codes": [],
            }
        )
    return SyntheticDataset(records, topics, qrels)


def write_dataset(dataset: SyntheticDataset, out_dir: str | Path) -> dict[str, Path]:
    """Write corpus.jsonl, topics.txt, and qrels.txt; returns their paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "corpus": out / "corpus.jsonl",
        "topics": out / "topics.txt",
        "qrels": out / "qrels.txt",
    }
    paths["corpus"].write_text(dataset.corpus_jsonl(), encoding="utf-8")
    paths["topics"].write_text(dataset.topics_text(), encoding="utf-8")
    paths["qrels"].write_text(dataset.qrels_text(), encoding="utf-8")
    return paths
