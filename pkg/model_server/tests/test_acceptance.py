"""Acceptance: protocol conformance and the fine-tune manifest echo."""

import math

import jsonschema

from model_server.finetune import finetune
from model_server.schemas import EMBED_RESPONSE_SCHEMA, MODELS_RESPONSE_SCHEMA, SUMMARIZE_RESPONSE_SCHEMA


def sample_documents(n=20, words=400):
    docs = []
    for d in range(n):
        sentences = [
            f"Document {d} sentence {s} describes part {s} of assembly {d} in careful detail."
            for s in range(math.ceil(words / 12))
        ]
        docs.append(" ".join(sentences))
    return docs


def test_protocol_conformance(client):
    models = client.get("/v1/models").json()
    jsonschema.validate(models, MODELS_RESPONSE_SCHEMA)

    docs = sample_documents()

    dims = set()
    for doc in docs:
        body = client.post(
            "/v1/embed", json={"op": "embed", "texts": [doc], "cap_tokens": 3000}
        ).json()
        jsonschema.validate(body, EMBED_RESPONSE_SCHEMA)
        dims.add(body["dim"])
        for vector in body["vectors"]:
            assert len(vector) == body["dim"]
            norm = math.sqrt(math.fsum(v * v for v in vector))
            assert abs(norm - 1.0) <= 1e-3
    assert len(dims) == 1
    print(f"PASS  embed protocol: consistent dim {dims.pop()}, near-unit norms, schema-valid")

    for doc in docs:
        body = client.post(
            "/v1/summarize",
            json={
                "op": "summarize",
                "text": doc,
                "name": "adjusted",
                "min_words": 250,
                "max_words": 300,
                "num_beams": 4,
                "length_penalty": 0.8,
                "no_repeat_ngram": 3,
                "max_source_words": 1024,
            },
        ).json()
        jsonschema.validate(body, SUMMARIZE_RESPONSE_SCHEMA)
        words = len(body["text"].split())
        assert 250 <= words <= 300, f"summary of {words} words outside [250, 300]"
    print("PASS  adjusted-profile summaries within [250, 300] words on 20 documents")


def test_finetune_manifest_echoes_defaults(pairs_file, tmp_path):
    manifest = finetune(pairs_file, tmp_path / "ckpt", backend="tiny")
    parameters = manifest["parameters"]
    assert parameters["length_penalty"] == 0.8
    assert parameters["num_beams"] == 4
    assert parameters["num_train_epochs"] == 2
    assert parameters["learning_rate"] == 2e-5
    assert parameters["gradient_accumulation_steps"] == 16
    assert parameters["max_source_length"] == 1024
    assert parameters["no_repeat_ngram_size"] == 3
    assert parameters["max_target_length"] == 300
    assert parameters["min_target_length"] == 100
    assert parameters["per_device_train_batch_size"] == 1
    print("PASS  fine-tune manifest echoes every default hyperparameter verbatim")
