"""HTTP service speaking the shared embed/summarize wire protocol.

Endpoints: ``POST /v1/embed``, ``POST /v1/summarize``, ``GET /v1/models``
(doubles as the health endpoint). Every response names the serving model;
embed responses report the dimension. Input is re-capped with each model's
own tokenizer; text still longer than the model's limit after the client's
cap is a structured error.
"""

from __future__ import annotations

from dataclasses import dataclass

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .models import ModelRegistry, ModelSpec, ServerError, default_registry

__all__ = ["ServerConfig", "create_app", "serve"]


@dataclass
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = 8750
    include_neural: bool = False


def _capped_tokens(model, spec: ModelSpec, text: str, cap_tokens: int | None) -> list:
    tokens = model.tokenize(text)
    if cap_tokens is not None:
        if cap_tokens < 1:
            raise ServerError("bad-request", "cap_tokens must be >= 1")
        tokens = tokens[:cap_tokens]
    if len(tokens) > spec.max_input_tokens:
        raise ServerError(
            "input-too-long",
            f"{len(tokens)} tokens exceed {spec.name}'s limit of {spec.max_input_tokens} after capping",
        )
    return tokens


def create_app(registry: ModelRegistry | None = None) -> FastAPI:
    registry = registry or default_registry()
    app = FastAPI(title="priorart-model-server")

    @app.exception_handler(ServerError)
    async def server_error_handler(request: Request, exc: ServerError):
        return JSONResponse(
            status_code=exc.status,
            content={"error": {"code": exc.code, "message": exc.message}},
        )

    @app.get("/v1/models")
    async def list_models():
        return {"models": registry.describe()}

    @app.post("/v1/embed")
    async def embed(request: Request):
        body = await request.json()
        if body.get("op") != "embed":
            raise ServerError("bad-request", "expected op == 'embed'")
        texts = body.get("texts")
        if not isinstance(texts, list) or not all(isinstance(t, str) for t in texts):
            raise ServerError("bad-request", "texts must be a list of strings")
        spec, model = registry.resolve(body.get("model"), "embed")
        cap = body.get("cap_tokens")
        vectors = [model.embed(_capped_tokens(model, spec, text, cap)) for text in texts]
        return {"model": spec.name, "dim": spec.dim, "vectors": vectors}

    @app.post("/v1/summarize")
    async def summarize(request: Request):
        body = await request.json()
        if body.get("op") != "summarize":
            raise ServerError("bad-request", "expected op == 'summarize'")
        text = body.get("text")
        if not isinstance(text, str) or not text.strip():
            raise ServerError("bad-request", "text must be a non-empty string")
        spec, model = registry.resolve(body.get("model"), "summarize")

        min_words = body.get("min_words")
        max_words = body.get("max_words")
        max_source_words = int(body.get("max_source_words", 1024))

        from .models import LeadSummarizer

        if isinstance(model, LeadSummarizer):
            # Word tokenizer: the word budget is the token budget, exactly.
            budget = min(max_source_words, spec.max_input_tokens)
            tokens = model.tokenize(text)[:budget]
            summary = model.summarize(" ".join(tokens), min_words, max_words)
        else:
            budget = min(model.words_to_tokens(max_source_words, text), spec.max_input_tokens)
            tokens = model.tokenize(text)[:budget]
            generation = {
                "num_beams": int(body.get("num_beams", 4)),
                "length_penalty": float(body.get("length_penalty", 0.8)),
                "no_repeat_ngram_size": int(body.get("no_repeat_ngram", 3)),
            }
            if max_words is not None:
                generation["max_new_tokens"] = model.words_to_tokens(int(max_words), text)
            if min_words is not None:
                generation["min_new_tokens"] = model.words_to_tokens(int(min_words), text)
            summary = model.summarize_tokens(tokens, generation)

        if not summary.strip():
            raise ServerError("empty-output", f"{spec.name} produced no text", 500)
        return {"model": spec.name, "text": summary}

    return app


def serve(config: ServerConfig | None = None, registry: ModelRegistry | None = None) -> None:
    """Run the service until interrupted."""
    import uvicorn

    config = config or ServerConfig()
    app = create_app(registry or default_registry(config.include_neural))
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
