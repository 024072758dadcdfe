"""JSON schemas for the wire protocol shared with the retrieval toolkit.

Requests carry an ``op`` tag; every successful response reports the model
name, and embed responses additionally report the dimension. Errors are
structured: ``{"error": {"code": ..., "message": ...}}``.
"""

EMBED_REQUEST_SCHEMA = {
    "type": "object",
    "required": ["op", "texts"],
    "properties": {
        "op": {"const": "embed"},
        "texts": {"type": "array", "items": {"type": "string"}},
        "cap_tokens": {"type": "integer", "minimum": 1},
        "model": {"type": "string"},
    },
}

EMBED_RESPONSE_SCHEMA = {
    "type": "object",
    "required": ["model", "dim", "vectors"],
    "properties": {
        "model": {"type": "string"},
        "dim": {"type": "integer", "minimum": 1},
        "vectors": {
            "type": "array",
            "items": {"type": "array", "items": {"type": "number"}},
        },
    },
}

SUMMARIZE_REQUEST_SCHEMA = {
    "type": "object",
    "required": ["op", "text"],
    "properties": {
        "op": {"const": "summarize"},
        "text": {"type": "string"},
        "model": {"type": "string"},
        "name": {"type": "string"},
        "min_words": {"type": ["integer", "null"], "minimum": 1},
        "max_words": {"type": ["integer", "null"], "minimum": 1},
        "num_beams": {"type": "integer", "minimum": 1},
        "length_penalty": {"type": "number"},
        "no_repeat_ngram": {"type": "integer", "minimum": 0},
        "max_source_words": {"type": "integer", "minimum": 1},
        "checkpoint": {"type": ["string", "null"]},
    },
}

SUMMARIZE_RESPONSE_SCHEMA = {
    "type": "object",
    "required": ["model", "text"],
    "properties": {
        "model": {"type": "string"},
        "text": {"type": "string"},
    },
}

MODELS_RESPONSE_SCHEMA = {
    "type": "object",
    "required": ["models"],
    "properties": {
        "models": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "kind", "max_input_tokens", "checkpoint"],
                "properties": {
                    "name": {"type": "string"},
                    "kind": {"enum": ["embed", "summarize"]},
                    "max_input_tokens": {"type": "integer", "minimum": 1},
                    "dim": {"type": "integer", "minimum": 1},
                    "checkpoint": {"type": "string"},
                },
            },
        }
    },
}

ERROR_RESPONSE_SCHEMA = {
    "type": "object",
    "required": ["error"],
    "properties": {
        "error": {
            "type": "object",
            "required": ["code", "message"],
            "properties": {
                "code": {"type": "string"},
                "message": {"type": "string"},
            },
        }
    },
}
