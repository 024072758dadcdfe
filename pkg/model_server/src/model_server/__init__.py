"""Embedding and summarization model server with an offline fine-tuning script."""

from .finetune import FinetuneParams, finetune, load_pairs
from .models import ModelRegistry, ModelSpec, ServerError, default_registry
from .server import ServerConfig, create_app, serve

__version__ = "0.1.0"
