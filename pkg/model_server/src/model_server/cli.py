"""Command line: run the service or the fine-tuning script."""

from __future__ import annotations

import argparse
import json
import sys


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="priorart-model-server")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the embed/summarize HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8750)
    p.add_argument("--neural", action="store_true", help="also register the transformers-backed models")

    p = sub.add_parser("finetune", help="fine-tune the summarizer on extracted pairs")
    p.add_argument("--dataset", required=True, help="pairs jsonl from build-finetune-set")
    p.add_argument("--out", required=True, help="checkpoint output directory")
    p.add_argument("--backend", choices=("tiny", "hf"), default="tiny")
    p.add_argument("--checkpoint", default=None, help="base checkpoint for the hf backend")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--learning-rate", type=float, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--gradient-accumulation", type=int, default=None)
    p.add_argument("--length-penalty", type=float, default=None)
    p.add_argument("--num-beams", type=int, default=None)

    args = parser.parse_args(argv)

    if args.command == "serve":
        from .server import ServerConfig, serve

        serve(ServerConfig(host=args.host, port=args.port, include_neural=args.neural))
        return 0

    from .finetune import DEFAULT_CHECKPOINT, FinetuneParams, SchemaError, finetune

    overrides = {}
    if args.learning_rate is not None:
        overrides["learning_rate"] = args.learning_rate
    if args.epochs is not None:
        overrides["num_train_epochs"] = args.epochs
    if args.batch_size is not None:
        overrides["per_device_train_batch_size"] = args.batch_size
    if args.gradient_accumulation is not None:
        overrides["gradient_accumulation_steps"] = args.gradient_accumulation
    if args.length_penalty is not None:
        overrides["length_penalty"] = args.length_penalty
    if args.num_beams is not None:
        overrides["num_beams"] = args.num_beams
    params = FinetuneParams(**overrides)

    try:
        manifest = finetune(
            args.dataset,
            args.out,
            params=params,
            backend=args.backend,
            checkpoint=args.checkpoint or DEFAULT_CHECKPOINT,
            seed=args.seed,
        )
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(manifest, indent=2, sort_keys=True))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
