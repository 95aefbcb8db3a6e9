"""Command-line entry point for the embedding exporter."""

from __future__ import annotations

import argparse
import sys

from .export import ExportJob, SourceFormatError, export


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="embed-export",
        description="Encode a labeled text dataset into the filtering tool's "
        "interchange format.",
    )
    p.add_argument("--model", default="hash",
                   help="transformers checkpoint id, or 'hash' for the builtin encoder")
    p.add_argument("--input", required=True, help="source JSONL or CSV file")
    p.add_argument("--output", required=True)
    p.add_argument("--num-classes", type=int, required=True)
    p.add_argument("--pooling", default="hash", choices=["hash", "cls", "mean"])
    p.add_argument("--dim", type=int, default=64, help="output dim (hash pooling only)")
    p.add_argument("--task", default="")
    p.add_argument("--split", default="")
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--device", default="cpu")
    p.add_argument("--exclude-ids", default=None,
                   help="file with one example id per line to leave out "
                   "(e.g. an early-stopping holdout)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    exclude = frozenset()
    if args.exclude_ids:
        with open(args.exclude_ids, encoding="utf-8") as f:
            exclude = frozenset(line.strip() for line in f if line.strip())
    job = ExportJob(
        model_id=args.model,
        input_path=args.input,
        output_path=args.output,
        num_classes=args.num_classes,
        pooling=args.pooling,
        dim=args.dim,
        task_name=args.task,
        split_name=args.split,
        batch_size=args.batch_size,
        device=args.device,
        exclude_ids=exclude,
    )
    try:
        count = export(job)
    except (SourceFormatError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    print(f"exported {count} examples to {args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
