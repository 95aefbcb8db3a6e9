"""Read a labeled text dataset, encode it, and write the interchange file.

Source format: JSON lines {"id": ..., "text": ..., "label": int,
"annotators": [int, ...]?} or CSV with columns id,text,label. The output
is the dataset interchange format the filtering tool reads: a manifest
line followed by one example record per line, ids preserved one-to-one.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field


@dataclass(frozen=True)
class ExportJob:
    model_id: str
    input_path: str
    output_path: str
    num_classes: int
    pooling: str = "hash"
    dim: int = 64  # hash pooling only; transformer dims come from the model
    task_name: str = ""
    split_name: str = ""
    batch_size: int = 32
    device: str = "cpu"
    exclude_ids: frozenset = field(default_factory=frozenset)


class SourceFormatError(ValueError):
    pass


def read_source(path) -> list[dict]:
    """Load records with keys id, text, label, optional annotators."""
    records = []
    if str(path).endswith(".csv"):
        with open(path, newline="", encoding="utf-8") as f:
            for lineno, row in enumerate(csv.DictReader(f), start=2):
                try:
                    records.append(
                        {"id": row["id"], "text": row["text"], "label": int(row["label"])}
                    )
                except (KeyError, ValueError) as e:
                    raise SourceFormatError(f"{path}: line {lineno}: {e}") from e
    else:
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                    out = {
                        "id": str(rec["id"]),
                        "text": str(rec["text"]),
                        "label": int(rec["label"]),
                    }
                    if "annotators" in rec:
                        out["annotators"] = [int(a) for a in rec["annotators"]]
                    records.append(out)
                except (json.JSONDecodeError, KeyError, ValueError) as e:
                    raise SourceFormatError(f"{path}: line {lineno}: {e}") from e
    return records


def export(job: ExportJob) -> int:
    """Encode and write; returns the number of exported examples."""
    from .encoders import build_encoder

    records = read_source(job.input_path)
    records = [r for r in records if r["id"] not in job.exclude_ids]
    seen = set()
    for r in records:
        if r["id"] in seen:
            raise SourceFormatError(f"duplicate id {r['id']!r} in {job.input_path}")
        seen.add(r["id"])
        if not 0 <= r["label"] < job.num_classes:
            raise SourceFormatError(
                f"label {r['label']} out of range for id {r['id']!r}"
            )

    # the downstream reader rejects partial annotator coverage
    n_annot = sum(1 for r in records if "annotators" in r)
    if 0 < n_annot < len(records):
        raise SourceFormatError(
            f"{job.input_path}: {n_annot} of {len(records)} records carry annotator "
            "labels; coverage must be all-or-none"
        )

    encoder = build_encoder(job.model_id, job.pooling, job.dim, job.device)
    dim = encoder.dim
    with open(job.output_path, "w", encoding="utf-8") as f:
        f.write(
            json.dumps(
                {
                    "num_classes": job.num_classes,
                    "dim": dim,
                    "task": job.task_name,
                    "split": job.split_name,
                }
            )
            + "\n"
        )
        for start in range(0, len(records), job.batch_size):
            batch = records[start : start + job.batch_size]
            vecs = encoder.encode_batch([r["text"] for r in batch])
            if vecs.shape != (len(batch), dim):
                raise RuntimeError(
                    f"encoder returned shape {vecs.shape}, expected ({len(batch)}, {dim})"
                )
            for rec, vec in zip(batch, vecs):
                out = {
                    "id": rec["id"],
                    "label": rec["label"],
                    "features": [float(v) for v in vec],
                }
                if "annotators" in rec:
                    out["annotators"] = rec["annotators"]
                f.write(json.dumps(out) + "\n")
    return len(records)
