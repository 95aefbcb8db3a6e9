"""Domain types for embedded datasets and model predictions, plus the
line-delimited JSON interchange format.

A dataset file starts with a manifest line
    {"num_classes": L, "dim": d, "task": "...", "split": "..."}
followed by one example per line
    {"id": "...", "label": i, "features": [...], "annotators": [...]?, "meta": {...}?}

A prediction file starts with
    {"model": "...", "task": "...", "kind": "class" | "text"}
followed by {"id": "...", "pred": i-or-string} lines.

Floats survive a write/read cycle bit-exactly: json emits Python's
shortest-repr decimal form, which parses back to the identical double.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field


class DatasetFormatError(ValueError):
    """A file (or in-memory dataset) violates the interchange contract."""


@dataclass(frozen=True)
class Example:
    id: str
    features: tuple[float, ...]
    label: int
    annotator_labels: tuple[int, ...] | None = None
    meta: dict | None = None


@dataclass(frozen=True)
class Manifest:
    num_classes: int
    dim: int
    task_name: str = ""
    split_name: str = ""


@dataclass(frozen=True)
class EmbeddingDataset:
    manifest: Manifest
    examples: tuple[Example, ...]

    def __post_init__(self):
        validate_dataset(self)

    def __len__(self):
        return len(self.examples)

    def ids(self) -> list[str]:
        return [ex.id for ex in self.examples]

    def by_id(self) -> dict[str, Example]:
        return {ex.id: ex for ex in self.examples}

    def feature_matrix(self):
        import numpy as np

        if not self.examples:
            return np.zeros((0, self.manifest.dim))
        return np.array([ex.features for ex in self.examples], dtype=np.float64)

    def labels(self):
        import numpy as np

        return np.array([ex.label for ex in self.examples], dtype=np.int64)

    def has_annotators(self) -> bool:
        return bool(self.examples) and self.examples[0].annotator_labels is not None


@dataclass(frozen=True)
class PredictionSet:
    model_name: str
    task_name: str
    kind: str  # "class" | "text"
    entries: dict  # id -> int (class) or str (text)

    def __post_init__(self):
        if self.kind not in ("class", "text"):
            raise DatasetFormatError(f"unknown prediction kind {self.kind!r}")
        want = int if self.kind == "class" else str
        for eid, pred in self.entries.items():
            if not isinstance(pred, want) or isinstance(pred, bool):
                raise DatasetFormatError(
                    f"prediction for id {eid!r} is not of kind {self.kind!r}: {pred!r}"
                )


def validate_dataset(ds: EmbeddingDataset) -> None:
    man = ds.manifest
    if man.num_classes < 1 or man.dim < 1:
        raise DatasetFormatError("manifest needs num_classes >= 1 and dim >= 1")
    seen = set()
    any_annot = any(ex.annotator_labels is not None for ex in ds.examples)
    for ex in ds.examples:
        if ex.id in seen:
            raise DatasetFormatError(f"duplicate id {ex.id!r}")
        seen.add(ex.id)
        if len(ex.features) != man.dim:
            raise DatasetFormatError(
                f"example {ex.id!r}: {len(ex.features)} features, manifest dim is {man.dim}"
            )
        if not 0 <= ex.label < man.num_classes:
            raise DatasetFormatError(
                f"example {ex.id!r}: label {ex.label} out of range [0, {man.num_classes})"
            )
        if any_annot and ex.annotator_labels is None:
            raise DatasetFormatError(
                f"example {ex.id!r}: missing annotator labels while other examples have them"
            )
        for a in ex.annotator_labels or ():
            if not 0 <= a < man.num_classes:
                raise DatasetFormatError(
                    f"example {ex.id!r}: annotator label {a} out of range"
                )


def read_dataset(path) -> EmbeddingDataset:
    """Parse an interchange dataset file; errors name the offending line."""
    with open(path, encoding="utf-8") as f:
        lines = f.read().splitlines()
    if not lines:
        raise DatasetFormatError(f"{path}: empty file, manifest line missing")
    try:
        head = json.loads(lines[0])
        man = Manifest(
            num_classes=int(head["num_classes"]),
            dim=int(head["dim"]),
            task_name=head.get("task", ""),
            split_name=head.get("split", ""),
        )
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise DatasetFormatError(f"{path}: line 1: bad manifest ({e})") from e

    examples = []
    seen = set()
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            ex = Example(
                id=str(rec["id"]),
                features=tuple(float(v) for v in rec["features"]),
                label=int(rec["label"]),
                annotator_labels=(
                    tuple(int(a) for a in rec["annotators"])
                    if "annotators" in rec
                    else None
                ),
                meta=rec.get("meta"),
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
            raise DatasetFormatError(f"{path}: line {lineno}: malformed record ({e})") from e
        if ex.id in seen:
            raise DatasetFormatError(f"{path}: line {lineno}: duplicate id {ex.id!r}")
        seen.add(ex.id)
        if len(ex.features) != man.dim:
            raise DatasetFormatError(
                f"{path}: line {lineno}: {len(ex.features)} features, manifest dim is {man.dim}"
            )
        if not 0 <= ex.label < man.num_classes:
            raise DatasetFormatError(
                f"{path}: line {lineno}: label {ex.label} out of range"
            )
        examples.append(ex)
    return EmbeddingDataset(manifest=man, examples=tuple(examples))


def write_dataset(ds: EmbeddingDataset, path) -> None:
    validate_dataset(ds)
    man = ds.manifest
    with open(path, "w", encoding="utf-8") as f:
        f.write(
            json.dumps(
                {
                    "num_classes": man.num_classes,
                    "dim": man.dim,
                    "task": man.task_name,
                    "split": man.split_name,
                }
            )
            + "\n"
        )
        for ex in ds.examples:
            rec = {"id": ex.id, "label": ex.label, "features": list(ex.features)}
            if ex.annotator_labels is not None:
                rec["annotators"] = list(ex.annotator_labels)
            if ex.meta is not None:
                rec["meta"] = ex.meta
            f.write(json.dumps(rec) + "\n")


def read_predictions(path) -> PredictionSet:
    with open(path, encoding="utf-8") as f:
        lines = f.read().splitlines()
    if not lines:
        raise DatasetFormatError(f"{path}: empty file, header line missing")
    try:
        head = json.loads(lines[0])
        model = str(head["model"])
        task = str(head.get("task", ""))
        kind = str(head["kind"])
    except (json.JSONDecodeError, KeyError) as e:
        raise DatasetFormatError(f"{path}: line 1: bad header ({e})") from e
    if kind not in ("class", "text"):
        raise DatasetFormatError(f"{path}: line 1: unknown kind {kind!r}")

    entries = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            eid = str(rec["id"])
            pred = rec["pred"]
        except (json.JSONDecodeError, KeyError) as e:
            raise DatasetFormatError(f"{path}: line {lineno}: malformed entry ({e})") from e
        if eid in entries:
            raise DatasetFormatError(f"{path}: line {lineno}: duplicate id {eid!r}")
        if kind == "class":
            if isinstance(pred, bool) or not isinstance(pred, int):
                raise DatasetFormatError(
                    f"{path}: line {lineno}: expected class index, got {pred!r}"
                )
        else:
            if not isinstance(pred, str):
                raise DatasetFormatError(
                    f"{path}: line {lineno}: expected answer string, got {pred!r}"
                )
        entries[eid] = pred
    return PredictionSet(model_name=model, task_name=task, kind=kind, entries=entries)


def write_predictions(ps: PredictionSet, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(
            json.dumps({"model": ps.model_name, "task": ps.task_name, "kind": ps.kind})
            + "\n"
        )
        for eid, pred in ps.entries.items():
            f.write(json.dumps({"id": eid, "pred": pred}) + "\n")
