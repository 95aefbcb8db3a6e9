"""Synthetic embedded datasets with controllable difficulty structure.

Three example categories:
  easy  - labels follow class centers in the first ceil(adversary_strength*d)
          coordinates; per-coordinate signal is weak, so linear
          predictability grows with the number of revealed coordinates.
  hard  - labels follow an XOR rule over the last two coordinates; no
          linear classifier can exploit it.
  noise - labels uniform, independent of features.

Annotator labels are the gold label, independently flipped per annotator
with a category-dependent probability.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .dataset import EmbeddingDataset, Example, Manifest, PredictionSet
from .weak_learner import LinearClassifier, predict_batch


@dataclass(frozen=True)
class SynthSpec:
    num_train: int = 200
    num_eval: int = 60
    dim: int = 10
    num_classes: int = 2
    easy_fraction: float = 0.6
    noise_fraction: float = 0.1
    annotator_count: int = 5
    annotator_flip_prob_easy: float = 0.05
    annotator_flip_prob_hard: float = 0.3
    adversary_strength: float = 0.8
    signal_scale: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if self.num_train < 1 or self.num_eval < 0:
            raise ValueError("num_train must be >= 1 and num_eval >= 0")
        if self.dim < 3:
            raise ValueError("dim must be >= 3 (two coordinates are reserved for the XOR rule)")
        if self.num_classes < 2:
            raise ValueError("num_classes must be >= 2")
        if not (0 <= self.easy_fraction <= 1 and 0 <= self.noise_fraction <= 1):
            raise ValueError("fractions must lie in [0, 1]")
        if self.easy_fraction + self.noise_fraction > 1 + 1e-12:
            raise ValueError("easy_fraction + noise_fraction must be <= 1")
        for p in (self.annotator_flip_prob_easy, self.annotator_flip_prob_hard):
            if not 0 <= p <= 1:
                raise ValueError("flip probabilities must lie in [0, 1]")
        if not 0 <= self.adversary_strength <= 1:
            raise ValueError("adversary_strength must lie in [0, 1]")


def _category_counts(n: int, spec: SynthSpec) -> tuple[int, int, int]:
    n_easy = round(spec.easy_fraction * n)
    n_noise = round(spec.noise_fraction * n)
    if n_easy + n_noise > n:
        n_noise = n - n_easy
    return n_easy, n - n_easy - n_noise, n_noise


def _class_centers(L: int, d_sig: int, scale: float) -> np.ndarray:
    # smooth phase construction: distinct for every (class, coord) layout
    mu = np.zeros((L, d_sig))
    for c in range(L):
        for j in range(d_sig):
            mu[c, j] = scale * math.cos(2 * math.pi * c / L + math.pi * j / d_sig)
    return mu


def generate(spec: SynthSpec):
    """Returns (train, eval, ground_truth) where ground_truth maps every
    example id to "easy" | "hard" | "noise". Deterministic given spec.seed."""
    rng = np.random.default_rng(spec.seed)
    d, L = spec.dim, spec.num_classes
    d_sig = math.ceil(spec.adversary_strength * d)
    d_sig = min(d_sig, d - 2)  # keep the XOR coordinates signal-free
    centers = _class_centers(L, d_sig, spec.signal_scale) if d_sig else None

    ground_truth = {}

    def make_examples(count: int, prefix: str) -> list[Example]:
        n_easy, n_hard, n_noise = _category_counts(count, spec)
        cats = ["easy"] * n_easy + ["hard"] * n_hard + ["noise"] * n_noise
        rng.shuffle(cats)
        out = []
        for i, cat in enumerate(cats):
            x = rng.normal(0.0, 1.0, size=d)
            if cat == "easy":
                label = int(rng.integers(L))
                if d_sig:
                    x[:d_sig] = centers[label] + rng.normal(0.0, 1.0, size=d_sig)
            elif cat == "hard":
                a = rng.choice([-1.0, 1.0])
                b = rng.choice([-1.0, 1.0])
                x[d - 2] = a * 1.4 + rng.normal(0.0, 0.3)
                x[d - 1] = b * 1.4 + rng.normal(0.0, 0.3)
                label = 0 if a * b > 0 else 1
            else:
                label = int(rng.integers(L))
            flip = (
                spec.annotator_flip_prob_easy if cat == "easy" else spec.annotator_flip_prob_hard
            )
            annotators = []
            for _ in range(spec.annotator_count):
                if rng.random() < flip:
                    wrong = int(rng.integers(L - 1))
                    annotators.append(wrong + (wrong >= label))
                else:
                    annotators.append(label)
            eid = f"{prefix}{i:05d}"
            ground_truth[eid] = cat
            out.append(
                Example(
                    id=eid,
                    features=tuple(float(v) for v in x),
                    label=label,
                    annotator_labels=tuple(annotators) if spec.annotator_count else None,
                )
            )
        return out

    train = EmbeddingDataset(
        manifest=Manifest(num_classes=L, dim=d, task_name="synth", split_name="train"),
        examples=tuple(make_examples(spec.num_train, "t")),
    )
    eval_ds = EmbeddingDataset(
        manifest=Manifest(num_classes=L, dim=d, task_name="synth", split_name="eval"),
        examples=tuple(make_examples(spec.num_eval, "v")),
    )
    return train, eval_ds, ground_truth


def simulate_model_predictions(
    dataset: EmbeddingDataset,
    teacher: LinearClassifier,
    error_rate: float,
    seed: int,
    model_name: str = "simulated",
) -> PredictionSet:
    """Teacher argmax per example, corrupted to a uniformly random *other*
    class with probability error_rate."""
    if not 0 <= error_rate <= 1:
        raise ValueError("error_rate must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    L = teacher.num_classes
    preds = predict_batch(teacher, dataset.feature_matrix())
    entries = {}
    for ex, p in zip(dataset.examples, preds):
        p = int(p)
        if rng.random() < error_rate:
            wrong = int(rng.integers(L - 1))
            p = wrong + (wrong >= p)
        entries[ex.id] = p
    return PredictionSet(
        model_name=model_name, task_name=dataset.manifest.task_name, kind="class", entries=entries
    )


def write_ground_truth(ground_truth: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for eid in ground_truth:
            f.write(json.dumps({"id": eid, "category": ground_truth[eid]}) + "\n")


def read_ground_truth(path) -> dict:
    out = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            if line.strip():
                rec = json.loads(line)
                out[rec["id"]] = rec["category"]
    return out
