import numpy as np
import pytest

from advfilter.dataset import EmbeddingDataset, Example, Manifest


def make_dataset(n, dim, num_classes, seed, prefix="x", annotators=None):
    """Random dataset with loosely separable structure in coordinate 0."""
    rng = np.random.default_rng(seed)
    examples = []
    for i in range(n):
        label = int(rng.integers(num_classes))
        x = rng.normal(size=dim)
        x[0] += 1.5 * (label - (num_classes - 1) / 2)
        ann = None
        if annotators:
            ann = tuple(
                int(label if rng.random() > 0.2 else rng.integers(num_classes))
                for _ in range(annotators)
            )
        examples.append(
            Example(
                id=f"{prefix}{i:04d}",
                features=tuple(float(v) for v in x),
                label=label,
                annotator_labels=ann,
            )
        )
    return EmbeddingDataset(
        manifest=Manifest(num_classes=num_classes, dim=dim, task_name="test"),
        examples=tuple(examples),
    )


@pytest.fixture
def small_train():
    return make_dataset(40, 4, 2, seed=11, prefix="t")


@pytest.fixture
def small_eval():
    return make_dataset(12, 4, 2, seed=12, prefix="v")
