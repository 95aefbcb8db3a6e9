"""Weak linear classifiers: L2-regularized multinomial logistic regression
fit by seeded mini-batch gradient descent.

Deliberately simple; these are the per-partition probes of the filtering
loop, not models anyone deploys. The hot SGD loop lives in a compiled
Cython kernel when available, with a numpy fallback; select explicitly via
ADVFILTER_BACKEND=python|cython.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import _sgd_py

_backend_name = "python"
_sgd_train = _sgd_py.sgd_train
if os.environ.get("ADVFILTER_BACKEND", "") != "python":
    try:
        from . import _sgd_cy

        _sgd_train = _sgd_cy.sgd_train
        _backend_name = "cython"
    except ImportError:
        if os.environ.get("ADVFILTER_BACKEND") == "cython":
            raise


def backend() -> str:
    """Name of the active SGD backend ("cython" or "python")."""
    return _backend_name


@dataclass(frozen=True)
class TrainSpec:
    epochs: int = 20
    batch_size: int = 256
    learning_rate: float = 0.01
    l2: float = 1e-4
    seed: int = 0
    standardize: bool = False

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.l2 < 0:
            raise ValueError("l2 must be non-negative")


@dataclass(frozen=True)
class LinearClassifier:
    weights: np.ndarray  # (L, d)
    bias: np.ndarray  # (L,)
    num_classes: int
    dim: int

    def __post_init__(self):
        if self.weights.shape != (self.num_classes, self.dim):
            raise ValueError("weights shape inconsistent with (num_classes, dim)")
        if self.bias.shape != (self.num_classes,):
            raise ValueError("bias shape inconsistent with num_classes")
        self.weights.setflags(write=False)
        self.bias.setflags(write=False)


def train(features, labels, num_classes: int, spec: TrainSpec) -> LinearClassifier:
    """Fit a classifier; identical (data, spec) gives identical weights.

    Batch order is a fresh seeded permutation per epoch, drawn up front so
    both backends consume the same order.
    """
    X = np.ascontiguousarray(features, dtype=np.float64)
    y = np.ascontiguousarray(labels, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("training data must be a non-empty 2-d array")
    if y.shape != (X.shape[0],):
        raise ValueError("labels length must match feature rows")
    if y.min() < 0 or y.max() >= num_classes:
        raise ValueError("label out of range")
    n, d = X.shape

    mu = sigma = None
    if spec.standardize:
        mu = X.mean(axis=0)
        sigma = X.std(axis=0)
        sigma[sigma == 0] = 1.0
        X = np.ascontiguousarray((X - mu) / sigma)

    rng = np.random.default_rng(spec.seed)
    perms = np.stack(
        [rng.permutation(n) for _ in range(spec.epochs)]
    ).astype(np.int64)
    W, b = _sgd_train(X, y, num_classes, perms, min(spec.batch_size, n),
                      spec.learning_rate, spec.l2)
    W = np.asarray(W)
    b = np.asarray(b)
    if spec.standardize:
        # fold the standardization into (W, b) so predict takes raw features
        W = W / sigma
        b = b - W @ mu
    return LinearClassifier(weights=W, bias=b, num_classes=num_classes, dim=d)


def predict(clf: LinearClassifier, features) -> int:
    """Argmax class score; ties break toward the lowest class index."""
    x = np.asarray(features, dtype=np.float64)
    if x.shape != (clf.dim,):
        raise ValueError(f"expected feature vector of length {clf.dim}")
    return int(np.argmax(clf.weights @ x + clf.bias))


def predict_batch(clf: LinearClassifier, features) -> np.ndarray:
    """Vectorized predict over rows of a feature matrix."""
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != clf.dim:
        raise ValueError(f"expected feature matrix with {clf.dim} columns")
    return np.argmax(X @ clf.weights.T + clf.bias, axis=1)
