"""Pure-numpy mini-batch SGD for multinomial logistic regression.

Fallback backend used when the compiled kernel is unavailable (or when
ADVFILTER_BACKEND=python). Same update rule and batch order as the
compiled kernel; floating-point summation order may differ, so the two
backends agree to ~1e-9, not bit-for-bit.
"""

from __future__ import annotations

import numpy as np


def softmax_rows(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def loss_and_grad(W, b, X, y, l2):
    """Mean cross-entropy + (l2/2)*||W||^2 and its analytic gradient."""
    n = X.shape[0]
    logits = X @ W.T + b
    probs = softmax_rows(logits)
    eps = 1e-300
    loss = -np.log(probs[np.arange(n), y] + eps).mean() + 0.5 * l2 * float((W * W).sum())
    delta = probs
    delta[np.arange(n), y] -= 1.0
    gW = delta.T @ X / n + l2 * W
    gb = delta.sum(axis=0) / n
    return loss, gW, gb


def sgd_train(X, y, num_classes, perms, batch_size, lr, l2):
    """Run SGD over the given per-epoch index orders; returns (W, b)."""
    n, d = X.shape
    W = np.zeros((num_classes, d), dtype=np.float64)
    b = np.zeros(num_classes, dtype=np.float64)
    for perm in perms:
        for start in range(0, n, batch_size):
            idx = perm[start : start + batch_size]
            Xb, yb = X[idx], y[idx]
            m = len(idx)
            probs = softmax_rows(Xb @ W.T + b)
            probs[np.arange(m), yb] -= 1.0
            W -= lr * (probs.T @ Xb / m + l2 * W)
            b -= lr * (probs.sum(axis=0) / m)
    return W, b
