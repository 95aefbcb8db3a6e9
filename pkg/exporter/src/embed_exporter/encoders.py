"""Text encoders producing fixed-dimension feature vectors.

"hash" is a dependency-free deterministic baseline (token feature hashing,
L2-normalized). "cls" and "mean" run a transformers checkpoint and pool the
designated classification token or the mean over tokens; both require the
optional transformers/torch extra.
"""

from __future__ import annotations

import hashlib
import re

import numpy as np

POOLING_POLICIES = ("hash", "cls", "mean")

_TOKEN = re.compile(r"[a-z0-9]+")


class HashingEncoder:
    """Feature-hash unigrams and bigrams into a fixed-dimension vector.

    Stable across processes and platforms: bucket and sign come from
    md5 of the token, never from Python's randomized hash().
    """

    def __init__(self, dim: int = 64):
        if dim < 1:
            raise ValueError("dim must be positive")
        self.dim = dim

    def _bucket(self, token: str) -> tuple[int, float]:
        digest = hashlib.md5(token.encode("utf-8")).digest()
        idx = int.from_bytes(digest[:4], "little") % self.dim
        sign = 1.0 if digest[4] & 1 else -1.0
        return idx, sign

    def encode_batch(self, texts: list[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=np.float64)
        for row, text in enumerate(texts):
            tokens = _TOKEN.findall(text.lower())
            grams = tokens + [f"{a}_{b}" for a, b in zip(tokens, tokens[1:])]
            for tok in grams:
                idx, sign = self._bucket(tok)
                out[row, idx] += sign
            norm = np.linalg.norm(out[row])
            if norm > 0:
                out[row] /= norm
        return out


class TransformersEncoder:
    """Pooled hidden states from a transformers checkpoint (inference only)."""

    def __init__(self, model_id: str, pooling: str, device: str = "cpu",
                 max_length: int = 128):
        if pooling not in ("cls", "mean"):
            raise ValueError("pooling must be 'cls' or 'mean'")
        import torch
        from transformers import AutoModel, AutoTokenizer

        self._torch = torch
        self.pooling = pooling
        self.device = device
        self.max_length = max_length
        self.tokenizer = AutoTokenizer.from_pretrained(model_id)
        self.model = AutoModel.from_pretrained(model_id).to(device).eval()
        self.dim = self.model.config.hidden_size

    def encode_batch(self, texts: list[str]) -> np.ndarray:
        torch = self._torch
        enc = self.tokenizer(
            texts, padding=True, truncation=True, max_length=self.max_length,
            return_tensors="pt",
        ).to(self.device)
        with torch.no_grad():
            hidden = self.model(**enc).last_hidden_state
        if self.pooling == "cls":
            pooled = hidden[:, 0]
        else:
            mask = enc["attention_mask"].unsqueeze(-1)
            pooled = (hidden * mask).sum(1) / mask.sum(1).clamp(min=1)
        return pooled.cpu().double().numpy()


def build_encoder(model_id: str, pooling: str, dim: int, device: str):
    if pooling not in POOLING_POLICIES:
        raise ValueError(f"unknown pooling policy {pooling!r}; choose from {POOLING_POLICIES}")
    if pooling == "hash":
        return HashingEncoder(dim=dim)
    return TransformersEncoder(model_id, pooling, device=device)
