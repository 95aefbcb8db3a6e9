"""Adversarial filtering of evaluation datasets over pre-computed
embeddings, with the analysis battery to study its effects."""

__version__ = "0.1.0"
