"""Measurement operations: subset accuracy, model ranking, self-filtering
rank change, annotator agreement, QA F1/EM, and multi-run aggregation.

All functions are pure; rankings use competition ties (1, 2, 2, 4).
"""

from __future__ import annotations

import re
import string
from collections import Counter
from dataclasses import dataclass

from .dataset import EmbeddingDataset, PredictionSet


@dataclass(frozen=True)
class SubsetSpec:
    name: str
    ids: frozenset

    @classmethod
    def of(cls, name, ids):
        return cls(name=name, ids=frozenset(ids))


@dataclass(frozen=True)
class Ranking:
    entries: tuple  # (model_name, score, rank), rank 1 = best
    tie_policy: str = "competition"

    def rank_of(self, model: str) -> int:
        for name, _, rank in self.entries:
            if name == model:
                return rank
        raise KeyError(model)


def accuracy(preds: PredictionSet, dataset: EmbeddingDataset, subset: SubsetSpec) -> float:
    if preds.kind != "class":
        raise ValueError("accuracy needs class-kind predictions")
    if not subset.ids:
        raise ValueError(f"subset {subset.name!r} is empty")
    gold = dataset.by_id()
    correct = 0
    for eid in subset.ids:
        if eid not in gold:
            raise KeyError(f"subset id {eid!r} not in dataset")
        if eid not in preds.entries:
            raise KeyError(f"no prediction for id {eid!r}")
        correct += preds.entries[eid] == gold[eid].label
    return correct / len(subset.ids)


def rank_models(scores: dict) -> Ranking:
    """Descending by score; equal scores share a rank, listed alphabetically."""
    if not scores:
        raise ValueError("empty score map")
    ordered = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
    entries = []
    for pos, (name, score) in enumerate(ordered):
        if pos > 0 and score == ordered[pos - 1][1]:
            rank = entries[-1][2]
        else:
            rank = pos + 1
        entries.append((name, score, rank))
    return Ranking(entries=tuple(entries))


def self_filter_rank_change(
    unfiltered_scores: dict,
    filtered_scores_by_adversary: dict,
    model_to_adversary: dict,
) -> dict:
    """Per model: rank on its own adversary's filtered set minus unfiltered
    rank. Positive means the model fell."""
    base = rank_models(unfiltered_scores)
    deltas = {}
    for model in unfiltered_scores:
        if model not in model_to_adversary:
            raise KeyError(f"no adversary pairing for model {model!r}")
        adv = model_to_adversary[model]
        if adv not in filtered_scores_by_adversary:
            raise KeyError(f"no filtered scores for adversary {adv!r}")
        filt = filtered_scores_by_adversary[adv]
        if model not in filt:
            raise KeyError(f"model {model!r} missing from adversary {adv!r} scores")
        deltas[model] = rank_models(filt).rank_of(model) - base.rank_of(model)
    return deltas


def agreement_rate(
    dataset: EmbeddingDataset, subset: SubsetSpec, reference: str = "gold"
) -> float:
    """Mean per-example fraction of annotator labels matching the reference
    label. reference="gold" uses the stored gold label; "majority" uses the
    annotators' own plurality vote (lowest class index wins ties)."""
    if not subset.ids:
        raise ValueError(f"subset {subset.name!r} is empty")
    by_id = dataset.by_id()
    total = 0.0
    for eid in sorted(subset.ids):
        ex = by_id.get(eid)
        if ex is None:
            raise KeyError(f"subset id {eid!r} not in dataset")
        if not ex.annotator_labels:
            raise ValueError(f"example {eid!r} has no annotator labels")
        if reference == "gold":
            ref = ex.label
        elif reference == "majority":
            counts = Counter(ex.annotator_labels)
            top = max(counts.values())
            ref = min(c for c, v in counts.items() if v == top)
        else:
            raise ValueError(f"unknown reference {reference!r}")
        total += sum(1 for a in ex.annotator_labels if a == ref) / len(ex.annotator_labels)
    return total / len(subset.ids)


_ARTICLES = re.compile(r"\b(a|an|the)\b")
_PUNCT = str.maketrans("", "", string.punctuation)


def normalize_answer(s: str) -> str:
    """Lowercase, strip punctuation, drop articles, collapse whitespace."""
    s = s.lower().translate(_PUNCT)
    s = _ARTICLES.sub(" ", s)
    return " ".join(s.split())


def _token_f1(pred: str, gold: str) -> float:
    pred_toks = normalize_answer(pred).split()
    gold_toks = normalize_answer(gold).split()
    if not pred_toks or not gold_toks:
        return float(pred_toks == gold_toks)
    common = Counter(pred_toks) & Counter(gold_toks)
    overlap = sum(common.values())
    if overlap == 0:
        return 0.0
    precision = overlap / len(pred_toks)
    recall = overlap / len(gold_toks)
    return 2 * precision * recall / (precision + recall)


def qa_f1(preds: PredictionSet, gold: dict, subset: SubsetSpec) -> float:
    """Mean over the subset of the best token F1 against any gold answer."""
    if preds.kind != "text":
        raise ValueError("qa_f1 needs text-kind predictions")
    if not subset.ids:
        raise ValueError(f"subset {subset.name!r} is empty")
    total = 0.0
    for eid in subset.ids:
        if eid not in gold:
            raise KeyError(f"no gold answers for id {eid!r}")
        if eid not in preds.entries:
            raise KeyError(f"no prediction for id {eid!r}")
        total += max(_token_f1(preds.entries[eid], g) for g in gold[eid])
    return total / len(subset.ids)


def qa_em(preds: PredictionSet, gold: dict, subset: SubsetSpec) -> float:
    """Mean exact match after normalization, best over gold variants."""
    if preds.kind != "text":
        raise ValueError("qa_em needs text-kind predictions")
    if not subset.ids:
        raise ValueError(f"subset {subset.name!r} is empty")
    total = 0
    for eid in subset.ids:
        if eid not in gold:
            raise KeyError(f"no gold answers for id {eid!r}")
        if eid not in preds.entries:
            raise KeyError(f"no prediction for id {eid!r}")
        norm_pred = normalize_answer(preds.entries[eid])
        total += any(norm_pred == normalize_answer(g) for g in gold[eid])
    return total / len(subset.ids)


def aggregate_runs(metric_values: list) -> dict:
    """Arithmetic mean, population standard deviation, count."""
    if not metric_values:
        raise ValueError("no values to aggregate")
    n = len(metric_values)
    mean = sum(metric_values) / n
    var = sum((v - mean) ** 2 for v in metric_values) / n
    return {"mean": mean, "std": var ** 0.5, "count": n}
