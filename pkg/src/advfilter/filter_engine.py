"""Iterative adversarial filtering over pre-computed embeddings.

Each round trains m weak classifiers on random partitions of the remaining
training pool, scores every remaining example by the fraction of
out-of-sample classifiers that predict its gold label, and removes the
reliably-predicted ones. Evaluation examples are scored and removed by the
same criterion but never used to fit any classifier, and there is no cap
on how many of them a round may remove.

Sub-seeding: partition j of round r uses numpy SeedSequence entropy
[run_seed, r, j, 0] for the partition permutation and the first generated
state word of SeedSequence [run_seed, r, j, 1] as the classifier's train
seed. This fixes the whole run given config.seed, independent of
scheduling or worker count.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import weak_learner
from .dataset import EmbeddingDataset
from .weak_learner import TrainSpec


@dataclass(frozen=True)
class FilterConfig:
    n: int  # stop shrinking the training pool below this size
    m: int  # weak classifiers per round
    t: int  # held-in training size per partition
    k: int  # max training removals per round
    tau: float  # predictability threshold
    seed: int = 0
    train_spec: TrainSpec = field(default_factory=TrainSpec)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if not self.t < self.n:
            raise ValueError(f"t must be < n (got t={self.t}, n={self.n})")
        if not 1 <= self.k <= self.n:
            raise ValueError(f"k must satisfy 1 <= k <= n (got k={self.k})")
        # tau > 1 is allowed as a dry-run setting: nothing is ever removed
        if self.tau < 0:
            raise ValueError("tau must be >= 0")


@dataclass(frozen=True)
class IterationRecord:
    iteration_index: int  # 1-based
    removed_eval_ids: tuple[str, ...]
    eval_scores: dict  # id -> score, for every eval example alive this round
    removed_train_ids: tuple[str, ...]


@dataclass(frozen=True)
class FilterResult:
    eval_history: tuple[IterationRecord, ...]
    eval_selected_ids: tuple[str, ...]
    train_removed: tuple[IterationRecord, ...]
    train_final_ids: tuple[str, ...]
    termination_reason: str  # "reached_target_n" | "slice_underflow"
    config: FilterConfig


def _partition_rng(seed: int, r: int, j: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, r, j, 0]))


def _train_seed(seed: int, r: int, j: int) -> int:
    return int(np.random.SeedSequence([seed, r, j, 1]).generate_state(1)[0])


def _worker_count() -> int:
    env = os.environ.get("ADVFILTER_THREADS", "")
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def _one_partition(args):
    (X_train, y_train, X_eval, L, spec, seed, r, j, t, n_alive) = args
    perm = _partition_rng(seed, r, j).permutation(n_alive)
    fit_idx = perm[:t]
    held_idx = perm[t:]
    clf = weak_learner.train(
        X_train[fit_idx], y_train[fit_idx], L, replace(spec, seed=_train_seed(seed, r, j))
    )
    held_pred = weak_learner.predict_batch(clf, X_train[held_idx])
    eval_pred = (
        weak_learner.predict_batch(clf, X_eval) if len(X_eval) else np.zeros(0, dtype=np.int64)
    )
    return held_idx, held_pred, eval_pred


def aflite_eval(
    train: EmbeddingDataset, eval: EmbeddingDataset, config: FilterConfig
) -> FilterResult:
    """Run the evaluation-set filtering variant; see module docstring.

    Training-side state never depends on the evaluation set, so the
    train_removed log is identical for any eval argument under one seed.
    """
    if (train.manifest.num_classes, train.manifest.dim) != (
        eval.manifest.num_classes,
        eval.manifest.dim,
    ):
        raise ValueError("train/eval manifests disagree on (num_classes, dim)")
    if len(train) <= config.t:
        raise ValueError(f"need |train| > t (got {len(train)} <= {config.t})")

    L = train.manifest.num_classes
    X_train_full = train.feature_matrix()
    y_train_full = train.labels()
    train_ids = train.ids()
    X_eval_full = eval.feature_matrix()
    y_eval_full = eval.labels()
    eval_ids = eval.ids()

    alive_train = list(range(len(train)))  # indices into the full arrays
    alive_eval = list(range(len(eval)))
    eval_history: list[IterationRecord] = []
    train_removed: list[IterationRecord] = []
    workers = _worker_count()

    r = 0
    reason = None
    while True:
        if len(alive_train) <= config.n:
            reason = "reached_target_n"
            break
        if len(alive_train) <= config.t:
            reason = "slice_underflow"
            break
        r += 1
        X_alive = X_train_full[alive_train]
        y_alive = y_train_full[alive_train]
        X_ev = X_eval_full[alive_eval]
        n_alive = len(alive_train)

        train_correct = np.zeros(n_alive, dtype=np.int64)
        train_total = np.zeros(n_alive, dtype=np.int64)
        eval_correct = np.zeros(len(alive_eval), dtype=np.int64)

        jobs = [
            (X_alive, y_alive, X_ev, L, config.train_spec, config.seed, r, j, config.t, n_alive)
            for j in range(1, config.m + 1)
        ]
        if workers > 1 and config.m > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_one_partition, jobs))
        else:
            results = [_one_partition(job) for job in jobs]
        for held_idx, held_pred, eval_pred in results:
            train_total[held_idx] += 1
            train_correct[held_idx] += held_pred == y_alive[held_idx]
            if len(alive_eval):
                eval_correct += eval_pred == y_eval_full[alive_eval]

        # never-held-out examples score 0 and are retained this round
        train_scores = np.where(train_total > 0, train_correct / np.maximum(train_total, 1), 0.0)
        eval_scores = eval_correct / config.m if len(alive_eval) else np.zeros(0)

        cand = [
            (train_scores[i], train_ids[alive_train[i]], i)
            for i in range(n_alive)
            if train_scores[i] >= config.tau
        ]
        cand.sort(key=lambda c: (-c[0], c[1]))
        cut = cand[: config.k]
        removed_train_pos = {c[2] for c in cut}
        removed_train_ids = tuple(sorted(train_ids[alive_train[c[2]]] for c in cut))

        removed_eval_pos = [i for i in range(len(alive_eval)) if eval_scores[i] >= config.tau]
        removed_eval_ids = tuple(eval_ids[alive_eval[i]] for i in removed_eval_pos)
        scores_rec = {
            eval_ids[alive_eval[i]]: float(eval_scores[i]) for i in range(len(alive_eval))
        }

        eval_history.append(
            IterationRecord(
                iteration_index=r,
                removed_eval_ids=removed_eval_ids,
                eval_scores=scores_rec,
                removed_train_ids=(),
            )
        )
        train_removed.append(
            IterationRecord(
                iteration_index=r,
                removed_eval_ids=(),
                eval_scores={},
                removed_train_ids=removed_train_ids,
            )
        )

        alive_train = [alive_train[i] for i in range(n_alive) if i not in removed_train_pos]
        drop = set(removed_eval_pos)
        alive_eval = [alive_eval[i] for i in range(len(alive_eval)) if i not in drop]

        if len(cut) < config.k:
            reason = "slice_underflow"
            break

    return FilterResult(
        eval_history=tuple(eval_history),
        eval_selected_ids=tuple(eval_ids[i] for i in alive_eval),
        train_removed=tuple(train_removed),
        train_final_ids=tuple(train_ids[i] for i in alive_train),
        termination_reason=reason,
        config=config,
    )


def aflite_standard(train: EmbeddingDataset, config: FilterConfig) -> FilterResult:
    """Training-set-only filtering: identical train-side run, no eval log."""
    empty = EmbeddingDataset(manifest=train.manifest, examples=())
    res = aflite_eval(train, empty, config)
    return replace(res, eval_history=())


def run_multi_seed(
    train: EmbeddingDataset,
    eval: EmbeddingDataset,
    config: FilterConfig,
    seeds: list[int],
) -> list[FilterResult]:
    if not seeds:
        raise ValueError("seeds must be non-empty")
    if len(set(seeds)) != len(seeds):
        raise ValueError("duplicate seeds")
    return [aflite_eval(train, eval, replace(config, seed=s)) for s in seeds]


def phase_breakdown(result: FilterResult, eval: EmbeddingDataset) -> dict:
    """Counts of eval examples removed in round 1, in later rounds, surviving."""
    all_ids = set(eval.ids())
    removed = {}
    for rec in result.eval_history:
        for eid in rec.removed_eval_ids:
            removed[eid] = rec.iteration_index
    touched = set(removed) | set(result.eval_selected_ids)
    if touched != all_ids:
        raise ValueError("result does not cover exactly this evaluation set")
    first = sum(1 for it in removed.values() if it == 1)
    later = sum(1 for it in removed.values() if it >= 2)
    return {"first_pass": first, "later_iterations": later, "selected": len(result.eval_selected_ids)}


# --- result file I/O -------------------------------------------------------

def write_result(result: FilterResult, path, extra_header: dict | None = None) -> None:
    cfg = result.config
    header = {
        "config": {
            "n": cfg.n, "m": cfg.m, "t": cfg.t, "k": cfg.k, "tau": cfg.tau,
            "train_spec": {
                "epochs": cfg.train_spec.epochs,
                "batch_size": cfg.train_spec.batch_size,
                "learning_rate": cfg.train_spec.learning_rate,
                "l2": cfg.train_spec.l2,
                "standardize": cfg.train_spec.standardize,
            },
        },
        "seed": cfg.seed,
        "termination": result.termination_reason,
    }
    if extra_header:
        header.update(extra_header)
    with open(path, "w", encoding="utf-8") as f:
        f.write(json.dumps(header) + "\n")
        for ev_rec, tr_rec in zip(result.eval_history, result.train_removed):
            f.write(
                json.dumps(
                    {
                        "iter": ev_rec.iteration_index,
                        "removed_eval": list(ev_rec.removed_eval_ids),
                        "eval_scores": ev_rec.eval_scores,
                        "removed_train": list(tr_rec.removed_train_ids),
                    }
                )
                + "\n"
            )
        if not result.eval_history:  # standard run: eval log empty, train log not
            for tr_rec in result.train_removed:
                f.write(
                    json.dumps(
                        {
                            "iter": tr_rec.iteration_index,
                            "removed_eval": [],
                            "eval_scores": {},
                            "removed_train": list(tr_rec.removed_train_ids),
                        }
                    )
                    + "\n"
                )
        f.write(
            json.dumps(
                {
                    "selected_eval": list(result.eval_selected_ids),
                    "final_train": list(result.train_final_ids),
                }
            )
            + "\n"
        )


def read_result(path) -> tuple[FilterResult, dict]:
    """Load a result file; returns (result, header). Config in the returned
    FilterResult is rebuilt from the header."""
    with open(path, encoding="utf-8") as f:
        lines = [json.loads(l) for l in f.read().splitlines() if l.strip()]
    header, footer = lines[0], lines[-1]
    c = header["config"]
    ts = c.get("train_spec", {})
    cfg = FilterConfig(
        n=c["n"], m=c["m"], t=c["t"], k=c["k"], tau=c["tau"], seed=header["seed"],
        train_spec=TrainSpec(
            epochs=ts.get("epochs", 20),
            batch_size=ts.get("batch_size", 256),
            learning_rate=ts.get("learning_rate", 0.01),
            l2=ts.get("l2", 1e-4),
            standardize=ts.get("standardize", False),
        ),
    )
    ev_hist, tr_hist = [], []
    for rec in lines[1:-1]:
        ev_hist.append(
            IterationRecord(
                iteration_index=rec["iter"],
                removed_eval_ids=tuple(rec["removed_eval"]),
                eval_scores=rec["eval_scores"],
                removed_train_ids=(),
            )
        )
        tr_hist.append(
            IterationRecord(
                iteration_index=rec["iter"],
                removed_eval_ids=(),
                eval_scores={},
                removed_train_ids=tuple(rec["removed_train"]),
            )
        )
    result = FilterResult(
        eval_history=tuple(ev_hist),
        eval_selected_ids=tuple(footer["selected_eval"]),
        train_removed=tuple(tr_hist),
        train_final_ids=tuple(footer["final_train"]),
        termination_reason=header["termination"],
        config=cfg,
    )
    return result, header
