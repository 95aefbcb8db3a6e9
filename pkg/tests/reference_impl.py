"""Naive reference implementation of the filtering loop, used as an oracle.

Replays the same documented sub-seed stream (SeedSequence [seed, r, j, 0]
for partitions, first state word of [seed, r, j, 1] for the train seed) but
keeps all bookkeeping as plain dicts over ids, computed step by step with
no shared code with the engine's loop. Classifier training is shared on
purpose: the oracle checks the filtering logic, not the optimizer.
"""

from dataclasses import replace

import numpy as np

from advfilter import weak_learner


def naive_aflite(train, eval_ds, config):
    """Returns per-iteration dicts:
    [{"iter", "removed_train", "removed_eval", "eval_scores", "train_scores"}],
    plus final surviving id lists and the termination reason."""
    feats = {ex.id: np.array(ex.features) for ex in list(train.examples) + list(eval_ds.examples)}
    labels = {ex.id: ex.label for ex in list(train.examples) + list(eval_ds.examples)}
    L = train.manifest.num_classes

    S = [ex.id for ex in train.examples]
    R = [ex.id for ex in eval_ds.examples]
    history = []
    r = 0
    while True:
        if len(S) <= config.n:
            reason = "reached_target_n"
            break
        if len(S) <= config.t:
            reason = "slice_underflow"
            break
        r += 1
        E_T = {i: [] for i in S}
        E_V = {i: [] for i in R}
        for j in range(1, config.m + 1):
            rng = np.random.default_rng(np.random.SeedSequence([config.seed, r, j, 0]))
            perm = rng.permutation(len(S))
            fit_ids = [S[p] for p in perm[: config.t]]
            held_ids = [S[p] for p in perm[config.t :]]
            tseed = int(np.random.SeedSequence([config.seed, r, j, 1]).generate_state(1)[0])
            clf = weak_learner.train(
                np.array([feats[i] for i in fit_ids]),
                np.array([labels[i] for i in fit_ids]),
                L,
                replace(config.train_spec, seed=tseed),
            )
            for i in held_ids:
                E_T[i].append(weak_learner.predict(clf, feats[i]))
            for i in R:
                E_V[i].append(weak_learner.predict(clf, feats[i]))

        train_scores = {
            i: (sum(1 for p in E_T[i] if p == labels[i]) / len(E_T[i]) if E_T[i] else 0.0)
            for i in S
        }
        eval_scores = {
            i: sum(1 for p in E_V[i] if p == labels[i]) / config.m for i in R
        }
        cand = sorted(
            (i for i in S if train_scores[i] >= config.tau),
            key=lambda i: (-train_scores[i], i),
        )
        removed_train = cand[: config.k]
        removed_eval = [i for i in R if eval_scores[i] >= config.tau]
        history.append(
            {
                "iter": r,
                "removed_train": sorted(removed_train),
                "removed_eval": removed_eval,
                "eval_scores": eval_scores,
                "train_scores": train_scores,
            }
        )
        S = [i for i in S if i not in set(removed_train)]
        R = [i for i in R if i not in set(removed_eval)]
        if len(removed_train) < config.k:
            reason = "slice_underflow"
            break
    return history, S, R, reason
