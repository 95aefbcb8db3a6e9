import pytest
from hypothesis import given
from hypothesis import strategies as st

from advfilter import analysis as an
from advfilter.analysis import SubsetSpec
from advfilter.dataset import EmbeddingDataset, Example, Manifest, PredictionSet


def clf_preds(entries, model="m"):
    return PredictionSet(model_name=model, task_name="t", kind="class", entries=entries)


def txt_preds(entries, model="m"):
    return PredictionSet(model_name=model, task_name="t", kind="text", entries=entries)


def tiny_dataset(labels, annotators=None):
    examples = []
    for i, lab in enumerate(labels):
        ann = tuple(annotators[i]) if annotators else None
        examples.append(Example(f"e{i}", (0.0,), lab, ann))
    L = max(labels) + 1 if labels else 2
    return EmbeddingDataset(
        manifest=Manifest(num_classes=max(L, 3), dim=1), examples=tuple(examples)
    )


class TestAccuracy:
    def test_two_of_three(self):
        ds = tiny_dataset([0, 0, 0])
        ps = clf_preds({"e0": 0, "e1": 1, "e2": 0})
        assert an.accuracy(ps, ds, SubsetSpec.of("all", ds.ids())) == pytest.approx(2 / 3)

    def test_perfect(self):
        ds = tiny_dataset([0, 1, 2])
        ps = clf_preds({"e0": 0, "e1": 1, "e2": 2})
        assert an.accuracy(ps, ds, SubsetSpec.of("all", ds.ids())) == 1.0

    def test_827_of_1000(self):
        # scale reference: 82.7% constructed from exactly 827 correct of 1000
        ds = tiny_dataset([0] * 1000)
        ps = clf_preds({f"e{i}": (0 if i < 827 else 1) for i in range(1000)})
        assert an.accuracy(ps, ds, SubsetSpec.of("all", ds.ids())) == pytest.approx(0.827)

    def test_missing_prediction(self):
        ds = tiny_dataset([0, 0])
        ps = clf_preds({"e0": 0})
        with pytest.raises(KeyError):
            an.accuracy(ps, ds, SubsetSpec.of("all", ds.ids()))

    def test_empty_subset(self):
        ds = tiny_dataset([0])
        with pytest.raises(ValueError):
            an.accuracy(clf_preds({"e0": 0}), ds, SubsetSpec.of("none", []))

    def test_kind_mismatch(self):
        ds = tiny_dataset([0])
        with pytest.raises(ValueError):
            an.accuracy(txt_preds({"e0": "x"}), ds, SubsetSpec.of("all", ["e0"]))

    def test_partition_additivity(self):
        ds = tiny_dataset([0, 1, 0, 1, 0])
        ps = clf_preds({"e0": 0, "e1": 0, "e2": 0, "e3": 1, "e4": 1})
        full = SubsetSpec.of("s", ds.ids())
        a = SubsetSpec.of("a", ["e0", "e1"])
        b = SubsetSpec.of("b", ["e2", "e3", "e4"])
        lhs = an.accuracy(ps, ds, full)
        rhs = (an.accuracy(ps, ds, a) * 2 + an.accuracy(ps, ds, b) * 3) / 5
        assert lhs == pytest.approx(rhs)


class TestRankModels:
    def test_simple_order(self):
        r = an.rank_models({"A": 0.9, "B": 0.8})
        assert r.entries == (("A", 0.9, 1), ("B", 0.8, 2))

    def test_competition_ties(self):
        r = an.rank_models({"A": 0.8, "B": 0.8, "C": 0.7})
        assert r.entries == (("A", 0.8, 1), ("B", 0.8, 1), ("C", 0.7, 3))

    def test_singleton(self):
        assert an.rank_models({"only": 0.5}).entries == (("only", 0.5, 1),)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            an.rank_models({})

    @given(st.dictionaries(st.sampled_from("ABCDEF"), st.floats(0, 1), min_size=1))
    def test_monotone_transform_invariance(self, scores):
        before = [(m, r) for m, _, r in an.rank_models(scores).entries]
        after = [
            (m, r)
            for m, _, r in an.rank_models(
                {k: 3 * v for k, v in scores.items()}  # exact and strictly monotone in floats
            ).entries
        ]
        assert before == after


class TestSelfFilterRankChange:
    def test_identical_scores_zero_delta(self):
        scores = {"A": 0.9, "B": 0.8, "C": 0.7}
        filt = {m: dict(scores) for m in scores}
        deltas = an.self_filter_rank_change(scores, filt, {m: m for m in scores})
        assert deltas == {"A": 0, "B": 0, "C": 0}

    def test_top_model_falls_two(self):
        unf = {"A": 0.9, "B": 0.8, "C": 0.7}
        filt = {
            "A": {"A": 0.5, "B": 0.8, "C": 0.7},  # A's own filter sinks A below both
            "B": dict(unf),
            "C": dict(unf),
        }
        deltas = an.self_filter_rank_change(unf, filt, {m: m for m in unf})
        assert deltas["A"] == 2

    def test_missing_pairing(self):
        with pytest.raises(KeyError):
            an.self_filter_rank_change({"A": 1.0}, {}, {})

    def test_zero_sum_when_everything_identical(self):
        scores = {"A": 0.3, "B": 0.2, "C": 0.9, "D": 0.5}
        filt = {m: dict(scores) for m in scores}
        deltas = an.self_filter_rank_change(scores, filt, {m: m for m in scores})
        assert sum(deltas.values()) == 0


class TestAgreement:
    def test_three_of_five(self):
        # annotators [e,e,e,n,c] vs gold e -> 0.6
        ds = tiny_dataset([0], annotators=[[0, 0, 0, 1, 2]])
        assert an.agreement_rate(ds, SubsetSpec.of("s", ["e0"])) == pytest.approx(0.6)

    def test_unanimous(self):
        ds = tiny_dataset([1, 0], annotators=[[1, 1, 1], [0, 0, 0]])
        assert an.agreement_rate(ds, SubsetSpec.of("s", ds.ids())) == 1.0

    def test_mean_of_two(self):
        ds = tiny_dataset([0, 0], annotators=[[0, 0, 0, 0, 0], [0, 0, 0, 1, 2]])
        assert an.agreement_rate(ds, SubsetSpec.of("s", ds.ids())) == pytest.approx(0.8)

    def test_missing_annotators(self):
        ds = tiny_dataset([0])
        with pytest.raises(ValueError):
            an.agreement_rate(ds, SubsetSpec.of("s", ["e0"]))

    def test_full_set_is_weighted_mean_of_phases(self):
        ann = [[0, 0, 0], [0, 1, 1], [1, 1, 1], [0, 0, 1], [1, 0, 1]]
        ds = tiny_dataset([0, 0, 1, 0, 1], annotators=ann)
        phases = {"first": ["e0", "e1"], "later": ["e2"], "selected": ["e3", "e4"]}
        full = an.agreement_rate(ds, SubsetSpec.of("full", ds.ids()))
        weighted = sum(
            an.agreement_rate(ds, SubsetSpec.of(n, ids)) * len(ids)
            for n, ids in phases.items()
        ) / len(ds)
        assert full == pytest.approx(weighted)

    def test_majority_reference_variant(self):
        # gold 0 but annotators lean 1: majority-referenced is higher
        ds = tiny_dataset([0], annotators=[[1, 1, 1, 0, 0]])
        sub = SubsetSpec.of("s", ["e0"])
        assert an.agreement_rate(ds, sub, reference="gold") == pytest.approx(0.4)
        assert an.agreement_rate(ds, sub, reference="majority") == pytest.approx(0.6)


class TestQAMetrics:
    def gold(self):
        return {"q1": ["cat"], "q2": ["cat"], "q3": ["cat", "black cat"]}

    def test_article_removal_full_credit(self):
        ps = txt_preds({"q1": "the cat"})
        assert an.qa_f1(ps, self.gold(), SubsetSpec.of("s", ["q1"])) == 1.0
        assert an.qa_em(ps, self.gold(), SubsetSpec.of("s", ["q1"])) == 1.0

    def test_disjoint_tokens(self):
        ps = txt_preds({"q1": "dog"})
        assert an.qa_f1(ps, self.gold(), SubsetSpec.of("s", ["q1"])) == 0.0

    def test_partial_overlap_f1(self):
        ps = txt_preds({"q1": "black cat"})
        f1 = an.qa_f1(ps, self.gold(), SubsetSpec.of("s", ["q1"]))
        assert abs(f1 - 2 / 3) < 1e-12

    def test_em_normalization(self):
        ps = txt_preds({"q1": "Cat."})
        assert an.qa_em(ps, self.gold(), SubsetSpec.of("s", ["q1"])) == 1.0

    def test_em_rejects_superset(self):
        ps = txt_preds({"q1": "the black cat"})
        assert an.qa_em(ps, self.gold(), SubsetSpec.of("s", ["q1"])) == 0.0

    def test_em_max_over_variants(self):
        ps = txt_preds({"q3": "black cat"})
        assert an.qa_em(ps, self.gold(), SubsetSpec.of("s", ["q3"])) == 1.0

    def test_kind_mismatch(self):
        with pytest.raises(ValueError):
            an.qa_f1(clf_preds({"q1": 0}), self.gold(), SubsetSpec.of("s", ["q1"]))

    @given(
        st.dictionaries(
            st.sampled_from(["q1", "q2", "q3"]),
            st.text(alphabet="abct he ", max_size=12),
            min_size=1,
        )
    )
    def test_f1_dominates_em(self, entries):
        ps = txt_preds(entries)
        sub = SubsetSpec.of("s", entries.keys())
        assert an.qa_f1(ps, self.gold(), sub) >= an.qa_em(ps, self.gold(), sub) - 1e-12


class TestAggregate:
    def test_singleton(self):
        assert an.aggregate_runs([0.5]) == {"mean": 0.5, "std": 0.0, "count": 1}

    def test_pair(self):
        agg = an.aggregate_runs([0.4, 0.6])
        assert agg["mean"] == pytest.approx(0.5)
        assert agg["std"] == pytest.approx(0.1)
        assert agg["count"] == 2

    def test_constant(self):
        assert an.aggregate_runs([1, 1, 1]) == {"mean": 1.0, "std": 0.0, "count": 3}

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            an.aggregate_runs([])
