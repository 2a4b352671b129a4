import numpy as np
import pytest

from fontimp.estimator import (
    EnsembleParams,
    EstimatorError,
    MultiLabelParams,
    class_weight,
    estimate_ensemble,
    estimate_multilabel,
)
from fontimp.exemplar import ExemplarSet, score_from_matrix
from fontimp.vocab import TagVocabulary


def make_exemplars(*tag_sets):
    return ExemplarSet(exemplars=tuple(
        (f"f{i}", frozenset(ts)) for i, ts in enumerate(tag_sets)))


class TestEnsembleParams:
    def test_invalid(self):
        with pytest.raises(EstimatorError):
            EnsembleParams(n_tilde=2, p=3)
        with pytest.raises(EstimatorError):
            EnsembleParams(n_tilde=2, p=0)


class TestEstimateEnsemble:
    def test_degenerate_is_argmax_tags(self):
        ex = make_exemplars({"a", "b"}, {"c"}, {"d"})
        scores = score_from_matrix([0.1, 0.8, 0.1], 3)
        est = estimate_ensemble(scores, ex, EnsembleParams(1, 1))
        assert est.selected == {"c"}
        assert est.contributing == ("f1",)

    def test_intersection_at_p2(self):
        ex = make_exemplars({"elegant", "wedding"}, {"elegant", "script"}, {"blackletter"})
        scores = score_from_matrix([0.5, 0.4, 0.1], 3)
        est = estimate_ensemble(scores, ex, EnsembleParams(2, 2))
        assert est.selected == {"elegant"}
        assert est.tag_counts == {"elegant": 2, "wedding": 1, "script": 1}

    def test_full_aggregation_is_union(self):
        ex = make_exemplars({"a"}, set(), {"b", "c"})
        scores = score_from_matrix([0.2, 0.3, 0.5], 3)
        est = estimate_ensemble(scores, ex, EnsembleParams(3, 1))
        assert est.selected == {"a", "b", "c"}

    def test_length_mismatch(self):
        ex = make_exemplars({"a"}, {"b"})
        with pytest.raises(EstimatorError):
            estimate_ensemble(score_from_matrix([1.0], 1), ex, EnsembleParams(1, 1))

    def test_monotonicity_in_p(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            n = int(rng.integers(3, 12))
            ex = make_exemplars(*[
                set(rng.choice(list("abcdef"), size=rng.integers(0, 4), replace=False))
                for _ in range(n)
            ])
            scores = score_from_matrix(rng.uniform(size=n), n)
            n_tilde = int(rng.integers(1, n + 1))
            prev = None
            for p in range(1, n_tilde + 1):
                sel = estimate_ensemble(scores, ex, EnsembleParams(n_tilde, p)).selected
                if prev is not None:
                    assert sel <= prev
                prev = sel

    def test_count_monotonicity_in_n_tilde(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            n = int(rng.integers(2, 10))
            ex = make_exemplars(*[
                set(rng.choice(list("abcd"), size=rng.integers(0, 3), replace=False))
                for _ in range(n)
            ])
            scores = score_from_matrix(rng.uniform(size=n), n)
            prev: dict[str, int] = {}
            for n_tilde in range(1, n + 1):
                counts = estimate_ensemble(scores, ex, EnsembleParams(n_tilde, 1)).tag_counts
                for t, c in prev.items():
                    assert counts.get(t, 0) >= c
                prev = counts

    def test_missing_label_compensation(self):
        # top exemplar lacks "heavy" but 2 of the top 3 carry it
        ex = make_exemplars({"bold"}, {"bold", "heavy"}, {"heavy"}, {"thin"})
        scores = score_from_matrix([0.5, 0.3, 0.15, 0.05], 4)
        est = estimate_ensemble(scores, ex, EnsembleParams(3, 2))
        assert "heavy" in est.selected
        assert "heavy" not in ex.tag_set(0)


class TestEstimateMultilabel:
    def test_all_zero_scores(self, ab_vocab):
        scores = {"a": 0.0, "b": 0.0}
        assert estimate_multilabel(scores, MultiLabelParams(theta=0.1), ab_vocab) == frozenset()

    def test_all_one_scores(self, ab_vocab):
        scores = {"a": 1.0, "b": 1.0}
        got = estimate_multilabel(scores, MultiLabelParams(theta=0.7), ab_vocab)
        assert got == {"a", "b"}

    def test_boundary_is_inclusive(self, ab_vocab):
        scores = {"a": 0.75, "b": 0.69}
        got = estimate_multilabel(scores, MultiLabelParams(theta=0.7), ab_vocab)
        assert got == {"a"}

    def test_theta_zero_selects_everything(self, ab_vocab):
        got = estimate_multilabel({"a": 0.0, "b": 0.0}, MultiLabelParams(theta=0.0), ab_vocab)
        assert got == {"a", "b"}

    def test_theta_above_one_selects_nothing(self, ab_vocab):
        got = estimate_multilabel({"a": 1.0, "b": 0.5}, MultiLabelParams(theta=1.5), ab_vocab)
        assert got == frozenset()

    def test_missing_tag_rejected(self, ab_vocab):
        with pytest.raises(EstimatorError):
            estimate_multilabel({"a": 1.0}, MultiLabelParams(), ab_vocab)


class TestClassWeight:
    def test_basic(self):
        assert class_weight(100, 25) == 3.0

    def test_tag_on_every_sample(self):
        assert class_weight(100, 100) == 0.0

    def test_paper_scale_values(self):
        assert class_weight(2_400_000, 600_000) == 3.0

    def test_zero_count_rejected(self):
        with pytest.raises(EstimatorError):
            class_weight(10, 0)

    def test_count_cannot_exceed_total(self):
        with pytest.raises(EstimatorError):
            class_weight(10, 11)
