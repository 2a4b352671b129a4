import numpy as np
import pytest

from fontimp.estimator import EnsembleParams, MultiLabelParams
from fontimp.exemplar import read_feature_store
from fontimp.simulate import (
    CorruptionParams,
    SimulationError,
    calibrate_sigma,
    export_corpus,
    generate_corpus,
    make_queries,
    mean_pairwise_jaccard,
    run_comparison,
    top1_accuracy,
)


class TestCorruptionParams:
    def test_rates_validated(self):
        with pytest.raises(SimulationError):
            CorruptionParams(miss_rate=1.5)
        with pytest.raises(SimulationError):
            CorruptionParams(noise_rate=-0.1)


class TestGenerateCorpus:
    def test_no_corruption_keeps_labels(self):
        m = generate_corpus(50, 2, 10, 3, CorruptionParams(0.0, 0.0, seed=1))
        assert m.observed_tags == m.true_tags

    def test_full_miss_empties_labels(self):
        m = generate_corpus(50, 2, 10, 3, CorruptionParams(1.0, 0.0, seed=1))
        assert all(not tags for tags in m.observed_tags)

    def test_seed_determinism(self):
        a = generate_corpus(40, 3, 12, 4, CorruptionParams(0.3, 0.2, seed=9))
        b = generate_corpus(40, 3, 12, 4, CorruptionParams(0.3, 0.2, seed=9))
        assert np.array_equal(a.font_centers, b.font_centers)
        assert a.true_tags == b.true_tags
        assert a.observed_tags == b.observed_tags

    def test_observed_within_true_plus_noise(self):
        m = generate_corpus(80, 2, 15, 4, CorruptionParams(0.4, 0.5, seed=3))
        for true, obs in zip(m.true_tags, m.observed_tags):
            extra = obs - true
            assert len(extra) <= 1  # at most one injected noise tag

    def test_tags_per_font(self):
        m = generate_corpus(30, 2, 10, 4, CorruptionParams(0, 0, seed=0))
        assert all(len(t) == 4 for t in m.true_tags)

    def test_nearby_fonts_share_tags(self):
        m = generate_corpus(200, 2, 20, 4, CorruptionParams(0, 0, seed=2))
        dists = np.linalg.norm(m.font_centers[:, None] - m.font_centers[None], axis=-1)
        np.fill_diagonal(dists, np.inf)
        overlaps = []
        for i in range(m.n_fonts):
            j = int(np.argmin(dists[i]))
            overlaps.append(len(m.true_tags[i] & m.true_tags[j]) / 4)
        assert np.mean(overlaps) > 0.5

    def test_invalid_args(self):
        with pytest.raises(SimulationError):
            generate_corpus(0, 2, 10, 3, CorruptionParams())
        with pytest.raises(SimulationError):
            generate_corpus(10, 2, 3, 5, CorruptionParams())


class TestQueriesAndCalibration:
    def test_sigma_zero_queries_sit_on_centers(self):
        m = generate_corpus(20, 2, 8, 2, CorruptionParams(0, 0, seed=4))
        queries = make_queries(m, sigma=0.0, seed=5)
        for q in queries:
            assert np.array_equal(q.feature, m.font_centers[q.font_index])

    def test_negative_sigma_rejected(self):
        m = generate_corpus(5, 2, 4, 2, CorruptionParams(0, 0, seed=0))
        with pytest.raises(SimulationError):
            make_queries(m, sigma=-1.0, seed=0)

    def test_calibrated_accuracy_in_band(self):
        m = generate_corpus(300, 1, 84, 4, CorruptionParams(0.3, 0.1, seed=0))
        sigma = calibrate_sigma(m, target_accuracy=0.8, seed=0)
        acc = top1_accuracy(m, sigma, seed=0)
        assert 0.7 <= acc <= 0.9


class TestRunComparison:
    def test_clean_corpus_perfect_ensemble(self):
        # sigma=0, no corruption, n_tilde=1, p=1: prediction == own true tags.
        # Small corpus in 2-D so every tag has at least one true occurrence.
        m = generate_corpus(60, 2, 8, 3, CorruptionParams(0.0, 0.0, seed=6))
        assert set().union(*m.true_tags) == set(m.tag_names)
        queries = make_queries(m, sigma=0.0, seed=7)
        result = run_comparison(m, queries, EnsembleParams(1, 1), MultiLabelParams(0.5),
                                temperature=0.01)
        assert result.ensemble_report.macro_f1 == 1.0
        assert result.baseline_report.macro_f1 == 1.0

    def test_end_to_end_seed_determinism(self):
        reports = []
        for _ in range(2):
            m = generate_corpus(100, 1, 20, 4, CorruptionParams(0.3, 0.1, seed=8))
            sigma = calibrate_sigma(m, seed=8)
            queries = make_queries(m, sigma=sigma, seed=9)
            r = run_comparison(m, queries, EnsembleParams(11, 3), MultiLabelParams(0.3))
            reports.append(r)
        assert reports[0].ensemble_report == reports[1].ensemble_report
        assert reports[0].baseline_report == reports[1].baseline_report

    def test_corruption_favors_ensemble(self):
        diffs = []
        for seed in range(5):
            m = generate_corpus(300, 1, 84, 4, CorruptionParams(0.3, 0.1, seed=seed))
            sigma = calibrate_sigma(m, seed=seed)
            queries = make_queries(m, sigma=sigma, seed=seed + 1000)
            r = run_comparison(m, queries, EnsembleParams(11, 3), MultiLabelParams(0.3))
            diffs.append(r.ensemble_report.macro_f1 - r.baseline_report.macro_f1)
        assert np.mean(diffs) > 0

    def test_miss_rate_hurts_baseline_recall_faster(self):
        # averaged over 10 seeds; reported as a mean property, not per-seed
        def mean_recalls(miss):
            ens, base = [], []
            for seed in range(10):
                m = generate_corpus(150, 1, 30, 4, CorruptionParams(miss, 0.1, seed=seed))
                sigma = calibrate_sigma(m, seed=seed, n_probe=150)
                queries = make_queries(m, sigma=sigma, seed=seed + 50)
                r = run_comparison(m, queries, EnsembleParams(11, 3), MultiLabelParams(0.3))
                ens.append(r.ensemble_report.macro_recall)
                base.append(r.baseline_report.macro_recall)
            return np.mean(ens), np.mean(base)

        ens_lo, base_lo = mean_recalls(0.1)
        ens_hi, base_hi = mean_recalls(0.5)
        assert base_lo - base_hi >= ens_lo - ens_hi


def test_mean_pairwise_jaccard():
    assert mean_pairwise_jaccard([frozenset({"a"}), frozenset({"a"})]) == 1.0
    assert mean_pairwise_jaccard([frozenset({"a"}), frozenset({"b"})]) == 0.0
    assert mean_pairwise_jaccard([frozenset(), frozenset()]) == 1.0
    got = mean_pairwise_jaccard([frozenset({"a", "b"}), frozenset({"a"})])
    assert got == pytest.approx(0.5)


def test_export_corpus(tmp_path):
    m = generate_corpus(10, 2, 6, 2, CorruptionParams(0.2, 0.1, seed=10))
    export_corpus(m, tmp_path)
    ids, feats = read_feature_store(tmp_path / "features.csv")
    assert ids == m.font_ids()
    assert np.array_equal(feats, m.font_centers)
    observed = (tmp_path / "observed_tags.csv").read_text().splitlines()
    assert len(observed) == 10
