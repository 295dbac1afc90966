import numpy as np
import pytest

from subfusion import (
    Figure1Config,
    SfmConfig,
    SoftmaxHyper,
    accuracy_metrics,
    compare_experiment,
    mean_average_precision,
)
from subfusion.errors import LengthMismatch, NoPositives

from oracles import brute_average_precision


class TestAccuracy:
    def test_perfect(self):
        truth = np.array([0, 1, 2, 1])
        acc, per_class, confusion = accuracy_metrics(truth, truth, 3)
        assert acc == 1.0
        np.testing.assert_array_equal(per_class, 1.0)
        assert np.trace(confusion) == 4

    def test_constant_predictor(self):
        truth = np.repeat([0, 1], 10)
        preds = np.zeros(20, dtype=int)
        acc, per_class, _ = accuracy_metrics(preds, truth, 2)
        assert acc == 0.5
        np.testing.assert_array_equal(per_class, [1.0, 0.0])

    def test_confusion_golden(self):
        truth = np.array([0, 0, 1, 1])
        preds = np.array([0, 1, 1, 1])
        acc, _, confusion = accuracy_metrics(preds, truth, 2)
        np.testing.assert_array_equal(confusion, [[1, 1], [0, 2]])
        assert acc == 0.75

    def test_row_sums_equal_class_counts(self, rng):
        truth = rng.integers(0, 4, size=100)
        preds = rng.integers(0, 4, size=100)
        _, _, confusion = accuracy_metrics(preds, truth, 4)
        np.testing.assert_array_equal(
            confusion.sum(axis=1), np.bincount(truth, minlength=4)
        )

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            accuracy_metrics(np.array([0, 1]), np.array([0]), 2)


class TestMeanAveragePrecision:
    def test_perfect_ranking(self):
        scores = np.array([[0.9, 0.1], [0.8, 0.2], [0.2, 0.8], [0.1, 0.9]])
        truth = np.array([0, 0, 1, 1])
        map_score, per_class = mean_average_precision(scores, truth)
        assert map_score == 1.0
        np.testing.assert_array_equal(per_class, [1.0, 1.0])

    def test_positives_at_ranks_one_and_three(self):
        # class-0 ranking: positives land at ranks 1 and 3 of 4
        scores = np.array([[0.9, 0.0], [0.7, 0.0], [0.5, 0.0], [0.3, 0.0]])
        truth = np.array([0, 1, 0, 1])
        _, per_class = mean_average_precision(scores, truth)
        expected = brute_average_precision(scores[:, 0], truth == 0)
        assert expected == pytest.approx(5 / 6)
        assert per_class[0] == pytest.approx(float(expected), abs=1e-12)

    def test_random_scores_ap_near_positive_rate(self, rng):
        n = 2000
        truth = rng.integers(0, 2, size=n)
        scores = rng.normal(size=(n, 2))
        _, per_class = mean_average_precision(scores, truth)
        for c in (0, 1):
            rate = np.mean(truth == c)
            assert abs(per_class[c] - rate) < 0.1

    def test_rank_invariance_under_monotone_transform(self, rng):
        scores = rng.normal(size=(30, 3))
        truth = rng.integers(0, 3, size=30)
        base, _ = mean_average_precision(scores, truth)
        warped = scores.copy()
        warped[:, 1] = np.exp(3.0 * warped[:, 1]) + 7.0  # strictly increasing
        again, _ = mean_average_precision(warped, truth)
        assert base == pytest.approx(again, abs=1e-12)

    def test_ties_broken_by_sample_index(self):
        scores = np.zeros((3, 2))  # all tied: ranking is by index
        truth = np.array([1, 0, 0])
        _, per_class = mean_average_precision(scores, truth)
        # class 0 positives at ranks 2,3 -> AP = (1/2 + 2/3)/2
        assert per_class[0] == pytest.approx((1 / 2 + 2 / 3) / 2)

    def test_class_without_positives_flagged(self):
        scores = np.random.default_rng(0).normal(size=(6, 3))
        truth = np.array([0, 0, 1, 1, 0, 1])  # class 2 never appears
        with pytest.warns(NoPositives):
            map_score, per_class = mean_average_precision(scores, truth)
        assert np.isnan(per_class[2])
        assert map_score == pytest.approx(np.nanmean(per_class))


class TestCompareExperiment:
    CFG = SfmConfig(
        k_source="manual",
        k_values=(1, 1, 2, 2),
        mode="ssc_full_dim",
        hyper=SoftmaxHyper(learning_rate=1.0, epochs=60),
    )

    def test_all_ones_arms_identical(self):
        ones = SfmConfig(
            k_source="manual",
            k_values=(1, 1, 1, 1),
            hyper=SoftmaxHyper(epochs=40),
        )
        report = compare_experiment(Figure1Config(n_per_class=40), ones, seeds=[5])
        record = report.records[0]
        assert record["baseline_acc"] == record["sfm_acc"] == record["random_sfm_acc"]

    def test_deterministic_and_shared_split(self):
        a = compare_experiment(Figure1Config(n_per_class=40), self.CFG, seeds=[3])
        b = compare_experiment(Figure1Config(n_per_class=40), self.CFG, seeds=[3])
        assert a.to_dict() == b.to_dict()
        assert a.records[0]["split_hash"] == b.records[0]["split_hash"]

    def test_aggregates(self):
        report = compare_experiment(
            Figure1Config(n_per_class=40), self.CFG, seeds=[1, 2]
        )
        accs = [r["sfm_acc"] for r in report.records]
        assert report.mean("sfm_acc") == pytest.approx(np.mean(accs))
        assert report.std("sfm_acc") == pytest.approx(np.std(accs))
