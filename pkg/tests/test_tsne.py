import numpy as np
import pytest

from subfusion import kl_divergence, tsne
from subfusion.errors import InvalidDistribution, PerplexityInfeasible, TooFewSamples
from subfusion.tsne import (
    _squared_distances,
    _student_t_kernel,
    calibrate_bandwidths,
    joint_probabilities,
    tsne_kl_and_grad,
)

from oracles import central_difference_gradient


def blob_data(rng, n_per=20, n_blobs=3, dim=5, spread=12.0):
    rows, labels = [], []
    for b in range(n_blobs):
        center = np.zeros(dim)
        center[b % dim] = spread
        rows.append(center + rng.normal(0, 1.0, (n_per, dim)))
        labels += [b] * n_per
    return np.vstack(rows), np.array(labels)


class TestKlDivergence:
    def test_self_divergence_zero(self, rng):
        Y = rng.normal(size=(8, 2))
        Q, _ = _student_t_kernel(Y)
        assert kl_divergence(Q, Y) <= 1e-10

    def test_nonnegative_on_random_inputs(self, rng):
        for _ in range(20):
            n = int(rng.integers(4, 12))
            P = np.abs(rng.normal(size=(n, n)))
            P = P + P.T
            np.fill_diagonal(P, 0.0)
            P /= P.sum()
            Y = rng.normal(size=(n, 2))
            assert kl_divergence(P, Y) >= -1e-12

    def test_coincident_points_match_double_loop(self):
        n = 6
        Y = np.full((n, 2), 1.0) + 1e-9 * np.arange(2 * n).reshape(n, 2)
        P = np.full((n, n), 1.0)
        np.fill_diagonal(P, 0.0)
        P /= P.sum()
        num = np.zeros((n, n))
        for i in range(n):
            for j in range(n):
                if i != j:
                    num[i, j] = 1.0 / (1.0 + np.sum((Y[i] - Y[j]) ** 2))
        reference = 0.0
        for i in range(n):
            for j in range(n):
                if i != j and P[i, j] > 0:
                    reference += P[i, j] * np.log(P[i, j] / (num[i, j] / num.sum()))
        assert abs(kl_divergence(P, Y) - reference) < 1e-8

    def test_invalid_inputs(self, rng):
        Y = rng.normal(size=(4, 2))
        bad_sum = np.full((4, 4), 0.25)
        with pytest.raises(InvalidDistribution):
            kl_divergence(bad_sum, Y)
        asym = np.zeros((4, 4))
        asym[0, 1] = 1.0
        with pytest.raises(InvalidDistribution):
            kl_divergence(asym, Y)
        neg = np.zeros((4, 4))
        neg[0, 1] = neg[1, 0] = 0.75
        neg[2, 3] = neg[3, 2] = -0.25
        with pytest.raises(InvalidDistribution):
            kl_divergence(neg, Y)


class TestBandwidthSearch:
    def test_hits_requested_perplexity(self, rng):
        X, _ = blob_data(rng, n_per=15, n_blobs=3, dim=4)
        for perp in (5.0, 12.0):
            P, _ = calibrate_bandwidths(_squared_distances(X), perp)
            for i in range(X.shape[0]):
                row = P[i][P[i] > 0]
                achieved = float(np.exp(-np.sum(row * np.log(row))))
                assert abs(achieved - perp) / perp <= 1e-4

    def test_joint_probabilities_valid(self, rng):
        X, _ = blob_data(rng, n_per=10)
        P = joint_probabilities(X, 8.0)
        assert abs(P.sum() - 1.0) < 1e-12
        np.testing.assert_allclose(P, P.T, atol=1e-15)
        assert np.all(np.diag(P) == 0.0)


class TestGradient:
    def test_matches_finite_differences(self, rng):
        Y = rng.normal(size=(6, 2))
        P = np.abs(rng.normal(size=(6, 6)))
        P = P + P.T
        np.fill_diagonal(P, 0.0)
        P /= P.sum()
        _, analytic = tsne_kl_and_grad(P, Y)
        numeric = central_difference_gradient(lambda y: tsne_kl_and_grad(P, y)[0], Y)
        rel = np.abs(analytic - numeric).max() / max(np.abs(numeric).max(), 1e-12)
        assert rel <= 1e-5


class TestTsne:
    def test_deterministic(self, rng):
        X, _ = blob_data(rng, n_per=8, n_blobs=2)
        a = tsne(X, perplexity=4, iters=60, seed=9)
        b = tsne(X, perplexity=4, iters=60, seed=9)
        np.testing.assert_array_equal(a.Y, b.Y)
        np.testing.assert_array_equal(a.kl_history, b.kl_history)

    def test_kl_final_below_exaggeration_end(self, rng):
        X, _ = blob_data(rng, n_per=12, n_blobs=3)
        result = tsne(X, perplexity=8, iters=400, seed=0)
        assert result.kl_history[-1] <= result.kl_history[249]

    def test_duplicated_rows_embed_close(self, rng):
        X, _ = blob_data(rng, n_per=10, n_blobs=2)
        X = np.vstack([X, X[3]])  # duplicate one row
        result = tsne(X, perplexity=5, iters=300, seed=4)
        dup = np.linalg.norm(result.Y[3] - result.Y[-1])
        d2 = _squared_distances(result.Y)
        median = np.median(np.sqrt(d2[np.triu_indices_from(d2, k=1)]))
        assert dup < median

    def test_perplexity_clipped(self, rng):
        X = rng.normal(size=(10, 3))
        result = tsne(X, perplexity=100.0, iters=30, seed=0)
        assert result.perplexity == pytest.approx(3.0)  # (10-1)/3

    def test_too_few_samples(self, rng):
        with pytest.raises(TooFewSamples):
            tsne(rng.normal(size=(4, 3)), perplexity=2, iters=10, seed=0)

    def test_perplexity_infeasible(self, rng):
        # n in {5, 6}: the clipping interval [2, (n-1)/3] is empty
        with pytest.raises(PerplexityInfeasible):
            tsne(rng.normal(size=(5, 3)), perplexity=2, iters=10, seed=0)
