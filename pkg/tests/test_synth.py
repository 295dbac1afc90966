import numpy as np
import pytest

from subfusion import (
    Figure1Config,
    SoftmaxHyper,
    SubspaceConfig,
    gen_figure1,
    gen_imbalanced,
    gen_subspaces,
    train_softmax,
)
from subfusion.classifier import predict_sub
from subfusion.errors import InvalidConfig
from subfusion.synth import figure1_mode_centers


class TestFigure1:
    def test_counts_and_mode_structure(self):
        ds, modes = gen_figure1(Figure1Config(n_per_class=100, seed=7))
        assert ds.n == 400 and ds.n_classes == 4
        for cls, expected in ((0, 1), (1, 1), (2, 2), (3, 2)):
            assert np.unique(modes[ds.labels == cls]).size == expected
        # modes partition refines the class partition
        for m in np.unique(modes):
            assert np.unique(ds.labels[modes == m]).size == 1

    def test_deterministic(self):
        a, ma = gen_figure1(Figure1Config(n_per_class=50, seed=3))
        b, mb = gen_figure1(Figure1Config(n_per_class=50, seed=3))
        np.testing.assert_array_equal(a.features, b.features)
        np.testing.assert_array_equal(ma, mb)

    def test_zero_overlap_modes_linearly_separable(self):
        # oracle: the package's own classifier trained on the six mode labels
        ds, modes = gen_figure1(Figure1Config(n_per_class=100, overlap=0.0, seed=5))
        X = (ds.features - ds.features.mean(axis=0)) / ds.features.std(axis=0)
        model = train_softmax(X, modes, SoftmaxHyper(learning_rate=1.0, epochs=400))
        acc = float(np.mean(np.argmax(predict_sub(model, X), axis=1) == modes))
        assert acc >= 0.99

    @pytest.mark.parametrize("overlap", [0.0, 0.5, 1.0])
    def test_mode_centroid_distance_invariant(self, overlap):
        cfg = Figure1Config(
            n_per_class=200, overlap=overlap, mode_separation=7.0, noise_sigma=0.6, seed=2
        )
        ds, modes = gen_figure1(cfg)
        for cls in (2, 3):
            idx = np.flatnonzero(ds.labels == cls)
            mode_ids = np.unique(modes[idx])
            centroids = [ds.features[idx][modes[idx] == m].mean(axis=0) for m in mode_ids]
            dist = np.linalg.norm(centroids[0] - centroids[1])
            assert dist >= cfg.mode_separation - 4 * cfg.noise_sigma

    def test_layout_interleaves_bimodal_classes(self):
        # the chord of class-3 modes must cross the chord of class-4 modes
        centers = figure1_mode_centers(Figure1Config(n_per_class=10))
        (p1, p2), (q1, q2) = centers[2], centers[3]

        def side(a, b, c):
            u, v = b - a, c - a
            return np.sign(u[0] * v[1] - u[1] * v[0])

        assert side(p1, p2, q1) != side(p1, p2, q2)
        assert side(q1, q2, p1) != side(q1, q2, p2)

    def test_nuisance_dims(self):
        ds, _ = gen_figure1(Figure1Config(n_per_class=30, dim=6, seed=1))
        assert ds.d == 6
        # nuisance coordinates are zero-mean noise
        assert np.abs(ds.features[:, 2:].mean(axis=0)).max() < 0.5

    def test_invalid_config(self):
        with pytest.raises(InvalidConfig):
            Figure1Config(n_per_class=3)
        with pytest.raises(InvalidConfig):
            Figure1Config(n_per_class=10, overlap=1.5)
        with pytest.raises(InvalidConfig):
            Figure1Config(n_per_class=10, noise_sigma=0.0)


class TestSubspaces:
    def test_noiseless_points_lie_in_subspace(self):
        cfg = SubspaceConfig(
            ambient_dim=3, subspace_dims=(1, 1), n_per_subspace=5, noise_sigma=0.0, seed=4
        )
        X, labels = gen_subspaces(cfg)
        for s in (0, 1):
            block = X[labels == s]
            # every point an exact scalar multiple of one direction: rank 1
            _, sv, _ = np.linalg.svd(block)
            assert sv[1] < 1e-12 * max(sv[0], 1.0)

    def test_noiseless_projector_residual(self):
        cfg = SubspaceConfig(
            ambient_dim=8, subspace_dims=(2, 3), n_per_subspace=12, noise_sigma=0.0, seed=9
        )
        X, labels = gen_subspaces(cfg)
        for s, dim in enumerate(cfg.subspace_dims):
            block = X[labels == s]
            _, _, vt = np.linalg.svd(block, full_matrices=False)
            basis = vt[:dim]
            residual = block - (block @ basis.T) @ basis
            assert np.abs(residual).max() < 1e-12

    def test_unit_norm_flag(self):
        cfg = SubspaceConfig(
            ambient_dim=5,
            subspace_dims=(2,),
            n_per_subspace=20,
            noise_sigma=0.0,
            seed=1,
            unit_norm=True,
        )
        X, _ = gen_subspaces(cfg)
        np.testing.assert_allclose(np.linalg.norm(X, axis=1), 1.0, atol=1e-12)

    def test_deterministic(self):
        cfg = SubspaceConfig(ambient_dim=6, subspace_dims=(2, 2), n_per_subspace=10, seed=2)
        X1, _ = gen_subspaces(cfg)
        X2, _ = gen_subspaces(cfg)
        np.testing.assert_array_equal(X1, X2)

    def test_invalid(self):
        with pytest.raises(InvalidConfig):
            SubspaceConfig(ambient_dim=3, subspace_dims=(3,), n_per_subspace=5)


class TestImbalanced:
    def test_exact_counts(self):
        ds = gen_imbalanced((9, 29, 17), dim=4, seed=0)
        assert ds.class_counts().tolist() == [9, 29, 17]

    def test_balanced_two_class(self):
        ds = gen_imbalanced((5, 5), dim=2, seed=0)
        assert ds.class_counts().tolist() == [5, 5]

    def test_zero_count_rejected(self):
        with pytest.raises(InvalidConfig):
            gen_imbalanced((5, 0, 3), dim=2, seed=0)
