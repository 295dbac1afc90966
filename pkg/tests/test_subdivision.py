import numpy as np
import pytest
from hypothesis import given, strategies as st

from subfusion import (
    build_fusion_matrix,
    ratio_rule_k,
    subdivide,
    suggest_k,
)
from subfusion.data import LabeledDataset, default_ids
from subfusion.errors import (
    InvalidConfig,
    InvalidCounts,
    KExceedsClassSize,
    MissingEmbedding,
)
from subfusion.subdivision import SubdivisionMap

from oracles import perm_matched_error

TWELVE_CLASS_COUNTS = (68, 85, 40, 54, 51, 32, 64, 114, 135, 104, 24, 132)


class TestRatioRule:
    def test_worked_example(self):
        assert ratio_rule_k((9, 29, 17)) == (1, 3, 2)

    def test_target_size_thirty(self):
        K = ratio_rule_k(TWELVE_CLASS_COUNTS, t=30)
        assert K == (2, 3, 1, 2, 2, 1, 2, 4, 4, 3, 1, 4)
        assert sum(K) == 29

    def test_half_to_even(self):
        assert ratio_rule_k((135,), t=30) == (4,)  # 4.5 -> 4 (even)
        assert ratio_rule_k((105,), t=30) == (4,)  # 3.5 -> 4 (even)
        assert ratio_rule_k((75,), t=30) == (2,)  # 2.5 -> 2 (even)

    def test_balanced_counts(self):
        assert ratio_rule_k((50, 50, 50)) == (1, 1, 1)

    def test_minimum_one(self):
        assert ratio_rule_k((3, 100)) == (1, 33)

    @given(
        st.lists(st.integers(min_value=1, max_value=500), min_size=1, max_size=10),
        st.integers(min_value=1, max_value=20),
    )
    def test_scale_invariance(self, counts, factor):
        scaled = [c * factor for c in counts]
        assert ratio_rule_k(counts, t=min(counts)) == ratio_rule_k(
            scaled, t=min(counts) * factor
        )

    def test_invalid_counts(self):
        with pytest.raises(InvalidCounts):
            ratio_rule_k((0, 5))
        with pytest.raises(InvalidCounts):
            ratio_rule_k((5, 5), t=-1)


def blob_dataset(rng, counts, centers):
    rows, labels = [], []
    for c, (count, center) in enumerate(zip(counts, centers)):
        rows.append(np.asarray(center) + rng.normal(0, 0.4, (count, len(center))))
        labels += [c] * count
    feats = np.vstack(rows)
    return LabeledDataset(
        feats,
        np.array(labels),
        tuple(f"c{i}" for i in range(len(counts))),
        default_ids(feats.shape[0]),
    )


class TestSubdivide:
    def test_all_ones_is_identity(self, figure1_small):
        ds, _ = figure1_small
        for mode in ("ssc_full_dim", "ssc_2d", "random", "manual"):
            sub_map = subdivide(
                ds,
                (1, 1, 1, 1),
                mode=mode,
                embedding=np.zeros((ds.n, 2)) if mode == "ssc_2d" else None,
                seed=0,
                assignments=np.zeros(ds.n, dtype=int) if mode == "manual" else None,
            )
            assert sub_map.M == ds.n_classes
            np.testing.assert_array_equal(sub_map.sub_labels, ds.labels)
            np.testing.assert_array_equal(sub_map.owner, np.arange(4))

    def test_figure1_matches_modes(self, figure1_small):
        ds, modes = figure1_small
        sub_map = subdivide(ds, (1, 1, 2, 2), mode="ssc_full_dim", seed=0)
        assert sub_map.M == 6
        for cls in (2, 3):
            idx = np.flatnonzero(ds.labels == cls)
            local = sub_map.sub_labels[idx] - sub_map.sub_labels[idx].min()
            gt = modes[idx] - modes[idx].min()
            assert perm_matched_error(local, gt, 2) <= 0.05

    def test_contiguous_index_ranges(self, figure1_small):
        ds, _ = figure1_small
        sub_map = subdivide(ds, (2, 1, 2, 1), mode="random", seed=1)
        assert sub_map.K == (2, 1, 2, 1)
        assert sub_map.owner.tolist() == [0, 0, 1, 2, 2, 3]
        sub_map.validate_against(ds.labels)

    def test_small_subcategory_merged(self, rng):
        ds = blob_dataset(rng, (10, 8), [(0.0, 0.0), (6.0, 6.0)])
        # manual assignment leaves a single-sample subcategory in class 0
        assignments = np.zeros(ds.n, dtype=int)
        assignments[0] = 1
        sub_map = subdivide(ds, (2, 1), mode="manual", assignments=assignments)
        assert sub_map.K == (1, 1)  # merged back, K decremented
        assert sub_map.M == 2

    def test_k_exceeds_class_size(self, rng):
        ds = blob_dataset(rng, (4, 30), [(0.0, 0.0), (6.0, 6.0)])
        with pytest.raises(KExceedsClassSize):
            subdivide(ds, (5, 1), mode="random")

    def test_missing_embedding(self, figure1_small):
        ds, _ = figure1_small
        with pytest.raises(MissingEmbedding):
            subdivide(ds, (1, 1, 2, 2), mode="ssc_2d")

    def test_embedding_length_checked(self, figure1_small):
        ds, _ = figure1_small
        with pytest.raises(MissingEmbedding):
            subdivide(ds, (1, 1, 2, 2), mode="ssc_2d", embedding=np.zeros((5, 2)))

    def test_random_reproducible(self, figure1_small):
        ds, _ = figure1_small
        a = subdivide(ds, (2, 2, 2, 2), mode="random", seed=7)
        b = subdivide(ds, (2, 2, 2, 2), mode="random", seed=7)
        np.testing.assert_array_equal(a.sub_labels, b.sub_labels)

    def test_ssc_2d_mode(self, rng):
        # two islands per class in a fake embedding
        coords = np.vstack(
            [
                rng.normal(0, 0.3, (10, 2)) + [4, 2],
                rng.normal(0, 0.3, (10, 2)) + [-3, -4],
                rng.normal(0, 0.3, (20, 2)) + [0, 5],
            ]
        )
        labels = np.array([0] * 20 + [1] * 20)
        ds = LabeledDataset(
            rng.normal(size=(40, 6)), labels, ("a", "b"), default_ids(40)
        )
        sub_map = subdivide(ds, (2, 1), mode="ssc_2d", embedding=coords, seed=0)
        assert sub_map.K == (2, 1)
        first = sub_map.sub_labels[:10]
        second = sub_map.sub_labels[10:20]
        assert np.unique(first).size == 1 and np.unique(second).size == 1
        assert first[0] != second[0]

    def test_manual_empty_subcategory_rejected(self, rng):
        ds = blob_dataset(rng, (6, 6), [(0.0, 0.0), (6.0, 6.0)])
        with pytest.raises(InvalidConfig):
            subdivide(ds, (3, 1), mode="manual", assignments=np.zeros(ds.n, dtype=int))


class TestFusionMatrix:
    def test_golden_shape(self, figure1_small):
        ds, _ = figure1_small
        sub_map = subdivide(ds, (1, 1, 2, 2), mode="random", seed=0)
        W = build_fusion_matrix(sub_map).W
        expected = [
            [1, 0, 0, 0, 0, 0],
            [0, 1, 0, 0, 0, 0],
            [0, 0, 1, 1, 0, 0],
            [0, 0, 0, 0, 1, 1],
        ]
        np.testing.assert_array_equal(W, expected)

    def test_identity_for_all_ones(self, figure1_small):
        ds, _ = figure1_small
        sub_map = subdivide(ds, (1, 1, 1, 1), mode="random", seed=0)
        np.testing.assert_array_equal(build_fusion_matrix(sub_map).W, np.eye(4))

    @given(st.lists(st.integers(min_value=1, max_value=4), min_size=2, max_size=6))
    def test_column_sums_one(self, K):
        M = sum(K)
        owner = np.repeat(np.arange(len(K)), K)
        sub_labels = np.arange(M)  # one sample per subcategory suffices
        sub_map = SubdivisionMap(
            K=tuple(K), M=M, sub_labels=sub_labels, owner=owner, method="manual"
        )
        W = build_fusion_matrix(sub_map).W
        np.testing.assert_array_equal(W.sum(axis=0), np.ones(M))
        for i, k in enumerate(K):
            assert W[i].sum() == k


class TestSuggestK:
    def test_tight_blob_and_split_pair(self, rng):
        single = rng.normal(0, 0.6, (40, 2))
        double = np.vstack(
            [rng.normal(0, 0.4, (20, 2)) + [6, -2], rng.normal(0, 0.4, (20, 2)) + [-6, -2]]
        )
        coords = np.vstack([single, double])
        ds = LabeledDataset(
            coords.copy(), np.array([0] * 40 + [1] * 40), ("a", "b"), default_ids(80)
        )
        assert suggest_k(coords, ds, k_max=3, seed=0) == (1, 2)

    def test_k_max_one(self, rng):
        coords = rng.normal(size=(20, 2))
        ds = LabeledDataset(
            coords.copy(), np.repeat([0, 1], 10), ("a", "b"), default_ids(20)
        )
        assert suggest_k(coords, ds, k_max=1, seed=0) == (1, 1)

    def test_requires_covering_embedding(self, figure1_small):
        ds, _ = figure1_small
        with pytest.raises(MissingEmbedding):
            suggest_k(np.zeros((3, 2)), ds, k_max=2)


class TestSubdivisionMapInvariants:
    def test_serialization_round_trip(self, figure1_small):
        ds, _ = figure1_small
        sub_map = subdivide(ds, (1, 1, 2, 2), mode="random", seed=5)
        back = SubdivisionMap.from_dict(sub_map.to_dict())
        assert back.K == sub_map.K and back.M == sub_map.M
        np.testing.assert_array_equal(back.sub_labels, sub_map.sub_labels)

    def test_empty_bin_rejected(self):
        with pytest.raises(InvalidConfig):
            SubdivisionMap(
                K=(2, 1),
                M=3,
                sub_labels=np.array([0, 0, 2, 2]),  # subcategory 1 empty
                owner=np.array([0, 0, 1]),
                method="manual",
            )

    def test_owner_mismatch_rejected(self):
        with pytest.raises(InvalidConfig):
            SubdivisionMap(
                K=(2, 1),
                M=3,
                sub_labels=np.array([0, 1, 2]),
                owner=np.array([0, 1, 1]),  # must be [0, 0, 1]
                method="manual",
            )
