"""Within-class subdivision: choosing cluster counts, clustering each class,
relabeling samples into subcategories, and building the fusion matrix.

Subcategory indices are assigned contiguously class by class, so class 0 owns
indices [0, K_0), class 1 owns [K_0, K_0+K_1), and so on. ``owner[k]`` maps a
subcategory back to its original class; the binary fusion matrix is just the
indicator of that mapping.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .data import LabeledDataset
from .errors import (
    InvalidConfig,
    InvalidCounts,
    KExceedsClassSize,
    MissingEmbedding,
)
from .ssc import DEFAULT_LAMBDA_REL, silhouette_score, ssc, random_partition
from .tsne import EmbeddingResult

SUBDIVIDE_MODES = ("ssc_full_dim", "ssc_2d", "random", "manual")
DEFAULT_MIN_SUB_SIZE = 2


@dataclass(frozen=True)
class SubdivisionMap:
    """Per-class cluster counts and the induced fine-grained labeling.

    Attributes:
        K: cluster count per original class (post-merge).
        M: total number of subcategories, sum(K).
        sub_labels: per-sample subcategory index in [0, M).
        owner: per-subcategory original class index.
        method: how the map was produced.
    """

    K: tuple[int, ...]
    M: int
    sub_labels: np.ndarray
    owner: np.ndarray
    method: str

    def __post_init__(self):
        K = tuple(int(v) for v in self.K)
        sub_labels = np.asarray(self.sub_labels, dtype=np.int64)
        owner = np.asarray(self.owner, dtype=np.int64)
        if any(v < 1 for v in K):
            raise InvalidConfig(f"all K_i must be >= 1, got {K}")
        if self.M != sum(K):
            raise InvalidConfig(f"M={self.M} but sum(K)={sum(K)}")
        if owner.shape != (self.M,):
            raise InvalidConfig("owner must have one entry per subcategory")
        expected_owner = np.repeat(np.arange(len(K)), K)
        if not np.array_equal(owner, expected_owner):
            raise InvalidConfig("owner must list each class contiguously, K_i times")
        if sub_labels.min() < 0 or sub_labels.max() >= self.M:
            raise InvalidConfig("sub_labels outside [0, M)")
        if np.unique(sub_labels).size != self.M:
            raise InvalidConfig("every subcategory must have at least one sample")
        sub_labels.setflags(write=False)
        owner.setflags(write=False)
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "sub_labels", sub_labels)
        object.__setattr__(self, "owner", owner)

    @property
    def n_classes(self) -> int:
        return len(self.K)

    def validate_against(self, labels: np.ndarray) -> None:
        """Check that no sample's subcategory is owned by a different class."""
        labels = np.asarray(labels, dtype=np.int64)
        if not np.array_equal(self.owner[self.sub_labels], labels):
            raise InvalidConfig("subdivision assigns a sample to another class's subcategory")

    def to_dict(self) -> dict:
        return {
            "K": list(self.K),
            "M": self.M,
            "sub_labels": self.sub_labels.tolist(),
            "owner": self.owner.tolist(),
            "method": self.method,
        }

    @staticmethod
    def from_dict(doc: dict) -> "SubdivisionMap":
        return SubdivisionMap(
            K=tuple(doc["K"]),
            M=int(doc["M"]),
            sub_labels=np.asarray(doc["sub_labels"], dtype=np.int64),
            owner=np.asarray(doc["owner"], dtype=np.int64),
            method=str(doc["method"]),
        )


@dataclass(frozen=True)
class FusionMatrix:
    """Binary (L, M) membership weights: W[i, k] = 1 iff owner[k] == i."""

    W: np.ndarray

    def __post_init__(self):
        W = np.asarray(self.W, dtype=np.float64)
        if W.ndim != 2 or not np.all((W == 0.0) | (W == 1.0)):
            raise InvalidConfig("fusion weights must be a binary matrix")
        if not np.all(W.sum(axis=0) == 1.0):
            raise InvalidConfig("every subcategory must belong to exactly one class")
        W.setflags(write=False)
        object.__setattr__(self, "W", W)


def ratio_rule_k(counts, t: float | None = None) -> tuple[int, ...]:
    """Cluster counts from class-size ratios: K_i = max(1, round(counts_i / t)).

    ``t`` defaults to the minority class count, so the rule reads "split every
    class into minority-sized chunks"; passing an explicit ``t`` retargets the
    intended subcategory size. Rounding is exact half-to-even on the true
    rational ratio.
    """
    counts = [int(c) for c in counts]
    if not counts or any(c < 1 for c in counts):
        raise InvalidCounts(f"counts must all be >= 1, got {counts}")
    if t is None:
        t = min(counts)
    if not t > 0:
        raise InvalidCounts(f"t must be positive, got {t}")
    t_frac = Fraction(t) if isinstance(t, int) else Fraction(float(t))
    return tuple(max(1, round(Fraction(c) / t_frac)) for c in counts)


def build_fusion_matrix(sub_map: SubdivisionMap) -> FusionMatrix:
    """Indicator matrix of subcategory ownership, one 1 per column."""
    W = np.zeros((sub_map.n_classes, sub_map.M))
    W[sub_map.owner, np.arange(sub_map.M)] = 1.0
    return FusionMatrix(W=W)


def cluster_in_plane(coords: np.ndarray, k: int, lambda_rel: float, seed: int) -> np.ndarray:
    """Sparse-representation clustering of 2-D embedding coordinates; shared
    by the subdivision step and the interactive preview."""
    coords = np.asarray(coords, dtype=np.float64)
    if k == 1:
        return np.zeros(coords.shape[0], dtype=np.int64)
    return ssc(coords.T, k, lambda_rel=lambda_rel, seed=seed)


def _child_seed(seed: int, class_idx: int) -> int:
    return int(np.random.SeedSequence([int(seed), int(class_idx)]).generate_state(1)[0])


def _merge_small(
    local: np.ndarray, points: np.ndarray, k: int, min_sub_size: int
) -> tuple[np.ndarray, int]:
    """Merge clusters below ``min_sub_size`` into their nearest sibling by
    centroid distance, relabeling contiguously."""
    local = local.copy()
    while k > 1:
        counts = np.bincount(local, minlength=k)
        small = np.flatnonzero((counts < min_sub_size) & (counts > 0))
        if small.size == 0:
            break
        victim = int(small[np.argmin(counts[small])])
        centroids = np.vstack([points[local == c].mean(axis=0) for c in range(k)])
        dists = np.linalg.norm(centroids - centroids[victim], axis=1)
        dists[victim] = np.inf
        target = int(np.argmin(dists))
        local[local == victim] = target
        # compact labels so they stay contiguous in [0, k-1)
        remap = np.full(k, -1, dtype=np.int64)
        remap[np.unique(local)] = np.arange(k - 1)
        local = remap[local]
        k -= 1
    return local, k


def subdivide(
    ds: LabeledDataset,
    K,
    mode: str,
    embedding: EmbeddingResult | np.ndarray | None = None,
    seed: int = 0,
    lambda_rel: float = DEFAULT_LAMBDA_REL,
    min_sub_size: int = DEFAULT_MIN_SUB_SIZE,
    assignments: np.ndarray | None = None,
) -> SubdivisionMap:
    """Cluster each class into K_i subcategories and relabel the samples.

    ``ssc_full_dim`` clusters on the dataset's feature matrix, ``ssc_2d`` on
    the supplied embedding coordinates, ``random`` draws a seeded nonempty
    partition, and ``manual`` consumes caller-supplied within-class cluster
    indices. Subcategories smaller than ``min_sub_size`` are merged into
    their nearest sibling and K_i decremented accordingly.
    """
    if mode not in SUBDIVIDE_MODES:
        raise InvalidConfig(f"unknown subdivision mode {mode!r}")
    K = [int(v) for v in K]
    if len(K) != ds.n_classes:
        raise InvalidConfig(f"K has {len(K)} entries for {ds.n_classes} classes")
    if any(v < 1 for v in K):
        raise InvalidConfig(f"all K_i must be >= 1, got {K}")
    counts = ds.class_counts()
    over = [i for i in range(ds.n_classes) if K[i] > counts[i]]
    if over:
        raise KExceedsClassSize(
            f"K exceeds class size for classes {over}: "
            f"K={[K[i] for i in over]}, sizes={[int(counts[i]) for i in over]}"
        )
    coords = None
    if mode == "ssc_2d":
        if embedding is None:
            raise MissingEmbedding("ssc_2d subdivision requires an embedding")
        coords = embedding.Y if isinstance(embedding, EmbeddingResult) else np.asarray(embedding)
        if coords.shape[0] != ds.n:
            raise MissingEmbedding(
                f"embedding covers {coords.shape[0]} samples, dataset has {ds.n}"
            )
    if mode == "manual":
        if assignments is None:
            raise InvalidConfig("manual subdivision requires per-sample assignments")
        assignments = np.asarray(assignments, dtype=np.int64)
        if assignments.shape != (ds.n,):
            raise InvalidConfig("assignments must have one entry per sample")

    final_K: list[int] = []
    per_class_local: list[tuple[np.ndarray, np.ndarray]] = []
    for i in range(ds.n_classes):
        idx = np.flatnonzero(ds.labels == i)
        k_i = K[i]
        points = coords[idx] if mode == "ssc_2d" else ds.features[idx]
        if k_i == 1:
            local = np.zeros(idx.size, dtype=np.int64)
        elif mode == "ssc_full_dim":
            local = ssc(points.T, k_i, lambda_rel=lambda_rel, seed=_child_seed(seed, i))
        elif mode == "ssc_2d":
            local = cluster_in_plane(points, k_i, lambda_rel, _child_seed(seed, i))
        elif mode == "random":
            local = random_partition(idx.size, k_i, _child_seed(seed, i))
        else:
            local = assignments[idx]
            if local.min() < 0 or local.max() >= k_i:
                raise InvalidConfig(f"class {i}: manual assignments outside [0, {k_i})")
            if np.unique(local).size != k_i:
                raise InvalidConfig(f"class {i}: manual assignments leave empty subcategories")
        if k_i > 1:
            local, k_i = _merge_small(local, points, k_i, min_sub_size)
        final_K.append(k_i)
        per_class_local.append((idx, local))

    offsets = np.concatenate([[0], np.cumsum(final_K)[:-1]])
    sub_labels = np.empty(ds.n, dtype=np.int64)
    for i, (idx, local) in enumerate(per_class_local):
        sub_labels[idx] = offsets[i] + local
    owner = np.repeat(np.arange(ds.n_classes), final_K)
    sub_map = SubdivisionMap(
        K=tuple(final_K),
        M=int(sum(final_K)),
        sub_labels=sub_labels,
        owner=owner,
        method=mode,
    )
    sub_map.validate_against(ds.labels)
    return sub_map


def suggest_k(
    embedding: EmbeddingResult | np.ndarray,
    ds: LabeledDataset,
    k_max: int,
    lambda_rel: float = DEFAULT_LAMBDA_REL,
    seed: int = 0,
    threshold: float = 0.25,
) -> tuple[int, ...]:
    """Heuristic cluster-count suggestion from the 2-D embedding.

    For each class, clusters its planar coordinates for k = 2..k_max and
    keeps the silhouette-maximizing k; a class stays unsplit when even the
    best silhouette falls below ``threshold``. This automates what is
    otherwise a human judgment call and is advisory only.
    """
    coords = embedding.Y if isinstance(embedding, EmbeddingResult) else np.asarray(embedding)
    if coords.shape[0] != ds.n:
        raise MissingEmbedding(f"embedding covers {coords.shape[0]} samples, dataset has {ds.n}")
    if k_max < 1:
        raise InvalidConfig(f"k_max must be >= 1, got {k_max}")
    suggestions = []
    for i in range(ds.n_classes):
        idx = np.flatnonzero(ds.labels == i)
        pts = coords[idx]
        best_k, best_score = 1, -np.inf
        for k in range(2, min(k_max, idx.size) + 1):
            labels = cluster_in_plane(pts, k, lambda_rel, _child_seed(seed, i))
            if np.unique(labels).size < 2:
                continue
            score = silhouette_score(pts, labels)
            if score > best_score:
                best_k, best_score = k, score
        suggestions.append(1 if best_score < threshold else best_k)
    return tuple(suggestions)
