"""Deterministic synthetic data generators.

Three generators back the test suite and the demo pipeline:

* :func:`gen_figure1` builds the motivating four-class geometry: two easy
  unimodal classes plus two bimodal classes whose modes interleave, so no
  single convex decision region per class can separate them.
* :func:`gen_subspaces` samples a union of random linear subspaces, the
  ground-truth model for sparse self-representation clustering.
* :func:`gen_imbalanced` builds one Gaussian blob per class with exact
  per-class counts for exercising the imbalance ratio rule.

All generators are pure functions of their configuration, including the seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import LabeledDataset, default_ids
from .errors import InvalidConfig

FIGURE1_CLASS_NAMES = ("class1", "class2", "class3", "class4")


@dataclass(frozen=True)
class Figure1Config:
    """Geometry knobs for the four-class overlapping-modes scene.

    Classes 1 and 2 are single blobs far out on the x axis. Classes 3 and 4
    each have two modes placed on a ring around the origin so that the two
    chords interleave: walking the ring meets class-3, class-4, class-3,
    class-4 modes in that order. ``overlap`` rotates class 4's mode pair
    toward class 3's second mode; at 1.0 they coincide. The ring radius is
    ``mode_separation / sqrt(3)`` so the two modes of each bimodal class sit
    exactly ``mode_separation`` apart.
    """

    n_per_class: int
    dim: int = 2
    mode_separation: float = 7.0
    overlap: float = 0.5
    noise_sigma: float = 0.6
    seed: int = 0

    def __post_init__(self):
        if self.n_per_class < 4:
            raise InvalidConfig(f"n_per_class must be >= 4, got {self.n_per_class}")
        if self.dim < 2:
            raise InvalidConfig(f"dim must be >= 2, got {self.dim}")
        if not self.mode_separation > 0:
            raise InvalidConfig("mode_separation must be positive")
        if not (0.0 <= self.overlap <= 1.0):
            raise InvalidConfig(f"overlap must be in [0,1], got {self.overlap}")
        if not self.noise_sigma > 0:
            raise InvalidConfig("noise_sigma must be positive")


@dataclass(frozen=True)
class SubspaceConfig:
    """Union-of-subspaces sampling parameters."""

    ambient_dim: int
    subspace_dims: tuple[int, ...]
    n_per_subspace: int
    noise_sigma: float = 0.0
    seed: int = 0
    unit_norm: bool = False

    def __post_init__(self):
        object.__setattr__(self, "subspace_dims", tuple(int(d) for d in self.subspace_dims))
        if self.ambient_dim < 1 or not self.subspace_dims:
            raise InvalidConfig("need ambient_dim >= 1 and at least one subspace")
        if any(d < 1 or d >= self.ambient_dim for d in self.subspace_dims):
            raise InvalidConfig("each subspace dim must satisfy 1 <= dim < ambient_dim")
        if self.n_per_subspace < 1:
            raise InvalidConfig("n_per_subspace must be >= 1")
        if self.noise_sigma < 0:
            raise InvalidConfig("noise_sigma must be nonnegative")


def _polar(radius: float, angle_deg: float) -> np.ndarray:
    a = math.radians(angle_deg)
    return np.array([radius * math.cos(a), radius * math.sin(a)])


def figure1_mode_centers(cfg: Figure1Config) -> list[list[np.ndarray]]:
    """2-D mode centers per class (before nuisance-dimension padding)."""
    radius = cfg.mode_separation / math.sqrt(3.0)
    rot = 60.0 * cfg.overlap
    return [
        [_polar(2.5 * radius, 0.0)],
        [_polar(2.5 * radius, 180.0)],
        [_polar(radius, 0.0), _polar(radius, 120.0)],
        [_polar(radius, 60.0 + rot), _polar(radius, 180.0 + rot)],
    ]


def gen_figure1(cfg: Figure1Config) -> tuple[LabeledDataset, np.ndarray]:
    """Generate the four-class scene; returns (dataset, global mode index).

    Mode indices run 0..5: one per unimodal class, two each for classes 3
    and 4. Bimodal classes split their samples as evenly as possible between
    their modes (first mode gets the extra sample for odd counts).
    """
    centers = figure1_mode_centers(cfg)
    rng = np.random.default_rng(cfg.seed)
    rows, labels, modes = [], [], []
    mode_id = 0
    for class_idx, class_centers in enumerate(centers):
        n_first = cfg.n_per_class - cfg.n_per_class // 2
        counts = [cfg.n_per_class] if len(class_centers) == 1 else [n_first, cfg.n_per_class // 2]
        for center, count in zip(class_centers, counts):
            base = np.zeros((count, cfg.dim))
            base[:, :2] = center
            rows.append(base + rng.normal(0.0, cfg.noise_sigma, size=(count, cfg.dim)))
            labels += [class_idx] * count
            modes += [mode_id] * count
            mode_id += 1
    features = np.vstack(rows)
    ds = LabeledDataset(
        features=features,
        labels=np.asarray(labels, dtype=np.int64),
        class_names=FIGURE1_CLASS_NAMES,
        sample_ids=default_ids(features.shape[0]),
    )
    return ds, np.asarray(modes, dtype=np.int64)


def gen_subspaces(cfg: SubspaceConfig) -> tuple[np.ndarray, np.ndarray]:
    """Sample points from a union of random linear subspaces.

    Each subspace gets a random orthonormal basis; points are uniform
    coefficient combinations of the basis plus isotropic Gaussian noise.
    Returns (X, labels) with X of shape (n_total, ambient_dim).
    """
    rng = np.random.default_rng(cfg.seed)
    blocks, labels = [], []
    for s, dim in enumerate(cfg.subspace_dims):
        basis, _ = np.linalg.qr(rng.normal(size=(cfg.ambient_dim, dim)))
        coeffs = rng.uniform(-1.0, 1.0, size=(cfg.n_per_subspace, dim))
        pts = coeffs @ basis.T
        if cfg.noise_sigma > 0:
            pts = pts + rng.normal(0.0, cfg.noise_sigma, size=pts.shape)
        blocks.append(pts)
        labels += [s] * cfg.n_per_subspace
    X = np.vstack(blocks)
    if cfg.unit_norm:
        norms = np.linalg.norm(X, axis=1, keepdims=True)
        X = X / np.where(norms > 0.0, norms, 1.0)
    return X, np.asarray(labels, dtype=np.int64)


def gen_imbalanced(counts, dim: int, seed: int) -> LabeledDataset:
    """One well-separated Gaussian blob per class with exact sample counts."""
    counts = [int(c) for c in counts]
    if len(counts) < 2:
        raise InvalidConfig("need at least 2 classes")
    if any(c < 1 for c in counts):
        raise InvalidConfig(f"all class counts must be >= 1, got {counts}")
    if dim < 1:
        raise InvalidConfig(f"dim must be >= 1, got {dim}")
    rng = np.random.default_rng(seed)
    rows, labels = [], []
    for c, count in enumerate(counts):
        center = np.zeros(dim)
        center[0] = 6.0 * c
        if dim > 1:
            center[1] = 3.0 * (c % 2)
        rows.append(center + rng.normal(0.0, 1.0, size=(count, dim)))
        labels += [c] * count
    features = np.vstack(rows)
    return LabeledDataset(
        features=features,
        labels=np.asarray(labels, dtype=np.int64),
        class_names=tuple(f"class{c + 1}" for c in range(len(counts))),
        sample_ids=default_ids(features.shape[0]),
    )
