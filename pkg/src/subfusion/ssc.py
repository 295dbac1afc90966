"""Sparse self-representation clustering.

Pipeline: each data column is written as a sparse combination of the other
columns (an L1-regularized least-squares problem solved by cyclic coordinate
descent with soft-thresholding), the coefficient magnitudes become a symmetric
affinity graph, and normalized spectral clustering partitions the graph.
A seeded random partition with no empty clusters serves as the ablation
baseline.

Data orientation follows the self-representation convention: ``F`` is (d, n)
with one column per sample.
"""

from __future__ import annotations

import math
import random
import warnings
from dataclasses import dataclass

import numpy as np

try:
    from numba import njit as _njit
except ImportError:  # pragma: no cover - numba is a normal dependency
    def _njit(**_kwargs):
        def wrap(fn):
            return fn

        return wrap

from .errors import DegenerateColumn, InvalidConfig, KTooLarge, NonFinite

DEFAULT_LAMBDA_REL = 0.1


@dataclass(frozen=True)
class SelfRepresentation:
    """Sparse coefficients C (n, n) with zero diagonal, one column per sample.

    ``column_lambdas[j]`` is the absolute L1 weight used for column j, derived
    as ``lambda_rel * max_{i != j} |f_i . f_j|`` on unit-normalized columns.
    ``features`` keeps the normalized (d, n) matrix the solver saw, which the
    affinity step needs for repairing isolated samples.
    """

    C: np.ndarray
    lambda_rel: float
    column_lambdas: np.ndarray
    residual_norm: float
    features: np.ndarray


@dataclass(frozen=True)
class AffinityMatrix:
    """Symmetric nonnegative affinity with zero diagonal and no zero degree."""

    A: np.ndarray


def normalize_columns(F: np.ndarray) -> np.ndarray:
    """Scale every column to unit L2 norm; all-zero columns stay zero."""
    norms = np.linalg.norm(F, axis=0)
    return F / np.where(norms > 0.0, norms, 1.0)


@_njit(cache=True)
def _cd_all_columns(G, diag, lam, max_sweeps, tol):  # pragma: no cover - jitted
    """Cyclic coordinate descent on every column's L1 problem.

    ``G`` is the Gram matrix of unit-normalized columns. For column j the
    iterate keeps u = G @ c up to date so each coordinate visit is O(1),
    paying O(n) only when a coefficient actually moves. Columns with
    ``lam[j] <= 0`` have the all-zero optimum and are skipped.
    """
    n = G.shape[0]
    C = np.zeros((n, n))
    for j in range(n):
        if lam[j] <= 0.0:
            continue
        c = np.zeros(n)
        u = np.zeros(n)
        for _ in range(max_sweeps):
            max_delta = 0.0
            for i in range(n):
                if i == j or diag[i] <= 0.0:
                    continue
                rho = G[i, j] - u[i] + diag[i] * c[i]
                mag = abs(rho) - lam[j]
                new = 0.0 if mag <= 0.0 else (mag if rho > 0.0 else -mag) / diag[i]
                delta = new - c[i]
                if delta != 0.0:
                    for r in range(n):
                        u[r] += delta * G[r, i]
                    c[i] = new
                    if abs(delta) > max_delta:
                        max_delta = abs(delta)
            if max_delta < tol:
                break
        C[:, j] = c
    return C


def self_representation(
    F: np.ndarray,
    lambda_rel: float = DEFAULT_LAMBDA_REL,
    max_sweeps: int = 2000,
    tol: float = 1e-8,
) -> SelfRepresentation:
    """Solve, for every column j, min_c  lam_j*||c||_1 + 0.5*||f_j - F c||^2
    with c_j fixed at zero, where lam_j = lambda_rel * max_{i!=j} |f_i . f_j|.

    Columns are unit-normalized first so ``lambda_rel`` is scale-free. All n
    problems share cyclic coordinate-descent sweeps (one coordinate updated
    across all columns at a time), which is exact per-column coordinate
    descent. Terminates when the largest coefficient change in a sweep drops
    below ``tol`` or after ``max_sweeps``.
    """
    F = np.asarray(F, dtype=np.float64)
    if F.ndim != 2 or F.shape[1] < 2:
        raise InvalidConfig(f"F must be (d, n) with n >= 2, got {F.shape}")
    if not np.all(np.isfinite(F)):
        raise NonFinite("self_representation input contains NaN or inf")
    if not (0.0 < lambda_rel <= 1.0):
        raise InvalidConfig(f"lambda_rel must be in (0, 1], got {lambda_rel}")

    n = F.shape[1]
    Fn = normalize_columns(F)
    G = Fn.T @ Fn
    diag = np.clip(np.diag(G).copy(), 0.0, None)

    off = np.abs(G).copy()
    np.fill_diagonal(off, 0.0)
    lam_max = off.max(axis=0)
    degenerate = lam_max <= 0.0
    if degenerate.any():
        warnings.warn(
            f"{int(degenerate.sum())} column(s) have no correlations; "
            "their representation is all-zero",
            DegenerateColumn,
        )
    lam = lambda_rel * lam_max
    C = _cd_all_columns(G, diag, lam, max_sweeps, tol)
    residual = float(np.linalg.norm(Fn - Fn @ C))
    return SelfRepresentation(
        C=C,
        lambda_rel=lambda_rel,
        column_lambdas=lam,
        residual_norm=residual,
        features=Fn,
    )


def build_affinity(rep: SelfRepresentation) -> AffinityMatrix:
    """Symmetrize coefficient magnitudes: A = |C| + |C|^T.

    Samples left with an all-zero affinity row get a tiny (1e-8) edge to
    their nearest neighbor in feature space so every node has positive
    degree and the normalized Laplacian stays well defined.
    """
    A = np.abs(rep.C) + np.abs(rep.C).T
    np.fill_diagonal(A, 0.0)
    isolated = np.flatnonzero(A.sum(axis=1) == 0.0)
    if isolated.size:
        Fn = rep.features
        sq = np.sum(Fn * Fn, axis=0)
        for r in isolated:
            dists = sq + sq[r] - 2.0 * (Fn.T @ Fn[:, r])
            dists[r] = np.inf
            nn = int(np.argmin(dists))
            A[r, nn] += 1e-8
            A[nn, r] += 1e-8
    return AffinityMatrix(A=A)


# -- k-means (used by the spectral step) ------------------------------------

def _kmeans_pp_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    first = int(rng.integers(n))
    centers[0] = X[first]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            # Remaining points all coincide with chosen centers; pick the
            # lowest-index point not yet used as a center.
            used = {tuple(centers[j]) for j in range(c)}
            pick = next((i for i in range(n) if tuple(X[i]) not in used), c % n)
            centers[c] = X[pick]
        else:
            r = rng.random() * total
            pick = int(np.searchsorted(np.cumsum(d2), r, side="right"))
            pick = min(pick, n - 1)
            centers[c] = X[pick]
        d2 = np.minimum(d2, np.sum((X - centers[c]) ** 2, axis=1))
    return centers


def _kmeans_once(X: np.ndarray, k: int, rng: np.random.Generator, max_iter: int = 300):
    centers = _kmeans_pp_init(X, k, rng)
    prev = None
    for _ in range(max_iter):
        d2 = np.sum((X[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        labels = np.argmin(d2, axis=1).astype(np.int64)
        # Repair empty clusters by stealing the worst-fit point of the
        # largest cluster, so every index in [0, k) stays in use.
        counts = np.bincount(labels, minlength=k)
        for empty in np.flatnonzero(counts == 0):
            donor = int(np.argmax(counts))
            members = np.flatnonzero(labels == donor)
            worst = members[int(np.argmax(d2[members, donor]))]
            labels[worst] = empty
            counts = np.bincount(labels, minlength=k)
        if prev is not None and np.array_equal(labels, prev):
            break
        prev = labels
        for c in range(k):
            centers[c] = X[labels == c].mean(axis=0)
    inertia = float(np.sum((X - centers[labels]) ** 2))
    return labels, inertia


def kmeans(X: np.ndarray, k: int, seed: int, n_init: int = 20) -> np.ndarray:
    """Seeded k-means with k-means++ starts; returns the lowest-inertia run.

    Guarantees every cluster index in [0, k) is used (k <= n).
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if not (1 <= k <= n):
        raise KTooLarge(f"k={k} outside [1, n={n}]")
    if k == 1:
        return np.zeros(n, dtype=np.int64)
    if k == n:
        return np.arange(n, dtype=np.int64)
    rng = np.random.default_rng(seed)
    best_labels, best_inertia = None, np.inf
    for _ in range(n_init):
        labels, inertia = _kmeans_once(X, k, rng)
        if inertia < best_inertia:
            best_labels, best_inertia = labels, inertia
    return best_labels


def spectral_cluster(affinity: AffinityMatrix | np.ndarray, k: int, seed: int = 0) -> np.ndarray:
    """Normalized spectral clustering of a symmetric affinity matrix.

    Builds L = I - D^{-1/2} A D^{-1/2}, embeds each sample as its row in the
    k smallest-eigenvalue eigenvectors (rows scaled to unit length, zero rows
    left alone), and runs seeded k-means on the embedding.
    """
    A = affinity.A if isinstance(affinity, AffinityMatrix) else np.asarray(affinity, dtype=np.float64)
    n = A.shape[0]
    if not (1 <= k <= n):
        raise KTooLarge(f"k={k} outside [1, n={n}]")
    if k == 1:
        return np.zeros(n, dtype=np.int64)
    deg = A.sum(axis=1)
    inv_sqrt = np.where(deg > 0.0, 1.0 / np.sqrt(np.where(deg > 0.0, deg, 1.0)), 0.0)
    L = np.eye(n) - (inv_sqrt[:, None] * A * inv_sqrt[None, :])
    L = 0.5 * (L + L.T)
    _, vecs = np.linalg.eigh(L)
    U = vecs[:, :k]
    norms = np.linalg.norm(U, axis=1, keepdims=True)
    U = U / np.where(norms > 0.0, norms, 1.0)
    return kmeans(U, k, seed)


def ssc(
    F: np.ndarray,
    k: int,
    lambda_rel: float = DEFAULT_LAMBDA_REL,
    seed: int = 0,
    max_sweeps: int = 500,
) -> np.ndarray:
    """Full sparse-representation clustering of the columns of F (d, n).

    The sweep cap here is tighter than the direct solver's default: the
    affinity graph only needs coefficient magnitudes, not last-digit
    optimality, and highly correlated inputs converge slowly.
    """
    F = np.asarray(F, dtype=np.float64)
    n = F.shape[1]
    if k > n:
        raise KTooLarge(f"k={k} exceeds n={n}")
    if k == 1:
        return np.zeros(n, dtype=np.int64)
    rep = self_representation(F, lambda_rel=lambda_rel, max_sweeps=max_sweeps)
    return spectral_cluster(build_affinity(rep), k, seed)


# -- random-partition ablation ----------------------------------------------

def _surjection_count(n: int, k: int) -> int:
    """Number of onto maps from n labeled items to k labeled bins."""
    return sum((-1) ** t * math.comb(k, t) * (k - t) ** n for t in range(k + 1))


def random_partition(n: int, k: int, seed: int) -> np.ndarray:
    """Uniformly random labeling of n samples into k nonempty clusters.

    Exact sampling: cluster sizes are drawn sequentially with probabilities
    proportional to the number of completions (big-integer arithmetic keeps
    this exact), then a random permutation assigns samples to slots.
    """
    if not (1 <= k <= n):
        raise KTooLarge(f"k={k} outside [1, n={n}]")
    rng = np.random.default_rng(seed)
    if k == 1:
        return np.zeros(n, dtype=np.int64)
    if k == n:
        return rng.permutation(n).astype(np.int64)
    picker = random.Random(int(rng.integers(0, 2**63)))
    sizes = []
    remaining, bins_left = n, k
    while bins_left > 1:
        weights = [
            math.comb(remaining, a) * _surjection_count(remaining - a, bins_left - 1)
            for a in range(1, remaining - (bins_left - 1) + 1)
        ]
        r = picker.randrange(sum(weights))
        acc = 0
        for a, w in enumerate(weights, start=1):
            acc += w
            if r < acc:
                sizes.append(a)
                break
        remaining -= sizes[-1]
        bins_left -= 1
    sizes.append(remaining)
    order = rng.permutation(n)
    labels = np.empty(n, dtype=np.int64)
    start = 0
    for c, size in enumerate(sizes):
        labels[order[start : start + size]] = c
        start += size
    return labels


# -- cluster quality ---------------------------------------------------------

def silhouette_score(X: np.ndarray, labels: np.ndarray) -> float:
    """Mean silhouette coefficient over all samples (Euclidean distances).

    Samples in singleton clusters score 0. Requires at least two distinct
    labels.
    """
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    ids = np.unique(labels)
    if ids.size < 2:
        raise InvalidConfig("silhouette needs at least 2 clusters")
    sq = np.sum(X * X, axis=1)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * (X @ X.T), 0.0)
    dist = np.sqrt(d2)
    n = X.shape[0]
    scores = np.zeros(n)
    members = {c: np.flatnonzero(labels == c) for c in ids}
    for i in range(n):
        own = members[labels[i]]
        if own.size <= 1:
            continue
        a = dist[i, own].sum() / (own.size - 1)
        b = min(dist[i, members[c]].mean() for c in ids if c != labels[i])
        denom = max(a, b)
        scores[i] = 0.0 if denom == 0.0 else (b - a) / denom
    return float(scores.mean())
