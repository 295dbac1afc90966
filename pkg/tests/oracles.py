"""Independent verification routines for the test suite.

Everything in here is deliberately written *without* reusing package
internals: direct formulas, brute-force enumeration, graph traversal, and
finite differences. These are the second route that checks the first.
"""

from fractions import Fraction
from itertools import permutations

import numpy as np


def kkt_violation(F: np.ndarray, C: np.ndarray, lambda_rel: float) -> float:
    """Worst subgradient-optimality violation over all columns.

    For column j with L1 weight lam_j = lambda_rel * max_{i!=j} |f_i . f_j|
    (unit-normalized columns), optimality of c_j requires, with
    g = F^T (f_j - F c_j):
      * |g_i| <= lam_j           where c_ij = 0
      * g_i == lam_j * sign(c_ij) where c_ij != 0
    Returns the largest violation magnitude encountered.
    """
    F = np.asarray(F, dtype=np.float64)
    norms = np.linalg.norm(F, axis=0)
    Fn = F / np.where(norms > 0.0, norms, 1.0)
    n = Fn.shape[1]
    worst = 0.0
    for j in range(n):
        corr = Fn.T @ Fn[:, j]
        corr[j] = 0.0
        lam = lambda_rel * float(np.max(np.abs(corr)))
        if lam <= 0.0:
            worst = max(worst, float(np.max(np.abs(C[:, j]))))
            continue
        g = Fn.T @ (Fn[:, j] - Fn @ C[:, j])
        for i in range(n):
            if i == j:
                continue
            if C[i, j] == 0.0:
                worst = max(worst, abs(g[i]) - lam)
            else:
                worst = max(worst, abs(g[i] - lam * np.sign(C[i, j])))
    return worst


def perm_matched_error(pred, truth, n_clusters: int) -> float:
    """Fraction of mismatches under the best label permutation (brute force,
    n_clusters! candidates)."""
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    assert n_clusters <= 7, "brute-force permutation search only for small k"
    best = pred.size
    for p in permutations(range(n_clusters)):
        mapped = np.array([p[v] for v in pred])
        best = min(best, int(np.sum(mapped != truth)))
    return best / pred.size


def graph_components(A: np.ndarray) -> np.ndarray:
    """Connected-component labels of a nonnegative adjacency matrix (BFS)."""
    n = A.shape[0]
    labels = np.full(n, -1, dtype=np.int64)
    current = 0
    for start in range(n):
        if labels[start] >= 0:
            continue
        frontier = [start]
        labels[start] = current
        while frontier:
            node = frontier.pop()
            for other in np.flatnonzero(A[node] > 0.0):
                if labels[other] < 0:
                    labels[other] = current
                    frontier.append(other)
        current += 1
    return labels


def silhouette_plain(X: np.ndarray, labels) -> float:
    """Double-loop silhouette, independent of the library's vectorized one."""
    X = np.asarray(X, dtype=np.float64)
    labels = list(labels)
    n = len(labels)
    dist = [[float(np.linalg.norm(X[i] - X[j])) for j in range(n)] for i in range(n)]
    values = []
    for i in range(n):
        own = [j for j in range(n) if labels[j] == labels[i] and j != i]
        if not own:
            values.append(0.0)
            continue
        a = sum(dist[i][j] for j in own) / len(own)
        b = min(
            sum(dist[i][j] for j in range(n) if labels[j] == c)
            / sum(1 for j in range(n) if labels[j] == c)
            for c in set(labels)
            if c != labels[i]
        )
        values.append(0.0 if max(a, b) == 0.0 else (b - a) / max(a, b))
    return float(np.mean(values))


def brute_average_precision(scores, positives) -> Fraction:
    """Exact rational AP: rank by score descending (ties by index), average
    precision at each positive rank."""
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    hits = 0
    total = Fraction(0)
    for rank, idx in enumerate(order, start=1):
        if positives[idx]:
            hits += 1
            total += Fraction(hits, rank)
    assert hits > 0
    return total / hits


def central_difference_gradient(fn, x: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    """Central finite differences of a scalar function of an array."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = grad.reshape(-1)
    xf = x.reshape(-1)
    for i in range(xf.size):
        orig = xf[i]
        xf[i] = orig + eps
        hi = fn(x)
        xf[i] = orig - eps
        lo = fn(x)
        xf[i] = orig
        flat[i] = (hi - lo) / (2.0 * eps)
    return grad


def nearest_centroid_labels(X: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """Assign each row of X to its nearest centroid (Euclidean)."""
    d2 = ((X[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    return np.argmin(d2, axis=1)
