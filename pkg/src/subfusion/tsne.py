"""Exact 2-D stochastic neighbor embedding with a Student-t output kernel.

O(n^2) reference implementation intended for desk-scale inspection of
feature-space structure: per-point Gaussian bandwidths found by binary search
on entropy, symmetrized joint input affinities, and plain momentum gradient
descent with an early exaggeration phase. Deterministic for a given seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    InvalidConfig,
    InvalidDistribution,
    NonFinite,
    PerplexityInfeasible,
    TooFewSamples,
)

EARLY_EXAGGERATION = 12.0
EXAGGERATION_ITERS = 250
MOMENTUM_EARLY = 0.5
MOMENTUM_LATE = 0.8
INIT_SIGMA = 1e-4


@dataclass(frozen=True)
class EmbeddingResult:
    """2-D coordinates plus the optimization trace.

    ``perplexity`` is the effective (possibly clipped) value actually used.
    ``kl_history[t]`` is the divergence of the un-exaggerated input affinities
    from the embedding after iteration t+1.
    """

    Y: np.ndarray
    perplexity: float
    kl_history: np.ndarray
    seed: int

    def __post_init__(self):
        Y = np.asarray(self.Y, dtype=np.float64)
        if Y.ndim != 2 or Y.shape[1] != 2 or not np.all(np.isfinite(Y)):
            raise NonFinite("embedding coordinates must be a finite (n, 2) matrix")
        Y.setflags(write=False)
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "kl_history", np.asarray(self.kl_history, dtype=np.float64))


def _squared_distances(X: np.ndarray) -> np.ndarray:
    sq = np.sum(X * X, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    np.fill_diagonal(d2, 0.0)
    return np.maximum(d2, 0.0)


def calibrate_bandwidths(
    d2: np.ndarray,
    perplexity: float,
    tol: float = 1e-5,
    max_steps: int = 200,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-row binary search for Gaussian precisions matching a perplexity.

    ``d2`` is the (n, n) squared-distance matrix. Returns the row-conditional
    affinity matrix (zero diagonal, rows summing to 1) and the precision
    (beta) per row. The search drives each row's Shannon entropy to
    ``log(perplexity)`` within ``tol`` nats.
    """
    n = d2.shape[0]
    target = np.log(perplexity)
    P = np.zeros((n, n))
    betas = np.ones(n)
    for i in range(n):
        lo, hi = 0.0, np.inf
        beta = 1.0
        others = np.concatenate([d2[i, :i], d2[i, i + 1 :]])
        others = others - others.min()  # stabilizes exp; entropy is shift-invariant
        for _ in range(max_steps):
            w = np.exp(-beta * others)
            total = w.sum()
            p = w / total
            # H = log(sum w) + beta * E[d^2] in nats
            entropy = np.log(total) + beta * float(np.dot(others, p))
            diff = entropy - target
            if abs(diff) <= tol:
                break
            if diff > 0.0:  # entropy too high -> sharpen
                lo = beta
                beta = beta * 2.0 if hi == np.inf else 0.5 * (beta + hi)
            else:
                hi = beta
                beta = beta * 0.5 if lo == 0.0 else 0.5 * (beta + lo)
        P[i, :i] = p[:i]
        P[i, i + 1 :] = p[i:]
        betas[i] = beta
    return P, betas


def joint_probabilities(X: np.ndarray, perplexity: float) -> np.ndarray:
    """Symmetrized, normalized input affinities: (P_cond + P_cond^T) / 2n."""
    cond, _ = calibrate_bandwidths(_squared_distances(X), perplexity)
    P = (cond + cond.T) / (2.0 * X.shape[0])
    return P


def _student_t_kernel(Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Returns (Q, num) where num = 1/(1+d^2) with zero diagonal and
    Q = num / num.sum()."""
    num = 1.0 / (1.0 + _squared_distances(Y))
    np.fill_diagonal(num, 0.0)
    return num / num.sum(), num


def _kl(P: np.ndarray, Q: np.ndarray) -> float:
    mask = P > 0.0
    q = np.maximum(Q[mask], 1e-300)
    return float(np.sum(P[mask] * np.log(P[mask] / q)))


def tsne_kl_and_grad(P: np.ndarray, Y: np.ndarray) -> tuple[float, np.ndarray]:
    """Divergence of P from the embedding Y, and its gradient wrt Y."""
    Q, num = _student_t_kernel(Y)
    W = (P - Q) * num
    grad = 4.0 * ((np.diag(W.sum(axis=1)) - W) @ Y)
    return _kl(P, Q), grad


def kl_divergence(P: np.ndarray, Y: np.ndarray) -> float:
    """Validated divergence between a joint affinity matrix and an embedding.

    ``P`` must be symmetric with nonnegative entries summing to 1; zero
    entries contribute nothing.
    """
    P = np.asarray(P, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] != Y.shape[0]:
        raise InvalidDistribution(f"P must be (n, n) aligned with Y, got {P.shape}")
    if not np.all(np.isfinite(P)):
        raise InvalidDistribution("P contains non-finite entries")
    if P.min() < 0.0:
        raise InvalidDistribution("P contains negative entries")
    if not np.allclose(P, P.T, atol=1e-10):
        raise InvalidDistribution("P must be symmetric")
    if abs(P.sum() - 1.0) > 1e-8:
        raise InvalidDistribution(f"P must sum to 1, got {P.sum()}")
    Q, _ = _student_t_kernel(Y)
    return max(_kl(P, Q), 0.0)


def effective_perplexity(n: int, perplexity: float) -> float:
    """Clip the requested perplexity to the feasible range [2, (n-1)/3]."""
    upper = (n - 1) / 3.0
    if upper < 2.0:
        raise PerplexityInfeasible(
            f"n={n} supports perplexity at most {upper:.2f}, below the minimum of 2"
        )
    return float(min(max(perplexity, 2.0), upper))


def tsne(
    F: np.ndarray,
    perplexity: float = 30.0,
    iters: int = 1000,
    seed: int = 0,
    learning_rate: float = 200.0,
) -> EmbeddingResult:
    """Embed the rows of F (n, d) into 2-D.

    Early exaggeration multiplies the input affinities by 12 for the first
    250 iterations; momentum is 0.5 during that phase and 0.8 afterwards.
    The divergence recorded in ``kl_history`` is always against the
    un-exaggerated affinities.
    """
    F = np.asarray(F, dtype=np.float64)
    if F.ndim != 2 or F.shape[0] < 5:
        raise TooFewSamples(f"need at least 5 samples, got {F.shape}")
    if not np.all(np.isfinite(F)):
        raise NonFinite("embedding input contains NaN or inf")
    if iters < 1:
        raise InvalidConfig(f"iters must be >= 1, got {iters}")
    n = F.shape[0]
    perp = effective_perplexity(n, perplexity)
    P = joint_probabilities(F, perp)

    rng = np.random.default_rng(seed)
    Y = rng.normal(0.0, INIT_SIGMA, size=(n, 2))
    velocity = np.zeros_like(Y)
    kl_history = np.empty(iters)
    for t in range(1, iters + 1):
        exaggerating = t <= EXAGGERATION_ITERS
        P_eff = P * EARLY_EXAGGERATION if exaggerating else P
        Q, num = _student_t_kernel(Y)
        W = (P_eff - Q) * num
        grad = 4.0 * ((np.diag(W.sum(axis=1)) - W) @ Y)
        momentum = MOMENTUM_EARLY if exaggerating else MOMENTUM_LATE
        velocity = momentum * velocity - learning_rate * grad
        Y = Y + velocity
        # Trace the true (un-exaggerated) objective at the state the gradient
        # was taken from; the kernel is already in hand.
        kl_history[t - 1] = _kl(P, Q)
    return EmbeddingResult(Y=Y, perplexity=perp, kl_history=kl_history, seed=seed)
