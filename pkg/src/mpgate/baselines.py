"""Comparison methods: a diagonal GMM fit by EM, and voting over prior trees without MCMC."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .classify import classify_sample, vote
from .emissions import LOG_2PI, VARIANCE_FLOOR_SCALE, CellMatrix
from .inference import observed_box
from .priors import Hyperparameters, PriorTable
from .sampler import child_seeds, log_prior, random_source, sample_mondrian


@dataclass
class GMMComponents:
    weights: np.ndarray     # (K,)
    means: np.ndarray       # (K, D)
    variances: np.ndarray   # (K, D)
    loglik_trace: list[float] = field(default_factory=list)

    @property
    def n_components(self) -> int:
        return len(self.weights)


def _component_logpdf(X, means, variances):
    diff = X[:, None, :] - means[None, :, :]
    return -0.5 * (LOG_2PI * X.shape[1] + np.log(variances).sum(axis=1)[None, :]
                   + (diff * diff / variances[None, :, :]).sum(axis=2))


def _logsumexp(a):
    amax = a.max(axis=1, keepdims=True)
    return (amax + np.log(np.exp(a - amax).sum(axis=1, keepdims=True)))[:, 0]


def _kmeanspp(X, K, rng):
    centers = [X[rng.integers(len(X))]]
    d2 = ((X - centers[0]) ** 2).sum(axis=1)
    for _ in range(1, K):
        total = d2.sum()
        idx = rng.choice(len(X), p=d2 / total) if total > 0 else rng.integers(len(X))
        centers.append(X[idx])
        d2 = np.minimum(d2, ((X - X[idx]) ** 2).sum(axis=1))
    return np.array(centers)


def gmm_em_fit(data, K: int, seed: int = 0, max_iter: int = 500, tol: float = 1e-6) -> GMMComponents:
    """Diagonal-covariance Gaussian mixture by EM with k-means++ seeding.

    Stops once the relative log-likelihood gain drops below ``tol`` or after
    ``max_iter`` iterations. Raises if the log likelihood ever decreases.
    """
    X = data.values if isinstance(data, CellMatrix) else np.asarray(data, dtype=float)
    N, D = X.shape
    if K < 1:
        raise ValueError("K must be >= 1")
    if N < K:
        raise ValueError(f"need at least K={K} cells, got {N}")
    rng = random_source(seed)
    floor = VARIANCE_FLOOR_SCALE * np.ptp(X, axis=0) ** 2
    floor = np.where(floor > 0, floor, VARIANCE_FLOOR_SCALE)

    means = _kmeanspp(X, K, rng)
    variances = np.tile(np.maximum(X.var(axis=0), floor), (K, 1))
    weights = np.full(K, 1.0 / K)
    trace = []
    prev = -np.inf
    for _ in range(max_iter):
        log_joint = np.log(weights)[None, :] + _component_logpdf(X, means, variances)
        log_norm = _logsumexp(log_joint)
        ll = float(log_norm.sum())
        if ll < prev - 1e-9 * abs(prev):
            raise RuntimeError(f"EM log likelihood decreased: {prev} -> {ll}")
        trace.append(ll)
        if np.isfinite(prev) and ll - prev < tol * abs(prev):
            break
        prev = ll
        resp = np.exp(log_joint - log_norm[:, None])
        nk = resp.sum(axis=0)
        # a component with no responsibility keeps its old parameters
        live = nk > 1e-12
        weights = nk / N
        means[live] = (resp.T @ X)[live] / nk[live, None]
        second = (resp.T @ (X * X))[live] / nk[live, None]
        variances[live] = np.maximum(second - means[live] ** 2, floor)
        weights = np.maximum(weights, 1e-300)
        weights /= weights.sum()
    return GMMComponents(weights, means, variances, trace)


def gmm_predict(components: GMMComponents, data) -> np.ndarray:
    X = data.values if isinstance(data, CellMatrix) else np.asarray(data, dtype=float)
    log_joint = np.log(components.weights)[None, :] + _component_logpdf(
        X, components.means, components.variances)
    return log_joint.argmax(axis=1)


def signature_scores(mean_signs: np.ndarray, table: PriorTable) -> np.ndarray:
    """Count of informative table entries agreeing with each component's sign pattern.

    ``mean_signs`` is (K, D) over {-1, 0, +1}; returns (K, C).
    """
    entries = table.entries.astype(np.intp)
    agree = (entries[None, :, :] == mean_signs[:, None, :]) & (entries[None, :, :] != 0)
    return agree.sum(axis=2)


def component_types(components: GMMComponents, data, table: PriorTable) -> list[str]:
    """Map each component to the type whose signature best matches its mean.

    A mean above the per-dimension data median reads as +1, below as -1.
    Ties go to the earliest row of the table.
    """
    X = data.values if isinstance(data, CellMatrix) else np.asarray(data, dtype=float)
    signs = np.sign(components.means - np.median(X, axis=0)).astype(np.intp)
    scores = signature_scores(signs, table)
    return [table.types[int(np.argmax(row))] for row in scores]


def gmm_classify(components: GMMComponents, data, table: PriorTable) -> np.ndarray:
    mapping = np.array(component_types(components, data, table), dtype=object)
    return mapping[gmm_predict(components, data)]


def mp_prior_classify(data: CellMatrix, table: PriorTable, hyper: Hyperparameters,
                      n_samples: int, seed: int = 0) -> np.ndarray:
    """Vote over trees drawn from the prior on the data's observed range; no MCMC."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    data = data.aligned_to(table)
    box = observed_box(data.values)
    votes, scores = [], []
    for seq in child_seeds(seed, n_samples):
        rng = random_source(seq)
        tree = sample_mondrian(hyper.budget, box, table, hyper, rng)
        votes.append(classify_sample(tree, data, rng))
        scores.append(log_prior(tree, table, hyper))
    return vote(votes, scores)[0]
