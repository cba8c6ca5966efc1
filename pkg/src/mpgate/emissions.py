"""Per-leaf diagonal Gaussian emissions and the hard-assignment data log likelihood."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .partition import LeafGaussian, MondrianTree, check_in_domain, leaves, route
from .priors import PriorTable

LOG_2PI = math.log(2.0 * math.pi)
VARIANCE_FLOOR_SCALE = 1e-6


@dataclass(frozen=True, eq=False)
class CellMatrix:
    values: np.ndarray
    markers: tuple[str, ...]

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise ValueError(f"need an N x D matrix with N, D >= 1, got shape {values.shape}")
        markers = tuple(self.markers)
        if len(markers) != values.shape[1]:
            raise ValueError(f"{len(markers)} marker names for {values.shape[1]} columns")
        if len(set(markers)) != len(markers):
            raise ValueError("duplicate marker names")
        if not np.isfinite(values).all():
            bad = np.argwhere(~np.isfinite(values))[0]
            raise ValueError(f"missing or non-finite value at cell {bad[0]}, marker {markers[bad[1]]!r}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "markers", markers)

    def __eq__(self, other):
        if not isinstance(other, CellMatrix):
            return NotImplemented
        return self.markers == other.markers and np.array_equal(self.values, other.values)

    def __len__(self):
        return self.values.shape[0]

    @property
    def n_cells(self) -> int:
        return self.values.shape[0]

    def aligned_to(self, table: PriorTable) -> "CellMatrix":
        """Columns reordered to the table's marker order; names must match exactly."""
        if set(self.markers) != set(table.markers):
            extra = sorted(set(self.markers) - set(table.markers))
            missing = sorted(set(table.markers) - set(self.markers))
            raise ValueError(f"marker mismatch: not in table {extra}, missing from cells {missing}")
        order = [self.markers.index(m) for m in table.markers]
        return CellMatrix(self.values[:, order], table.markers)


def _as_array(data) -> np.ndarray:
    return data.values if isinstance(data, CellMatrix) else np.asarray(data, dtype=float)


def variance_floor(tree: MondrianTree) -> np.ndarray:
    return VARIANCE_FLOOR_SCALE * tree.box.lengths ** 2


def assign(tree: MondrianTree, data) -> list[str]:
    """Leaf path of every cell, in cell order."""
    X = _as_array(data)
    check_in_domain(tree.box, X)
    ids = tree.leaf_ids()
    return [ids[k] for k in route(tree, X)]


def _leaf_stats(leaf_index: np.ndarray, X: np.ndarray, K: int):
    """Per-leaf counts, sums and sums of squares; sums are (K, D)."""
    D = X.shape[1]
    flat = (leaf_index[:, None] * D + np.arange(D)).ravel()
    counts = np.bincount(leaf_index, minlength=K)
    sums = np.bincount(flat, weights=X.ravel(), minlength=K * D).reshape(K, D)
    sumsq = np.bincount(flat, weights=(X * X).ravel(), minlength=K * D).reshape(K, D)
    return counts, sums, sumsq


def _fit_from_stats(tree, counts, sums, sumsq):
    n = np.maximum(counts, 1)[:, None]
    means = sums / n
    variances = np.maximum(sumsq / n - means ** 2, 0.0)
    empty = np.flatnonzero(counts == 0)
    if empty.size:
        nodes = [node for _, node in leaves(tree)]
        for k in empty:
            means[k] = nodes[k].box.center
            variances[k] = (nodes[k].box.lengths / 4.0) ** 2
    np.maximum(variances, variance_floor(tree), out=variances)
    return means, variances


def fit_arrays(tree: MondrianTree, X: np.ndarray, leaf_index: np.ndarray | None = None):
    """Plug-in per-leaf means and variances as (K, D) arrays in leaf order."""
    if leaf_index is None:
        leaf_index = route(tree, X)
    K = sum(1 for _ in leaves(tree))
    return _fit_from_stats(tree, *_leaf_stats(leaf_index, X, K))


def fit_leaf_gaussians(tree: MondrianTree, data) -> dict[str, LeafGaussian]:
    """Sample mean and (biased, floored) variance of the cells in each leaf.

    Empty leaves get the box center and a standard deviation of a quarter of
    each side length.
    """
    X = _as_array(data)
    check_in_domain(tree.box, X)
    means, variances = fit_arrays(tree, X)
    return {path: LeafGaussian(means[k], variances[k]) for k, path in enumerate(tree.leaf_ids())}


def _loglik_arrays(X, leaf_index, means, variances) -> float:
    mu = means[leaf_index]
    var = variances[leaf_index]
    terms = LOG_2PI + np.log(var) + (X - mu) ** 2 / var
    return float(-0.5 * terms.sum())


def log_likelihood(tree: MondrianTree, data, params: dict[str, LeafGaussian]) -> float:
    """Sum over cells of the log density of the Gaussian of the containing leaf."""
    X = _as_array(data)
    check_in_domain(tree.box, X)
    ids = tree.leaf_ids()
    missing = [p for p in ids if p not in params]
    if missing:
        raise KeyError(f"no Gaussian for leaves {missing}")
    means = np.array([params[p].mean for p in ids], dtype=float).reshape(len(ids), X.shape[1])
    variances = np.array([params[p].var for p in ids], dtype=float).reshape(len(ids), X.shape[1])
    return _loglik_arrays(X, route(tree, X), means, variances)


@numba.njit(cache=True)
def _descent_stats(X, dim, thr, left, right, slot, K):
    N, D = X.shape
    counts = np.zeros(K)
    sums = np.zeros((K, D))
    sumsq = np.zeros((K, D))
    for i in range(N):
        n = 0
        while dim[n] >= 0:
            n = left[n] if X[i, dim[n]] <= thr[n] else right[n]
        k = slot[n]
        counts[k] += 1.0
        for d in range(D):
            v = X[i, d]
            sums[k, d] += v
            sumsq[k, d] += v * v
    return counts, sums, sumsq


def flatten(tree: MondrianTree):
    """Array form of the tree: per node (dim, threshold, left, right, leaf slot).

    Leaves have dim -1 and a slot numbering them in depth-first order.
    """
    dims, thr, left, right, slot = [], [], [], [], []
    n_leaves = 0

    def visit(node):
        nonlocal n_leaves
        i = len(dims)
        dims.append(-1)
        thr.append(0.0)
        left.append(-1)
        right.append(-1)
        slot.append(-1)
        if node.is_leaf:
            slot[i] = n_leaves
            n_leaves += 1
        else:
            dims[i], thr[i] = node.cut.dim, node.cut.abs_pos
            left[i] = visit(node.left)
            right[i] = visit(node.right)
        return i

    visit(tree.root)
    return (np.array(dims, dtype=np.int64), np.array(thr), np.array(left, dtype=np.int64),
            np.array(right, dtype=np.int64), np.array(slot, dtype=np.int64), n_leaves)


def fit_and_score(tree: MondrianTree, X: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """Refit the leaf Gaussians and return (means, variances, log likelihood).

    Inner loop of MCMC; assumes ``X`` was already checked against the root box.
    """
    counts, sums, sumsq = _descent_stats(np.ascontiguousarray(X, dtype=np.float64), *flatten(tree))
    means, variances = _fit_from_stats(tree, counts, sums, sumsq)
    # sum_i (x_i - mu)^2 expanded over the leaf statistics
    sq = sumsq - 2.0 * means * sums + counts[:, None] * means ** 2
    ll = -0.5 * float(np.sum(counts[:, None] * (LOG_2PI + np.log(variances)) + sq / variances))
    return means, variances, ll
