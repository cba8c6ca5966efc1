"""Prior-informed Mondrian tree sampling and the tree's prior log density."""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .partition import AxisBox, Cut, InvalidDomainError, MondrianTree, Node, split_box
from .priors import Hyperparameters, PriorTable, column_priors

MAX_DEPTH = 64

RandomSource = np.random.Generator


class InconsistentTreeError(ValueError):
    pass


class DepthLimitError(RuntimeError):
    pass


def random_source(seed: int | np.random.SeedSequence) -> RandomSource:
    """Counter-based (Philox) generator; the stream is a pure function of the seed."""
    return np.random.Generator(np.random.Philox(seed))


def child_seeds(seed: int, n: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(seed).spawn(n)


@lru_cache(maxsize=4096)
def _priors(table: PriorTable, hyper: Hyperparameters):
    weights, alpha, beta = column_priors(table, hyper)
    return weights, alpha, beta


def can_split(table: PriorTable) -> bool:
    # A table with one type (or none) has nothing left to discriminate.
    return table.n_types > 1


def cut_rate(box: AxisBox, table: PriorTable, hyper: Hyperparameters) -> float:
    weights, _, _ = _priors(table, hyper)
    return float(np.dot(weights, box.lengths))


def sample_mondrian(budget: float, box: AxisBox, table: PriorTable, hyper: Hyperparameters,
                    rng: RandomSource) -> MondrianTree:
    """Draw a tree from the prior-informed Mondrian process.

    Each node draws an exponential waiting time at rate sum_d w_d |X_d| and
    stops if it overruns the remaining budget or its subtable holds a single
    type. Otherwise the cut dimension is drawn with probability proportional
    to w_d |X_d|, the relative position from the column's Beta prior, and the
    two halves recurse with the reduced budget and their filtered subtables.
    """
    if not budget > 0:
        raise ValueError("budget must be positive")
    if table.n_types == 0:
        raise ValueError("prior table is empty")
    if box.ndim != table.n_markers:
        raise InvalidDomainError(f"box has {box.ndim} dimensions, table has {table.n_markers} markers")
    return MondrianTree(_grow(box, table, float(budget), hyper, rng, 0), float(budget))


def _grow(box, table, budget, hyper, rng, depth) -> Node:
    if not can_split(table):
        return Node(box, table)
    if depth >= MAX_DEPTH:
        raise DepthLimitError(f"tree deeper than {MAX_DEPTH} levels; lower the budget")
    weights, alpha, beta = _priors(table, hyper)
    rates = weights * box.lengths
    total = rates.sum()
    wait = rng.exponential(1.0 / total)
    remaining = budget - wait
    if remaining < 0:
        return Node(box, table)
    dim = int(rng.choice(len(rates), p=rates / total))
    rel = 0.0
    while not 0.0 < rel < 1.0:
        rel = rng.beta(alpha[dim], beta[dim])
    cut = Cut.at_relative(box, dim, rel, wait)
    lbox, rbox = split_box(box, cut)
    left = _grow(lbox, table.filter_rows(dim, "left"), remaining, hyper, rng, depth + 1)
    right = _grow(rbox, table.filter_rows(dim, "right"), remaining, hyper, rng, depth + 1)
    return Node(box, table, cut, left, right)


def beta_logpdf(x: float, a: float, b: float) -> float:
    if not 0.0 < x < 1.0:
        return -math.inf
    return ((a - 1.0) * math.log(x) + (b - 1.0) * math.log1p(-x)
            + math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b))


def log_prior(tree: MondrianTree, table: PriorTable, hyper: Hyperparameters) -> float:
    """Log density of ``tree`` under the sampling process.

    Each cut contributes the exponential density of its waiting time, the
    probability of its dimension and the Beta density of its relative
    position. Leaves that stopped because the budget ran out add the
    survival term -rate * remaining_budget; leaves whose subtable left
    nothing to split add nothing.
    """
    if tree.root.table != table:
        raise InconsistentTreeError("tree was grown from a different prior table")
    return _node_log_prior(tree.root, tree.budget, hyper)


def _node_log_prior(node: Node, budget: float, hyper: Hyperparameters) -> float:
    table = node.table
    if node.is_leaf:
        if not can_split(table):
            return 0.0
        return -cut_rate(node.box, table, hyper) * budget
    if not can_split(table):
        raise InconsistentTreeError("cut below a node whose subtable cannot split")
    cut = node.cut
    remaining = budget - cut.wait_time
    if remaining < 0 or cut.wait_time < 0:
        raise InconsistentTreeError(f"waiting time {cut.wait_time} exceeds remaining budget {budget}")
    if node.left.table != table.filter_rows(cut.dim, "left") or \
            node.right.table != table.filter_rows(cut.dim, "right"):
        raise InconsistentTreeError("child subtable does not match filtered parent table")
    weights, alpha, beta = _priors(table, hyper)
    lengths = node.box.lengths
    rate = float(np.dot(weights, lengths))
    lp = math.log(rate) - rate * cut.wait_time
    lp += math.log(weights[cut.dim] * lengths[cut.dim] / rate)
    lp += beta_logpdf(cut.rel_pos, alpha[cut.dim], beta[cut.dim])
    return (lp + _node_log_prior(node.left, remaining, hyper)
            + _node_log_prior(node.right, remaining, hyper))
