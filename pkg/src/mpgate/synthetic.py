"""Synthetic cytometry-like data drawn from a prior tree with truncated Gaussian leaves."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .classify import leaf_labels
from .emissions import CellMatrix
from .partition import AxisBox, LeafGaussian, MondrianTree, leaves
from .priors import Hyperparameters, PriorTable
from .sampler import random_source, sample_mondrian

MAX_TREE_TRIES = 100


class SyntheticTreeError(RuntimeError):
    pass


@dataclass(frozen=True)
class SyntheticSpec:
    table: PriorTable
    hyper: Hyperparameters = field(default_factory=Hyperparameters)
    n_cells: int = 3000
    separation: float = 2.0
    seed: int = 0

    def __post_init__(self):
        if self.n_cells < 1:
            raise ValueError("n_cells must be >= 1")
        if not self.separation > 0:
            raise ValueError("separation must be positive")


def _attach(node, gaussians):
    if node.is_leaf:
        return replace(node, gaussian=gaussians.pop(0))
    return replace(node, left=_attach(node.left, gaussians), right=_attach(node.right, gaussians))


def generate_synthetic(spec: SyntheticSpec) -> tuple[CellMatrix, np.ndarray, MondrianTree]:
    """Draw (cells, truth labels, generating tree).

    The tree is resampled until every leaf names exactly one type. Each leaf
    emits a Gaussian centred in its box with standard deviation side/(4s),
    truncated to the box; leaves are chosen with probability proportional to
    volume.
    """
    rng = random_source(spec.seed)
    box = AxisBox.unit(spec.table.n_markers)
    for _ in range(MAX_TREE_TRIES):
        tree = sample_mondrian(spec.hyper.budget, box, spec.table, spec.hyper, rng)
        if all(len(leaf.table.types) == 1 for _, leaf in leaves(tree)):
            break
    else:
        raise SyntheticTreeError(
            f"no tree with one type per leaf in {MAX_TREE_TRIES} draws; try a larger budget")

    nodes = [leaf for _, leaf in leaves(tree)]
    gaussians = [LeafGaussian(leaf.box.center, (leaf.box.lengths / (4.0 * spec.separation)) ** 2)
                 for leaf in nodes]
    volumes = np.array([leaf.box.volume for leaf in nodes])
    which = rng.choice(len(nodes), size=spec.n_cells, p=volumes / volumes.sum())

    X = np.empty((spec.n_cells, spec.table.n_markers))
    for k, (leaf, g) in enumerate(zip(nodes, gaussians)):
        idx = np.flatnonzero(which == k)
        X[idx] = _truncated_normal(rng, g.mean, np.sqrt(g.var), leaf.box, len(idx))

    labels = np.array(leaf_labels(tree), dtype=object)[which]
    tree = MondrianTree(_attach(tree.root, list(gaussians)), tree.budget)
    return CellMatrix(X, spec.table.markers), labels, tree


def _truncated_normal(rng, mean, sd, box: AxisBox, n: int) -> np.ndarray:
    lo, hi = np.asarray(box.lower), np.asarray(box.upper)
    out = np.empty((0, len(mean)))
    while len(out) < n:
        draw = rng.normal(mean, sd, size=(max(2 * (n - len(out)), 16), len(mean)))
        # open box: a cell on a cut plane would route to the left neighbour
        keep = np.all((draw > lo) & (draw < hi), axis=1)
        out = np.vstack([out, draw[keep]])
    return out[:n]
