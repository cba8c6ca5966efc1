"""Cell-type labels from partition trees, and plurality voting across samples."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .emissions import CellMatrix
from .partition import MondrianTree, Node, check_in_domain, leaves, route
from .priors import UNKNOWN
from .sampler import RandomSource


def leaf_type_candidates(leaf: Node) -> tuple[str, ...]:
    """Types consistent with the leaf's cut history, i.e. its subtable's rows."""
    return leaf.table.types


def leaf_labels(tree: MondrianTree, rng: RandomSource | None = None) -> list[str]:
    """One label per leaf in depth-first order.

    Leaves with several candidates draw one uniformly (consuming ``rng``);
    leaves with none get UNKNOWN. Single-candidate leaves use no randomness.
    """
    labels = []
    for _, leaf in leaves(tree):
        cands = leaf_type_candidates(leaf)
        if len(cands) == 1:
            labels.append(cands[0])
        elif not cands:
            labels.append(UNKNOWN)
        else:
            if rng is None:
                raise ValueError("a leaf has several candidate types; need a random source")
            labels.append(cands[int(rng.integers(len(cands)))])
    return labels


def classify_sample(tree: MondrianTree, data, rng: RandomSource | None = None) -> np.ndarray:
    X = data.values if isinstance(data, CellMatrix) else np.asarray(data, dtype=float)
    check_in_domain(tree.box, X)
    per_leaf = np.array(leaf_labels(tree, rng), dtype=object)
    return per_leaf[route(tree, X)]


def vote(samples: Sequence[Sequence[str]], log_posteriors: Sequence[float] | None = None
         ) -> tuple[np.ndarray, np.ndarray]:
    """Per-cell plurality label over samples, ignoring UNKNOWN votes.

    Ties go to whichever tied label the highest-scoring sample voted for
    (earliest sample when no scores are given). Returns the labels and the
    winning vote fraction per cell; cells with only UNKNOWN votes stay
    UNKNOWN with fraction 0.
    """
    if len(samples) == 0:
        raise ValueError("need at least one sample")
    arr = np.array([np.asarray(s, dtype=object) for s in samples], dtype=object)
    lengths = {len(s) for s in samples}
    if len(lengths) != 1:
        raise ValueError(f"samples have differing lengths {sorted(lengths)}")
    S, N = len(samples), lengths.pop()
    arr = arr.reshape(S, N)
    names = sorted({x for x in arr.ravel() if x != UNKNOWN})
    if not names:
        return np.full(N, UNKNOWN, dtype=object), np.zeros(N)
    code = {name: i for i, name in enumerate(names)}
    codes = np.vectorize(lambda x: code.get(x, -1), otypes=[np.intp])(arr)

    counts = np.zeros((N, len(names)), dtype=np.intp)
    for s in range(S):
        known = codes[s] >= 0
        counts[np.flatnonzero(known), codes[s][known]] += 1
    best = counts.max(axis=1)
    tied = counts == best[:, None]

    if log_posteriors is None:
        order = range(S)
    else:
        if len(log_posteriors) != S:
            raise ValueError("one log posterior per sample required")
        order = sorted(range(S), key=lambda s: -log_posteriors[s])
    winner = np.full(N, -1, dtype=np.intp)
    for s in order:
        open_ = (winner < 0) & (codes[s] >= 0)
        hit = open_.copy()
        hit[open_] = tied[np.flatnonzero(open_), codes[s][open_]]
        winner[hit] = codes[s][hit]

    labels = np.full(N, UNKNOWN, dtype=object)
    decided = winner >= 0
    labels[decided] = np.array(names, dtype=object)[winner[decided]]
    fraction = np.where(decided, best / S, 0.0)
    return labels, fraction


def accuracy(predicted: Sequence[str], truth: Sequence[str]) -> float:
    """Fraction of matching labels; UNKNOWN only matches UNKNOWN."""
    predicted, truth = np.asarray(predicted, dtype=object), np.asarray(truth, dtype=object)
    if predicted.shape != truth.shape:
        raise ValueError(f"length mismatch: {predicted.shape} vs {truth.shape}")
    if predicted.size == 0:
        raise ValueError("empty label vectors")
    return float(np.mean(predicted == truth))
