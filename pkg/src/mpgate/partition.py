"""Axis-aligned boxes, cuts and the binary partition tree they form.

Dimensions are 0-based throughout. A point lying exactly on a cut is routed
to the left child.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterator, Optional, Sequence

import numpy as np

from .priors import PriorTable


class InvalidCutError(ValueError):
    pass


class InvalidDomainError(ValueError):
    pass


class OutOfDomainError(ValueError):
    pass


@dataclass(frozen=True)
class AxisBox:
    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        lower = tuple(float(a) for a in self.lower)
        upper = tuple(float(b) for b in self.upper)
        if len(lower) != len(upper) or not lower:
            raise InvalidDomainError("box needs matching, nonempty bound vectors")
        for d, (a, b) in enumerate(zip(lower, upper)):
            if not (math.isfinite(a) and math.isfinite(b)) or not a < b:
                raise InvalidDomainError(f"dimension {d}: need finite a < b, got [{a}, {b}]")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def unit(cls, ndim: int) -> "AxisBox":
        return cls((0.0,) * ndim, (1.0,) * ndim)

    @property
    def ndim(self) -> int:
        return len(self.lower)

    @property
    def lengths(self) -> np.ndarray:
        return np.subtract(self.upper, self.lower)

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))

    @property
    def center(self) -> np.ndarray:
        return (np.asarray(self.lower) + np.asarray(self.upper)) / 2.0

    def contains(self, point) -> bool:
        """Closed-box membership test."""
        return all(a <= x <= b for a, x, b in zip(self.lower, point, self.upper))

    def restrict(self, dim: int, lo: float, hi: float) -> "AxisBox":
        lower, upper = list(self.lower), list(self.upper)
        lower[dim], upper[dim] = lo, hi
        return AxisBox(tuple(lower), tuple(upper))


@dataclass(frozen=True)
class Cut:
    """A split of a box at ``abs_pos`` along ``dim``.

    ``rel_pos`` is the position as a fraction of the split box's extent and is
    what MCMC proposals move; ``abs_pos`` is derived from it.
    """

    dim: int
    rel_pos: float
    abs_pos: float
    wait_time: float

    @classmethod
    def at_relative(cls, box: AxisBox, dim: int, rel_pos: float, wait_time: float = 0.0) -> "Cut":
        a, b = box.lower[dim], box.upper[dim]
        return cls(dim, float(rel_pos), a + float(rel_pos) * (b - a), float(wait_time))


def split_box(box: AxisBox, cut: Cut) -> tuple[AxisBox, AxisBox]:
    """Split ``box`` at ``cut`` into its lower and upper halves."""
    d = cut.dim
    if not 0 <= d < box.ndim:
        raise InvalidCutError(f"cut dimension {d} outside 0..{box.ndim - 1}")
    a, b = box.lower[d], box.upper[d]
    if not a < cut.abs_pos < b:
        raise InvalidCutError(f"cut at {cut.abs_pos} not strictly inside [{a}, {b}] (dim {d})")
    return box.restrict(d, a, cut.abs_pos), box.restrict(d, cut.abs_pos, b)


def weighted_linear_dimension(box: AxisBox, weights) -> float:
    """Sum over dimensions of weight times side length; the cut rate of a box."""
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (box.ndim,):
        raise ValueError(f"expected {box.ndim} weights, got shape {weights.shape}")
    if np.any(~(weights > 0)):
        raise ValueError(f"dimension weights must be positive, got {weights.tolist()}")
    return float(np.dot(weights, box.lengths))


@dataclass
class LeafGaussian:
    """Diagonal Gaussian attached to one leaf."""

    mean: np.ndarray
    var: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, LeafGaussian):
            return NotImplemented
        return np.array_equal(self.mean, other.mean) and np.array_equal(self.var, other.var)


@dataclass(eq=True)
class Node:
    box: AxisBox
    table: PriorTable
    cut: Optional[Cut] = None
    left: Optional["Node"] = None
    right: Optional["Node"] = None
    gaussian: Optional[LeafGaussian] = field(default=None, compare=True)

    @property
    def is_leaf(self) -> bool:
        return self.cut is None


@dataclass(eq=True)
class MondrianTree:
    root: Node
    budget: float

    @property
    def box(self) -> AxisBox:
        return self.root.box

    @property
    def table(self) -> PriorTable:
        return self.root.table

    @property
    def n_cuts(self) -> int:
        return sum(1 for _ in internal_nodes(self))

    def leaf_ids(self) -> list[str]:
        return [path for path, _ in _walk_leaves(self.root, "")]


def _walk_leaves(node: Node, path: str) -> Iterator[tuple[str, Node]]:
    if node.is_leaf:
        yield path, node
    else:
        yield from _walk_leaves(node.left, path + "L")
        yield from _walk_leaves(node.right, path + "R")


def leaves(tree: MondrianTree) -> list[tuple[str, Node]]:
    """Leaves as ``(path, node)`` pairs in left-first depth-first order.

    The path is a string over ``{"L", "R"}`` from the root; the root's path
    is the empty string.
    """
    return list(_walk_leaves(tree.root, ""))


def internal_nodes(tree: MondrianTree) -> Iterator[tuple[str, Node]]:
    stack = [("", tree.root)]
    while stack:
        path, node = stack.pop()
        if node.is_leaf:
            continue
        yield path, node
        stack.append((path + "R", node.right))
        stack.append((path + "L", node.left))


def node_at(tree: MondrianTree, path: str) -> Node:
    node = tree.root
    for step in path:
        if node.is_leaf:
            raise KeyError(f"path {path!r} runs past a leaf")
        node = node.left if step == "L" else node.right
    return node


def leaf_of(tree: MondrianTree, point: Sequence[float]) -> str:
    """Path of the leaf containing ``point``."""
    if len(point) != tree.box.ndim or not tree.box.contains(point):
        raise OutOfDomainError(f"point {tuple(point)} outside root box")
    node, path = tree.root, []
    while not node.is_leaf:
        if point[node.cut.dim] <= node.cut.abs_pos:
            node = node.left
            path.append("L")
        else:
            node = node.right
            path.append("R")
    return "".join(path)


def build_tree(box: AxisBox, table: PriorTable, splits: dict[str, tuple[int, float, float]],
               budget: float = 1.0) -> MondrianTree:
    """Construct a tree by hand from ``{path: (dim, rel_pos, wait_time)}``.

    Subtables are propagated with the usual left/right filter. Handy for
    tests and for reloading serialized trees.
    """

    def grow(path, box, table):
        if path not in splits:
            return Node(box, table)
        dim, rel, wait = splits[path]
        cut = Cut.at_relative(box, dim, rel, wait)
        lbox, rbox = split_box(box, cut)
        return Node(
            box, table, cut,
            grow(path + "L", lbox, table.filter_rows(dim, "left")),
            grow(path + "R", rbox, table.filter_rows(dim, "right")),
        )

    return MondrianTree(grow("", box, table), float(budget))


def rebox(node: Node, box: AxisBox) -> Node:
    """Copy of ``node``'s subtree laid out in ``box``.

    Every cut keeps its relative position, so absolute positions and all
    descendant boxes rescale with the new extent.
    """
    if node.is_leaf:
        return replace(node, box=box)
    cut = Cut.at_relative(box, node.cut.dim, node.cut.rel_pos, node.cut.wait_time)
    lbox, rbox = split_box(box, cut)
    return Node(box, node.table, cut, rebox(node.left, lbox), rebox(node.right, rbox))


def with_rel_pos(tree: MondrianTree, path: str, rel_pos: float) -> MondrianTree:
    """New tree with the cut at ``path`` moved to ``rel_pos``."""

    def descend(node, rest):
        if not rest:
            moved = replace(node, cut=replace(node.cut, rel_pos=float(rel_pos)))
            return rebox(moved, node.box)
        if rest[0] == "L":
            return replace(node, left=descend(node.left, rest[1:]))
        return replace(node, right=descend(node.right, rest[1:]))

    target = node_at(tree, path)
    if target.is_leaf:
        raise InvalidCutError(f"no cut at path {path!r}")
    if not 0.0 < rel_pos < 1.0:
        raise InvalidCutError(f"relative position {rel_pos} outside (0, 1)")
    return MondrianTree(descend(tree.root, path), tree.budget)


def route(tree: MondrianTree, X: np.ndarray) -> np.ndarray:
    """Vectorized ``leaf_of``: leaf index (depth-first order) for each row.

    No domain check; callers validate once up front.
    """
    out = np.empty(X.shape[0], dtype=np.intp)
    counter = 0

    def visit(node, idx):
        nonlocal counter
        if node.is_leaf:
            out[idx] = counter
            counter += 1
            return
        mask = X[idx, node.cut.dim] <= node.cut.abs_pos
        visit(node.left, idx[mask])
        visit(node.right, idx[~mask])

    visit(tree.root, np.arange(X.shape[0]))
    return out


def check_in_domain(box: AxisBox, X: np.ndarray) -> None:
    lo, hi = np.asarray(box.lower), np.asarray(box.upper)
    bad = np.flatnonzero(np.any((X < lo) | (X > hi), axis=1))
    if bad.size:
        i = int(bad[0])
        raise OutOfDomainError(f"cell {i} at {X[i].tolist()} lies outside the root box")
