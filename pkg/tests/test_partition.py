import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mpgate.partition import (AxisBox, Cut, InvalidCutError, InvalidDomainError, OutOfDomainError,
                              build_tree, leaf_of, leaves, node_at, route, split_box,
                              weighted_linear_dimension, with_rel_pos)
from mpgate.priors import PriorTable


def _table(D):
    return PriorTable(("A", "B"), tuple(f"m{d}" for d in range(D)), np.zeros((2, D), dtype=np.int8))


class TestAxisBox:
    def test_rejects_degenerate(self):
        with pytest.raises(InvalidDomainError):
            AxisBox((0.0, 1.0), (1.0, 1.0))
        with pytest.raises(InvalidDomainError):
            AxisBox((0.0,), (np.inf,))

    def test_geometry(self):
        box = AxisBox((2.0, -1.0), (6.0, 1.0))
        np.testing.assert_allclose(box.lengths, [4.0, 2.0])
        assert box.volume == pytest.approx(8.0)
        np.testing.assert_allclose(box.center, [4.0, 0.0])
        assert box.contains((2.0, 1.0))
        assert not box.contains((1.9, 0.0))


class TestSplitBox:
    def test_midpoint(self):
        left, right = split_box(AxisBox.unit(2), Cut(0, 0.5, 0.5, 0.0))
        assert left == AxisBox((0.0, 0.0), (0.5, 1.0))
        assert right == AxisBox((0.5, 0.0), (1.0, 1.0))

    def test_second_dimension(self):
        left, right = split_box(AxisBox.unit(2), Cut(1, 0.25, 0.25, 0.0))
        assert left == AxisBox((0.0, 0.0), (1.0, 0.25))
        assert right == AxisBox((0.0, 0.25), (1.0, 1.0))

    def test_relative_position(self):
        box = AxisBox((2.0, -1.0), (6.0, 1.0))
        cut = Cut.at_relative(box, 0, 0.75)
        assert cut.abs_pos == 5.0
        left, right = split_box(box, cut)
        assert left == AxisBox((2.0, -1.0), (5.0, 1.0))
        assert right == AxisBox((5.0, -1.0), (6.0, 1.0))

    @pytest.mark.parametrize("pos", [0.0, 1.0, -0.5, 1.5])
    def test_boundary_or_outside(self, pos):
        with pytest.raises(InvalidCutError):
            split_box(AxisBox.unit(2), Cut(0, 0.5, pos, 0.0))

    @given(st.floats(0.01, 0.99), st.integers(0, 2))
    def test_lengths_add_up(self, rel, dim):
        box = AxisBox((0.0, -3.0, 10.0), (2.0, 5.0, 10.5))
        left, right = split_box(box, Cut.at_relative(box, dim, rel))
        total = left.lengths + right.lengths
        np.testing.assert_allclose(total[dim], box.lengths[dim])
        others = [d for d in range(3) if d != dim]
        np.testing.assert_array_equal(left.lengths[others], box.lengths[others])
        assert left.volume + right.volume == pytest.approx(box.volume, rel=1e-12)


class TestWeightedLinearDimension:
    def test_values(self):
        assert weighted_linear_dimension(AxisBox.unit(2), (1, 1)) == 2
        assert weighted_linear_dimension(AxisBox.unit(2), (100, 1)) == 101
        box = AxisBox((0.0, 3.0, 0.0), (2.0, 4.0, 0.5))
        assert weighted_linear_dimension(box, (1, 2, 4)) == pytest.approx(6.0)

    def test_nonpositive_weight(self):
        with pytest.raises(ValueError):
            weighted_linear_dimension(AxisBox.unit(2), (1, 0))


class TestTree:
    def test_single_leaf(self):
        tree = build_tree(AxisBox.unit(2), _table(2), {})
        assert leaf_of(tree, (0.3, 0.7)) == ""
        assert len(leaves(tree)) == 1

    def test_one_cut(self):
        tree = build_tree(AxisBox.unit(2), _table(2), {"": (0, 0.5, 0.1)})
        assert leaf_of(tree, (0.3, 0.9)) == "L"
        assert leaf_of(tree, (0.5, 0.9)) == "L"  # ties go left
        assert leaf_of(tree, (0.51, 0.9)) == "R"
        assert [p for p, _ in leaves(tree)] == ["L", "R"]

    def test_chain_dfs_order(self):
        splits = {"": (0, 0.5, 0.1), "L": (1, 0.5, 0.1), "LR": (0, 0.5, 0.1)}
        tree = build_tree(AxisBox.unit(2), _table(2), splits)
        assert [p for p, _ in leaves(tree)] == ["LL", "LRL", "LRR", "R"]
        assert tree.n_cuts == 3
        assert node_at(tree, "LR").box == AxisBox((0.0, 0.5), (0.5, 1.0))

    def test_out_of_domain(self):
        tree = build_tree(AxisBox.unit(2), _table(2), {})
        with pytest.raises(OutOfDomainError):
            leaf_of(tree, (1.2, 0.5))

    def test_route_matches_leaf_of(self):
        rng = np.random.default_rng(1)
        splits = {"": (0, 0.3, 0.1), "L": (1, 0.6, 0.2), "R": (1, 0.2, 0.2), "RR": (0, 0.5, 0.3)}
        tree = build_tree(AxisBox.unit(2), _table(2), splits)
        X = rng.random((200, 2))
        ids = tree.leaf_ids()
        np.testing.assert_array_equal([ids[k] for k in route(tree, X)], [leaf_of(tree, x) for x in X])

    def test_with_rel_pos_rescales_descendants(self):
        splits = {"": (0, 0.5, 0.1), "L": (0, 0.5, 0.2)}
        tree = build_tree(AxisBox.unit(2), _table(2), splits)
        moved = with_rel_pos(tree, "", 0.8)
        assert moved.root.cut.abs_pos == pytest.approx(0.8)
        child = node_at(moved, "L")
        assert child.cut.rel_pos == 0.5
        assert child.cut.abs_pos == pytest.approx(0.4)
        assert child.cut.wait_time == 0.2
        # original is untouched
        assert node_at(tree, "L").cut.abs_pos == pytest.approx(0.25)

    @settings(max_examples=50)
    @given(st.lists(st.floats(0.05, 0.95), min_size=3, max_size=3))
    def test_tiling(self, rels):
        splits = {"": (0, rels[0], 0.1), "L": (1, rels[1], 0.1), "R": (0, rels[2], 0.1)}
        tree = build_tree(AxisBox((0.0, 0.0), (3.0, 2.0)), _table(2), splits)
        total = sum(node.box.volume for _, node in leaves(tree))
        assert total == pytest.approx(6.0, rel=1e-12)
