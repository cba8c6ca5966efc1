import math

import numpy as np
import pytest

from mpgate.partition import AxisBox, InvalidDomainError, build_tree, leaves
from mpgate.priors import Hyperparameters, PriorTable
from mpgate.sampler import (InconsistentTreeError, child_seeds, log_prior, random_source,
                            sample_mondrian)


def _signed_path_filter(table, tree, path):
    """Re-filter the root table step by step along ``path``."""
    node, t = tree.root, table
    for step in path:
        side = "left" if step == "L" else "right"
        keep = [row[node.cut.dim] <= 0 if side == "left" else row[node.cut.dim] >= 0 for row in t.entries]
        t = PriorTable(tuple(n for n, k in zip(t.types, keep) if k), t.markers, t.entries[np.array(keep, bool)])
        node = node.left if step == "L" else node.right
    return t


def _naive_standard_mp_leaves(rng, lengths, budget):
    """Plain Mondrian process on a box with side ``lengths``; returns the leaf count."""
    rate = sum(lengths)
    t = rng.exponential(1.0 / rate)
    if t > budget:
        return 1
    d = rng.choice(len(lengths), p=np.array(lengths) / rate)
    x = rng.uniform(0, lengths[d])
    left, right = list(lengths), list(lengths)
    left[d], right[d] = x, lengths[d] - x
    return (_naive_standard_mp_leaves(rng, left, budget - t)
            + _naive_standard_mp_leaves(rng, right, budget - t))


class TestSampleMondrian:
    def test_single_row_table(self, hyper):
        single = PriorTable(("A",), ("x", "y"), [[1, -1]])
        for seed in range(5):
            tree = sample_mondrian(50.0, AxisBox.unit(2), single, hyper, random_source(seed))
            assert tree.n_cuts == 0 and tree.root.table == single

    def test_tiny_budget_halts(self, table, hyper):
        tree = sample_mondrian(1e-9, AxisBox.unit(3), table, hyper, random_source(0))
        assert tree.n_cuts == 0
        assert tree.root.table == table

    def test_errors(self, table, hyper):
        with pytest.raises(ValueError):
            sample_mondrian(0.0, AxisBox.unit(3), table, hyper, random_source(0))
        with pytest.raises(InvalidDomainError):
            sample_mondrian(1.0, AxisBox.unit(2), table, hyper, random_source(0))

    def test_reproducible(self, table, hyper):
        a = sample_mondrian(1.0, AxisBox.unit(3), table, hyper, random_source(42))
        b = sample_mondrian(1.0, AxisBox.unit(3), table, hyper, random_source(42))
        assert log_prior(a, table, hyper) == log_prior(b, table, hyper)
        assert [n.box for _, n in leaves(a)] == [n.box for _, n in leaves(b)]

    def test_child_seeds_distinct(self, table, hyper):
        trees = [sample_mondrian(1.0, AxisBox.unit(3), table, hyper, random_source(s))
                 for s in child_seeds(0, 20)]
        assert len({log_prior(t, table, hyper) for t in trees}) == 20

    def test_subtables_and_budget(self, table, hyper):
        rng = random_source(3)
        for _ in range(200):
            tree = sample_mondrian(1.0, AxisBox.unit(3), table, hyper, rng)
            for path, leaf in leaves(tree):
                assert leaf.table == _signed_path_filter(table, tree, path)

            def check(node, spent):
                if node.is_leaf:
                    return
                spent += node.cut.wait_time
                assert spent < tree.budget
                check(node.left, spent)
                check(node.right, spent)

            check(tree.root, 0.0)

    @pytest.mark.slow
    def test_standard_mp_leaf_count(self, zero_table, hyper):
        n = 100_000
        rng = random_source(11)
        ours = np.mean([len(leaves(sample_mondrian(1.0, AxisBox.unit(2), zero_table, hyper, rng)))
                        for _ in range(n)])
        ref_rng = np.random.default_rng(12)
        ref = np.mean([_naive_standard_mp_leaves(ref_rng, [1.0, 1.0], 1.0) for _ in range(n)])
        assert abs(ours - ref) / ref < 0.01
        # closed form for a standard MP on a box: prod_d (1 + budget * length_d)
        assert abs(ours - 4.0) / 4.0 < 0.01


class TestLogPrior:
    def test_single_leaf_survival(self, zero_table, hyper):
        tree = build_tree(AxisBox.unit(2), zero_table, {}, budget=0.5)
        assert log_prior(tree, zero_table, hyper) == pytest.approx(-1.0)

    def test_one_cut_by_hand(self, zero_table, hyper):
        tree = build_tree(AxisBox.unit(2), zero_table, {"": (0, 0.4, 0.3)}, budget=1.0)
        # rate 2 at the root; children have rates 1.4 and 1.6 with 0.7 budget left
        want = math.log(2) - 2 * 0.3 + math.log(1 / 2) + 0.0 - 1.4 * 0.7 - 1.6 * 0.7
        assert log_prior(tree, zero_table, hyper) == pytest.approx(want, abs=1e-12)

    def test_forced_leaves_add_nothing(self, hyper):
        t = PriorTable(("A", "B"), ("x", "y"), [[-1, 1], [1, -1]])
        tree = build_tree(AxisBox.unit(2), t, {"": (1, 0.5, 0.002)}, budget=1.0)
        beta55 = math.log(630 * 0.5 ** 8)  # Beta(5,5) density at 0.5; 1/B(5,5) = 9!/(4!4!)
        want = math.log(200) - 200 * 0.002 + math.log(100 / 200) + beta55
        assert log_prior(tree, t, hyper) == pytest.approx(want, abs=1e-12)

    def test_normalizes_over_one_cut_topology(self, hyper):
        # Both children of any cut hold one row, so trees have zero or one cut.
        t = PriorTable(("A", "B"), ("x", "y"), [[-1, 1], [1, -1]])
        box, budget = AxisBox.unit(2), 0.005
        p_none = math.exp(log_prior(build_tree(box, t, {}, budget), t, hyper))
        m = 10_000
        r = (np.arange(m) + 0.5) / m
        t0 = budget / 2
        total = p_none
        for dim in (0, 1):
            dens_r = np.array([math.exp(log_prior(build_tree(box, t, {"": (dim, x, t0)}, budget), t, hyper))
                               for x in r])
            ts = (np.arange(1000) + 0.5) / 1000 * budget
            dens_t = np.array([math.exp(log_prior(build_tree(box, t, {"": (dim, 0.5, s)}, budget), t, hyper))
                               for s in ts])
            mid = math.exp(log_prior(build_tree(box, t, {"": (dim, 0.5, t0)}, budget), t, hyper))
            # density factorizes in (t, r)
            for x, s in [(0.2, 0.001), (0.7, 0.004)]:
                joint = math.exp(log_prior(build_tree(box, t, {"": (dim, x, s)}, budget), t, hyper))
                f_r = math.exp(log_prior(build_tree(box, t, {"": (dim, x, t0)}, budget), t, hyper))
                f_t = math.exp(log_prior(build_tree(box, t, {"": (dim, 0.5, s)}, budget), t, hyper))
                assert joint == pytest.approx(f_r * f_t / mid, rel=1e-9)
            total += dens_r.mean() * (dens_t.mean() * budget) / mid
        assert total == pytest.approx(1.0, abs=1e-3)

    def test_table_mismatch(self, table, zero_table, hyper):
        tree = sample_mondrian(1.0, AxisBox.unit(3), table, hyper, random_source(0))
        with pytest.raises(InconsistentTreeError):
            log_prior(tree, table.subset([True, True, False]), hyper)

    def test_budget_violation(self, zero_table, hyper):
        tree = build_tree(AxisBox.unit(2), zero_table, {"": (0, 0.5, 0.6), "L": (1, 0.5, 0.6)}, budget=1.0)
        with pytest.raises(InconsistentTreeError):
            log_prior(tree, zero_table, hyper)

    def test_finite_on_samples(self, table, hyper):
        rng = random_source(9)
        for _ in range(100):
            tree = sample_mondrian(1.0, AxisBox((0, -2, 5), (3, 2, 6)), table, hyper, rng)
            assert np.isfinite(log_prior(tree, table, hyper))
