import io

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mpgate.priors import (UNKNOWN, Hyperparameters, PriorTable, TableParseError, column_priors,
                           cut_beta_params, dimension_weight, label_set, parse_table)

H = Hyperparameters()


class TestHyperparameters:
    def test_defaults(self):
        assert (H.gamma0, H.gamma1, H.phi0, H.phi1, H.budget) == (100, 1, 5, 2, 1)

    @pytest.mark.parametrize("kw", [dict(gamma1=200), dict(phi1=6), dict(budget=0), dict(phi0=-1)])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            Hyperparameters(**kw)


class TestLabelSets:
    def test_example_columns(self, table):
        assert label_set(table, "CD4") == {-1, 0, 1}
        assert label_set(table, "CD3") == {-1, 1}
        single = PriorTable(("A",), ("x",), [[0]])
        assert label_set(single, 0) == {0}

    @pytest.mark.parametrize("labels, weight", [
        ({-1, 0, 1}, 100), ({-1, 1}, 100), ({-1, 0}, 1), ({0, 1}, 1), ({-1}, 1), ({1}, 1), ({0}, 1),
    ])
    def test_weights(self, labels, weight):
        assert dimension_weight(frozenset(labels), H) == weight

    @pytest.mark.parametrize("labels, ab", [
        ({-1, 0, 1}, (5, 5)), ({-1, 1}, (5, 5)), ({-1, 0}, (2, 5)), ({-1}, (2, 5)),
        ({0, 1}, (5, 2)), ({1}, (5, 2)), ({0}, (1, 1)),
    ])
    def test_beta_params(self, labels, ab):
        assert cut_beta_params(frozenset(labels), H) == ab

    def test_column_priors(self, table):
        w, a, b = column_priors(table, H)
        np.testing.assert_array_equal(w, [100, 100, 100])
        np.testing.assert_array_equal(a, [5, 5, 5])
        np.testing.assert_array_equal(b, [5, 5, 5])

    @given(st.permutations(range(3)))
    def test_row_permutation_invariant(self, perm):
        entries = np.array([[0, -1, 1], [1, -1, 0], [0, -1, 1]])
        t1 = PriorTable(("a", "b", "c"), ("x", "y", "z"), entries)
        t2 = PriorTable(tuple("abc"[i] for i in perm), ("x", "y", "z"), entries[list(perm)])
        for got, want in zip(column_priors(t2, H), column_priors(t1, H)):
            np.testing.assert_array_equal(got, want)


class TestFilterRows:
    def test_example(self, table):
        assert table.filter_rows("CD3", "right").types == ("CD4_T_cells", "CD8_T_cells")
        assert table.filter_rows("CD4", "left").types == ("Basophils", "CD8_T_cells")

    def test_zero_column(self, zero_table):
        assert zero_table.filter_rows(0, "left") == zero_table
        assert zero_table.filter_rows(1, "right") == zero_table

    def test_bad_side(self, table):
        with pytest.raises(ValueError):
            table.filter_rows(0, "up")

    @given(st.lists(st.lists(st.sampled_from([-1, 0, 1]), min_size=3, max_size=3), min_size=1, max_size=6),
           st.integers(0, 2))
    def test_union_and_overlap(self, rows, dim):
        t = PriorTable(tuple(f"t{i}" for i in range(len(rows))), ("x", "y", "z"), rows)
        left, right = set(t.filter_rows(dim, "left").types), set(t.filter_rows(dim, "right").types)
        assert left | right == set(t.types)
        zeros = {name for name, row in zip(t.types, rows) if row[dim] == 0}
        assert left & right == zeros


class TestParseTable:
    def test_example(self, table):
        assert table.n_types == 3 and table.n_markers == 3
        np.testing.assert_array_equal(table.row("CD8_T_cells"), [-1, 1, 1])

    def test_round_trip(self, table):
        assert parse_table(table.to_csv()) == table
        assert parse_table(io.StringIO(table.to_csv())) == table

    @pytest.mark.parametrize("text, fragment", [
        ("", "empty"),
        ("type,A,B\n", "no cell-type rows"),
        ("type,A,B\nx,1,2\n", "'2'"),
        ("type,A,B\nx,1\n", "line 2"),
        ("type,A,A\nx,1,0\n", "duplicate marker"),
        ("type,A,B\nx,1,0\nx,0,0\n", "duplicate type"),
        (f"type,A\n{UNKNOWN},1\n", "reserved"),
        ("type,A B\nx,1\n", "invalid marker"),
    ])
    def test_errors(self, text, fragment):
        with pytest.raises(TableParseError, match=fragment):
            parse_table(text)

    def test_error_names_cell(self):
        with pytest.raises(TableParseError, match=r"line 3, column 'B'"):
            parse_table("type,A,B\nx,1,0\ny,0,2\n")
