from fractions import Fraction as F

import pytest

from ustfomin import combinatorics as cb
from ustfomin import oracle as orc
from ustfomin.exact import marked_edges
from ustfomin.lattice import DomainSpec, GridError, build_grid

from conftest import grid


def test_single_vertex_four_trees():
    g = build_grid(DomainSpec.rectangle(1, 1, F(1, 2)))
    en = orc.enumerate_spanning_trees(g)
    assert en.count == 4
    assert orc.rational_harmonic_measure(g, 0) == [F(1, 4)]


def test_two_by_two_192():
    g = grid(3, 3)
    en = orc.enumerate_spanning_trees(g)
    assert en.count == 192 == orc.matrix_tree_count(g)


@pytest.mark.parametrize("w,h", [(3, 4), (4, 4), (2, 5)])
def test_count_matches_matrix_tree(w, h):
    g = grid(w, h)
    assert orc.enumerate_spanning_trees(g).count == orc.matrix_tree_count(g)


def test_weighted_total_is_determinant():
    c = lambda p, q: 1 + (p[1] + q[1]) % 2
    g = grid(3, 3, conductance=c)
    en = orc.enumerate_spanning_trees(g)
    assert en.count == 192
    assert en.total_weight == orc.matrix_tree_count(g)


def test_guard():
    with pytest.raises(GridError):
        orc.enumerate_spanning_trees(grid(5, 4))


def test_harmonic_rows_sum_to_one(g33):
    cols = [orc.rational_harmonic_measure(g33, k) for k in range(len(g33.bedges))]
    assert all(sum(c) == 1 for c in zip(*cols))


def test_lp2_sum_at_most_one(g33, enum33):
    ed = marked_edges(g33)
    tot = sum(orc.exact_connectivity_bruteforce(g33, a, ed, None, enum33) for a in cb.enumerate_dyck_paths(2))
    assert 0 < tot <= 1


def test_crossing_pairing_impossible(g33, enum33):
    ed = marked_edges(g33)
    v = [g33.index[g33.bedges[k][1]] for k in ed]
    for t in enum33.trees[:2000]:
        assert not (orc.branch_exit(g33, t, v[0]) == ed[2] and orc.branch_exit(g33, t, v[1]) == ed[3])


def test_branch_path_ends_at_root(g33, enum33):
    t = enum33.trees[123]
    p = orc.branch_path(t, 4)
    assert p[0] == 4 and p[-1] == orc.ROOT
    assert len(set(p)) == len(p)
