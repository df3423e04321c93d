from fractions import Fraction as F

import pytest

from ustfomin import combinatorics as cb
from ustfomin import exact as ex
from ustfomin import oracle as orc
from ustfomin.lattice import GridError, excursion_kernel_matrix

from conftest import grid

P = cb.DyckPath.parse


def test_frozen_values_3x3(g33):
    ed = ex.marked_edges(g33)
    # frozen from the tree-enumeration oracle
    assert ex.grid_connectivity(g33, P("()()"), ed).value == F(31, 25088)
    assert ex.grid_connectivity(g33, P("(())"), ed).value == F(3, 1568)


def test_matches_bruteforce_both_orientations(g33, enum33):
    ed = ex.marked_edges(g33)
    for a in cb.enumerate_dyck_paths(2):
        z = ex.grid_connectivity(g33, a, ed).value
        assert orc.exact_connectivity_bruteforce(g33, a, ed, None, enum33) == z
        rev = [l[::-1] for l in a.links]
        assert orc.exact_connectivity_bruteforce(g33, a, ed, rev, enum33) == z


def test_n1_is_harmonic_measure(g33):
    ed = ex.marked_edges(g33)[:2]
    z = ex.grid_connectivity(g33, P("()"), ed).value
    assert z == orc.rational_harmonic_measure(g33, ed[1])[g33.index[g33.bedges[ed[0]][1]]]


def test_fomin_identity(g33):
    ed = ex.marked_edges(g33)
    K = excursion_kernel_matrix(g33, ed)
    Z = {a: ex.grid_connectivity(g33, a, ed).value for a in cb.enumerate_dyck_paths(2)}
    for a in Z:
        assert ex.lp_determinant(a, K) == ex.fomin_sum(a, Z)


def test_weighted_oracle_equality():
    c = lambda p, q: 2 if min(p[0], q[0]) == 1 and p[0] != q[0] else 1
    g = grid(4, 4, 1, [(1, 0), (3, 0), (4, 2), (2, 4)], conductance=c)
    en = orc.enumerate_spanning_trees(g)
    ed = ex.marked_edges(g)
    for a, want in [(P("()()"), F(434, 297119)), (P("(())"), F(624, 297119))]:
        assert ex.connectivity_event_probability(g, a, ed) == want
        assert orc.exact_connectivity_bruteforce(g, a, ed, None, en) == want


def test_visit_matches_bruteforce(enum33):
    g = grid(4, 4, 1, [(1, 0, "in"), (F(5, 2), 0, "visit"), (4, 2, "out")])
    vp = ex.boundary_visit_probability(g)
    assert vp.direct == vp.replacing == F(193, 672)
    assert orc.visit_bruteforce(g, ex.visit_config(g), enum33) == F(193, 672)


def test_unrealizable_visit_is_zero(enum33):
    g = grid(4, 4, 1, [(1, 0, "in"), (F(5, 2), 0, "visit"), (4, 2, "out"), (F(5, 2), 4, "visit")])
    vp = ex.boundary_visit_probability(g)
    assert vp.omega == (1, -1)
    assert vp.direct == vp.replacing == 0 == orc.visit_bruteforce(g, ex.visit_config(g), enum33)


@pytest.mark.parametrize("marks", [
    [(1, 0, "in"), (F(5, 2), 0, "visit"), (5, 0, "out"), (F(7, 2), 6, "visit")],
    [(1, 0, "in"), (F(3, 2), 6, "visit"), (F(5, 2), 0, "visit"), (6, 3, "out")],
    [(1, 0, "in"), (6, 2, "out"), (0, F(7, 2), "visit"), (F(7, 2), 6, "visit")],
])
def test_replacing_equals_direct_5x5(marks):
    g = grid(6, 6, 1, marks)
    vp = ex.boundary_visit_probability(g)
    assert vp.backend == "rational"
    assert vp.direct == vp.replacing
    assert 0 <= vp.value <= 1


def test_weighted_replacing():
    c = lambda p, q: F(3, 2) if (p[0] + p[1] + q[0] + q[1]) % 4 == 1 else 1
    g = grid(6, 6, 1, [(1, 0, "in"), (F(5, 2), 0, "visit"), (5, 0, "out")], conductance=c)
    vp = ex.boundary_visit_probability(g)
    assert vp.direct == vp.replacing


def test_no_visits_probability_one():
    g = grid(6, 6, 1, [(1, 0, "in"), (5, 0, "out")])
    assert ex.boundary_visit_probability(g).value == 1


def test_adjacent_visits_accepted():
    # degenerate adjacent flanking pairs still evaluate
    g = grid(6, 6, 1, [(1, 0, "in"), (F(5, 2), 0, "visit"), (F(9, 2), 0, "visit"), (6, 3, "out")])
    vp = ex.boundary_visit_probability(g)
    assert vp.direct == vp.replacing


def test_visit_order_checks():
    g = grid(6, 6, 1, [(1, 0, "in"), (F(7, 2), 0, "visit"), (F(5, 2), 0, "visit"), (6, 3, "out")])
    with pytest.raises(GridError):
        ex.visit_config(g)


def test_pattern_size_mismatch(g33):
    with pytest.raises(GridError):
        ex.grid_connectivity(g33, P("()"), ex.marked_edges(g33))


def test_free_subtree_n1_formula():
    g = grid(4, 4)
    bf = ex.boundary_faces(g)
    k1, k2 = bf[(1, 0)]
    K = excursion_kernel_matrix(g, [k1, k2])
    assert ex.free_subtree_probability(g, [(1, 0)]) == 2 * K.values[0][1] == F(11, 56)


def test_free_subtree_equals_orientation_sum(enum33):
    g = grid(4, 4)
    for faces in ([(1, 0)], [(1, 0), (3, 2)], [(2, 0), (0, 2)]):
        p = ex.free_subtree_probability(g, faces)
        assert 0 <= p <= 1
        assert p == orc.free_subtree_connectivity_bruteforce(g, faces, enum33)


@pytest.mark.xfail(strict=True, reason="dual-forest event also contains merged flank branches; see notes")
def test_free_subtree_literal_dual_event(enum33):
    g = grid(4, 4)
    assert ex.free_subtree_probability(g, [(1, 0)]) == orc.free_subtree_bruteforce(g, [(1, 0)], enum33)


def test_free_subtree_neighbours_rejected():
    g = grid(6, 6)
    with pytest.raises(GridError):
        ex.free_subtree_probability(g, [(2, 0), (3, 0)])
