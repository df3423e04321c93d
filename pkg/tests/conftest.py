from fractions import Fraction as F

import pytest

from ustfomin.lattice import DomainSpec, MarkedPoint, build_grid


def grid(w, h, delta=1, marks=(), cm=1, conductance=None):
    ms = [MarkedPoint(*m) for m in marks]
    return build_grid(DomainSpec([(0, 0), (w, 0), (w, h), (0, h)], delta, ms, conductance, cm))


@pytest.fixture(scope="session")
def g33():
    """3x3 interior, four plain marks."""
    return grid(4, 4, 1, [(1, 0), (3, 0), (4, 2), (2, 4)])


@pytest.fixture(scope="session")
def enum33(g33):
    from ustfomin.oracle import enumerate_spanning_trees
    return enumerate_spanning_trees(g33)
