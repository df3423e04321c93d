from collections import Counter
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import chisquare

from ustfomin import combinatorics as cb
from ustfomin import exact as ex
from ustfomin import montecarlo as mc
from ustfomin import oracle as orc

from conftest import grid


def test_loop_erase_examples():
    assert mc.loop_erase("abac") == list("ac")
    assert mc.loop_erase("abc") == list("abc")
    assert mc.loop_erase("abcbdce") == list("abdce")
    with pytest.raises(ValueError):
        mc.loop_erase([])


@settings(max_examples=300)
@given(st.lists(st.integers(0, 6), min_size=1, max_size=60))
def test_loop_erase_fuzz(walk):
    out = mc.loop_erase(walk)
    assert len(set(out)) == len(out)
    assert out[0] == walk[0] and out[-1] == walk[-1]
    # every consecutive pair of the erasure is a step of the walk
    steps = set(zip(walk, walk[1:]))
    assert all(p in steps for p in zip(out, out[1:]))


def test_single_vertex_uniform():
    from ustfomin.lattice import DomainSpec, build_grid
    g = build_grid(DomainSpec.rectangle(1, 1, F(1, 2)))
    rng = np.random.default_rng(1)
    n = 10_000
    c = Counter(mc.wilson_sample(g, rng).exit(0) for _ in range(n))
    for k in range(4):
        p = c[k] / n
        assert abs(p - 0.25) <= 4 * np.sqrt(0.25 * 0.75 / n)


def test_two_by_two_chi_square():
    g = grid(3, 3)
    en = orc.enumerate_spanning_trees(g)
    assert en.count == 192
    key = lambda parent: tuple(int(x) for x in parent)
    index = {}
    for t in en.trees:
        par = [None] * len(g.interior)
        # orient each tree towards the root
        adj = {}
        for a, b, k in t:
            adj.setdefault(a, []).append((b, k))
            adj.setdefault(b, []).append((a, k))
        stack = [(orc.ROOT, None)]
        seen = {orc.ROOT}
        while stack:
            x, _ = stack.pop()
            for y, k in adj.get(x, []):
                if y not in seen:
                    seen.add(y)
                    par[y] = x if x != orc.ROOT else -1 - k
                    stack.append((y, k))
        index[tuple(par)] = len(index)
    nbr, cum = g.walk_table()
    order = mc.scan_order(g)
    n = 100_000
    counts = np.zeros(192)
    rng = np.random.default_rng(5)
    for _ in range(n):
        t = mc.TreeSample(mc._full_tree(nbr, cum, order, int(rng.integers(2**32))), 0)
        counts[index[key(t.parent)]] += 1
    assert chisquare(counts).pvalue > 0.01


def test_determinism():
    g = grid(5, 5)
    a = [mc.wilson_sample(g, 42).parent.tolist() for _ in range(3)]
    assert a[0] == a[1] == a[2]
    r1, r2 = np.random.default_rng(9), np.random.default_rng(9)
    assert [mc.wilson_sample(g, r1).parent.tolist() for _ in range(5)] == \
        [mc.wilson_sample(g, r2).parent.tolist() for _ in range(5)]


def test_spanning_tree_check():
    g = grid(6, 5)
    rng = np.random.default_rng(0)
    for _ in range(50):
        t = mc.wilson_sample(g, rng, check=True)
        assert len(t.parent) == len(g.interior)


def test_n1_matches_kernel():
    g = grid(8, 8, 1, [(2, 0), (5, 0)])
    ed = ex.marked_edges(g)
    z = float(ex.grid_connectivity(g, cb.DyckPath.parse("()"), ed, "float").value)
    e = mc.estimate(g, mc.ConnectivityEvent(cb.DyckPath.parse("()"), ed), 40_000, seed=3)
    assert e.within(z)


def test_orientation_independence():
    g = grid(8, 8, 1, [(2, 0), (4, 0), (8, 3), (5, 8)])
    ed = ex.marked_edges(g)
    a = cb.DyckPath.parse("()()")
    e1 = mc.estimate(g, mc.ConnectivityEvent(a, ed), 40_000, seed=1)
    e2 = mc.estimate(g, mc.ConnectivityEvent(a, ed, [l[::-1] for l in a.links]), 40_000, seed=2)
    assert abs(e1.p_hat - e2.p_hat) <= 4 * np.hypot(e1.se, e2.se)


def test_crossing_pairing_never():
    g = grid(8, 8, 1, [(2, 0), (4, 0), (8, 3), (5, 8)])
    ed = ex.marked_edges(g)
    a = cb.DyckPath.parse("()()")
    crossing = mc.ConnectivityEvent(a, ed, [(1, 3), (2, 4)])
    assert mc.estimate(g, crossing, 10_000, seed=4).hits == 0


def test_indicator_agrees_with_estimator(g33):
    ed = ex.marked_edges(g33)
    a = cb.DyckPath.parse("()()")
    ev = mc.ConnectivityEvent(a, ed)
    rng = np.random.default_rng(11)
    order = mc.scan_order(g33, [g33.index[g33.bedges[k][1]] for k in ed])
    hits = sum(mc.event_indicator(g33, mc.wilson_sample(g33, rng, order=order), ev) for _ in range(3000))
    z = float(ex.grid_connectivity(g33, a, ed).value)
    assert abs(hits / 3000 - z) <= 4 * np.sqrt(z * (1 - z) / 3000) + 1e-3


def test_visit_estimate_and_indicator():
    g = grid(6, 6, 1, [(1, 0, "in"), (F(5, 2), 0, "visit"), (5, 0, "out")])
    p = float(ex.boundary_visit_probability(g).value)
    ev = mc.VisitEvent.from_config(ex.visit_config(g))
    e = mc.estimate(g, ev, 100_000, seed=8)
    assert e.within(p)
    # same event read off full trees (unconditioned), as a ratio
    rng = np.random.default_rng(3)
    num = den = 0
    k_in = ev.k_in
    for _ in range(20_000):
        t = mc.wilson_sample(g, rng)
        if t.exit(g.index[g.bedges[k_in][1]]) == ev.k_out:
            den += 1
            num += mc.event_indicator(g, t, ev)
    ph = num / den
    assert abs(ph - p) <= 4 * np.sqrt(p * (1 - p) / den)


def test_h_transform_always_hits_exit():
    g = grid(7, 5)
    nbr, cum = mc.h_transform_table(g, 3)
    start = g.index[g.bedges[10][1]]
    hits, bad = mc._visit_hits(nbr, cum, start, 3, np.zeros((0, 2), dtype=np.int64), 5000, 1)
    assert bad == 0 and hits == 5000


def test_worker_independence():
    g = grid(8, 8, 1, [(2, 0), (5, 0)])
    ev = mc.ConnectivityEvent(cb.DyckPath.parse("()"), ex.marked_edges(g))
    e1 = mc.estimate(g, ev, 12_000, seed=5, workers=1)
    e2 = mc.estimate(g, ev, 12_000, seed=5, workers=2)
    assert e1.hits == e2.hits


def test_variance_scaling():
    g = grid(8, 8, 1, [(2, 0), (5, 0)])
    ev = mc.ConnectivityEvent(cb.DyckPath.parse("()"), ex.marked_edges(g))
    se = [mc.estimate(g, ev, n, seed=1).se for n in (1000, 10_000, 100_000)]
    assert 2.5 < se[0] / se[1] < 4.5 and 2.5 < se[1] / se[2] < 4.5


def test_zero_samples_rejected():
    g = grid(4, 4, 1, [(1, 0), (3, 0)])
    with pytest.raises(ValueError):
        mc.estimate(g, mc.ConnectivityEvent(cb.DyckPath.parse("()"), ex.marked_edges(g)), 0)


def test_weighted_sampler_law():
    c = lambda p, q: 3 if p[1] == q[1] else 1  # horizontal edges favoured
    from ustfomin.lattice import DomainSpec, build_grid
    g = build_grid(DomainSpec.rectangle(1, 1, F(1, 2), conductance=c))
    rng = np.random.default_rng(2)
    n = 8000
    c_ = Counter(mc.wilson_sample(g, rng).exit(0) for _ in range(n))
    horiz = sum(v for k, v in c_.items() if g.bedges[k][0][1] == g.bedges[k][1][1]) / n
    assert abs(horiz - 0.75) <= 4 * np.sqrt(0.75 * 0.25 / n)
