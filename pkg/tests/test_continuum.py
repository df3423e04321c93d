import math
import random
from fractions import Fraction as F

import pytest

from ustfomin import combinatorics as cb
from ustfomin import continuum as ct


def test_kernel_entries():
    assert ct.kernel(0, 1) == 1
    assert ct.kernel(0, 1, 1, 0) == 2
    assert ct.kernel(0, 1, 0, 1) == -2
    assert ct.kernel(0, 1, 1, 1) == -6
    assert ct.kernel(F(1), F(3), 1, 1) == ct.kernel(F(3), F(1), 1, 1)
    with pytest.raises(ct.ContinuumError):
        ct.kernel(1, 1)


def test_partition_function_values():
    assert ct.pure_partition_function("()", [0, 1]) == 1
    assert ct.pure_partition_function("()()", [0, 1, 2, 3]) == F(15, 16)
    assert ct.pure_partition_function("(())", [0, 1, 2, 3]) == F(7, 144)
    with pytest.raises(ct.ContinuumError):
        ct.pure_partition_function("()()", [0, 2, 1, 3])


def test_positivity():
    rng = random.Random(0)
    for _ in range(1000):
        n = rng.randint(1, 4)
        xs = sorted(rng.uniform(-5, 5) for _ in range(2 * n))
        if min(b - a for a, b in zip(xs, xs[1:])) < 1e-3:
            continue
        a = rng.choice(cb.enumerate_dyck_paths(n))
        assert ct.pure_partition_function(a, xs) > 0


def test_zeta_spot_value_and_order():
    assert ct.zeta_omega("+", 0, [1], 2) == 4
    for w, xh in [("+-", [F(1), F(7)]), ("++-", [F(1), F(2), F(9)]), ("--", [F(9), F(7)])]:
        a = ct.zeta_omega(w, 0, xh, 5, order="reverse")
        b = ct.zeta_omega(w, 0, xh, 5, order="forward")
        assert a == b and a > 0


def test_zeta_positivity():
    rng = random.Random(3)
    for w in [(1,), (-1,), (1, 1), (1, -1), (-1, 1), (-1, -1), (1, 1, 1), (1, -1, 1), (-1, -1, 1)]:
        for _ in range(20):
            pts = sorted(rng.uniform(0, 10) for _ in range(2 + len(w)))
            if min(b - a for a, b in zip(pts, pts[1:])) < 0.05:
                continue
            k = w.count(1)
            plus, xo, minus = pts[1:1 + k], pts[1 + k], pts[2 + k:][::-1]
            pi, mi = iter(plus), iter(minus)
            xh = [next(pi) if s == 1 else next(mi) for s in w]
            assert ct.zeta_omega(w, pts[0], xh, xo) > 0


def test_bad_interleaving():
    with pytest.raises(ct.ContinuumError):
        ct.zeta_omega("++", 0, [2, 1], 3)
    with pytest.raises(ct.ContinuumError):
        ct.zeta_omega("+", 0, [1], 1)


def test_zeta_is_collapse_limit():
    for w, xh in [("+", [F(1)]), ("+-", [F(1), F(6)]), ("++", [F(1), F(2)])]:
        z = ct.zeta_omega(w, 0, xh, 4)
        r = ct.collapse_limit(lambda e: ct.visit_partition_function(ct.cb.parse_omega(w), 0, xh, 4, e),
                              F(1, 16), -ct.DELTA_PRIME * len(xh))
        assert r.converged
        assert abs(r.limit / float(z) - 1) < 1e-8


def test_mobius():
    xs = [0.1, 0.7, 1.9, 3.2]
    ys, _, fac = ct.apply_mobius(xs, [], 1, 0, 0, 1)
    assert ys == xs and fac == 1
    ys, _, fac = ct.apply_mobius(xs, [], 2, 0, 0, 1)
    for a in cb.enumerate_dyck_paths(2):
        assert math.isclose(ct.pure_partition_function(a, ys) * 2 ** 4, ct.pure_partition_function(a, xs), rel_tol=1e-12)
    ys, _, fac = ct.apply_mobius(xs, [], 1, 5, 0, 1)
    assert math.isclose(ct.pure_partition_function("(())", ys), ct.pure_partition_function("(())", xs), rel_tol=1e-12)
    with pytest.raises(ct.ContinuumError):
        ct.apply_mobius(xs, [], 1, 0, -1, 1)
    with pytest.raises(ct.ContinuumError):
        ct.apply_mobius(xs, [], 1, 0, 0, -1)


def test_mobius_covariance_random():
    rng = random.Random(7)
    for _ in range(200):
        n = rng.randint(1, 4)
        xs = sorted({F(rng.randint(0, 500), 100) for _ in range(2 * n)})
        if len(xs) < 2 * n:
            continue
        a = rng.choice(cb.enumerate_dyck_paths(n))
        mu = F(rng.randint(50, 200), 100), F(rng.randint(-100, 100), 100), F(rng.randint(0, 10), 100), 1
        ys, _, fac = ct.apply_mobius(xs, [], *mu)
        exact = ct.pure_partition_function(a, xs)
        assert ct.pure_partition_function(a, ys) * fac == exact


def test_zeta_covariance():
    xs, xh = [0.2, 4.0], [1.3, 2.5]
    ys, yh, fac = ct.apply_mobius(xs, xh, 1, 1, -0.1, 1)
    assert math.isclose(ct.zeta_omega("++", ys[0], yh, ys[1]) * fac, ct.zeta_omega("++", xs[0], xh, xs[1]), rel_tol=1e-10)


def test_pde_n1_exact_zero():
    f = ct.partition_function_evaluator(cb.DyckPath.parse("()"))
    assert ct.pde_residual(f, [F(0), F(1)], (), "second", 0) < 1e-12


@pytest.mark.parametrize("a", ["()()", "(())", "()(())", "(()())", "((()))"])
def test_pde2(a):
    a = cb.DyckPath.parse(a)
    rng = random.Random(len(str(a)))
    xs = sorted(rng.uniform(0, 6) for _ in range(2 * a.size))
    f = ct.partition_function_evaluator(a)
    for j in range(2 * a.size):
        assert ct.pde_residual(f, xs, (), "second", j) < 1e-6


def test_pde2_second_order_decay():
    a = cb.DyckPath.parse("(())")
    xs = [0.0, 0.9, 2.2, 3.1]
    f = ct.partition_function_evaluator(a)
    r = [ct.pde_residual(f, xs, (), "second", 1, h=h, accuracy=2) for h in (8e-3, 4e-3, 2e-3)]
    assert 3.5 < r[0] / r[1] < 4.5 and 3.5 < r[1] / r[2] < 4.5


def test_pde_detects_wrong_function():
    f = lambda xs, xh: 1 / (xs[1] - xs[0]) ** 3
    assert ct.pde_residual(f, [0.0, 1.0], (), "second", 0) > 1e-2
    g = lambda xs, xh: ct.zeta_omega("+", xs[0], xh, xs[1]) * xh[0]
    assert ct.pde_residual(g, [0.0, 2.0], [0.7], "third", 0) > 1e-3


def test_pde3_zeta():
    for w, xs, xh in [("+", (0.2, 4.0), [1.3]), ("-", (0.0, 2.0), [5.5]), ("+-", (0.0, 3.0), [1.0, 7.0])]:
        f = ct.zeta_evaluator(w)
        for s in range(len(xh)):
            assert ct.pde_residual(f, xs, xh, "third", s) < 1e-4
        for j in range(2):
            assert ct.pde_residual(f, xs, xh, "second", j) < 1e-4


def test_step_guard():
    f = ct.partition_function_evaluator(cb.DyckPath.parse("()"))
    with pytest.raises(ct.ContinuumError):
        ct.pde_residual(f, [0.0, 1.0], (), "second", 0, h=0.2)


def test_richardson_exact_polynomial():
    r = ct.collapse_limit(lambda e: 3 + 2 * e - e ** 3, F(1, 2), 0, levels=5)
    assert r.limit == 3 and r.converged
    with pytest.raises(ValueError):
        ct.collapse_limit(lambda e: 1, 1, 0, levels=3)


def test_asy2():
    res, pred = ct.asy2_limit("()", [0, 1], 1)
    assert abs(res.limit - 1) < 1e-12 and pred == 1
    res, pred = ct.asy2_limit("(())", [0, 1, 2, 3], 2)
    assert pred == float(ct.pure_partition_function("()", [0, 3]))
    assert abs(res.limit / pred - 1) < 1e-6
    res, pred = ct.asy2_limit("()()", [0, 1, 2, 3], 2)
    assert pred == 0 and abs(res.limit) < 1e-10


def test_constants():
    assert abs(ct.asymptotics_constants("+", 0, [1], 3, "first")[0].limit - 2) < 0.02
    assert abs(ct.asymptotics_constants("++", 0, [1, 2], 3, "consecutive")[0].limit - 10) < 0.1
    assert abs(ct.asymptotics_constants("-+", 0, [7, 1], 3, "first", s=1)[0].limit) < 1e-6


def test_rectangle_map():
    m = ct.RectangleMap(1, 1)
    assert math.isclose(m.modulus, 2 ** -0.5, rel_tol=1e-12)
    xs = [m.phi(0.01 + 0.98 * k / 99, 0) for k in range(100)]
    assert all(b > a for a, b in zip(xs, xs[1:]))
    assert math.isclose(m.phi(1, 1e-9), 1, abs_tol=1e-6)
    assert m.phi(0, 0.5) < 0 < m.phi(0.5, 0) < 1 < m.phi(1, 0.5) < 1 / m.modulus ** 2 < m.phi(0.5, 1)
    # derivative against a difference quotient
    h = 1e-6
    assert math.isclose(m.dphi(0.3, 0), (m.phi(0.3 + h, 0) - m.phi(0.3 - h, 0)) / (2 * h), rel_tol=1e-6)
    with pytest.raises(ct.ContinuumError):
        ct.RectangleMap(1, 10)
    m2 = ct.RectangleMap(2, 1, corner_margin=0.1)
    with pytest.raises(ct.ContinuumError):
        m2.phi(0.01, 0)
    # k grows with the width-to-height ratio
    assert ct.RectangleMap(1, 2).modulus < m.modulus < ct.RectangleMap(2, 1).modulus
