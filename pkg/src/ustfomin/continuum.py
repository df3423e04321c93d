"""Continuum partition functions on the real line (boundary of the upper half-plane).

Kernel K(x, y) = (y - x)^-2 and its first derivatives in either slot. Values
are exact when the inputs are Fractions and floats otherwise.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath

from . import combinatorics as cb
from .exact import lp_determinant

KAPPA = 2
H = 1  # weight of plain points
H_HAT = 3  # weight of visit points
DELTA = -2
DELTA_PRIME = 1
MAX_N = 6


class ContinuumError(ValueError):
    pass


# --- kernel ------------------------------------------------------------------

def kernel(x, y, ox=0, oy=0):
    """d^(ox+oy) / dx^ox dy^oy of (y - x)^-2, for orders in {0, 1}."""
    d = y - x
    if d == 0:
        raise ContinuumError("coincident points")
    p = ox + oy
    c = (-1) ** oy * math.factorial(p + 1)
    return Fraction(c) / d ** (2 + p) if _exact(d) else c / d ** (2 + p)


def _exact(x):
    return isinstance(x, (int, Fraction))


def kernel_matrix(points, orders=None, zero=()):
    """Matrix of kernel entries between slots; slot i sits at points[i] with derivative orders[i]."""
    n = len(points)
    orders = orders or [0] * n
    K = [[0] * n for _ in range(n)]
    for i in range(n):
        for k in range(n):
            if i != k:
                K[i][k] = kernel(points[i], points[k], orders[i], orders[k])
    for i, k in zero:
        K[i][k] = K[k][i] = 0 * K[i][k]
    return K


def _check_increasing(xs):
    if any(b <= a for a, b in zip(xs, xs[1:])):
        raise ContinuumError("points must be strictly increasing")


def pure_partition_function(a, xs):
    """Z_alpha(x_1 < ... < x_2N) as a sum of LP determinants of the kernel."""
    if isinstance(a, str):
        a = cb.DyckPath.parse(a)
    if a.size > MAX_N:
        raise cb.SizeError(f"N={a.size} exceeds {MAX_N}")
    xs = list(xs)
    if len(xs) != 2 * a.size:
        raise ContinuumError(f"need {2 * a.size} points, got {len(xs)}")
    _check_increasing(xs)
    if a.size == 0:
        return 1
    K = kernel_matrix(xs)
    return _fomin(a, K)


def _fomin(a, K):
    tot = 0
    for b, coef in cb.inverse_coefficients(a):
        tot = tot + coef * lp_determinant(b, K)
    return tot


# --- boundary visits -----------------------------------------------------------

@dataclass
class ContinuumConfig:
    """x_in, visit points (in visiting order) and x_out for a visit order omega."""
    omega: tuple
    x_in: object
    xhats: tuple
    x_out: object
    layout: cb.VisitLayout = field(init=False, repr=False)

    def __post_init__(self):
        self.omega = tuple(cb.parse_omega(self.omega) if isinstance(self.omega, str) else self.omega)
        self.xhats = tuple(self.xhats)
        if len(self.xhats) != len(self.omega):
            raise ContinuumError("one visit point per entry of omega")
        self.layout = cb.visit_layout(self.omega)
        _check_increasing(self.slot_points())

    def slot_points(self):
        """Position of every label 1..2N (visit points appear twice)."""
        pts = [None] * (2 * self.layout.pattern.size)
        pts[self.layout.i_in - 1] = self.x_in
        pts[self.layout.i_out - 1] = self.x_out
        for x, (j, j1) in zip(self.xhats, self.layout.pairs):
            pts[j - 1] = pts[j1 - 1] = x
        # collapsed pairs share a point; ordering is checked on distinct slots
        return [p for i, p in enumerate(pts) if i == 0 or p != pts[i - 1]]

    @property
    def plain(self):
        return (self.x_in, self.x_out)

    def replaced(self, x_in=None, xhats=None, x_out=None):
        return ContinuumConfig(self.omega, self.x_in if x_in is None else x_in,
                               self.xhats if xhats is None else xhats,
                               self.x_out if x_out is None else x_out)


def zeta_omega(omega, x_in, xhats, x_out, order="reverse"):
    """Boundary-visit amplitude by the continuous replacing algorithm.

    Each collapsed pair (j, j+1) puts x_hat in slot j and its ccw derivative in
    slot j+1, with the (j, j+1) entry set to zero. `order` only chooses in which
    sequence the pairs are processed.
    """
    cfg = ContinuumConfig(omega, x_in, xhats, x_out)
    lay = cfg.layout
    n = 2 * lay.pattern.size
    pts = [None] * n
    pts[lay.i_in - 1] = cfg.x_in
    pts[lay.i_out - 1] = cfg.x_out
    ords = [0] * n
    zero = []
    seq = range(len(cfg.omega))
    for s in (reversed(seq) if order == "reverse" else seq):
        j, j1 = lay.pairs[s]
        pts[j - 1] = pts[j1 - 1] = cfg.xhats[s]
        ords[j1 - 1] = 1
        zero.append((j - 1, j1 - 1))
    K = [[0 * _unit(x) for x in pts] for _ in pts]
    for i in range(n):
        for k in range(n):
            if i != k and (min(i, k), max(i, k)) not in zero:
                K[i][k] = kernel(pts[i], pts[k], ords[i], ords[k])
    return _fomin(lay.pattern, K)


def _unit(x):
    return Fraction(1) if _exact(x) else 1.0


def visit_partition_function(omega, x_in, xhats, x_out, eps):
    """Z_alpha(omega) with each visit point split into x_hat, x_hat + eps."""
    lay = cb.visit_layout(tuple(omega))
    n = 2 * lay.pattern.size
    pts = [None] * n
    pts[lay.i_in - 1] = x_in
    pts[lay.i_out - 1] = x_out
    for x, (j, j1) in zip(xhats, lay.pairs):
        pts[j - 1], pts[j1 - 1] = x, x + eps
    return pure_partition_function(lay.pattern, pts)


# --- Mobius covariance -----------------------------------------------------------

def apply_mobius(xs, xhats, a, b, c, d):
    """Images under mu(x) = (a x + b)/(c x + d) and the factor prod mu'^h prod mu'^h_hat.

    With the factor F, covariance reads f(mu(x)) * F = f(x).
    """
    det = a * d - b * c
    if det <= 0:
        raise ContinuumError("need ad - bc > 0")
    pts = list(xs) + list(xhats)
    if any(c * x + d == 0 for x in pts):
        raise ContinuumError("pole at a marked point")
    if len({c * x + d > 0 for x in pts}) > 1:
        raise ContinuumError("pole between marked points breaks the ordering")
    mu = lambda x: (a * x + b) / (c * x + d)
    dmu = lambda x: det / (c * x + d) ** 2
    ys, yh = [mu(x) for x in xs], [mu(x) for x in xhats]
    fac = 1
    for x in xs:
        fac = fac * dmu(x) ** H
    for x in xhats:
        fac = fac * dmu(x) ** H_HAT
    return ys, yh, fac


# --- PDE residuals -----------------------------------------------------------------

_D1 = {2: ((-1, "-1/2"), (1, "1/2")),
       4: ((-2, "1/12"), (-1, "-2/3"), (1, "2/3"), (2, "-1/12"))}
_D2 = {2: ((-1, "1"), (0, "-2"), (1, "1")),
       4: ((-2, "-1/12"), (-1, "4/3"), (0, "-5/2"), (1, "4/3"), (2, "-1/12"))}
_D3 = {2: ((-2, "-1/2"), (-1, "1"), (1, "-1"), (2, "1/2")),
       4: ((-3, "1/8"), (-2, "-1"), (-1, "13/8"), (1, "-13/8"), (2, "1"), (3, "-1/8"))}


class _Probe:
    """Finite differences of f(xs, xhats) in any coordinate (plain 'p', visit 'v').

    With exact=True the float inputs are converted to Fractions and the whole
    stencil is evaluated without rounding, so only truncation error remains.
    """

    def __init__(self, fn, xs, xhats, h, accuracy, exact=True):
        conv = Fraction if exact else float
        self.fn, self.exact = fn, exact
        self.xs, self.xh = [conv(x) for x in xs], [conv(x) for x in xhats]
        self.h, self.acc = conv(h), accuracy
        self.cache = {}

    def _w(self, w):
        return Fraction(w) if self.exact else float(Fraction(w))

    def at(self, shifts):
        key = tuple(sorted(shifts.items()))
        if key not in self.cache:
            xs, xh = list(self.xs), list(self.xh)
            for (kind, i), m in shifts.items():
                if kind == "p":
                    xs[i] += m * self.h
                else:
                    xh[i] += m * self.h
            v = self.fn(xs, xh)
            self.cache[key] = v if self.exact else float(v)
        return self.cache[key]

    def x(self, var):
        kind, i = var
        return self.xs[i] if kind == "p" else self.xh[i]

    def d(self, var, k):
        st = {1: _D1, 2: _D2, 3: _D3}[k][self.acc]
        return sum(self._w(w) * self.at({var: m}) for m, w in st) / self.h ** k

    def d11(self, u, v):
        st = _D1[self.acc]
        return sum(self._w(wu) * self._w(wv) * self.at({u: mu, v: mv})
                   for mu, wu in st for mv, wv in st) / self.h ** 2

    def f(self):
        return self.at({})


def _vars(xs, xhats):
    return [(("p", i), H) for i in range(len(xs))] + [(("v", i), H_HAT) for i in range(len(xhats))]


def second_order_terms(fn, xs, xhats, j, h, accuracy=4, exact=True):
    """Terms of (d_j^2 - 2 L_{-2}^{(j)}) f at a plain point x_j."""
    P = _Probe(fn, xs, xhats, h, accuracy, exact)
    me = ("p", j)
    terms = [P.d(me, 2)]
    f0 = P.f()
    for var, w in _vars(xs, xhats):
        if var == me:
            continue
        dx = P.x(var) - P.x(me)
        terms.append(-2 * w * f0 / dx ** 2)
        terms.append(2 * P.d(var, 1) / dx)
    return terms


def third_order_terms(fn, xs, xhats, s, h, accuracy=4, exact=True):
    """Terms of (d_s^3 - 8 L_{-2} d_s + 12 L_{-3}) f at the visit point x_hat_s."""
    P = _Probe(fn, xs, xhats, h, accuracy, exact)
    me = ("v", s)
    terms = [P.d(me, 3)]
    f0, fs = P.f(), P.d(me, 1)
    for var, w in _vars(xs, xhats):
        if var == me:
            continue
        dx = P.x(var) - P.x(me)
        # -8 L_{-2} d_s
        terms.append(-8 * w * fs / dx ** 2)
        terms.append(8 * P.d11(var, me) / dx)
        # +12 L_{-3}
        terms.append(12 * 2 * w * f0 / dx ** 3)
        terms.append(-12 * P.d(var, 1) / dx ** 2)
    return terms


def _normalized(terms):
    scale = sum(abs(t) for t in terms)
    return float(abs(sum(terms)) / scale) if scale else 0.0


def pde_residual(fn, xs, xhats=(), which="second", index=0, h=None, accuracy=4, exact=True):
    """Relative residual |sum of terms| / sum |terms| of a second- or third-order operator.

    fn(xs, xhats) evaluates the function; `index` is j (plain point) or s (visit point).
    Default step: 1e-3 times the smallest gap. exact=False runs the stencil in
    double precision (fn must then accept floats).
    """
    pts = sorted(float(x) for x in list(xs) + list(xhats))
    gap = min(b - a for a, b in zip(pts, pts[1:]))
    h = 1e-3 * gap if h is None else h
    if h >= gap / 10:
        raise ContinuumError("finite-difference step too large for the point spacing")
    if which == "second":
        return _normalized(second_order_terms(fn, xs, xhats, index, h, accuracy, exact))
    if which == "third":
        return _normalized(third_order_terms(fn, xs, xhats, index, h, accuracy, exact))
    raise ValueError(which)


def partition_function_evaluator(a):
    return lambda xs, xh: pure_partition_function(a, xs)


def zeta_evaluator(omega):
    """fn(xs, xhats) with xs = (x_in, x_out)."""
    return lambda xs, xh: zeta_omega(omega, xs[0], xh, xs[1])


# --- collapse limits -------------------------------------------------------------------

@dataclass
class CollapseResult:
    limit: float
    values: list  # scaled values per level
    table: list  # Richardson diagonal
    increment: float  # |last diagonal step|
    converged: bool


def richardson(values, ratio=2):
    """Richardson table for g(eps_k), eps_k = eps_0 / ratio^k, with integer-power error terms."""
    T = [[v] for v in values]
    for k in range(1, len(values)):
        for m in range(1, k + 1):
            f = ratio ** m - 1
            T[k].append(T[k][m - 1] + (T[k][m - 1] - T[k - 1][m - 1]) / f)
    return [row[-1] for row in T]


def collapse_limit(fn, eps0, exponent, levels=8, scale=1.0, tol=1e-8):
    """Extrapolate eps^exponent * fn(eps) as eps -> 0 on eps_k = eps0 / 2^k.

    fn should be exact (Fraction) where possible; the table is then built
    exactly and only the result is rounded. `scale` sets the magnitude used
    for the convergence check of limits that vanish.
    """
    if levels < 4:
        raise ValueError("need at least 4 levels")
    e0 = Fraction(eps0) if _exact(eps0) else eps0
    vals = []
    for k in range(levels):
        e = e0 / 2 ** k
        vals.append(e ** exponent * fn(e))
    diag = richardson(vals)
    lim = diag[-1]
    inc = abs(float(diag[-1] - diag[-2]))
    ref = max(abs(float(lim)), abs(float(scale)))
    return CollapseResult(float(lim), [float(v) for v in vals], [float(v) for v in diag], inc, inc <= tol * ref)


def asy2_limit(a, xs, j, eps0=None, levels=8):
    """lim (x_{j+1} - x_j)^2 Z_alpha as x_{j+1} -> x_j, and the predicted value.

    Prediction: Z of alpha with the link (j, j+1) removed at the remaining
    points when alpha has an up-wedge at j, else 0.
    """
    if isinstance(a, str):
        a = cb.DyckPath.parse(a)
    xs = [Fraction(x) if not isinstance(x, float) else x for x in xs]
    gap = min(b - c for c, b in zip(xs, xs[1:]))
    eps0 = gap / 8 if eps0 is None else eps0
    base = xs[j - 1]

    def fn(e):
        pts = list(xs)
        pts[j] = base + e
        return pure_partition_function(a, pts)

    rest = xs[:j - 1] + xs[j + 1:]
    if cb.wedge_kind(a, j) == "up":
        pred = pure_partition_function(cb.remove_wedge(a, j), rest)
    else:
        pred = 0
    scale = pure_partition_function(cb.unnested(a.size - 1), rest) if a.size > 1 else 1
    res = collapse_limit(fn, eps0, -DELTA, levels, scale=scale)
    return res, float(pred)


def asymptotics_constants(omega, x_in, xhats, x_out, which, s=0, t=None, eps0=None, levels=8):
    """Extrapolated |gap|^3 zeta_omega / zeta_omega' for a visit point collapsing.

    which='first': visit point s moves onto x_in from the right.
    which='consecutive': visit point t (default s+1) moves onto visit point s
    from the right. omega' drops the moving point.
    Returns (CollapseResult of the ratio, omega').
    """
    omega = tuple(cb.parse_omega(omega) if isinstance(omega, str) else omega)
    xhats = [Fraction(x) if not isinstance(x, float) else x for x in xhats]
    x_in, x_out = Fraction(x_in), Fraction(x_out)
    if which == "first":
        mover, anchor = s, x_in
    elif which == "consecutive":
        mover = s + 1 if t is None else t
        anchor = xhats[s]
    else:
        raise ValueError(which)
    rest = [x for k, x in enumerate(xhats) if k != mover]
    wp = tuple(w for k, w in enumerate(omega) if k != mover)
    denom = zeta_omega(wp, x_in, rest, x_out)
    pts = sorted([x_in, x_out] + [x for t, x in enumerate(xhats) if t != mover])
    right = min((p for p in pts if p > anchor), default=None)
    if right is None:
        raise ContinuumError("no room to the right of the collapse point")
    eps0 = (right - anchor) / 8 if eps0 is None else eps0

    def fn(e):
        xh = list(xhats)
        xh[mover] = anchor + e
        return zeta_omega(omega, x_in, xh, x_out) / denom

    return collapse_limit(fn, eps0, 3, levels, scale=1.0), wp


# --- rectangle to half-plane ------------------------------------------------------------

class RectangleMap:
    """Conformal map of [0, W] x [0, H] onto the upper half-plane, z -> sn(K z / W, k)^2.

    Corners (0,0), (W,0), (W,H), (0,H) go to 0, 1, 1/k^2, infinity, so the
    map increases along the boundary counterclockwise from the top-left corner.
    """

    def __init__(self, width, height, corner_margin=0.0):
        self.W, self.H = float(width), float(height)
        r = self.H / self.W
        if not 0.2 <= r <= 5:
            raise ContinuumError("aspect ratio outside [0.2, 5]")
        q = mpmath.exp(-mpmath.pi * r)
        self.k = (mpmath.jtheta(2, 0, q) / mpmath.jtheta(3, 0, q)) ** 2
        self.m = self.k ** 2
        self.K = mpmath.ellipk(self.m)
        self.corner_margin = corner_margin

    @property
    def modulus(self):
        return float(self.k)

    def _z(self, x, y):
        corners = [(0, 0), (self.W, 0), (self.W, self.H), (0, self.H)]
        if self.corner_margin and min(math.hypot(x - a, y - b) for a, b in corners) < self.corner_margin:
            raise ContinuumError("point inside a corner exclusion zone")
        return mpmath.mpc(x, y) * self.K / self.W

    def phi(self, x, y):
        sn = mpmath.ellipfun("sn", self._z(x, y), m=self.m)
        return float(mpmath.re(sn ** 2))

    def dphi(self, x, y):
        z = self._z(x, y)
        sn, cn, dn = (mpmath.ellipfun(f, z, m=self.m) for f in ("sn", "cn", "dn"))
        return float(abs(2 * sn * cn * dn) * self.K / self.W)

    def kernel(self, p1, p2):
        """(1/pi) |phi'(p1)| |phi'(p2)| K(phi(p1), phi(p2))."""
        return self.dphi(*p1) * self.dphi(*p2) * kernel(self.phi(*p1), self.phi(*p2)) / math.pi

    def visit_prediction(self, omega, p_in, p_hats, p_out):
        """Limit of delta^(-3 N') P[visits] for boundary points of the rectangle."""
        xin, xout = self.phi(*p_in), self.phi(*p_out)
        xh = [self.phi(*p) for p in p_hats]
        z = zeta_omega(omega, xin, xh, xout)
        fac = math.pi ** -len(xh)
        for p in p_hats:
            fac *= self.dphi(*p) ** 3
        return fac * z / kernel(xin, xout)

    def partition_prediction(self, a, points):
        """Limit of delta^(-2N) Z_alpha for boundary points listed in ccw order."""
        xs = [self.phi(*p) for p in points]
        fac = math.pi ** -a.size
        for p in points:
            fac *= self.dphi(*p)
        return fac * pure_partition_function(a, xs)
