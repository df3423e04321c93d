"""Square-grid approximations of rectilinear domains and excursion kernels.

Vertices are stored as integer pairs (i, j) meaning the point (i*delta, j*delta).
A boundary edge is a pair (b, v) of a boundary vertex b and an interior
vertex v; boundary edges are listed in counterclockwise order along the
boundary of the grid domain.
"""

import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy import ndimage

from .linalg import solve_exact

EXACT_LIMIT = 40
ROLES = ("in", "out", "plain", "visit")

DIRS = ((1, 0), (0, 1), (-1, 0), (0, -1))


class GridError(ValueError):
    pass


def _frac(x):
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x).limit_denominator(10**9)
    return Fraction(x)


@dataclass
class MarkedPoint:
    x: Fraction
    y: Fraction
    role: str = "plain"

    def __post_init__(self):
        self.x, self.y = _frac(self.x), _frac(self.y)
        if self.role not in ROLES:
            raise GridError(f"unknown role {self.role!r}")


@dataclass
class DomainSpec:
    polygon: list
    delta: Fraction
    marks: list = field(default_factory=list)
    conductance: object = None  # callable (p, q) -> c, lattice coordinates
    corner_margin: int = 2  # marked points closer than this many delta to a corner are rejected

    def __post_init__(self):
        self.polygon = [(_frac(x), _frac(y)) for x, y in self.polygon]
        self.delta = _frac(self.delta)
        self.marks = [m if isinstance(m, MarkedPoint) else MarkedPoint(**m) for m in self.marks]
        if self.delta <= 0:
            raise GridError("delta must be positive")
        n = len(self.polygon)
        if n < 4:
            raise GridError("polygon needs at least 4 vertices")
        for k in range(n):
            (x0, y0), (x1, y1) = self.polygon[k], self.polygon[(k + 1) % n]
            if x0 != x1 and y0 != y1:
                raise GridError("polygon is not axis-aligned")
        if _signed_area(self.polygon) < 0:
            self.polygon = self.polygon[::-1]

    @classmethod
    def rectangle(cls, width, height, delta, marks=(), conductance=None, corner_margin=2):
        w, h = _frac(width), _frac(height)
        return cls([(0, 0), (w, 0), (w, h), (0, h)], delta, list(marks), conductance, corner_margin)

    @classmethod
    def from_dict(cls, d):
        cond = None
        if d.get("conductances"):
            cond = _conductance_from_dict(d["conductances"], _frac(d["delta"]))
        return cls(d["polygon"], d["delta"], [MarkedPoint(**m) for m in d.get("marks", [])], cond,
                   int(d.get("corner_margin", 2)))

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def with_delta(self, delta):
        return DomainSpec(self.polygon, delta, self.marks, self.conductance, self.corner_margin)


def _conductance_from_dict(d, delta):
    default = _frac(d.get("default", 1))
    table = {}
    for e in d.get("edges", []):
        p = (int(_frac(e["a"][0]) / delta), int(_frac(e["a"][1]) / delta))
        q = (int(_frac(e["b"][0]) / delta), int(_frac(e["b"][1]) / delta))
        table[frozenset((p, q))] = _frac(e["c"])

    def c(p, q):
        return table.get(frozenset((p, q)), default)

    return c


def _signed_area(poly):
    s = 0
    for k in range(len(poly)):
        (x0, y0), (x1, y1) = poly[k], poly[(k + 1) % len(poly)]
        s += x0 * y1 - x1 * y0
    return s / 2


def _inside(poly, px, py):
    # even-odd rule; only called with points off the polygon boundary
    inside = False
    n = len(poly)
    for k in range(n):
        (x0, y0), (x1, y1) = poly[k], poly[(k + 1) % n]
        if (y0 > py) != (y1 > py):
            xc = x0 + (py - y0) * (x1 - x0) / (y1 - y0)
            if xc > px:
                inside = not inside
    return inside


def _square_inside(poly, a, b, d):
    if not _inside(poly, a + d / 2, b + d / 2):
        return False
    n = len(poly)
    for k in range(n):
        (x0, y0), (x1, y1) = poly[k], poly[(k + 1) % n]
        if x0 == x1:
            lo, hi = min(y0, y1), max(y0, y1)
            if a < x0 < a + d and lo < b + d and hi > b:
                return False
        else:
            lo, hi = min(x0, x1), max(x0, x1)
            if b < y0 < b + d and lo < a + d and hi > a:
                return False
    return True


@dataclass
class Mark:
    role: str
    point: tuple
    edge: int = None  # ccw boundary-edge index (in/out/plain)
    pair: tuple = None  # ccw-consecutive flanking edge indices (visit)
    hat_edge: tuple = None  # unit-distance edge joining the flank interiors


class GridModel:
    """Square-grid approximation; immutable after construction."""

    def __init__(self, spec):
        self.spec = spec
        self.delta = spec.delta
        d = spec.delta
        xs = [p[0] for p in spec.polygon]
        ys = [p[1] for p in spec.polygon]
        i0, i1 = int(np.floor(min(xs) / d)), int(np.ceil(max(xs) / d))
        j0, j1 = int(np.floor(min(ys) / d)), int(np.ceil(max(ys) / d))
        inside = np.zeros((i1 - i0, j1 - j0), dtype=bool)
        for i in range(i0, i1):
            for j in range(j0, j1):
                inside[i - i0, j - j0] = _square_inside(spec.polygon, i * d, j * d, d)
        lab, ncomp = ndimage.label(inside)
        if ncomp == 0:
            raise GridError("no lattice square fits inside the domain")
        sizes = ndimage.sum(inside, lab, index=range(1, ncomp + 1))
        best = max(sizes)
        # ties: component holding the leftmost-lowest square
        keep = min((k + 1 for k in range(ncomp) if sizes[k] == best),
                   key=lambda c: tuple(np.argwhere(lab == c)[0]))
        self.squares = {(int(a) + i0, int(b) + j0) for a, b in np.argwhere(lab == keep)}

        corners = {}
        for (i, j) in self.squares:
            for v in ((i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)):
                corners[v] = corners.get(v, 0) + 1
        self.interior = sorted((v for v, k in corners.items() if k == 4), key=lambda v: (v[1], v[0]))
        if not self.interior:
            raise GridError("grid has no interior vertex")
        self.index = {v: k for k, v in enumerate(self.interior)}
        self.boundary = {v for v, k in corners.items() if k < 4}
        self.vertices = set(corners)

        self.edges = set()
        for v in self.interior:
            for dx, dy in DIRS:
                w = (v[0] + dx, v[1] + dy)
                self.edges.add(frozenset((v, w)))
        self._order_boundary_edges()
        self._conductance = spec.conductance
        self.marks = [self._mark(m) for m in spec.marks]
        self._lu = None
        self._exact_green = None

    # --- geometry -----------------------------------------------------------
    def _order_boundary_edges(self):
        seg_out = {}
        for (i, j) in self.squares:
            sides = [((i, j - 1), (i, j), (1, 0)),
                     ((i + 1, j), (i + 1, j), (0, 1)),
                     ((i, j + 1), (i + 1, j + 1), (-1, 0)),
                     ((i - 1, j), (i, j + 1), (0, -1))]
            for nb, start, dirn in sides:
                if nb not in self.squares:
                    seg_out.setdefault(start, []).append(dirn)
        start = min(seg_out, key=lambda v: (v[1], v[0]))
        d0 = (1, 0) if (1, 0) in seg_out[start] else seg_out[start][0]
        used = set()
        order = []
        v, d = start, d0
        while (v, d) not in used:
            used.add((v, d))
            w = (v[0] + d[0], v[1] + d[1])
            opts = seg_out[w]
            left = (-d[1], d[0])
            right = (d[1], -d[0])
            nd = next(o for o in (left, d, right) if o in opts)
            # inward edges at w, clockwise from -d towards nd
            k = DIRS.index((-d[0], -d[1]))
            for step in range(1, 4):
                r = DIRS[(k - step) % 4]
                if r == nd:
                    break
                u = (w[0] + r[0], w[1] + r[1])
                if u in self.index:
                    order.append((w, u))
            v, d = w, nd
        self.bedges = order
        self.bedge_index = {e: k for k, e in enumerate(order)}
        total = sum(1 for e in self.edges if len([x for x in e if x in self.index]) == 1)
        if len(set(order)) != len(order) or len(order) != total:
            raise GridError("boundary edges do not form a single ccw cycle")

    def xy(self, v):
        return (v[0] * self.delta, v[1] * self.delta)

    def _segment_normal(self, px, py):
        poly = self.spec.polygon
        n = len(poly)
        for k in range(n):
            (x0, y0), (x1, y1) = poly[k], poly[(k + 1) % n]
            if x0 == x1 == px and min(y0, y1) <= py <= max(y0, y1):
                pass
            elif y0 == y1 == py and min(x0, x1) <= px <= max(x0, x1):
                pass
            else:
                continue
            if min(abs(px - x0) + abs(py - y0), abs(px - x1) + abs(py - y1)) < self.spec.corner_margin * self.delta:
                raise GridError(f"marked point ({px}, {py}) is too close to a corner")
            dx, dy = np.sign(x1 - x0), np.sign(y1 - y0)
            return (int(-dy), int(dx))
        raise GridError(f"marked point ({px}, {py}) is not on the polygon boundary")

    def _mark(self, m):
        nrm = self._segment_normal(m.x, m.y)
        d = self.delta
        cands = []
        if m.role != "visit":
            for k, (b, v) in enumerate(self.bedges):
                if (v[0] - b[0], v[1] - b[1]) == nrm:
                    dist = abs(b[0] * d - m.x) + abs(b[1] * d - m.y)
                    cands.append((dist, k))
            if not cands:
                raise GridError("no boundary edge with the inward normal direction")
            dist, k = min(cands)
            if dist > 2 * d:
                raise GridError(f"marked point farther than 2 delta from the grid boundary")
            return Mark(m.role, (m.x, m.y), edge=k)
        L = len(self.bedges)
        for k in range(L):
            (b1, v1), (b2, v2) = self.bedges[k], self.bedges[(k + 1) % L]
            if (v1[0] - b1[0], v1[1] - b1[1]) != nrm or (v2[0] - b2[0], v2[1] - b2[1]) != nrm:
                continue
            if abs(v1[0] - v2[0]) + abs(v1[1] - v2[1]) != 1:
                continue
            mx, my = (b1[0] + b2[0]) * d / 2, (b1[1] + b2[1]) * d / 2
            cands.append((abs(mx - m.x) + abs(my - m.y), k))
        if not cands:
            raise GridError("no unit-distance edge near visit point")
        dist, k = min(cands)
        if dist > 2 * d:
            raise GridError("visit point farther than 2 delta from the grid boundary")
        pair = (k, (k + 1) % L)
        return Mark(m.role, (m.x, m.y), pair=pair, hat_edge=(self.bedges[pair[0]][1], self.bedges[pair[1]][1]))

    # --- conductances ---------------------------------------------------
    def c(self, p, q):
        if self._conductance is None:
            return 1
        return self._conductance(p, q)

    def c_bedge(self, k):
        b, v = self.bedges[k]
        return self.c(b, v)

    @property
    def weighted(self):
        return self._conductance is not None

    def walk_table(self):
        """Neighbour table for random walks.

        Returns (nbr, cum): nbr[v, k] >= 0 is an interior index, otherwise
        -1 - (boundary edge index); cum holds cumulative transition weights.
        """
        n = len(self.interior)
        nbr = np.zeros((n, 4), dtype=np.int64)
        cum = np.zeros((n, 4))
        for a, v in enumerate(self.interior):
            ws = []
            for k, (dx, dy) in enumerate(DIRS):
                w = (v[0] + dx, v[1] + dy)
                nbr[a, k] = self.index[w] if w in self.index else -1 - self.bedge_index[(w, v)]
                ws.append(float(self.c(v, w)))
            cum[a] = np.cumsum(ws) / sum(ws)
        cum[:, -1] = 1.0
        return nbr, cum

    # --- Dirichlet problem ------------------------------------------------
    def laplacian_entries(self):
        rows, cols, vals = [], [], []
        for a, v in enumerate(self.interior):
            tot = 0
            for dx, dy in DIRS:
                w = (v[0] + dx, v[1] + dy)
                c = self.c(v, w)
                tot += c
                if w in self.index:
                    rows.append(a)
                    cols.append(self.index[w])
                    vals.append(-c)
            rows.append(a)
            cols.append(a)
            vals.append(tot)
        return rows, cols, vals

    def green_columns(self, sources, backend="auto"):
        """Columns G[:, s] of the inverse Dirichlet Laplacian for interior indices s."""
        n = len(self.interior)
        if backend == "auto":
            backend = "rational" if n <= EXACT_LIMIT else "float"
        if backend == "rational":
            if n > 4 * EXACT_LIMIT:
                raise GridError(f"{n} interior vertices is too many for exact elimination")
            if self._exact_green is None:
                self._exact_green = {}
            missing = [s for s in sources if s not in self._exact_green]
            if missing:
                A = [[Fraction(0)] * n for _ in range(n)]
                for r, c, v in zip(*self.laplacian_entries()):
                    A[r][c] += Fraction(v)
                B = [[Fraction(int(i == s)) for s in missing] for i in range(n)]
                X = solve_exact(A, B)
                for k, s in enumerate(missing):
                    self._exact_green[s] = [X[i][k] for i in range(n)]
            return [self._exact_green[s] for s in sources], "rational"
        if self._lu is None:
            r, c, v = self.laplacian_entries()
            L = sp.csc_matrix((np.array(v, dtype=float), (r, c)), shape=(n, n))
            self._lu = spla.splu(L)
        B = np.zeros((n, len(sources)))
        for k, s in enumerate(sources):
            B[s, k] = 1.0
        X = self._lu.solve(B)
        return [X[:, k] for k in range(len(sources))], "float"


def build_grid(spec):
    return GridModel(spec)


def harmonic_field(g, target, backend="auto"):
    """H_v(target) for every interior vertex v (list/array in g.interior order).

    Boundary values: 1 at the boundary endpoint of `target` reached through
    `target`, 0 elsewhere; only the interior values are returned.
    """
    b, v = g.bedges[target]
    cols, bk = g.green_columns([g.index[v]], backend)
    c = g.c(b, v)
    if bk == "rational":
        return [c * x for x in cols[0]]
    return float(c) * cols[0]


@dataclass
class KernelMatrix:
    edges: list
    values: object  # list of lists of Fraction, or ndarray
    backend: str

    def __getitem__(self, key):
        i, j = key
        return self.values[i][j]

    def __len__(self):
        return len(self.edges)

    def to_csv(self):
        lines = ["," + ",".join(f"e{k}" for k in self.edges)]
        for k, row in zip(self.edges, self.values):
            lines.append(f"e{k}," + ",".join(str(x) for x in row))
        return "\n".join(lines) + "\n"

    def asymmetry(self):
        n = len(self.edges)
        return max((abs(self.values[i][j] - self.values[j][i]) for i in range(n) for j in range(n)),
                   default=0)


def excursion_kernel_matrix(g, edges, backend="auto", derivative_pairs=(), scale=None):
    """K(e_i, e_j) = c(e_i) H_{e_i interior}(e_j), zero on the diagonal.

    `derivative_pairs` lists index pairs (j, j+1) (0-based, into `edges`) of
    ccw-consecutive flanking edges; for those the entry K(j, j+1) is zeroed and
    slot j+1 is replaced by the discrete ccw tangential difference
    (f(e_{j+1}) - f(e_j)) / delta.
    """
    srcs = [g.index[g.bedges[k][1]] for k in edges]
    cols, bk = g.green_columns(sorted(set(srcs)), backend)
    col = dict(zip(sorted(set(srcs)), cols))
    cs = [g.c_bedge(k) for k in edges]
    n = len(edges)
    if bk == "rational":
        K = [[Fraction(0)] * n for _ in range(n)]
        for i in range(n):
            for j in range(n):
                if i != j:
                    K[i][j] = Fraction(cs[i]) * Fraction(cs[j]) * col[srcs[j]][srcs[i]]
    else:
        K = np.zeros((n, n))
        for i in range(n):
            for j in range(n):
                if i != j:
                    K[i, j] = float(cs[i]) * float(cs[j]) * col[srcs[j]][srcs[i]]
    km = KernelMatrix(list(edges), K, bk)
    if derivative_pairs:
        km = replace_by_differences(km, derivative_pairs, g.delta if scale is None else scale)
    return km


def replace_by_differences(km, pairs, delta):
    """Discrete replacing: zero K(j, j+1) then difference slot j+1 against slot j."""
    exact = km.backend == "rational"
    n = len(km.edges)
    K = [list(r) for r in km.values] if exact else np.array(km.values, dtype=float)
    dl = Fraction(delta) if exact else float(delta)
    for j, j1 in pairs:
        if j1 != j + 1:
            raise GridError("derivative slots must be consecutive pairs")
        K[j][j1] = K[j1][j] = 0 * K[j][j1]
    for j, j1 in pairs:
        for i in range(n):
            K[j1][i] = (K[j1][i] - K[j][i]) / dl
        for i in range(n):
            K[i][j1] = (K[i][j1] - K[i][j]) / dl
        K[j][j1] = K[j1][j] = 0 * K[j][j1]
    for i in range(n):
        K[i][i] = 0 * K[i][i]
    return KernelMatrix(list(km.edges), K, km.backend)
