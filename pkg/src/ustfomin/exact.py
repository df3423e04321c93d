"""Determinant formulas for UST connectivities and LERW boundary visits."""

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import combinatorics as cb
from .lattice import GridError, excursion_kernel_matrix, KernelMatrix
from .linalg import det

MAX_N = 6


def _values(K):
    return K.values if isinstance(K, KernelMatrix) else K


def lp_determinant(b, K):
    """det( K(a_k, b_l) ) over the left-to-right orientation of b.

    K is indexed by 0-based labels: K[i][j] is the kernel between points i+1 and j+1.
    """
    V = _values(K)
    if len(V) != 2 * b.size:
        raise IndexError(f"kernel has {len(V)} points, pattern needs {2 * b.size}")
    rows = [[V[a - cb.OFFSET][e - cb.OFFSET] for e in b.exits] for a in b.entrances]
    return det(rows)


@dataclass
class InverseFominSum:
    pattern: cb.DyckPath
    value: object
    backend: str
    contributions: list = field(default_factory=list)  # (beta, coefficient, determinant)

    def as_record(self):
        return {
            "pattern": str(self.pattern),
            "links": self.pattern.link_string(),
            "value": _num(self.value),
            "backend": self.backend,
            "contributions": [
                {"beta": str(b), "coefficient": c, "determinant": _num(d)}
                for b, c, d in self.contributions
            ],
        }


def _num(x):
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else int(x)
    return float(x)


def _backend_of(K):
    if isinstance(K, KernelMatrix):
        return K.backend
    V = np.asarray(K, dtype=object)
    return "rational" if all(isinstance(x, (int, Fraction)) for x in V.flat) else "float"


def inverse_fomin_sum(a, K):
    """Sum over beta above a of #C(a/beta) times the LP determinant of beta."""
    if a.size > MAX_N:
        raise cb.SizeError(f"N={a.size} exceeds {MAX_N}")
    contribs = []
    total = 0
    for b, coef in cb.inverse_coefficients(a):
        d = lp_determinant(b, K)
        contribs.append((b, coef, d))
        total = total + coef * d
    return InverseFominSum(a, total, _backend_of(K), contribs)


def connectivity_probability(a, K):
    """Z_alpha from a kernel on the 2N marked points (in ccw label order)."""
    return inverse_fomin_sum(a, K)


def fomin_sum(a, Zs, f=None):
    """sum_beta M_{a,beta} Z_beta for a dict beta -> Z_beta (unit weights by default)."""
    out = 0
    for b, z in Zs.items():
        m = cb.m_entry(a, b) if f is None else cb.m_entry(a, b, f)
        if m:
            out = out + m * z
    return out


# --- grid level ---------------------------------------------------------------

def marked_edges(g):
    """Non-visit marked edges in ccw order, starting from the first listed mark."""
    ks = [m.edge for m in g.marks if m.role != "visit"]
    if not ks:
        return []
    L = len(g.bedges)
    k0 = next((m.edge for m in g.marks if m.role == "in"), ks[0])
    out = sorted(ks, key=lambda k: (k - k0) % L)
    if len(set(out)) != len(out):
        raise GridError("two marked points share a boundary edge")
    return out


def grid_connectivity(g, a, edges=None, backend="auto"):
    """Z_alpha on a grid for marked edges e_1..e_2N (ccw boundary-edge indices)."""
    edges = marked_edges(g) if edges is None else list(edges)
    if len(edges) != 2 * a.size:
        raise GridError(f"pattern of size {a.size} needs {2 * a.size} marked edges, got {len(edges)}")
    K = excursion_kernel_matrix(g, edges, backend)
    return inverse_fomin_sum(a, K)


def connectivity_event_probability(g, a, edges, orientation=None, backend="auto"):
    """P[every branch from e_{a_l} exits via e_{b_l}]; orientation defaults to left-to-right."""
    z = grid_connectivity(g, a, edges, backend).value
    orient = orientation or a.links
    w = 1
    for s, _ in orient:
        w = w * g.c_bedge(edges[s - cb.OFFSET])
    return z / w


@dataclass
class VisitConfig:
    omega: tuple
    layout: cb.VisitLayout
    edges: list  # ccw boundary-edge index for each label 1..2N
    hat_edges: list


def visit_config(g):
    """Labels, visit order and link pattern from the in/out/visit marks of g."""
    ins = [m for m in g.marks if m.role == "in"]
    outs = [m for m in g.marks if m.role == "out"]
    visits = [m for m in g.marks if m.role == "visit"]
    if len(ins) != 1 or len(outs) != 1:
        raise GridError("need exactly one 'in' and one 'out' mark")
    L = len(g.bedges)
    k_in, k_out = ins[0].edge, outs[0].edge
    off = lambda k: (k - k_in) % L
    o = off(k_out)
    omega, plus, minus = [], [], []
    for s, m in enumerate(visits):
        k1, k2 = m.pair
        if 0 < off(k1) < o and 0 < off(k2) < o:
            omega.append(1)
            plus.append(off(k1))
        elif off(k1) > o and off(k2) > o:
            omega.append(-1)
            minus.append(off(k1))
        else:
            raise GridError(f"visit {s + 1} overlaps e_in or e_out")
    if plus != sorted(plus) or minus != sorted(minus, reverse=True):
        raise GridError("listed visiting order is not realizable by a simple path")
    layout = cb.visit_layout(omega)
    edges = [None] * (2 * layout.pattern.size)
    edges[layout.i_in - 1] = k_in
    edges[layout.i_out - 1] = k_out
    for s, m in enumerate(visits):
        j, j1 = layout.pairs[s]
        edges[j - 1], edges[j1 - 1] = m.pair
    if sorted(edges, key=off) != edges or len(set(edges)) != len(edges):
        raise GridError("marked edges are not distinct / not in ccw order")
    return VisitConfig(tuple(omega), layout, edges, [m.hat_edge for m in visits])


@dataclass
class VisitProbability:
    omega: tuple
    pattern: cb.DyckPath
    direct: object
    replacing: object
    backend: str

    @property
    def value(self):
        return self.replacing if self.replacing is not None else self.direct

    def as_record(self):
        return {
            "omega": "".join("+" if w > 0 else "-" for w in self.omega),
            "pattern": str(self.pattern),
            "direct": None if self.direct is None else _num(self.direct),
            "replacing": None if self.replacing is None else _num(self.replacing),
            "backend": self.backend,
        }


def _weight_factor(g, cfg):
    w = 1
    for (p, q), (j, j1) in zip(cfg.hat_edges, cfg.layout.pairs):
        w = w * g.c(p, q) / (g.c_bedge(cfg.edges[j - 1]) * g.c_bedge(cfg.edges[j1 - 1]))
    return w


def boundary_visit_probability(g, omega=None, backend="auto", method="both"):
    """P[LERW from e_in to e_out uses the visit edges in the listed order].

    method: 'direct' (ratio Z_alpha / K(e_in, e_out)), 'replacing' (discrete
    replacing algorithm), or 'both'.
    """
    cfg = visit_config(g)
    if omega is not None and tuple(omega) != cfg.omega:
        raise GridError(f"marks realize omega={cfg.omega}, not {tuple(omega)}")
    a = cfg.layout.pattern
    K = excursion_kernel_matrix(g, cfg.edges, backend)
    kio = K.values[cfg.layout.i_in - 1][cfg.layout.i_out - 1]
    if kio == 0:
        raise GridError("K(e_in, e_out) vanishes")
    w = _weight_factor(g, cfg) if g.weighted else 1
    direct = rep = None
    if method in ("direct", "both"):
        direct = w * inverse_fomin_sum(a, K).value / kio
    if method in ("replacing", "both"):
        pairs = [(j - 1, j) for j, _ in cfg.layout.pairs]
        Kr = excursion_kernel_matrix(g, cfg.edges, K.backend, derivative_pairs=pairs)
        dl = g.delta if K.backend == "rational" else float(g.delta)
        rep = w * dl ** len(pairs) * inverse_fomin_sum(a, Kr).value / kio
    return VisitProbability(cfg.omega, a, direct, rep, K.backend)


def boundary_faces(g):
    """Boundary squares with their two flanking boundary edges (ccw-consecutive)."""
    L = len(g.bedges)
    out = {}
    for (i, j) in g.squares:
        sides = [((i, j), (i + 1, j)), ((i + 1, j), (i + 1, j + 1)),
                 ((i, j + 1), (i + 1, j + 1)), ((i, j), (i, j + 1))]
        ks = []
        for p, q in sides:
            if (p, q) in g.bedge_index:
                ks.append(g.bedge_index[(p, q)])
            elif (q, p) in g.bedge_index:
                ks.append(g.bedge_index[(q, p)])
        if len(ks) == 2:
            k1, k2 = sorted(ks)
            if (k2 - k1) % L == 1:
                out[(i, j)] = (k1, k2)
            elif (k1 - k2) % L == 1:
                out[(i, j)] = (k2, k1)
    return out


def free_subtree_probability(g, faces, backend="auto"):
    """P[some interior-forest component of the free UST meets the boundary exactly at faces]."""
    bf = boundary_faces(g)
    faces = [tuple(f) for f in faces]
    if len(set(faces)) != len(faces):
        raise GridError("faces must be distinct")
    for f in faces:
        if f not in bf:
            raise GridError(f"{f} is not a boundary face with two flanking edges")
    flank = [bf[f] for f in faces]
    used = [k for p in flank for k in p]
    if len(set(used)) != len(used):
        raise GridError("faces must not be neighbours")
    L = len(g.bedges)
    start = flank[0][1]
    edges = sorted(used, key=lambda k: (k - start) % L)
    n = len(faces)
    res = grid_connectivity(g, cb.unnested(n), edges, backend)
    return 2 ** n * res.value
