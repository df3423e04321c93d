"""Brute-force ground truth on tiny wired grids.

Spanning trees of the graph with all boundary vertices identified to a root
are enumerated exhaustively; probabilities are exact weighted tree fractions.
"""

from dataclasses import dataclass
from fractions import Fraction

from . import combinatorics as cb
from .lattice import DIRS, GridError
from .linalg import bareiss_det, solve_exact

MAX_INTERIOR = 20
MAX_TREES = 10**6
ROOT = -1


def wired_edges(g):
    """Edges of G/boundary as (u, w, bedge) with interior indices, ROOT for the boundary.

    `bedge` is the ccw boundary-edge index for edges into the root, else None.
    """
    out = []
    for a, v in enumerate(g.interior):
        for dx, dy in DIRS:
            w = (v[0] + dx, v[1] + dy)
            if w in g.index:
                b = g.index[w]
                if a < b:
                    out.append((a, b, None))
            else:
                out.append((a, ROOT, g.bedge_index[(w, v)]))
    return out


def _edge_c(g, e):
    a, b, k = e
    if k is not None:
        return g.c_bedge(k)
    return g.c(g.interior[a], g.interior[b])


def matrix_tree_count(g):
    """Weighted tree count: determinant of the Dirichlet Laplacian."""
    n = len(g.interior)
    A = [[Fraction(0)] * n for _ in range(n)]
    for r, c, v in zip(*g.laplacian_entries()):
        A[r][c] += Fraction(v)
    return bareiss_det(A)


class _DSU:
    def __init__(self, items):
        self.p = {x: x for x in items}

    def find(self, x):
        while self.p[x] != x:
            self.p[x] = self.p[self.p[x]]
            x = self.p[x]
        return x


def _connected(nodes, edges):
    adj = {x: [] for x in nodes}
    for a, b, _ in edges:
        adj[a].append(b)
        adj[b].append(a)
    start = next(iter(nodes))
    seen = {start}
    stack = [start]
    while stack:
        x = stack.pop()
        for y in adj[x]:
            if y not in seen:
                seen.add(y)
                stack.append(y)
    return len(seen) == len(nodes)


@dataclass
class TreeEnumeration:
    graph: object
    trees: list  # each tree is a tuple of edges (u, w, bedge)
    weights: list

    @property
    def count(self):
        return len(self.trees)

    @property
    def total_weight(self):
        return sum(self.weights, Fraction(0))


def iter_spanning_trees(g):
    """Spanning trees of G/boundary by include/exclude recursion with pruning."""
    nodes = list(range(len(g.interior))) + [ROOT]
    edges = wired_edges(g)
    need = len(nodes) - 1

    def rec(i, chosen, parent):
        if len(chosen) == need:
            yield tuple(chosen)
            return
        if i == len(edges) or len(chosen) + len(edges) - i < need:
            return
        a, b, _ = edges[i]
        ra, rb = _root(parent, a), _root(parent, b)
        if ra != rb:
            p2 = dict(parent)
            p2[ra] = rb
            chosen.append(edges[i])
            yield from rec(i + 1, chosen, p2)
            chosen.pop()
        # exclude edge i if the rest can still span
        if _connected(nodes, chosen + edges[i + 1:]):
            yield from rec(i + 1, chosen, parent)

    yield from rec(0, [], {x: x for x in nodes})


def _root(parent, x):
    while parent[x] != x:
        x = parent[x]
    return x


def enumerate_spanning_trees(g):
    if len(g.interior) > MAX_INTERIOR:
        raise GridError(f"{len(g.interior)} interior vertices exceeds the guard {MAX_INTERIOR}")
    expected = matrix_tree_count(g)
    if not g.weighted and expected > MAX_TREES:
        raise GridError(f"{expected} trees exceeds the guard {MAX_TREES}")
    trees, weights = [], []
    for t in iter_spanning_trees(g):
        trees.append(t)
        w = Fraction(1)
        for e in t:
            w *= Fraction(_edge_c(g, e))
        weights.append(w)
    return TreeEnumeration(g, trees, weights)


def branch_exit(g, tree, start):
    """Boundary edge through which the tree path from interior index `start` reaches the root."""
    adj = {}
    for a, b, k in tree:
        adj.setdefault(a, []).append((b, k))
        adj.setdefault(b, []).append((a, k))
    prev = {start: None}
    stack = [start]
    while stack:
        x = stack.pop()
        for y, k in adj.get(x, []):
            if y == ROOT:
                return k
            if y not in prev:
                prev[y] = x
                stack.append(y)
    raise ValueError("tree does not reach the boundary")


def branch_path(tree, start):
    """Vertex sequence (interior indices) of the branch from `start`, ending with ROOT."""
    adj = {}
    for a, b, k in tree:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    prev = {start: None}
    order = [start]
    for x in order:
        for y in adj.get(x, []):
            if y not in prev:
                prev[y] = x
                order.append(y)
    path = [ROOT]
    while prev[path[-1]] is not None:
        path.append(prev[path[-1]])
    return path[::-1]


def exact_connectivity_bruteforce(g, a, edges, orientation=None, enum=None):
    """Weighted fraction of trees in which each branch from e_{a_l} exits via e_{b_l}."""
    enum = enum or enumerate_spanning_trees(g)
    orient = orientation or a.links
    srcs = [(g.index[g.bedges[edges[s - cb.OFFSET]][1]], edges[t - cb.OFFSET]) for s, t in orient]
    hit = Fraction(0)
    for t, w in zip(enum.trees, enum.weights):
        if all(branch_exit(g, t, v) == k for v, k in srcs):
            hit += w
    return hit / enum.total_weight


def visit_bruteforce(g, cfg, enum=None):
    """P[branch from e_in exits at e_out and uses the hat edges in order | exits at e_out]."""
    enum = enum or enumerate_spanning_trees(g)
    k_in = cfg.edges[cfg.layout.i_in - 1]
    k_out = cfg.edges[cfg.layout.i_out - 1]
    v_in = g.index[g.bedges[k_in][1]]
    hats = [frozenset((g.index[p], g.index[q])) for p, q in cfg.hat_edges]
    num = den = Fraction(0)
    for t, w in zip(enum.trees, enum.weights):
        if branch_exit(g, t, v_in) != k_out:
            continue
        den += w
        path = branch_path(t, v_in)
        steps = [frozenset(path[i:i + 2]) for i in range(len(path) - 1)]
        pos = [steps.index(h) if h in steps else None for h in hats]
        if None not in pos and pos == sorted(pos):
            num += w
    return num / den


def rational_harmonic_measure(g, target):
    """Exact H_v(target) from the transition-probability form of the Dirichlet problem."""
    n = len(g.interior)
    if n > 40:
        raise GridError("exact harmonic measure limited to 40 interior vertices")
    bt, vt = g.bedges[target]
    A = [[Fraction(0)] * n for _ in range(n)]
    B = [[Fraction(0)] for _ in range(n)]
    for a, v in enumerate(g.interior):
        cs = {}
        for dx, dy in DIRS:
            w = (v[0] + dx, v[1] + dy)
            cs[w] = Fraction(g.c(v, w))
        tot = sum(cs.values())
        A[a][a] += 1
        for w, c in cs.items():
            if w in g.index:
                A[a][g.index[w]] -= c / tot
            elif (w, v) == (bt, vt):
                B[a][0] += c / tot
    X = solve_exact(A, B)
    return [row[0] for row in X]


# --- free UST via planar duality -------------------------------------------

def _dual_of(g):
    """Dual vertices are squares; each primal edge maps to the pair of squares it separates."""
    dual = {}
    for a, b, k in wired_edges(g):
        if k is not None:
            bv, v = g.bedges[k]
            p, q = bv, v
        else:
            p, q = g.interior[a], g.interior[b]
        if p[0] == q[0]:
            x, y = p[0], min(p[1], q[1])
            sq = ((x - 1, y), (x, y))
        else:
            x, y = min(p[0], q[0]), p[1]
            sq = ((x, y - 1), (x, y))
        dual[(a, b, k)] = sq
    return dual


def free_subtree_bruteforce(g, faces, enum=None):
    """Probability that a component of the free-UST interior forest meets the boundary exactly at faces."""
    enum = enum or enumerate_spanning_trees(g)
    dual = _dual_of(g)
    bfaces = {s for s in g.squares
              if any((s[0] + i, s[1] + j) not in g.index for i in (0, 1) for j in (0, 1))}
    target = set(tuple(f) for f in faces)
    hit = Fraction(0)
    for t, w in zip(enum.trees, enum.weights):
        tset = set(t)
        dsu = _DSU(g.squares)
        for e, (s1, s2) in dual.items():
            if e in tset or e[2] is not None:
                continue  # primal tree edge, or boundary dual edge
            r1, r2 = dsu.find(s1), dsu.find(s2)
            if r1 != r2:
                dsu.p[r1] = r2
        comps = {}
        for f in bfaces:
            comps.setdefault(dsu.find(f), set()).add(f)
        if any(c == target for c in comps.values()):
            hit += w
    return hit / enum.total_weight


def free_subtree_connectivity_bruteforce(g, faces, enum=None):
    """Sum over the 2^N orientations of the unnested connectivity of the flanking edges.

    This is the primal event the closed formula counts; the literal dual event
    above is strictly larger (flank branches may merge and exit elsewhere).
    """
    from itertools import product
    from .exact import boundary_faces
    enum = enum or enumerate_spanning_trees(g)
    bf = boundary_faces(g)
    flank = [bf[tuple(f)] for f in faces]
    L = len(g.bedges)
    edges = sorted([k for p in flank for k in p], key=lambda k: (k - flank[0][1]) % L)
    a = cb.unnested(len(faces))
    tot = Fraction(0)
    for flips in product((False, True), repeat=a.size):
        orient = [l[::-1] if f else l for l, f in zip(a.links, flips)]
        tot += exact_connectivity_bruteforce(g, a, edges, orient, enum)
    return tot
