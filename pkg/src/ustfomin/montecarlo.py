"""Wilson's algorithm, loop-erasure and Monte Carlo estimators.

Random walks run inside numba kernels on the neighbour tables of
`GridModel.walk_table`. Each chunk of samples gets its own 32-bit seed drawn
from a `numpy.random.SeedSequence`, so results depend only on (seed, n) and
not on how chunks are spread over workers.
"""

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numba
import numpy as np

from . import combinatorics as cb
from .lattice import DIRS, GridError, harmonic_field

CHUNK = 5000
WORKERS_ENV = "USTFOMIN_WORKERS"


def default_workers():
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


# --- loop erasure ------------------------------------------------------------

def loop_erase(walk):
    """Chronological loop-erasure of a finite sequence of hashable symbols."""
    walk = list(walk)
    if not walk:
        raise ValueError("empty walk")
    out, pos = [], {}
    for x in walk:
        if x in pos:
            k = pos[x]
            for y in out[k + 1:]:
                del pos[y]
            del out[k + 1:]
        else:
            pos[x] = len(out)
            out.append(x)
    return out


# --- numba kernels -----------------------------------------------------------

@numba.njit(cache=True)
def _step(nbr, cum, v):
    u = np.random.random()
    k = 0
    while k < 3 and u >= cum[v, k]:
        k += 1
    return nbr[v, k]


@numba.njit(cache=True)
def _wilson(nbr, cum, order, parent, intree, nxt):
    """Wilson's algorithm rooted at the wired boundary.

    Only the vertices of `order` are started from, so a prefix of the scan
    order gives a consistent partial tree. parent[v] is an interior index or
    -1 - (boundary edge index).
    """
    for i in range(intree.shape[0]):
        intree[i] = False
    for s in order:
        v = s
        while v >= 0 and not intree[v]:
            w = _step(nbr, cum, v)
            nxt[v] = w
            v = w
        v = s
        while v >= 0 and not intree[v]:
            intree[v] = True
            parent[v] = nxt[v]
            v = nxt[v]


@numba.njit(cache=True)
def _exit_of(parent, v):
    while v >= 0:
        v = parent[v]
    return -1 - v


@numba.njit(cache=True)
def _full_tree(nbr, cum, order, seed):
    np.random.seed(seed)
    n = nbr.shape[0]
    parent = np.empty(n, np.int64)
    intree = np.zeros(n, np.bool_)
    nxt = np.empty(n, np.int64)
    _wilson(nbr, cum, order, parent, intree, nxt)
    return parent


@numba.njit(cache=True)
def _connectivity_hits(nbr, cum, order, srcs, tgts, n, seed):
    np.random.seed(seed)
    m = nbr.shape[0]
    parent = np.empty(m, np.int64)
    intree = np.zeros(m, np.bool_)
    nxt = np.empty(m, np.int64)
    hits = 0
    for _ in range(n):
        _wilson(nbr, cum, order, parent, intree, nxt)
        ok = True
        for i in range(srcs.shape[0]):
            if _exit_of(parent, srcs[i]) != tgts[i]:
                ok = False
                break
        if ok:
            hits += 1
    return hits


@numba.njit(cache=True)
def _lerw(nbr, cum, start, path, pos):
    """Loop-erased walk from `start` until the boundary; returns (length, exit edge)."""
    L = 0
    v = start
    while v >= 0:
        if pos[v] >= 0:
            k = pos[v]
            for i in range(k + 1, L):
                pos[path[i]] = -1
            L = k + 1
        else:
            pos[v] = L
            path[L] = v
            L += 1
        v = _step(nbr, cum, v)
    for i in range(L):
        pos[path[i]] = -1
    return L, -1 - v


@numba.njit(cache=True)
def _visit_hits(nbr, cum, start, out_edge, hats, n, seed):
    np.random.seed(seed)
    m = nbr.shape[0]
    path = np.empty(m, np.int64)
    pos = -np.ones(m, np.int64)
    hits = 0
    bad = 0
    for _ in range(n):
        L, ex = _lerw(nbr, cum, start, path, pos)
        if ex != out_edge:
            bad += 1
            continue
        last = -1
        ok = True
        for s in range(hats.shape[0]):
            a, b = hats[s, 0], hats[s, 1]
            found = -1
            for i in range(L - 1):
                p, q = path[i], path[i + 1]
                if (p == a and q == b) or (p == b and q == a):
                    found = i
                    break
            if found <= last:
                ok = False
                break
            last = found
        if ok:
            hits += 1
    return hits, bad


# --- samples and events -------------------------------------------------------

@dataclass
class TreeSample:
    parent: np.ndarray  # interior index, or -1 - boundary edge index
    stream: int

    @property
    def edges(self):
        out = []
        for v, p in enumerate(self.parent):
            out.append((v, int(p)) if p >= 0 else (v, None, int(-1 - p)))
        return out

    def exit(self, v):
        return int(_exit_of(self.parent, v))

    def branch(self, v):
        path = [v]
        while path[-1] >= 0:
            path.append(int(self.parent[path[-1]]))
        return path[:-1], -1 - path[-1]


def scan_order(g, first=()):
    """Row-major interior order with the given interior indices moved to the front."""
    first = list(dict.fromkeys(first))
    rest = [v for v in range(len(g.interior)) if v not in set(first)]
    return np.array(first + rest, dtype=np.int64)


def _seed_of(rng):
    if isinstance(rng, np.random.Generator):
        return int(rng.integers(2**32))
    return int(np.random.SeedSequence(rng).generate_state(1)[0])


def wilson_sample(g, rng, order=None, check=None):
    """A wired UST of g (conductance-weighted when g is weighted)."""
    nbr, cum = g.walk_table()
    order = scan_order(g) if order is None else np.asarray(order, dtype=np.int64)
    seed = _seed_of(rng)
    t = TreeSample(_full_tree(nbr, cum, order, seed), seed)
    if check if check is not None else os.environ.get("USTFOMIN_DEBUG"):
        assert_spanning_tree(t)
    return t


def assert_spanning_tree(t):
    n = len(t.parent)
    for v in range(n):
        seen = set()
        w = v
        while w >= 0:
            if w in seen:
                raise AssertionError("cycle in sampled tree")
            seen.add(w)
            w = int(t.parent[w])
    return True


@dataclass
class ConnectivityEvent:
    """Every branch from e_{a_l} exits via e_{b_l}; edges are ccw boundary-edge indices."""
    pattern: cb.DyckPath
    edges: list
    orientation: list = None

    def pairs(self):
        orient = self.orientation or self.pattern.links
        return [(self.edges[s - cb.OFFSET], self.edges[t - cb.OFFSET]) for s, t in orient]

    def describe(self):
        return f"connectivity {self.pattern.link_string()} on edges {list(self.edges)}"


@dataclass
class VisitEvent:
    """LERW from e_in, conditioned to exit via e_out, uses the hat edges in order."""
    k_in: int
    k_out: int
    hat_edges: list  # pairs of interior lattice points

    @classmethod
    def from_config(cls, cfg):
        return cls(cfg.edges[cfg.layout.i_in - 1], cfg.edges[cfg.layout.i_out - 1], list(cfg.hat_edges))

    def describe(self):
        return f"visit in={self.k_in} out={self.k_out} hats={len(self.hat_edges)}"


def event_indicator(g, t, ev):
    if isinstance(ev, ConnectivityEvent):
        return all(t.exit(g.index[g.bedges[s][1]]) == e for s, e in ev.pairs())
    path, ex = t.branch(g.index[g.bedges[ev.k_in][1]])
    if ex != ev.k_out:
        return False
    steps = [frozenset(path[i:i + 2]) for i in range(len(path) - 1)]
    last = -1
    for p, q in ev.hat_edges:
        h = frozenset((g.index[p], g.index[q]))
        if h not in steps or steps.index(h) <= last:
            return False
        last = steps.index(h)
    return True


def h_transform_table(g, k_out):
    """Walk table of the Doob transform by h(v) = H_v(e_out)."""
    h = np.asarray(harmonic_field(g, k_out, "float"), dtype=float)
    n = len(g.interior)
    nbr = np.zeros((n, 4), dtype=np.int64)
    cum = np.zeros((n, 4))
    for a, v in enumerate(g.interior):
        ws = []
        for k, (dx, dy) in enumerate(DIRS):
            w = (v[0] + dx, v[1] + dy)
            if w in g.index:
                nbr[a, k] = g.index[w]
                hw = h[g.index[w]]
            else:
                b = g.bedge_index[(w, v)]
                nbr[a, k] = -1 - b
                hw = 1.0 if b == k_out else 0.0
            ws.append(float(g.c(v, w)) * hw)
        tot = sum(ws)
        if tot <= 0:
            raise GridError("exit edge unreachable")
        cum[a] = np.cumsum(ws) / tot
        # never step onto a zero-weight move through rounding
        last = max(k for k in range(4) if ws[k] > 0)
        cum[a, last:] = 1.0
    return nbr, cum


# --- estimation ----------------------------------------------------------------

@dataclass
class Estimate:
    event: str
    n: int
    hits: int
    p_hat: float
    se: float
    seed: int

    def as_record(self):
        return dict(self.__dict__)

    def within(self, value, k=4.0):
        return abs(self.p_hat - float(value)) <= k * self.se


def _run_chunk(job):
    kind, args, n, seed = job
    if kind == "conn":
        nbr, cum, order, srcs, tgts = args
        return int(_connectivity_hits(nbr, cum, order, srcs, tgts, n, seed)), 0
    nbr, cum, start, k_out, hats = args
    h, bad = _visit_hits(nbr, cum, start, k_out, hats, n, seed)
    return int(h), int(bad)


def _jobs(g, ev):
    if isinstance(ev, ConnectivityEvent):
        nbr, cum = g.walk_table()
        pairs = ev.pairs()
        srcs = np.array([g.index[g.bedges[s][1]] for s, _ in pairs], dtype=np.int64)
        tgts = np.array([t for _, t in pairs], dtype=np.int64)
        order = np.array(list(dict.fromkeys(srcs.tolist())), dtype=np.int64)
        return "conn", (nbr, cum, order, srcs, tgts)
    if isinstance(ev, VisitEvent):
        nbr, cum = h_transform_table(g, ev.k_out)
        start = g.index[g.bedges[ev.k_in][1]]
        hats = np.array([[g.index[p], g.index[q]] for p, q in ev.hat_edges], dtype=np.int64).reshape(-1, 2)
        return "visit", (nbr, cum, start, ev.k_out, hats)
    raise TypeError(f"unknown event {ev!r}")


def estimate(g, ev, n, seed=0, workers=None):
    """Monte Carlo estimate of P[ev] from n independent samples."""
    n = int(n)
    if n < 1:
        raise ValueError("sample count must be at least 1")
    workers = default_workers() if workers is None else max(1, int(workers))
    kind, args = _jobs(g, ev)
    sizes = [CHUNK] * (n // CHUNK) + ([n % CHUNK] if n % CHUNK else [])
    seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(len(sizes))]
    jobs = [(kind, args, m, s) for m, s in zip(sizes, seeds)]
    if workers == 1 or len(jobs) == 1:
        res = [_run_chunk(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            res = list(ex.map(_run_chunk, jobs))
    hits = sum(h for h, _ in res)
    bad = sum(b for _, b in res)
    if bad:
        raise AssertionError(f"{bad} conditioned walks missed the exit edge")
    p = hits / n
    return Estimate(ev.describe(), n, hits, p, math.sqrt(p * (1 - p) / n), seed)
