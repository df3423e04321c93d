"""Catalan objects: Dyck paths, link patterns, Dyck tilings and incidence matrices.

Positions in the public API are 1-based: a Dyck path of size N has steps
1..2N, vertices 0..2N, and height alpha(j) after step j.  Internally the
step tuple is 0-based; ``OFFSET`` converts between the two.

Tiles live on the lattice of atomic squares.  The square in column ``c``
(1 <= c <= 2N-1) with center height ``y`` sits between the vertices
c-1 and c+1 of the paths.  A tile is placed by the left corner of its
first square, ``(x, h) = (c - 1, y)``, so the single square of
``()()/(())`` is placed at (1, 1).
"""

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb

OFFSET = 1
MAX_ENUM_N = 8
MAX_MATRIX_N = 6


class SizeError(ValueError):
    pass


@dataclass(frozen=True)
class DyckPath:
    """A Dyck path, read equally as a link pattern or parenthesis string."""

    steps: tuple

    def __post_init__(self):
        h = 0
        for s in self.steps:
            if s not in (1, -1):
                raise ValueError(f"steps must be +1/-1, got {s!r}")
            h += s
            if h < 0:
                raise ValueError("path goes below zero")
        if h != 0:
            raise ValueError("path does not return to zero")

    @classmethod
    def parse(cls, text):
        """From a parenthesis string like '(()())' or a link list '{1-4,2-3}'."""
        text = text.strip()
        if text.startswith("{") or "-" in text:
            pairs = []
            for chunk in text.strip("{}").split(","):
                chunk = chunk.strip()
                if chunk:
                    a, b = chunk.split("-")
                    pairs.append((int(a), int(b)))
            return cls.from_links(pairs)
        table = {"(": 1, ")": -1, "+": 1, "-": -1, "u": 1, "d": -1}
        return cls(tuple(table[c] for c in text if not c.isspace()))

    @classmethod
    def from_links(cls, pairs):
        pairs = [tuple(sorted(p)) for p in pairs]
        n2 = 2 * len(pairs)
        steps = [0] * n2
        for a, b in pairs:
            if not (1 <= a < b <= n2):
                raise ValueError(f"bad link {a}-{b}")
            if steps[a - OFFSET] or steps[b - OFFSET]:
                raise ValueError("links are not disjoint")
            steps[a - OFFSET] = 1
            steps[b - OFFSET] = -1
        d = cls(tuple(steps))
        if set(d.links) != set(pairs):
            raise ValueError("links cross")
        return d

    @property
    def size(self):
        return len(self.steps) // 2

    @property
    def heights(self):
        """Heights at vertices 0..2N."""
        out = [0]
        for s in self.steps:
            out.append(out[-1] + s)
        return tuple(out)

    def height(self, j):
        return self.heights[j]

    @property
    def links(self):
        """Matching pairs (a, b), a < b, sorted by a; 1-based."""
        stack, out = [], []
        for i, s in enumerate(self.steps):
            if s == 1:
                stack.append(i + OFFSET)
            else:
                out.append((stack.pop(), i + OFFSET))
        return tuple(sorted(out))

    def partner(self, j):
        for a, b in self.links:
            if a == j:
                return b
            if b == j:
                return a
        raise IndexError(j)

    @property
    def entrances(self):
        return tuple(a for a, _ in self.links)

    @property
    def exits(self):
        return tuple(b for _, b in self.links)

    def __str__(self):
        return "".join("(" if s == 1 else ")" for s in self.steps)

    def link_string(self):
        return "{" + ",".join(f"{a}-{b}" for a, b in self.links) + "}"

    def __lt__(self, other):
        return canonical_key(self) < canonical_key(other)


LinkObject = DyckPath


def canonical_key(d):
    # down-steps before up-steps, so the unnested path comes first
    return tuple(-s for s in d.steps)


def catalan(n):
    return comb(2 * n, n) // (n + 1)


@lru_cache(maxsize=None)
def _enum(n):
    out = []

    def rec(prefix, h, ups):
        if len(prefix) == 2 * n:
            out.append(DyckPath(tuple(prefix)))
            return
        if h > 0:
            rec(prefix + [-1], h - 1, ups)
        if ups < n:
            rec(prefix + [1], h + 1, ups + 1)

    rec([], 0, 0)
    return tuple(out)


def enumerate_dyck_paths(n):
    """All Dyck paths of size n in canonical order (minimal first, rainbow last)."""
    if not (1 <= n <= MAX_ENUM_N):
        raise SizeError(f"N={n} outside 1..{MAX_ENUM_N}")
    return list(_enum(n))


def unnested(n):
    return DyckPath((1, -1) * n)


def rainbow(n):
    return DyckPath((1,) * n + (-1,) * n)


def links_of(d):
    return set(frozenset(p) for p in d.links)


def _check_sizes(a, b):
    if a.size != b.size:
        raise SizeError(f"size mismatch {a.size} != {b.size}")


def dominance_leq(a, b):
    _check_sizes(a, b)
    return all(x <= y for x, y in zip(a.heights, b.heights))


@dataclass(frozen=True)
class Reversal:
    sigma: tuple  # sigma[l] = k means b links entrance a_l of alpha to exit b_k
    sign: int
    m: int


def perm_sign(p):
    p = list(p)
    sign = 1
    for i in range(len(p)):
        while p[i] != i:
            j = p[i]
            p[i], p[j] = p[j], p[i]
            sign = -sign
    return sign


def reversal_leq(a, b):
    """Parenthesis-reversal relation a below b, or None."""
    _check_sizes(a, b)
    ent = {x: i for i, x in enumerate(a.entrances)}
    ex = {y: i for i, y in enumerate(a.exits)}
    sigma = [None] * a.size
    m = 0
    for p, q in b.links:
        if p in ent and q in ex:
            sigma[ent[p]] = ex[q]
        elif p in ex and q in ent:
            sigma[ent[q]] = ex[p]
            m += 1
        else:
            return None
    return Reversal(tuple(sigma), perm_sign(sigma), m)


# --- Dyck tiles ---------------------------------------------------------

@dataclass(frozen=True)
class DyckTile:
    shape: tuple  # steps of a (possibly empty) Dyck path
    x: int
    h: int

    def __post_init__(self):
        if self.h < 1:
            raise ValueError("tile height must be positive")
        DyckPath(tuple(self.shape))

    @property
    def squares(self):
        """Atomic squares as (column, center height)."""
        c, y = self.x + 1, self.h
        out = [(c, y)]
        for s in self.shape:
            c += 1
            y += s
            out.append((c, y))
        return tuple(out)

    @property
    def extent(self):
        c = self.x + 1
        return (c, c + len(self.shape))

    @property
    def shadow(self):
        lo, hi = self.extent
        return (lo - 1, hi + 1)

    def covers(self, other):
        mine = {}
        for c, y in self.squares:
            mine[c] = max(mine.get(c, y), y)
        return any(c in mine and mine[c] > y for c, y in other.squares)

    def shape_string(self):
        return str(DyckPath(self.shape)) if self.shape else "."


def tile_from_squares(sq):
    sq = sorted(sq)
    steps = tuple(sq[i + 1][1] - sq[i][1] for i in range(len(sq) - 1))
    c0, y0 = sq[0]
    return DyckTile(steps, c0 - 1, y0)


def skew_squares(a, b):
    """Atomic squares of the skew diagram between a (below) and b (above)."""
    if not dominance_leq(a, b):
        raise ValueError(f"{a} is not below {b} in dominance order")
    ha, hb = a.heights, b.heights
    out = set()
    for c in range(1, 2 * a.size):
        for y in range(ha[c] + 1, hb[c], 2):
            out.add((c, y))
    return frozenset(out)


def _shadow_ok(t1, t2):
    a1, b1 = t1.shadow
    a2, b2 = t2.shadow
    if b1 <= a2 or b2 <= a1:
        return True
    in12 = a2 <= a1 and b1 <= b2
    in21 = a1 <= a2 and b2 <= b1
    if in12 and in21:
        return t1.covers(t2) or t2.covers(t1)
    if in12:
        return t2.covers(t1)
    if in21:
        return t1.covers(t2)
    return False


def _cover_inclusive_ok(t1, t2):
    a1, b1 = t1.extent
    a2, b2 = t2.extent
    if b1 < a2 or b2 < a1:
        return True
    ok = True
    if t1.covers(t2):
        ok = ok and a2 <= a1 and b1 <= b2
    if t2.covers(t1):
        ok = ok and a1 <= a2 and b2 <= b1
    return ok


def _pairwise(tiles, pred):
    tiles = list(tiles)
    return all(pred(tiles[i], tiles[j])
               for i in range(len(tiles)) for j in range(i + 1, len(tiles)))


def is_nested(tiling):
    return _pairwise(tiling.tiles, _shadow_ok)


def is_cover_inclusive(tiling):
    return _pairwise(tiling.tiles, _cover_inclusive_ok)


@dataclass(frozen=True)
class DyckTiling:
    lower: DyckPath
    upper: DyckPath
    tiles: frozenset

    def __post_init__(self):
        seen = set()
        for t in self.tiles:
            for s in t.squares:
                if s in seen:
                    raise ValueError("tiles overlap")
                seen.add(s)
        if seen != skew_squares(self.lower, self.upper):
            raise ValueError("tiles do not cover the skew diagram")

    @property
    def nested(self):
        return is_nested(self)

    @property
    def cover_inclusive(self):
        return is_cover_inclusive(self)

    def weight(self, f):
        w = Fraction(1)
        for t in self.tiles:
            w *= f(t.h)
        return w

    def encode(self):
        """List of (shape-string, x, h), sorted."""
        return sorted((t.shape_string(), t.x, t.h) for t in self.tiles)

    def __len__(self):
        return len(self.tiles)


def _tiles_from(start, free):
    """Dyck tiles whose first square is `start`, using only squares in `free`."""
    c0, y0 = start
    out = []

    def rec(path):
        c, y = path[-1]
        if y == y0:
            out.append(tuple(path))
        for dy in (1, -1):
            nxt = (c + 1, y + dy)
            if y + dy >= y0 and nxt in free:
                path.append(nxt)
                rec(path)
                path.pop()

    rec([start])
    return out


def iter_tilings(a, b, pred=None):
    """All Dyck tilings of a/b, pruned by a pairwise tile predicate."""
    squares = skew_squares(a, b)

    def rec(free, placed):
        if not free:
            yield list(placed)
            return
        start = min(free)
        for path in _tiles_from(start, free):
            t = tile_from_squares(path)
            if pred is not None and not all(pred(t, u) for u in placed):
                continue
            placed.append(t)
            yield from rec(free - set(path), placed)
            placed.pop()

    for tiles in rec(frozenset(squares), []):
        yield DyckTiling(a, b, frozenset(tiles))


def all_dyck_tilings(a, b):
    return list(iter_tilings(a, b))


def cover_inclusive_tilings(a, b):
    return list(iter_tilings(a, b, _cover_inclusive_ok))


@lru_cache(maxsize=None)
def count_cover_inclusive(a, b):
    return sum(1 for _ in iter_tilings(a, b, _cover_inclusive_ok))


def _components(squares):
    squares = set(squares)
    comps = []
    while squares:
        stack = [squares.pop()]
        comp = set(stack)
        while stack:
            c, y = stack.pop()
            for nb in ((c + 1, y + 1), (c + 1, y - 1), (c - 1, y + 1), (c - 1, y - 1)):
                if nb in squares:
                    squares.remove(nb)
                    comp.add(nb)
                    stack.append(nb)
        comps.append(comp)
    return comps


def nested_tiling(a, b):
    """The unique nested tiling of a/b, or None when a is not reversal-below b."""
    if not dominance_leq(a, b):
        raise ValueError(f"{a} is not below {b} in dominance order")
    free = set(skew_squares(a, b))
    tiles = []
    while free:
        for comp in _components(free):
            top = {}
            for c, y in comp:
                top[c] = max(top.get(c, y), y)
            cols = sorted(top)
            path = [(c, top[c]) for c in cols]
            if cols != list(range(cols[0], cols[-1] + 1)):
                return None
            base = path[0][1]
            if path[-1][1] != base or any(y < base for _, y in path):
                return None
            if any(abs(path[i + 1][1] - path[i][1]) != 1 for i in range(len(path) - 1)):
                return None
            tiles.append(tile_from_squares(path))
            free -= set(path)
    tiling = DyckTiling(a, b, frozenset(tiles))
    return tiling if tiling.nested else None


# --- incidence matrices --------------------------------------------------

def _one(h):
    return Fraction(1)


@dataclass
class IncidenceMatrix:
    n: int
    paths: list
    entries: list  # list of lists of Fraction
    f: object = None

    def index(self, d):
        return self.paths.index(d)

    def __getitem__(self, key):
        a, b = key
        if isinstance(a, DyckPath):
            a = self.index(a)
        if isinstance(b, DyckPath):
            b = self.index(b)
        return self.entries[a][b]

    def as_int_rows(self):
        return [[int(x) if x.denominator == 1 else x for x in row] for row in self.entries]


def m_entry(a, b, f=_one):
    if a == b:
        return Fraction(1)
    if reversal_leq(a, b) is None:
        return Fraction(0)
    t0 = nested_tiling(a, b)
    w = Fraction(1)
    for t in t0.tiles:
        w *= -Fraction(f(t.h))
    return w


def minv_entry(a, b, f=_one):
    if not dominance_leq(a, b):
        return Fraction(0)
    if a == b:
        return Fraction(1)
    return sum((T.weight(lambda h: Fraction(f(h))) for T in iter_tilings(a, b, _cover_inclusive_ok)),
               Fraction(0))


def incidence_matrices(n, f=_one):
    """Weighted incidence matrix of the reversal relation and its inverse."""
    if not (1 <= n <= MAX_MATRIX_N):
        raise SizeError(f"N={n} outside 1..{MAX_MATRIX_N}")
    paths = enumerate_dyck_paths(n)
    M = [[m_entry(a, b, f) for b in paths] for a in paths]
    Minv = [[minv_entry(a, b, f) for b in paths] for a in paths]
    return IncidenceMatrix(n, paths, M, f), IncidenceMatrix(n, paths, Minv, f)


@lru_cache(maxsize=None)
def inverse_coefficients(a):
    """Pairs (beta, #C(a/beta)) for all beta above a, with unit weights."""
    return tuple((b, count_cover_inclusive(a, b))
                 for b in enumerate_dyck_paths(a.size) if dominance_leq(a, b))


def matmul(A, B):
    n = len(A)
    return [[sum((A[i][k] * B[k][j] for k in range(n)), Fraction(0)) for j in range(n)]
            for i in range(n)]


# --- wedges ----------------------------------------------------------------

@dataclass(frozen=True)
class Wedge:
    kind: str  # 'up', 'down' or 'slope'
    removed: object = None
    lifted: object = None


def wedge_kind(a, j):
    if not (1 <= j <= 2 * a.size - 1):
        raise IndexError(j)
    s, t = a.steps[j - OFFSET], a.steps[j]
    if (s, t) == (1, -1):
        return "up"
    if (s, t) == (-1, 1):
        return "down"
    return "slope"


def remove_wedge(a, j):
    st = a.steps
    return DyckPath(st[:j - OFFSET] + st[j + 1:])


def lift(a, j):
    st = list(a.steps)
    st[j - OFFSET], st[j] = 1, -1
    return DyckPath(tuple(st))


def wedge_ops(a, j):
    kind = wedge_kind(a, j)
    if kind == "slope":
        return Wedge(kind)
    if kind == "up":
        return Wedge(kind, remove_wedge(a, j))
    return Wedge(kind, remove_wedge(a, j), lift(a, j))


# --- boundary visit orders ----------------------------------------------

def parse_omega(text):
    text = text.strip().strip("()").replace(",", "").replace(" ", "")
    return tuple(1 if c == "+" else -1 for c in text)


@dataclass(frozen=True)
class VisitLayout:
    """Counterclockwise labels 1..2N of e_in, e_out and the flanking pairs.

    ``pairs[s]`` is the ccw-ordered label pair (j, j+1) of visit s (0-based s
    in visiting order); ``first[s]`` is the label of the flank visited first.
    """
    omega: tuple
    pattern: DyckPath
    i_in: int
    i_out: int
    pairs: tuple
    first: tuple


def visit_layout(omega):
    omega = tuple(omega)
    labels = ["in"]
    for s, w in enumerate(omega):
        if w == 1:
            labels += [(s, 1), (s, 2)]
    labels.append("out")
    for s in reversed(range(len(omega))):
        if omega[s] == -1:
            labels += [(s, 2), (s, 1)]
    pos = {lab: i + OFFSET for i, lab in enumerate(labels)}
    chain = ["in"]
    for s in range(len(omega)):
        chain += [(s, 1), (s, 2)]
    chain.append("out")
    links = [(pos[chain[2 * k]], pos[chain[2 * k + 1]]) for k in range(len(chain) // 2)]
    pairs = tuple(tuple(sorted((pos[(s, 1)], pos[(s, 2)]))) for s in range(len(omega)))
    first = tuple(pos[(s, 1)] for s in range(len(omega)))
    return VisitLayout(omega, DyckPath.from_links(links), pos["in"], pos["out"], pairs, first)


def visit_order_to_link_pattern(omega):
    return visit_layout(omega).pattern
