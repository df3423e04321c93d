"""Command line interface: `ustfomin <command> ...` (or `python -m ustfomin`)."""

import argparse
import json
import random
import sys
from fractions import Fraction

import numpy as np

from . import __version__
from . import combinatorics as cb
from . import continuum as ct
from . import exact as ex
from . import montecarlo as mc
from .lattice import DomainSpec, GridError, MarkedPoint, build_grid

SCHEMA = "ustfomin/1"


# --- helpers ---------------------------------------------------------------------

def _j(x):
    if isinstance(x, Fraction):
        return int(x) if x.denominator == 1 else str(x)
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, dict):
        return {k: _j(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_j(v) for v in x]
    return x


def _emit(args, record, csv_rows=None, text=None):
    record = {"schema": SCHEMA, "version": __version__, "command": args.command, **record}
    if args.format == "csv" and csv_rows is not None:
        out = "\n".join(",".join(str(_j(c)) for c in row) for row in csv_rows) + "\n"
    elif args.format == "svg" and text is not None:
        out = text
    else:
        out = json.dumps(_j(record), indent=2) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)


def _floats(text):
    return [Fraction(t) for t in text.split(",") if t.strip()]


def _domain(args):
    if args.domain:
        spec = DomainSpec.from_json(args.domain)
    elif args.rect:
        w, h = _floats(args.rect)
        marks = []
        for m in args.mark or []:
            parts = m.split(",")
            marks.append(MarkedPoint(Fraction(parts[0]), Fraction(parts[1]), parts[2] if len(parts) > 2 else "plain"))
        spec = DomainSpec.rectangle(w, h, args.delta or Fraction(1, 8), marks, corner_margin=args.corner_margin)
    else:
        raise GridError("give --domain FILE or --rect W,H")
    if args.delta is not None:
        spec = spec.with_delta(args.delta)
    return spec


def _pattern(text):
    return cb.DyckPath.parse(text)


def _add_domain(p):
    p.add_argument("--domain", help="domain JSON file (polygon, delta, marks, conductances)")
    p.add_argument("--rect", help="rectangle W,H instead of --domain")
    p.add_argument("--mark", action="append", help="marked point x,y[,role] for --rect (repeatable)")
    p.add_argument("--delta", type=Fraction, help="mesh size (overrides the domain file)")
    p.add_argument("--corner-margin", type=int, default=2)
    p.add_argument("--backend", choices=["auto", "rational", "float"], default="auto")


# --- commands ----------------------------------------------------------------------

def cmd_combinat(args):
    M, Mi = cb.incidence_matrices(args.n)
    rec = {"n": args.n, "paths": [str(p) for p in M.paths],
           "links": [p.link_string() for p in M.paths],
           "M": M.as_int_rows(), "Minv": Mi.as_int_rows(), "backend": "rational", "tolerance": 0}
    if args.tilings:
        if args.n > 4:
            raise cb.SizeError("tiling dump limited to N <= 4")
        rec["tilings"] = [{"lower": str(a), "upper": str(b), "tiles": T.encode()}
                          for a in M.paths for b in M.paths if cb.dominance_leq(a, b)
                          for T in cb.cover_inclusive_tilings(a, b)]
    rows = [[""] + rec["paths"]] + [[p] + r for p, r in zip(rec["paths"], rec[args.matrix])]
    _emit(args, rec, rows)


def cmd_exact(args):
    g = build_grid(_domain(args))
    edges = ex.marked_edges(g)
    n = len(edges) // 2
    pats = [_pattern(args.pattern)] if args.pattern else cb.enumerate_dyck_paths(n)
    res = [ex.grid_connectivity(g, a, edges, args.backend) for a in pats]
    rec = {"delta": g.delta, "interior": len(g.interior), "edges": edges,
           "results": [r.as_record() for r in res],
           "backend": res[0].backend, "tolerance": 0 if res[0].backend == "rational" else 1e-12}
    _emit(args, rec, [["pattern", "Z"]] + [[str(r.pattern), r.value] for r in res])


def cmd_visit(args):
    g = build_grid(_domain(args))
    vp = ex.boundary_visit_probability(g, cb.parse_omega(args.omega) if args.omega else None,
                                       args.backend, args.method)
    rec = {"delta": g.delta, "interior": len(g.interior), **vp.as_record(),
           "tolerance": 0 if vp.backend == "rational" else 1e-10}
    _emit(args, rec, [["omega", "direct", "replacing"], [rec["omega"], rec["direct"], rec["replacing"]]])


def cmd_sample(args):
    g = build_grid(_domain(args))
    if args.omega or any(m.role == "visit" for m in g.marks):
        cfg = ex.visit_config(g)
        ev = mc.VisitEvent.from_config(cfg)
        exact = ex.boundary_visit_probability(g, backend="float", method="replacing").value
    else:
        edges = ex.marked_edges(g)
        a = _pattern(args.pattern) if args.pattern else cb.unnested(len(edges) // 2)
        ev = mc.ConnectivityEvent(a, edges)
        z = ex.grid_connectivity(g, a, edges, "float").value
        w = 1
        for s, _ in a.links:
            w *= float(g.c_bedge(edges[s - 1]))
        exact = z / w
    est = mc.estimate(g, ev, args.samples, args.seed, args.workers)
    rec = {"estimate": est.as_record(), "exact": float(exact),
           "deviation_in_se": abs(est.p_hat - exact) / est.se if est.se else None,
           "within_4se": est.within(exact), "backend": "montecarlo+float", "tolerance": "4 SE"}
    _emit(args, rec, [["n", "hits", "p_hat", "se", "exact"], [est.n, est.hits, est.p_hat, est.se, exact]])


def cmd_continuum(args):
    if args.omega:
        w = cb.parse_omega(args.omega)
        xh = _floats(args.xhat) if args.xhat else []
        val = ct.zeta_omega(w, Fraction(args.x_in), xh, Fraction(args.x_out))
        rec = {"omega": args.omega, "x_in": args.x_in, "xhat": xh, "x_out": args.x_out, "zeta": val,
               "float": float(val)}
    else:
        a = _pattern(args.pattern)
        xs = _floats(args.points)
        val = ct.pure_partition_function(a, xs)
        rec = {"pattern": str(a), "points": xs, "Z": val, "float": float(val)}
    rec.update(backend="rational", tolerance=0)
    _emit(args, rec)


def _random_points(rng, n, lo=0.0, hi=10.0, min_gap=0.3):
    while True:
        xs = sorted(rng.uniform(lo, hi) for _ in range(n))
        if all(b - a >= min_gap for a, b in zip(xs, xs[1:])):
            return xs


def cmd_check(args):
    rng = random.Random(args.seed)
    rec = {"backend": "float", "seed": args.seed}
    rows = [["check", "case", "value", "tolerance", "pass"]]
    run_all = not (args.pde2 or args.pde3 or args.asy2 or args.constants or args.covariance)
    if args.pde2 or run_all:
        worst = 0.0
        for n in (2, 3):
            for _ in range(args.configs):
                a = rng.choice(cb.enumerate_dyck_paths(n))
                xs = _random_points(rng, 2 * n)
                f = ct.partition_function_evaluator(a)
                r = max(ct.pde_residual(f, xs, (), "second", j) for j in range(2 * n))
                worst = max(worst, r)
                rows.append(["pde2", f"{a} {['%.4f' % x for x in xs]}", r, 1e-6, r <= 1e-6])
        rec["pde2"] = {"max_residual": worst, "tolerance": 1e-6, "pass": worst <= 1e-6}
    if args.pde3 or run_all:
        worst = 0.0
        for w in [(1,), (-1,), (1, 1), (1, -1), (-1, 1), (-1, -1)]:
            for _ in range(max(1, args.configs // 10)):
                pts = _random_points(rng, 2 + len(w))
                x_in, rest = pts[0], pts[1:]
                nplus = w.count(1)
                plus, x_out, minus = rest[:nplus], rest[nplus], rest[nplus + 1:]
                mi, pi = iter(minus[::-1]), iter(plus)
                xh = [next(pi) if s == 1 else next(mi) for s in w]
                f = ct.zeta_evaluator(w)
                r2 = max(ct.pde_residual(f, (x_in, x_out), xh, "second", j) for j in range(2))
                r3 = max(ct.pde_residual(f, (x_in, x_out), xh, "third", s) for s in range(len(w)))
                worst = max(worst, r2, r3)
                rows.append(["pde3", "".join("+" if s > 0 else "-" for s in w), max(r2, r3), 1e-4, max(r2, r3) <= 1e-4])
        rec["pde3"] = {"max_residual": worst, "tolerance": 1e-4, "pass": worst <= 1e-4}
    if args.asy2 or run_all:
        out = []
        for n in (2, 3):
            xs = [Fraction(k) for k in range(2 * n)]
            for a in cb.enumerate_dyck_paths(n):
                for j in range(1, 2 * n):
                    res, pred = ct.asy2_limit(a, xs, j)
                    scale = max(abs(pred), 1e-300) if pred else float(ct.pure_partition_function(cb.unnested(n - 1), xs[:j - 1] + xs[j + 1:]))
                    err = abs(res.limit - pred) / scale
                    out.append(err)
                    rows.append(["asy2", f"{a} j={j}", res.limit, 1e-6, err <= 1e-6])
        rec["asy2"] = {"max_relative_error": max(out), "tolerance": 1e-6, "pass": max(out) <= 1e-6}
    if args.constants or run_all:
        cases = {
            "first(+)": (ct.asymptotics_constants("+", 0, [1], 3, "first"), 2),
            "first(+-)": (ct.asymptotics_constants("+-", 0, [1, 7], 3, "first"), 2),
            "not-first(-+)": (ct.asymptotics_constants("-+", 0, [7, 1], 3, "first", s=1), 0),
            "consecutive(++)": (ct.asymptotics_constants("++", 0, [1, 2], 3, "consecutive"), 10),
            "not-successive(+-+)": (ct.asymptotics_constants("+-+", 0, [1, 7, 2], 3, "consecutive", t=2), 0),
        }
        rec["constants"] = {}
        for name, ((res, _), target) in cases.items():
            ok = abs(res.limit - target) <= (0.01 * target if target else 1e-6)
            rec["constants"][name] = {"limit": res.limit, "target": target, "pass": ok}
            rows.append(["constants", name, res.limit, target, ok])
    if args.covariance or run_all:
        worst = 0.0
        for _ in range(args.configs):
            n = rng.choice((2, 3))
            a = rng.choice(cb.enumerate_dyck_paths(n))
            xs = _random_points(rng, 2 * n)
            # mu with pole to the left of every point keeps the order
            c = rng.uniform(0.01, 0.05)
            ys, _, fac = ct.apply_mobius(xs, [], 1.0, rng.uniform(-1, 1), c, 1.0)
            z0 = ct.pure_partition_function(a, xs)
            worst = max(worst, abs(ct.pure_partition_function(a, ys) * fac / z0 - 1))
        rec["covariance"] = {"max_relative_error": worst, "tolerance": 1e-10, "pass": worst <= 1e-10}
    _emit(args, rec, rows)


def cmd_converge(args):
    spec = _domain(args)
    w, h = (float(x) for x in _floats(args.rect)) if args.rect else (1.0, 1.0)
    cmap = ct.RectangleMap(w, h)
    rows = [["delta", "value", "prediction", "relative_deviation"]]
    out = []
    for k in _floats(args.deltas):
        d = 1 / k if k > 1 else k
        g = build_grid(spec.with_delta(d))
        pts = {m.role: [] for m in g.marks}
        for m in g.marks:
            pts[m.role].append((float(m.point[0]), float(m.point[1])))
        if "visit" in pts:
            vp = ex.boundary_visit_probability(g, backend="float", method="replacing")
            nv = len(vp.omega)
            val = float(vp.value) / float(d) ** (3 * nv)
            pred = cmap.visit_prediction(vp.omega, pts["in"][0], pts["visit"], pts["out"][0])
        else:
            edges = ex.marked_edges(g)
            a = _pattern(args.pattern) if args.pattern else cb.unnested(len(edges) // 2)
            val = float(ex.grid_connectivity(g, a, edges, "float").value) / float(d) ** (2 * a.size)
            order = [next(m for m in g.marks if m.edge == e) for e in edges]
            pred = cmap.partition_prediction(a, [(float(m.point[0]), float(m.point[1])) for m in order])
        dev = abs(val / pred - 1)
        out.append({"delta": d, "value": val, "prediction": pred, "relative_deviation": dev})
        rows.append([d, val, pred, dev])
    devs = [o["relative_deviation"] for o in out]
    rec = {"sweep": out, "monotone": all(b < a for a, b in zip(devs, devs[1:])),
           "backend": "float", "tolerance": "reported deviation"}
    _emit(args, rec, rows)


def _svg_tree(g, t, highlight):
    d = 24
    xs = [v[0] for v in g.vertices]
    ys = [v[1] for v in g.vertices]
    x0, y1 = min(xs), max(ys)
    W, H = (max(xs) - x0 + 2) * d, (y1 - min(ys) + 2) * d
    P = lambda v: ((v[0] - x0 + 1) * d, (y1 - v[1] + 1) * d)
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}">',
             f'<rect width="{W}" height="{H}" fill="white"/>']
    for (i, j) in g.squares:
        (a, b) = P((i, j + 1))
        parts.append(f'<rect x="{a}" y="{b}" width="{d}" height="{d}" fill="#f4f4f4" stroke="#ddd"/>')
    hot = set()
    for v in highlight:
        path, _ = t.branch(v)
        hot.update(path)
    for v, p in enumerate(t.parent):
        a = P(g.interior[v])
        b = P(g.interior[p]) if p >= 0 else P(g.bedges[-1 - p][0])
        col, wd = ("#c0392b", 4) if v in hot else ("#2c3e50", 2)
        parts.append(f'<line x1="{a[0]}" y1="{a[1]}" x2="{b[0]}" y2="{b[1]}" stroke="{col}" stroke-width="{wd}"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def cmd_figure(args):
    g = build_grid(_domain(args))
    srcs = [g.index[g.bedges[m.edge][1]] for m in g.marks if m.edge is not None]
    t = mc.wilson_sample(g, np.random.default_rng(args.seed), order=mc.scan_order(g, srcs))
    args.format = "svg"
    _emit(args, {}, text=_svg_tree(g, t, srcs))


# --- entry point ---------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="ustfomin", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help):
        q = sub.add_parser(name, help=help)
        q.set_defaults(fn=fn)
        q.add_argument("--out", help="write output here instead of stdout")
        q.add_argument("--format", choices=["json", "csv", "svg"], default="json")
        return q

    q = add("combinat", cmd_combinat, "incidence matrix M and its inverse for size N")
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--tilings", action="store_true", help="also list cover-inclusive tilings (N <= 4)")
    q.add_argument("--matrix", choices=["M", "Minv"], default="M", help="matrix written in csv format")

    q = add("exact", cmd_exact, "connectivity partition functions Z_alpha on a grid")
    _add_domain(q)
    q.add_argument("--pattern", help="link pattern, e.g. '(())' or '{1-4,2-3}'; default all")

    q = add("visit", cmd_visit, "LERW boundary-visit probability")
    _add_domain(q)
    q.add_argument("--omega", help="expected visit order, e.g. '+-'")
    q.add_argument("--method", choices=["direct", "replacing", "both"], default="both")

    q = add("sample", cmd_sample, "Wilson Monte Carlo estimate compared to the exact value")
    _add_domain(q)
    q.add_argument("--pattern")
    q.add_argument("--omega")
    q.add_argument("--samples", type=int, default=10**5)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--workers", type=int, default=None, help=f"default from ${mc.WORKERS_ENV} or 1")

    q = add("continuum", cmd_continuum, "Z_alpha or zeta_omega on the real line (exact)")
    q.add_argument("--pattern")
    q.add_argument("--points", help="x_1,...,x_2N")
    q.add_argument("--omega")
    q.add_argument("--x-in", default="0")
    q.add_argument("--x-out", default="2")
    q.add_argument("--xhat", help="visit points in visiting order")

    q = add("check", cmd_check, "PDE residuals, ASY2, asymptotic constants, Mobius covariance")
    for flag in ("pde2", "pde3", "asy2", "constants", "covariance"):
        q.add_argument(f"--{flag}", action="store_true")
    q.add_argument("--configs", type=int, default=100)
    q.add_argument("--seed", type=int, default=0)

    q = add("converge", cmd_converge, "delta sweep against the rectangle conformal-map prediction")
    _add_domain(q)
    q.add_argument("--pattern")
    q.add_argument("--deltas", default="16,32,64", help="1/delta values")

    q = add("figure", cmd_figure, "SVG of a sampled wired UST with the marked branches")
    _add_domain(q)
    q.add_argument("--seed", type=int, default=0)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.fn(args)
    except (GridError, cb.SizeError, ct.ContinuumError, ValueError) as e:
        print(f"ustfomin {args.command}: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
