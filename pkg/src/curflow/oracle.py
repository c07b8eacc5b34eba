"""Brute-force validators.

Nothing here calls into :mod:`curflow.decomp` except the exhaustive sweep,
which exercises the decomposition kernel under test.  Identities are
recomputed from the raw edge dictionaries with local arithmetic.
"""
from __future__ import annotations

import copy
import itertools
import random
from fractions import Fraction

import networkx as nx
import numpy as np

from ._jit import kernel
from .currents import EVERYWHERE
from .errors import ModeError, OracleScaleError
from .geometry import INFINITY, EdgePoint, SupNormSpace

ENUM_EDGE_CAP = 14
# calibration constants for the statistical dual-mass check
DUAL_REL_GAP = 0.05
DUAL_HIT_RATE = 0.90


# ---------------------------------------------------------------- dual mass


def _gauss(k=32):
    x, w = np.polynomial.legendre.leggauss(k)
    return (x + 1) / 2, w / 2


def _sup_dist_to_segment(X, c, u):
    """Exact sup-norm distance from each row of X to the segment c + s u, s in [0, 1]."""
    P = X - c
    dim = X.shape[1]
    cands = [np.zeros(len(X)), np.ones(len(X))]
    with np.errstate(divide="ignore", invalid="ignore"):
        for i in range(dim):
            if u[i] != 0:
                cands.append(P[:, i] / u[i])
            for j in range(i + 1, dim):
                for sgn in (1.0, -1.0):
                    den = u[i] - sgn * u[j]
                    if den != 0:
                        cands.append((P[:, i] - sgn * P[:, j]) / den)
    S = np.clip(np.nan_to_num(np.stack(cands, axis=1), nan=0.0), 0.0, 1.0)
    vals = np.max(np.abs(P[:, None, :] - S[:, :, None] * u[None, None, :]), axis=2)
    return vals.min(axis=1)


def dual_mass(T, region=EVERYWHERE, family_size_cap=8, seed=0, nodes=32) -> float:
    """Lower bound on ||T||(region) from the dual formula.

    Each edge gets a tent function around a slightly shrunk copy of itself and
    the coordinate projection that realizes its sup-norm length; the tents are
    divided by max(1, sum of tents) so that they form an admissible family.
    The best of ``family_size_cap`` random shrink/width choices is returned.
    """
    if not isinstance(T.space, SupNormSpace):
        raise ModeError("dual_mass works in the sup-norm model")
    items = [(np.array(a, float), np.array(b, float), float(w)) for (a, b), w in T.edges.items()]
    if not items:
        return 0.0
    ts, gw = _gauss(nodes)
    A = np.array([a for a, _, _ in items])
    D = np.array([b - a for a, b, _ in items])
    W = np.array([w for _, _, w in items])
    m = len(items)
    X = (A[:, None, :] + ts[None, :, None] * D[:, None, :]).reshape(-1, A.shape[1])
    inside = np.array([region.contains(T.space, tuple(x)) for x in X], dtype=float)
    lens = np.abs(D).max(axis=1)
    rng = random.Random(seed)
    best = 0.0
    for _ in range(family_size_cap):
        eps = rng.uniform(0.002, 0.02)
        rho = rng.uniform(0.05, 0.5) * eps * lens.min()
        F = np.empty((m, len(X)))
        for lam in range(m):
            c = A[lam] + eps * D[lam]
            u = (1 - 2 * eps) * D[lam]
            F[lam] = np.clip(1.0 - _sup_dist_to_segment(X, c, u) / rho, 0.0, 1.0)
        F /= np.maximum(1.0, F.sum(axis=0))
        F *= inside
        total = 0.0
        for lam in range(m):
            i = int(np.argmax(np.abs(D[lam])))
            sgn = np.sign(W[lam]) * np.sign(D[lam, i])
            # d/dt of sgn * x_i along every edge
            slope = sgn * D[:, i]
            f = F[lam].reshape(m, len(ts))
            total += float(np.sum(W * slope * (f @ gw)))
        best = max(best, total)
    return best


# ---------------------------------------------------------------- cycles


def _support_arcs(T):
    arcs = []
    for (a, b), w in T.edges.items():
        if w > 0:
            arcs.append((a, b))
        elif w < 0:
            arcs.append((b, a))
    return arcs


def enumerate_cycles(T, cap=ENUM_EDGE_CAP):
    """Every simple directed cycle of the sign-oriented support, as vertex lists."""
    arcs = _support_arcs(T)
    if len(arcs) > cap:
        raise OracleScaleError(f"enumerate_cycles is capped at {cap} edges, got {len(arcs)}")
    names = sorted({p for arc in arcs for p in arc}, key=repr)
    idx = {p: i for i, p in enumerate(names)}
    succ = {i: sorted(idx[b] for a, b in arcs if idx[a] == i) for i in range(len(names))}
    cycles = []

    def walk(root, v, path):
        for u in succ[v]:
            if u == root:
                cycles.append([names[i] for i in path] + [names[root]])
            elif u > root and u not in path:
                walk(root, u, path + [u])

    for root in range(len(names)):
        walk(root, root, [root])
    return cycles


@kernel
def count_cycles(n, tail, head, alive):
    """Number of simple directed cycles among arcs with ``alive`` set (n <= 62)."""
    m = tail.shape[0]
    total = 0
    stack_v = np.empty(n + 1, np.int64)
    stack_a = np.empty(n + 1, np.int64)
    for root in range(n):
        top = 0
        stack_v[0] = root
        stack_a[0] = 0
        used = np.int64(1) << root
        while top >= 0:
            v = stack_v[top]
            a = stack_a[top]
            advanced = False
            while a < m:
                if alive[a] and tail[a] == v:
                    u = head[a]
                    if u == root:
                        total += 1
                    elif u > root and (used >> u) & 1 == 0:
                        stack_a[top] = a + 1
                        top += 1
                        stack_v[top] = u
                        stack_a[top] = 0
                        used |= np.int64(1) << u
                        advanced = True
                        break
                a += 1
            if not advanced:
                used &= ~(np.int64(1) << v)
                top -= 1
    return total


# ---------------------------------------------------------------- verification


def _okey(p):
    if p is INFINITY:
        return (9,)
    if isinstance(p, EdgePoint):
        return (5, p.u, p.v, p.s)
    if isinstance(p, str):
        return (3, p)
    return (1,) + tuple(p)


def _length(space, a, b):
    if isinstance(space, SupNormSpace):
        return max(abs(x - y) for x, y in zip(a, b))
    return space.distance(a, b)


def _norm(space, p):
    if isinstance(space, SupNormSpace):
        return max(abs(x) for x in p)
    return space.norm(p)


def _close(x, y, tol):
    if tol == 0:
        return x == y
    return abs(x - y) <= tol


def verify_decomposition(T, D, tol=1e-9) -> dict:
    """Recompute the superposition identities of D against T.

    Checks: reconstruction (edgewise), mass (sum of w * length), boundary
    (atomwise and in total variation on the report region), injectivity of
    arcs, kind/closure consistency, placement of open and finite ends
    relative to the truncation radius and positivity of weights.
    """
    space = T.space
    exact = any(isinstance(w, Fraction) for w in T.edges.values()) and all(
        isinstance(e.weight, Fraction) for e in D.entries
    )
    if exact:
        tol = 0
    acc = {}
    for (a, b), w in T.edges.items():
        acc[(a, b)] = acc.get((a, b), 0) + w
    for e in D.entries:
        vs = e.curve.vertices
        for a, b in zip(vs, vs[1:]):
            if _okey(a) <= _okey(b):
                acc[(a, b)] = acc.get((a, b), 0) - e.weight
            else:
                acc[(b, a)] = acc.get((b, a), 0) + e.weight
    recon_err = max((abs(v) for v in acc.values()), default=0)
    report = {}
    report["reconstruction"] = {"pass": _close(recon_err, 0, tol), "max_error": float(recon_err)}

    # exact mode lifts each float length to the rational it represents, so no rounding enters the sums
    ln = (lambda a, b: Fraction(_length(space, a, b))) if exact else (lambda a, b: _length(space, a, b))
    m_T = sum(abs(w) * ln(a, b) for (a, b), w in T.edges.items())
    m_D = sum(e.weight * sum(ln(a, b) for a, b in zip(e.curve.vertices, e.curve.vertices[1:])) for e in D.entries)
    report["mass"] = {"pass": _close(m_D, m_T, tol * max(1, len(T.edges))), "lhs": float(m_D), "rhs": float(m_T)}

    limit = None if D.radius is None else D.radius - D.margin

    def in_region(p):
        return limit is None or _norm(space, p) <= limit + 1e-12

    div = {}
    for (a, b), w in T.edges.items():
        div[b] = div.get(b, 0) + w
        div[a] = div.get(a, 0) - w
    bd_D, tv_D = {}, 0
    for e in D.entries:
        c = e.curve
        ends = []
        if c.kind in ("bounded", "bounded-left"):
            ends.append((c.vertices[0], -e.weight))
        if c.kind in ("bounded", "bounded-right"):
            ends.append((c.vertices[-1], e.weight))
        for p, v in ends:
            if p is not INFINITY and in_region(p):
                bd_D[p] = bd_D.get(p, 0) + v
                tv_D += abs(v)
    pts = {p for p in set(div) | set(bd_D) if p is not INFINITY and in_region(p)}
    atom_err = max((abs(div.get(p, 0) - bd_D.get(p, 0)) for p in pts), default=0)
    tv_T = sum(abs(div.get(p, 0)) for p in pts)
    report["boundary"] = {
        "pass": _close(atom_err, 0, tol) and _close(tv_D, tv_T, tol * max(1, len(pts))),
        "max_atom_error": float(atom_err),
        "lhs": float(tv_D),
        "rhs": float(tv_T),
    }

    bad_arcs = 0
    for e in D.entries:
        vs = e.curve.vertices
        body = vs[:-1] if e.curve.kind == "closed" else vs
        if len(set(body)) != len(body):
            bad_arcs += 1
    report["injectivity"] = {"pass": bad_arcs == 0, "violations": bad_arcs}

    bad_kind = sum(
        1 for e in D.entries if (e.curve.kind == "closed") != (e.curve.vertices[0] == e.curve.vertices[-1])
    )
    report["closed"] = {"pass": bad_kind == 0, "violations": bad_kind}

    # an open end must sit on the truncation sphere and a finite end strictly inside it
    R = getattr(D, "radius", None)
    bad_ends = 0
    for e in D.entries:
        c = e.curve
        if c.kind == "closed":
            continue
        for p, is_open in ((c.vertices[0], c.kind in ("bounded-right", "doubly-unbounded")),
                           (c.vertices[-1], c.kind in ("bounded-left", "doubly-unbounded"))):
            if is_open:
                bad_ends += R is None or abs(_norm(space, p) - R) > 1e-9
            else:
                bad_ends += R is not None and _norm(space, p) > R - 1e-9
    report["ends"] = {"pass": bad_ends == 0, "violations": bad_ends}
    bad_w = sum(1 for e in D.entries if not e.weight > 0)
    report["weights"] = {"pass": bad_w == 0, "violations": bad_w}
    report["pass"] = all(v["pass"] for v in report.values())
    return report


# ---------------------------------------------------------------- fault injection

MUTATIONS = ("scale", "reverse", "drop", "duplicate", "reclassify", "negate", "shift-vertex")


def mutate(D, seed):
    """Return (mutation name, corrupted deep copy of D)."""
    rng = random.Random(seed)
    bad = copy.deepcopy(D)
    kind = MUTATIONS[seed % len(MUTATIONS)]
    i = rng.randrange(len(bad.entries))
    e = bad.entries[i]
    Curve = type(e.curve)
    if kind == "scale":
        e.weight = e.weight * (1 + rng.choice((0.5, 1, 2)))
    elif kind == "reverse":
        e.curve = Curve(tuple(reversed(e.curve.vertices)), _reverse_kind(e.curve.kind))
    elif kind == "drop":
        del bad.entries[i]
    elif kind == "duplicate":
        bad.entries.append(copy.deepcopy(e))
    elif kind == "reclassify":
        bounded = [x for x in bad.entries if x.curve.kind == "bounded"]
        x = rng.choice(bounded) if bounded else e
        new = "bounded-left" if x.curve.kind == "bounded" else "bounded"
        if x.curve.kind == "closed":
            new = "bounded"
        x.curve = Curve(x.curve.vertices, new) if new != "closed" else x.curve
    elif kind == "negate":
        e.weight = -e.weight
    elif kind == "shift-vertex":
        vs = list(e.curve.vertices)
        j = rng.randrange(len(vs) - 1) if e.curve.kind == "closed" else rng.randrange(len(vs))
        p = vs[j]
        q = tuple(x + (0.25 if k == 0 else 0.0) for k, x in enumerate(p))
        vs[j] = q
        if e.curve.kind == "closed" and j == 0:
            vs[-1] = q
        e.curve = Curve(tuple(vs), e.curve.kind)
    return kind, bad


def _reverse_kind(kind):
    return {"bounded-left": "bounded-right", "bounded-right": "bounded-left"}.get(kind, kind)


# ---------------------------------------------------------------- exhaustive digraph sweep


def connected_graphs(max_edges):
    """Connected simple graphs without isolated vertices, up to isomorphism.

    Returns {m: [edge list on vertices 0..n-1]} for 1 <= m <= max_edges.
    """
    levels = {1: [nx.Graph([(0, 1)])]}
    for m in range(2, max_edges + 1):
        buckets = {}
        for G in levels[m - 1]:
            n = G.number_of_nodes()
            cands = [(u, v) for u, v in itertools.combinations(range(n), 2) if not G.has_edge(u, v)]
            cands += [(u, n) for u in range(n)]
            for u, v in cands:
                H = G.copy()
                H.add_edge(u, v)
                key = nx.weisfeiler_lehman_graph_hash(H, iterations=3)
                bucket = buckets.setdefault(key, [])
                if not any(nx.is_isomorphic(H, K) for K in bucket):
                    bucket.append(H)
        levels[m] = [G for b in buckets.values() for G in b]
    return {m: [sorted(tuple(sorted(e)) for e in G.edges()) for G in gs] for m, gs in levels.items()}


def _sweep_graph_py(n, eu, ev, cancel, counter):
    m = eu.shape[0]
    bad = 0
    checked = 0
    for orient in range(1 << m):
        tail = np.empty(m, np.int64)
        head = np.empty(m, np.int64)
        for k in range(m):
            if (orient >> k) & 1:
                tail[k] = ev[k]
                head[k] = eu[k]
            else:
                tail[k] = eu[k]
                head[k] = ev[k]
        order = np.argsort(tail, kind="mergesort")
        t = tail[order]
        h = head[order]
        for wmask in range(1 << m):
            w0 = np.empty(m, np.float64)
            for k in range(m):
                w0[k] = 2.0 if (wmask >> k) & 1 else 1.0
            w = w0.copy()
            cancel(n, t, h, w, 0.0)
            div = np.zeros(n, np.float64)
            for k in range(m):
                c = w0[k] - w[k]
                div[h[k]] += c
                div[t[k]] -= c
            ok = True
            for v in range(n):
                if div[v] != 0.0:
                    ok = False
            if counter(n, t, h, w > 0.0) != 0:
                ok = False
            if not ok:
                bad += 1
            checked += 1
    return checked, bad


def sweep_small_digraphs(max_edges=8, graphs=None):
    """Run the cycle-cancelling kernel on every orientation and {1, 2}-weighting.

    Returns (instances checked, failures).  A failure is a residual with a
    directed cycle or a cancelled part with nonzero divergence.
    """
    from . import _kernels as K
    from ._jit import USE_NUMBA

    graphs = graphs if graphs is not None else connected_graphs(max_edges)
    if USE_NUMBA:
        sweep = _sweep_jit()
        cancel, counter = K.cycle_cancel, count_cycles
    else:
        sweep = _sweep_graph_py
        cancel, counter = K.cycle_cancel, count_cycles
    checked = bad = 0
    for m in sorted(graphs):
        for edges in graphs[m]:
            eu = np.array([u for u, _ in edges], np.int64)
            ev = np.array([v for _, v in edges], np.int64)
            n = int(max(eu.max(), ev.max())) + 1
            c, b = sweep(n, eu, ev, cancel, counter)
            checked += c
            bad += b
    return checked, bad


_SWEEP = None


def _sweep_jit():
    global _SWEEP
    if _SWEEP is None:
        import numba

        _SWEEP = numba.njit(_sweep_graph_py)
    return _SWEEP
