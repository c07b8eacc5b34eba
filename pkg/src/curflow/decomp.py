"""Decompositions of polyhedral currents into weighted curves.

Finite currents split into a cycle part (closed curves) and an acyclic part
(arcs traced from sources to sinks).  Locally finite currents are first
compactified with a point at infinity, decomposed as finite currents there,
and the curves are then cut at x_inf.
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import linprog

from . import _kernels as K
from .conformal import build_profile, compactify, require_single_infinity
from .currents import (
    TOL_W,
    AtomMeasure,
    EdgeCurrent,
    boundary,
    canonicalize,
    mass_total,
)
from .errors import ContractError, OracleScaleError
from .geometry import EPS_CUT, INFINITY, point_from_json, point_key, point_to_json

KINDS = ("closed", "bounded", "bounded-left", "bounded-right", "doubly-unbounded")
XI_EDGE_CAP = 16


@dataclass(frozen=True)
class Curve:
    """Polygonal curve through ``vertices``.

    Unbounded kinds keep the point where the curve was cut (at the truncation
    sphere or at x_inf) as their open end; that end carries no boundary.
    """

    vertices: tuple
    kind: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown curve kind {self.kind!r}")
        if len(self.vertices) < 2:
            raise ValueError("a curve needs at least two vertices")
        if self.kind == "closed" and self.vertices[0] != self.vertices[-1]:
            raise ValueError("closed curve must end where it starts")

    def segments(self):
        return list(zip(self.vertices, self.vertices[1:]))

    def length(self, space) -> float:
        return sum(space.distance(a, b) for a, b in self.segments())

    def delta_length(self, profile) -> float:
        return sum(profile.delta_length(a, b) for a, b in self.segments())

    @property
    def start_finite(self):
        return self.kind in ("bounded", "bounded-left")

    @property
    def end_finite(self):
        return self.kind in ("bounded", "bounded-right")

    def is_injective(self) -> bool:
        vs = self.vertices[:-1] if self.kind == "closed" else self.vertices
        return len(set(vs)) == len(vs)

    def boundary(self, w=1) -> dict:
        out = {}
        if self.start_finite:
            out[self.vertices[0]] = out.get(self.vertices[0], 0) - w
        if self.end_finite:
            out[self.vertices[-1]] = out.get(self.vertices[-1], 0) + w
        return out

    def current(self, space, w=1) -> EdgeCurrent:
        return canonicalize(space, [(a, b, w) for a, b in self.segments()], check_overlap=False)

    def to_json(self):
        return {"kind": self.kind, "vertices": [point_to_json(p) for p in self.vertices]}


@dataclass
class Entry:
    curve: Curve
    weight: object
    part: str  # "cycle" or "path"
    multiplicity: int = 1


@dataclass
class Decomposition:
    space: object
    entries: list
    radius: float | None = None
    margin: float = 0.0
    profile_id: str = ""
    certificate: list = field(default_factory=list)  # topological order of the acyclic part
    checks: dict = field(default_factory=dict)

    def part(self, name):
        return [e for e in self.entries if e.part == name]

    def current(self, tol=0.0) -> EdgeCurrent:
        edges = [(a, b, e.weight) for e in self.entries for a, b in e.curve.segments()]
        return canonicalize(self.space, edges, check_overlap=False, tol=tol)

    def mass(self) -> float:
        return sum(abs(e.weight) * e.curve.length(self.space) for e in self.entries)

    def unit_weights(self):
        """Weights after reparameterizing each curve on [0, 1] with unit speed in mass.

        A closed curve of length l is counted as l unit-length loops; arcs keep
        their weight.
        """
        return [
            e.weight * e.curve.length(self.space) if e.curve.kind == "closed" else e.weight
            for e in self.entries
        ]

    def report_radius(self):
        return None if self.radius is None else self.radius - self.margin

    def to_json(self):
        def item(e):
            d = e.curve.to_json()
            d.update({"w": weight_to_json(e.weight), "part": e.part, "multiplicity": e.multiplicity})
            return d

        return {
            "space": self.space.to_json(),
            "radius": self.radius,
            "margin": self.margin,
            "profile": self.profile_id,
            "cycles": [item(e) for e in self.entries if e.curve.kind == "closed"],
            "paths": [item(e) for e in self.entries if e.curve.kind == "bounded"],
            "rays": [item(e) for e in self.entries if e.curve.kind not in ("closed", "bounded")],
            "certificate": [point_to_json(p) for p in self.certificate],
            "checks": self.checks,
        }

    @classmethod
    def from_json(cls, obj, space):
        entries = []
        for key in ("cycles", "paths", "rays"):
            for d in obj.get(key, []):
                curve = Curve(tuple(point_from_json(p) for p in d["vertices"]), d["kind"])
                entries.append(Entry(curve, weight_from_json(d["w"]), d.get("part", "path"), d.get("multiplicity", 1)))
        return cls(
            space=space,
            entries=entries,
            radius=obj.get("radius"),
            margin=obj.get("margin", 0.0),
            profile_id=obj.get("profile", ""),
            certificate=[point_from_json(p) for p in obj.get("certificate", [])],
            checks=obj.get("checks", {}),
        )


def weight_to_json(w):
    if isinstance(w, Fraction):
        return str(w) if w.denominator != 1 else int(w)
    if isinstance(w, (int, np.integer)):
        return int(w)
    return float(w)


def weight_from_json(v):
    if isinstance(v, str):
        return Fraction(v)
    return v


# ---------------------------------------------------------------- arc arrays


def _arcs(T: EdgeCurrent):
    arcs = T.oriented()
    verts = sorted({p for t, h, _ in arcs for p in (t, h)}, key=point_key)
    index = {p: i for i, p in enumerate(verts)}
    arcs.sort(key=lambda x: (index[x[0]], index[x[1]]))
    tail = np.array([index[t] for t, _, _ in arcs], dtype=np.int64)
    head = np.array([index[h] for _, h, _ in arcs], dtype=np.int64)
    ws = [w for _, _, w in arcs]
    return verts, tail, head, ws


def _exact(ws):
    return any(isinstance(w, Fraction) for w in ws)


def _cycle_curve(verts, tail, head, ids):
    vs = [verts[tail[a]] for a in ids] + [verts[head[ids[-1]]]]
    return Curve(tuple(vs), "closed")


def _rebuild(T, verts, tail, head, res, tol):
    edges = [(verts[tail[a]], verts[head[a]], res[a]) for a in range(len(res)) if res[a] > tol]
    return canonicalize(T.space, edges, check_overlap=False)


def zeta_default(space, a, b):
    mid = space.point_at(a, b, 0.5)
    return 2.0 ** (-math.ceil(space.norm(mid)))


def _zeta_mass_weights(T, verts, tail, head, zeta):
    zeta = zeta or zeta_default
    return [
        zeta(T.space, verts[tail[a]], verts[head[a]]) * T.space.distance(verts[tail[a]], verts[head[a]])
        for a in range(len(tail))
    ]


def split_cycles(T: EdgeCurrent, strategy="dfs", zeta=None, tol=None):
    """Split T = C + A with C a sum of closed curves and A acyclic.

    Returns (C, cycles, A) where ``cycles`` lists (Curve, weight).
    """
    verts, tail, head, ws = _arcs(T)
    exact = _exact(ws)
    if tol is None:
        tol = 0 if exact else 0.0
    if strategy == "dfs":
        if exact or not ws:
            arr = np.array(ws, dtype=object)
            flat, offs = K.cycle_cancel.py(len(verts), tail, head, arr, tol)
        else:
            arr = np.array(ws, dtype=np.float64)
            flat, offs = K.cycle_cancel(len(verts), tail, head, arr, float(tol))
        cycles_ids = [list(flat[offs[i] : offs[i + 1]]) for i in range(len(offs) - 1)]
    elif strategy == "greedy-xi":
        cycles_ids = _greedy_xi_cycles(T, verts, tail, head, ws, zeta, tol)
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    # replay the cancellations in the input number type
    res = list(ws)
    cycles = []
    for ids in cycles_ids:
        amount = min(res[a] for a in ids)
        first = next(a for a in ids if res[a] == amount)
        for a in ids:
            res[a] = res[a] - amount
        res[first] = 0 * amount
        cycles.append((_cycle_curve(verts, tail, head, ids), amount))
    A = _rebuild(T, verts, tail, head, res, tol)
    C = canonicalize(
        T.space, [(a, b, w) for c, w in cycles for a, b in c.segments()], check_overlap=False
    )
    return C, cycles, A


def _greedy_xi_cycles(T, verts, tail, head, ws, zeta, tol):
    if len(ws) > XI_EDGE_CAP:
        raise OracleScaleError(f"greedy-xi is limited to {XI_EDGE_CAP} edges, got {len(ws)}")
    zl = _zeta_mass_weights(T, verts, tail, head, zeta)
    res = list(ws)
    out = []
    while True:
        best, best_score = None, 0.0
        for ids in _simple_cycles(len(verts), tail, head, [r > tol for r in res]):
            amount = min(res[a] for a in ids)
            score = float(amount) * sum(zl[a] for a in ids)
            if score > best_score:
                best, best_score = ids, score
        if best is None:
            return out
        amount = min(res[a] for a in best)
        first = next(a for a in best if res[a] == amount)
        for a in best:
            res[a] = res[a] - amount
        res[first] = 0 * amount
        out.append(best)


def _simple_cycles(n, tail, head, alive):
    """All simple directed cycles as arc-id lists, each rooted at its smallest vertex."""
    out_arcs = [[] for _ in range(n)]
    for a in range(len(tail)):
        if alive[a]:
            out_arcs[tail[a]].append(a)
    found = []
    for root in range(n):
        stack = [(root, iter(out_arcs[root]))]
        path, onpath = [], {root}
        while stack:
            v, it = stack[-1]
            a = next(it, None)
            if a is None:
                stack.pop()
                if path:
                    onpath.discard(v)
                    path.pop()
                continue
            u = head[a]
            if u == root:
                found.append(path + [a])
            elif u > root and u not in onpath:
                onpath.add(u)
                path.append(a)
                stack.append((u, iter(out_arcs[u])))
    return found


def xi(T: EdgeCurrent, zeta=None, cap=XI_EDGE_CAP) -> float:
    """Largest zeta-weighted mass of a cycle C <= T.

    Solved as an LP over simple-cycle weights and cross-checked against the
    equivalent circulation LP.
    """
    verts, tail, head, ws = _arcs(T)
    if len(ws) > cap:
        raise OracleScaleError(f"xi is oracle-scale only ({len(ws)} edges > {cap})")
    if not ws:
        return 0.0
    zl = np.array(_zeta_mass_weights(T, verts, tail, head, zeta))
    cap_w = np.array([float(w) for w in ws])
    cycles = _simple_cycles(len(verts), tail, head, [True] * len(ws))
    if not cycles:
        return 0.0
    A = np.zeros((len(ws), len(cycles)))
    for j, ids in enumerate(cycles):
        A[ids, j] = 1.0
    c = -A.T @ zl
    lp = linprog(c, A_ub=A, b_ub=cap_w, bounds=(0, None), method="highs")
    # circulation form: max zl.f, 0 <= f <= |w|, zero divergence
    D = np.zeros((len(verts), len(ws)))
    D[tail, np.arange(len(ws))] -= 1.0
    D[head, np.arange(len(ws))] += 1.0
    circ = linprog(-zl, A_eq=D, b_eq=np.zeros(len(verts)), bounds=list(zip([0.0] * len(ws), cap_w)), method="highs")
    v1, v2 = -lp.fun, -circ.fun
    if abs(v1 - v2) > 1e-7 * max(1.0, abs(v1)):
        raise ContractError(f"cycle LP {v1} and circulation LP {v2} disagree")
    return float(v1)


# ---------------------------------------------------------------- paths


def topological_order(T: EdgeCurrent):
    """Topological order of the support digraph, or None if it has a cycle."""
    succ, indeg = {}, {}
    for t, h, _ in T.oriented():
        succ.setdefault(t, []).append(h)
        indeg[h] = indeg.get(h, 0) + 1
        indeg.setdefault(t, 0)
    ready = sorted((v for v, d in indeg.items() if d == 0), key=point_key)
    order = []
    while ready:
        v = ready.pop(0)
        order.append(v)
        for u in sorted(succ.get(v, []), key=point_key):
            indeg[u] -= 1
            if indeg[u] == 0:
                ready.append(u)
        ready.sort(key=point_key)
    return order if len(order) == len(indeg) else None


def path_decompose(A: EdgeCurrent) -> Decomposition:
    """Trace sources to sinks in an acyclic current.

    Each path starts at the smallest vertex that still has outgoing but no
    incoming residual, follows the largest residual (ties by endpoint order)
    and stops at a vertex without outgoing residual.  A vertex therefore never
    serves both as a start and as an end.
    """
    order = topological_order(A)
    if order is None:
        raise ContractError("path_decompose needs an acyclic current")
    out, indeg = {}, {}
    res = {}
    for t, h, w in A.oriented():
        out.setdefault(t, []).append(h)
        res[(t, h)] = w
        indeg[h] = indeg.get(h, 0) + 1
    for v in out:
        out[v].sort(key=point_key)
    rank = {v: i for i, v in enumerate(sorted(set(out) | set(indeg), key=point_key))}
    entries = []
    while True:
        starts = [v for v, hs in out.items() if hs and indeg.get(v, 0) == 0]
        if not starts:
            break
        v = min(starts, key=rank.__getitem__)
        path = [v]
        while out.get(path[-1]):
            cur = path[-1]
            nxt = max(out[cur], key=lambda u: (res[(cur, u)], -rank[u]))
            path.append(nxt)
        arcs = list(zip(path, path[1:]))
        amount = min(res[a] for a in arcs)
        for a in arcs:
            res[a] = res[a] - amount
            if res[a] == 0:
                out[a[0]].remove(a[1])
                indeg[a[1]] -= 1
        entries.append(Entry(Curve(tuple(path), "bounded"), amount, "path"))
    return Decomposition(A.space, entries, certificate=order)


def decompose_finite(T: EdgeCurrent, strategy="dfs", zeta=None) -> Decomposition:
    C, cycles, A = split_cycles(T, strategy, zeta)
    D = path_decompose(A)
    D.entries = [Entry(c, w, "cycle") for c, w in cycles] + D.entries
    return D


# ---------------------------------------------------------------- infinity


def split_at_infinity(curve: Curve):
    """Cut a curve over the compactified space into maximal pieces avoiding x_inf.

    Returns [(Curve, multiplicity)]; identical pieces of one curve merge.
    """
    vs = list(curve.vertices)
    if INFINITY not in vs:
        return [(curve, 1)]
    if curve.kind == "closed":
        i = vs.index(INFINITY)
        vs = vs[i:-1] + vs[:i] + [INFINITY]
        start_open, end_open = True, True
    else:
        start_open = curve.start_finite is False
        end_open = curve.end_finite is False
    pieces = []
    cur, cur_open = [], start_open
    for p in vs:
        if p is INFINITY:
            if len(cur) >= 2:
                pieces.append((tuple(cur), cur_open, True))
            cur, cur_open = [], True
        else:
            cur.append(p)
    if len(cur) >= 2:
        pieces.append((tuple(cur), cur_open, end_open))
    counts = {}
    for piece in pieces:
        counts[piece] = counts.get(piece, 0) + 1
    out = []
    for (pts, left_open, right_open), n in counts.items():
        kind = {
            (False, False): "bounded",
            (False, True): "bounded-left",
            (True, False): "bounded-right",
            (True, True): "doubly-unbounded",
        }[(left_open, right_open)]
        out.append((Curve(pts, kind), n))
    return out


def decompose_local(gen, R_max, margin=1.0, strategy="dfs", profile=None, exact=False) -> Decomposition:
    """Decompose the truncation of a locally finite current at radius R_max."""
    require_single_infinity(gen)
    if profile is None:
        profile = build_profile(gen, R_max)
    comp = compactify(profile, gen, R_max)
    Tbar = comp.extended()
    if exact:
        Tbar = EdgeCurrent(Tbar.space, {k: _to_fraction(w) for k, w in Tbar.edges.items()})
    D = decompose_finite(Tbar, strategy)
    entries = []
    for e in D.entries:
        for piece, n in split_at_infinity(e.curve):
            entries.append(Entry(piece, e.weight * n, e.part, n))
    out = Decomposition(
        comp.core.space,
        entries,
        radius=float(R_max),
        margin=float(margin),
        profile_id=profile.source,
        certificate=[p for p in D.certificate if p is not INFINITY],
    )
    # mass equality in d and in delta, each side computed separately
    T = comp.core
    d_lhs = float(sum(abs(e.weight) * e.curve.length(T.space) for e in entries))
    delta_lhs = float(sum(abs(e.weight) * e.curve.delta_length(profile) for e in entries))
    delta_rhs = float(sum(abs(w) * profile.delta_length(a, b) for (a, b), w in T.edges.items()))
    out.checks = {
        "mass_d": [d_lhs, float(mass_total(T))],
        "mass_delta": [delta_lhs, delta_rhs],
        "infinity_atom": float(comp.infinity_atom),
        "boundary_mass_delta": float(comp.boundary_mass_delta()),
    }
    return out


def _to_fraction(w):
    return w if isinstance(w, Fraction) else Fraction(w)


def transport_endpoints(D: Decomposition):
    """Endpoint pushforwards of the acyclic part and the mass exchanged with infinity."""
    e0, e1 = {}, {}
    to_inf = from_inf = 0
    for e in D.part("path"):
        c = e.curve
        if c.start_finite:
            p = c.vertices[0]
            e0[p] = e0.get(p, 0) + e.weight
        if c.end_finite:
            p = c.vertices[-1]
            e1[p] = e1.get(p, 0) + e.weight
        if c.kind == "bounded-left":
            to_inf += e.weight
        elif c.kind == "bounded-right":
            from_inf += e.weight
    return AtomMeasure(e0), AtomMeasure(e1), to_inf, from_inf


# ---------------------------------------------------------------- finite boundary splitting


@dataclass
class BoundarySplit:
    pieces: list  # S_0 .. S_M
    remainders: list  # T_1 .. T_{M+1}, T_m = T - sum_{i<m} S_i
    total: EdgeCurrent


def boundary_split(gen, R_max, M=None, margin=2.0) -> BoundarySplit:
    """Write T_R = S_0 + S_1 + ... + S_M + remainder.

    S_0 is the cycle part; S_m collects the curves of a path decomposition of
    T_m with an endpoint in the open ball of radius m, which clears the
    boundary of T_{m+1} inside that ball.
    """
    limit = int(math.floor(R_max - margin))
    if M is None:
        M = limit
    elif M > limit:
        warnings.warn(f"M={M} exceeds R_max - margin; clipped to {limit}")
        M = limit
    T = gen.current(R_max)
    space = T.space
    C, _, A = split_cycles(T)
    pieces, rems = [C], [A]
    Tm = A
    for m in range(1, M + 1):
        D = path_decompose(Tm)
        chosen = [
            e for e in D.entries
            if space.norm(e.curve.vertices[0]) < m - EPS_CUT or space.norm(e.curve.vertices[-1]) < m - EPS_CUT
        ]
        S = canonicalize(space, [(a, b, e.weight) for e in chosen for a, b in e.curve.segments()], check_overlap=False)
        Tm = _difference(Tm, S)
        pieces.append(S)
        rems.append(Tm)
    return BoundarySplit(pieces, rems, T)


def _difference(T, S):
    edges = dict(T.edges)
    for k, w in S.edges.items():
        edges[k] = edges.get(k, 0) - w
        if edges[k] == 0 or (not isinstance(edges[k], Fraction) and abs(edges[k]) <= 0.0):
            del edges[k]
    return EdgeCurrent(T.space, edges)
