"""Ambient spaces: the finite-dimensional sup-norm model and intrinsic metric graphs.

Points of a :class:`SupNormSpace` are tuples of floats.  Points of a
:class:`GraphSpace` are vertex ids (strings) or :class:`EdgePoint` values
sitting in the interior of a graph edge.  The adjoined point at infinity is
the singleton :data:`INFINITY`; no space measures distances to it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

from . import _kernels as K
from .errors import DomainError, ModeError, UnsafeRadiusError

EPS_CUT = 1e-9


class _Infinity:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "x_inf"

    def __reduce__(self):
        return (_Infinity, ())


INFINITY = _Infinity()


class EdgePoint(NamedTuple):
    """Interior point of graph edge (u, v) at distance ``s`` from ``u``."""

    u: str
    v: str
    s: float


def point_key(p):
    """Total order over every kind of point (used for canonical orientation)."""
    if p is INFINITY:
        return (3, ())
    if isinstance(p, EdgePoint):
        return (2, (p.u, p.v, p.s))
    if isinstance(p, str):
        return (1, p)
    return (0, tuple(p))


class SupNormSpace:
    mode = "sup-norm"

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError("dimension must be positive")
        self.dim = int(dim)
        self.base = tuple([0.0] * self.dim)

    def __eq__(self, other):
        return isinstance(other, SupNormSpace) and other.dim == self.dim

    def __hash__(self):
        return hash(("sup", self.dim))

    def __repr__(self):
        return f"SupNormSpace(dim={self.dim})"

    def check_point(self, p):
        if p is INFINITY:
            raise DomainError("distance to the point at infinity is undefined")
        if len(p) != self.dim:
            raise DomainError(f"point {p!r} does not have dimension {self.dim}")

    def norm(self, p) -> float:
        self.check_point(p)
        return max(abs(x) for x in p)

    def distance(self, p, q) -> float:
        self.check_point(p)
        self.check_point(q)
        return max(abs(x - y) for x, y in zip(p, q))

    seg_length = distance

    def point_at(self, a, b, t, radius=None):
        if t == 0.0:
            return a
        if t == 1.0:
            return b
        p = [x + t * (y - x) for x, y in zip(a, b)]
        if radius is not None:
            # snap the active coordinate onto the sphere
            i = max(range(self.dim), key=lambda j: abs(p[j]))
            p[i] = math.copysign(radius, p[i])
        return tuple(p)

    def ball_intervals(self, a, b, r):
        """Parameter sub-intervals of a -> b lying in the closed ball of radius r."""
        av = np.asarray(a, dtype=np.float64)
        dv = np.asarray(b, dtype=np.float64) - av
        t0, t1 = K.ball_interval(av, dv, float(r))
        if t0 > t1:
            return []
        return [(float(t0), float(t1))]

    def locate(self, p, a, b, tol=1e-12):
        """Parameter of ``p`` on segment a -> b, or None if it is not on it."""
        d = [y - x for x, y in zip(a, b)]
        j = max(range(self.dim), key=lambda i: abs(d[i]))
        if d[j] == 0.0:
            return None
        t = (p[j] - a[j]) / d[j]
        if not (-tol < t < 1 + tol):
            return None
        scale = max(1.0, max(abs(x) for x in d))
        if any(abs(a[i] + t * d[i] - p[i]) > tol * scale for i in range(self.dim)):
            return None
        return min(max(t, 0.0), 1.0)

    def to_json(self):
        return {"mode": "sup-norm", "dim": self.dim}


class GraphSpace:
    """Intrinsic geodesic metric of a connected graph with positive edge lengths."""

    mode = "intrinsic"

    def __init__(self, vertices, edges, base=None):
        self.vertices = [str(v) for v in vertices]
        self.index = {v: i for i, v in enumerate(self.vertices)}
        if len(self.index) != len(self.vertices):
            raise ValueError("duplicate vertex ids")
        self.edges = []
        self.edge_index = {}
        for u, v, w in edges:
            u, v, w = str(u), str(v), float(w)
            if w <= 0:
                raise ValueError(f"edge {u}-{v} has nonpositive length {w}")
            if u == v or u not in self.index or v not in self.index:
                raise ValueError(f"bad edge {u}-{v}")
            key = (u, v) if u < v else (v, u)
            if key in self.edge_index:
                raise ValueError(f"parallel edge {u}-{v}")
            self.edge_index[key] = len(self.edges)
            self.edges.append((u, v, w))
        self.base = str(base) if base is not None else self.vertices[0]
        n = len(self.vertices)
        rows = [self.index[u] for u, v, w in self.edges]
        cols = [self.index[v] for u, v, w in self.edges]
        data = [w for u, v, w in self.edges]
        adj = csr_matrix((data, (rows, cols)), shape=(n, n))
        ncomp, _ = connected_components(adj, directed=False)
        if ncomp != 1:
            raise ValueError("graph is not connected")
        self.adj = adj
        self._dist = None

    def __eq__(self, other):
        return (
            isinstance(other, GraphSpace)
            and other.vertices == self.vertices
            and other.edges == self.edges
            and other.base == self.base
        )

    def __hash__(self):
        return hash(("graph", len(self.vertices), len(self.edges), self.base))

    @property
    def dist(self):
        if self._dist is None:
            self._dist = shortest_path(self.adj, directed=False)
        return self._dist

    def vertex_distance(self, u, v) -> float:
        return float(self.dist[self.index[u], self.index[v]])

    def _edge(self, u, v):
        key = (u, v) if u < v else (v, u)
        i = self.edge_index.get(key)
        if i is None:
            return None
        return self.edges[i]

    def _anchors(self, p):
        """(vertex, offset) pairs through which every geodesic from p leaves."""
        if p is INFINITY:
            raise DomainError("distance to the point at infinity is undefined")
        if isinstance(p, EdgePoint):
            u, v, w = self._edge(p.u, p.v)
            s = p.s if (u, v) == (p.u, p.v) else w - p.s
            return [(u, s), (v, w - s)]
        if p not in self.index:
            raise DomainError(f"unknown vertex {p!r}")
        return [(p, 0.0)]

    def distance(self, p, q) -> float:
        best = min(
            ou + self.vertex_distance(u, v) + ov
            for u, ou in self._anchors(p)
            for v, ov in self._anchors(q)
        )
        common = self._common_edge(p, q)
        if common is not None:
            _, sp, sq = common
            best = min(best, abs(sp - sq))
        return float(best)

    def norm(self, p) -> float:
        return self.distance(p, self.base)

    def _position(self, p, edge):
        u, v, w = edge
        if p == u:
            return 0.0
        if p == v:
            return w
        if isinstance(p, EdgePoint):
            if (p.u, p.v) == (u, v):
                return p.s
            if (p.u, p.v) == (v, u):
                return w - p.s
        return None

    def _candidate_edges(self, p):
        if isinstance(p, EdgePoint):
            return [self._edge(p.u, p.v)]
        return [e for e in self.edges if p in (e[0], e[1])]

    def _common_edge(self, a, b):
        for e in self._candidate_edges(a):
            if e is None:
                continue
            sa = self._position(a, e)
            sb = self._position(b, e)
            if sa is not None and sb is not None:
                return e, sa, sb
        return None

    def seg_length(self, a, b) -> float:
        common = self._common_edge(a, b)
        if common is None:
            raise DomainError(f"{a!r} and {b!r} do not lie on a common graph edge")
        _, sa, sb = common
        return abs(sb - sa)

    def point_at(self, a, b, t, radius=None):
        if t == 0.0:
            return a
        if t == 1.0:
            return b
        (u, v, w), sa, sb = self._common_edge(a, b)
        s = sa + t * (sb - sa)
        return EdgePoint(u, v, float(s))

    def ball_intervals(self, a, b, r):
        (u, v, w), sa, sb = self._common_edge(a, b)
        du = self.vertex_distance(self.base, u)
        dv = self.vertex_distance(self.base, v)
        lo, hi = min(sa, sb), max(sa, sb)
        # distance from base along the edge is min(du + s, dv + w - s)
        pieces = []
        left_end = r - du
        right_start = w - (r - dv)
        if left_end >= right_start:
            pieces.append((lo, hi))
        else:
            if left_end >= lo:
                pieces.append((lo, min(hi, left_end)))
            if right_start <= hi:
                pieces.append((max(lo, right_start), hi))
        out = []
        for s0, s1 in pieces:
            if s1 < s0:
                continue
            t0 = (s0 - sa) / (sb - sa)
            t1 = (s1 - sa) / (sb - sa)
            out.append((min(t0, t1), max(t0, t1)))
        out.sort()
        return out

    def locate(self, p, a, b, tol=1e-12):
        common = self._common_edge(a, b)
        if common is None:
            return None
        e, sa, sb = common
        sp = self._position(p, e)
        if sp is None:
            return None
        t = (sp - sa) / (sb - sa)
        if -tol < t < 1 + tol:
            return min(max(t, 0.0), 1.0)
        return None

    def to_json(self):
        return {
            "mode": "intrinsic",
            "vertices": list(self.vertices),
            "edges": [[u, v, w] for u, v, w in self.edges],
            "base": self.base,
        }


AmbientSpace = SupNormSpace | GraphSpace


@dataclass(frozen=True)
class Segment:
    a: object
    b: object

    def __post_init__(self):
        if self.a == self.b:
            raise ValueError("zero-length segment")


class BallCut(NamedTuple):
    inside: list  # list of Segment; at most one in sup-norm mode
    crossings: list  # (point, "entering" | "exiting")

    @property
    def inside_part(self):
        if len(self.inside) > 1:
            raise ModeError("several inside pieces; use .inside")
        return self.inside[0] if self.inside else None


def distance(space, p, q) -> float:
    return space.distance(p, q)


def check_cut_safe(space, points, r, eps=EPS_CUT):
    tol = eps * max(1.0, abs(r))
    for p in points:
        if p is INFINITY:
            continue
        if abs(space.norm(p) - r) <= tol:
            raise UnsafeRadiusError(f"radius {r} coincides with the norm of {p!r}")


def ball_cut(space, seg: Segment, r: float, eps=EPS_CUT) -> BallCut:
    """Portion of ``seg`` inside the closed ball B_r(base) and its crossing points."""
    if r <= 0:
        raise ValueError("radius must be positive")
    check_cut_safe(space, (seg.a, seg.b), r, eps)
    inside, crossings = [], []
    for t0, t1 in space.ball_intervals(seg.a, seg.b, r):
        p0 = space.point_at(seg.a, seg.b, t0, radius=r)
        p1 = space.point_at(seg.a, seg.b, t1, radius=r)
        if t0 > 0.0:
            crossings.append((p0, "entering"))
        if t1 < 1.0:
            crossings.append((p1, "exiting"))
        if t1 > t0:
            inside.append(Segment(p0, p1))
    return BallCut(inside, crossings)


def kuratowski_embed(space: GraphSpace, anchors=None):
    """Isometric embedding of a finite graph space into the sup-norm model.

    Vertex v goes to (d(v, a_i) - d(a_0, a_i))_i.  Returns the target space
    and the vertex -> coordinates map.  ``anchors`` defaults to every vertex
    with the base point first, so the base lands on the origin.
    """
    if not isinstance(space, GraphSpace):
        raise ModeError("only finite intrinsic spaces can be embedded")
    if anchors is None:
        anchors = [space.base] + [v for v in space.vertices if v != space.base]
    anchors = [str(a) for a in anchors]
    if set(anchors) != set(space.vertices):
        raise ModeError("anchors must enumerate every vertex of the space")
    idx = [space.index[a] for a in anchors]
    D = space.dist[:, idx]
    coords = D - D[space.index[anchors[0]]][None, :]
    target = SupNormSpace(len(anchors))
    return target, {v: tuple(float(x) for x in coords[space.index[v]]) for v in space.vertices}


def space_from_json(obj):
    mode = obj.get("mode")
    if mode == "sup-norm":
        return SupNormSpace(int(obj["dim"]))
    if mode == "intrinsic":
        return GraphSpace(obj["vertices"], obj["edges"], obj.get("base"))
    raise ValueError(f"unknown space mode {mode!r}")


def point_to_json(p):
    if p is INFINITY:
        return "x_inf"
    if isinstance(p, EdgePoint):
        return {"edge": [p.u, p.v], "s": p.s}
    if isinstance(p, str):
        return p
    return list(p)


def point_from_json(obj):
    if obj == "x_inf":
        return INFINITY
    if isinstance(obj, str):
        return obj
    if isinstance(obj, dict):
        u, v = obj["edge"]
        return EdgePoint(str(u), str(v), float(obj["s"]))
    return tuple(float(x) for x in obj)
