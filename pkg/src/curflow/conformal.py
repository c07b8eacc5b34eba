"""Conformal change of metric and compactification with one point at infinity.

The conformal weight is g(r) = 1 / (phi_tilde(r) * 2**r), where phi_tilde is a
continuous nondecreasing piecewise-linear majorant of

    phi(r) = max(1, ||T||(B_{r+1}), max_{r_n <= r} slope(r_n))

and slope(r_n) is the total weight crossing the sphere of radius r_n.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from . import _kernels as K
from .currents import (
    EVERYWHERE,
    AtomMeasure,
    Ball,
    EdgeCurrent,
    Region,
    boundary,
    canonicalize,
    crossing_weight,
    mass_on,
    restrict_ball,
    _same_current,
)
from .errors import GeneratorInconsistency, ModeError, UnsafeRadiusError
from .geometry import EPS_CUT, INFINITY, GraphSpace, SupNormSpace, check_cut_safe

RTOL_LENGTH = 1e-8
RTOL_TAIL = 1e-10


@dataclass
class ConformalProfile:
    anchors: np.ndarray
    alpha: np.ndarray  # ||T||(B_{r_n})
    alpha_next: np.ndarray  # ||T||(B_{r_n + 1})
    slopes: np.ndarray  # crossing weight at r_n
    phi: np.ndarray  # phi(r_n)
    knots_x: np.ndarray
    knots_y: np.ndarray
    shift: float = 0.0
    source: str = ""
    r_max: float = 0.0
    _len_cache: dict = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def constant(cls, c=1.0):
        """Profile with phi_tilde identically c (g(r) = 2^-r / c)."""
        one = np.array([0.0, 1.0])
        return cls(
            anchors=one, alpha=np.zeros(2), alpha_next=np.zeros(2), slopes=np.zeros(2),
            phi=np.full(2, c), knots_x=one, knots_y=np.full(2, float(c)),
        )

    @classmethod
    def from_knots(cls, xs, ys):
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        if np.any(np.diff(xs) <= 0) or np.any(np.diff(ys) < 0) or np.any(ys < 1):
            raise ValueError("knots must be increasing in x, nondecreasing and >= 1 in y")
        z = np.zeros(len(xs))
        return cls(anchors=xs, alpha=z, alpha_next=z, slopes=z, phi=ys.copy(), knots_x=xs, knots_y=ys)

    def phi_tilde(self, r):
        return float(np.interp(r, self.knots_x, self.knots_y))

    def g(self, r):
        return float(K.g_at(float(r), self.knots_x, self.knots_y))

    def tail_integral(self, r, upper=math.inf):
        """G(r): integral of g from r to ``upper`` (default infinity)."""
        return float(K.g_integral(float(r), float(upper), self.knots_x, self.knots_y, RTOL_TAIL))

    def c_constant(self, r):
        """Explicit comparison constant: c(r) delta >= d on B_r."""
        return max(1.0, 2.0 * r) / self.g(r + 1.0)

    def delta_length(self, a, b):
        if a == b:
            return 0.0
        key = (a, b)
        v = self._len_cache.get(key)
        if v is None:
            av = np.asarray(a, dtype=np.float64)
            dv = np.asarray(b, dtype=np.float64) - av
            v = float(K.delta_length(av, dv, self.knots_x, self.knots_y, RTOL_LENGTH))
            self._len_cache[key] = v
        return v

    def to_json(self, spot=(0.0, 1.0, 2.0, 4.0, 8.0)):
        return {
            "anchors": self.anchors.tolist(),
            "alpha": self.alpha.tolist(),
            "alpha_next": self.alpha_next.tolist(),
            "slopes": [float(s) for s in self.slopes],
            "phi": self.phi.tolist(),
            "knots_x": self.knots_x.tolist(),
            "knots_y": self.knots_y.tolist(),
            "shift": self.shift,
            "r_max": self.r_max,
            "source": self.source,
            "g": {repr(float(r)): self.g(r) for r in spot},
            "G": {repr(float(r)): self.tail_integral(r) for r in spot},
        }

    @classmethod
    def from_json(cls, obj):
        return cls(
            anchors=np.array(obj["anchors"], dtype=float),
            alpha=np.array(obj["alpha"], dtype=float),
            alpha_next=np.array(obj["alpha_next"], dtype=float),
            slopes=np.array(obj["slopes"], dtype=float),
            phi=np.array(obj["phi"], dtype=float),
            knots_x=np.array(obj["knots_x"], dtype=float),
            knots_y=np.array(obj["knots_y"], dtype=float),
            shift=obj.get("shift", 0.0),
            source=obj.get("source", ""),
            r_max=obj.get("r_max", 0.0),
        )


def _gen_id(gen):
    return json.dumps(gen.spec(), sort_keys=True, default=str)


def _safe_radius(vertices, space, r, eps=EPS_CUT, step=1e-4):
    for k in range(50):
        cand = r + k * step
        try:
            check_cut_safe(space, vertices, cand, eps)
            return cand
        except UnsafeRadiusError:
            continue
    raise UnsafeRadiusError(f"no cut-safe radius found near {r}")


def build_profile(gen, R_max, n_anchors=None, shift=0.0) -> ConformalProfile:
    """Sample mass growth and crossing weights of ``gen`` and build g."""
    if R_max <= 1:
        raise ValueError("R_max must exceed 1")
    if n_anchors is None:
        n_anchors = max(4, 4 * int(math.ceil(R_max)))
    T_R = gen.current(R_max)
    R_big = R_max + 1
    try:
        T_big = gen.current(R_big)
    except ValueError as exc:
        raise GeneratorInconsistency(f"generator cannot be evaluated at {R_big}: {exc}") from None
    if not _same_current(restrict_ball(T_big, R_max), T_R, 1e-12):
        raise GeneratorInconsistency(
            f"restricting T_{R_big} to radius {R_max} does not give T_{R_max}", radii=(R_max, R_big)
        )
    allv = T_big.vertices()
    anchors = []
    for n in range(n_anchors):
        r = R_max * (n + 1) / n_anchors
        if n == n_anchors - 1:
            check_cut_safe(gen.space, allv, r)
        else:
            r = _safe_radius(allv, gen.space, r)
        anchors.append(r)
    anchors = np.array(anchors)
    alpha = np.array([mass_on(T_big, Ball(r)) for r in anchors], dtype=float)
    alpha_next = np.array([mass_on(T_big, Ball(r + 1.0)) for r in anchors], dtype=float)
    slopes = np.array([float(crossing_weight(T_big, r)) for r in anchors], dtype=float)
    run = np.maximum.accumulate(slopes)
    phi = np.maximum(1.0, np.maximum(alpha_next, run))
    # knot at r_n takes phi(r_{n+1}) so the interpolant dominates the step data
    ky = np.empty_like(phi)
    ky[:-1] = phi[1:]
    ky[-1] = phi[-1]
    ky = np.maximum.accumulate(ky) + shift
    return ConformalProfile(
        anchors=anchors, alpha=alpha, alpha_next=alpha_next, slopes=slopes, phi=phi,
        knots_x=anchors.copy(), knots_y=ky, shift=shift, source=_gen_id(gen), r_max=float(R_max),
    )


def g_eval(profile, r):
    return profile.g(r)


def tail_integral(profile, r):
    return profile.tail_integral(r)


def delta_length(profile, seg) -> float:
    return profile.delta_length(seg.a, seg.b)


def mass_delta(profile, T: EdgeCurrent, region: Region = EVERYWHERE):
    """Conformal mass of T on ``region`` (sum of |w| times delta-lengths)."""
    if not isinstance(T.space, SupNormSpace):
        raise ModeError("conformal masses are defined in the sup-norm model")
    total = 0.0
    for (a, b), w in T.edges.items():
        for t0, t1 in region.intervals(T.space, a, b):
            if t1 > t0:
                p = T.space.point_at(a, b, t0)
                q = T.space.point_at(a, b, t1)
                total += abs(w) * profile.delta_length(p, q)
    return total


# ---------------------------------------------------------------- compactification


@dataclass
class InfinityEdge:
    point: tuple
    weight: object
    delta_length: float
    outward: bool  # True: p -> x_inf, False: x_inf -> p


@dataclass
class CompactifiedCurrent:
    core: EdgeCurrent
    infinity_edges: list
    profile: ConformalProfile
    r_max: float
    interior_boundary: AtomMeasure
    infinity_atom: object

    def extended(self) -> EdgeCurrent:
        """Core plus virtual legs, as one current with x_inf as a vertex."""
        legs = [
            (e.point, INFINITY, e.weight) if e.outward else (INFINITY, e.point, e.weight)
            for e in self.infinity_edges
        ]
        edges = [(a, b, w) for (a, b), w in self.core.edges.items()] + legs
        return canonicalize(self.core.space, edges, check_overlap=False)

    def mass_delta(self):
        core = sum(abs(w) * self.profile.delta_length(a, b) for (a, b), w in self.core.edges.items())
        return core + sum(abs(e.weight) * e.delta_length for e in self.infinity_edges)

    def boundary_mass_delta(self):
        # masses of 0-currents do not depend on the metric
        return self.interior_boundary.total_variation() + abs(self.infinity_atom)


def _cut_atoms(space, bd: AtomMeasure, R):
    tol = EPS_CUT * max(1.0, R)
    cut, inner = {}, {}
    for p, v in bd.items():
        (cut if abs(space.norm(p) - R) <= tol else inner)[p] = v
    return cut, inner


def require_single_infinity(gen):
    if isinstance(gen.space, GraphSpace):
        raise ModeError(
            "single point at infinity requires the sup-norm model: an intrinsic "
            "space may acquire one point at infinity per end; Kuratowski-embed it first"
        )


def compactify(profile, gen, R_max) -> CompactifiedCurrent:
    """Reroute every truncation atom on the sphere of radius R_max to x_inf."""
    require_single_infinity(gen)
    if profile.source and profile.source != _gen_id(gen):
        raise ValueError("profile was built from a different generator")
    core = gen.current(R_max)
    cut, inner = _cut_atoms(core.space, boundary(core), R_max)
    legs = []
    for p in sorted(cut, key=lambda q: tuple(q)):
        v = cut[p]
        legs.append(InfinityEdge(p, abs(v), profile.tail_integral(core.space.norm(p)), v > 0))
    return CompactifiedCurrent(
        core=core,
        infinity_edges=legs,
        profile=profile,
        r_max=float(R_max),
        interior_boundary=AtomMeasure(inner),
        infinity_atom=sum(cut.values()),
    )


def ends_boundary_mass(T: EdgeCurrent, R) -> float:
    """Boundary mass after completing an intrinsic space with one point per end.

    Each connected component of the graph outside the ball of radius R gets
    its own point at infinity; truncation atoms are rerouted to the point of
    their component, where they no longer cancel across components.
    """
    space = T.space
    if not isinstance(space, GraphSpace):
        raise ModeError("ends completion is for intrinsic graph spaces")
    cut, inner = _cut_atoms(space, boundary(T), R)
    parent = {}

    def find(x):
        while parent.get(x, x) != x:
            x = parent[x]
        return x

    outside = {v for v in space.vertices if space.norm(v) > R}
    for u, v, _ in space.edges:
        if u in outside and v in outside:
            parent[find(u)] = find(v)
    totals = {}
    for p, val in cut.items():
        anchor = None
        for q, _ in space._anchors(p):
            if q in outside:
                anchor = q
        if anchor is None:
            raise ModeError(f"truncation point {p!r} has no outside neighbour")
        root = find(anchor)
        totals[root] = totals.get(root, 0) + val
    return float(sum(abs(v) for v in inner.values()) + sum(abs(v) for v in totals.values()))


# ---------------------------------------------------------------- delta distance


@dataclass
class DeltaDistance:
    upper: float
    lower: float


def delta_distance(profile, space, p, q, mesh=9, pad=0.5) -> DeltaDistance:
    """Bracket the conformal distance between p and q.

    Upper bound: shortest path through a king-move grid over a padded bounding
    box (p and q joined to every grid point of their cell neighbourhood).
    Lower bound: d(p, q) / c(r) with r just above max(|p|, |q|).
    """
    if not isinstance(space, SupNormSpace):
        raise ModeError("delta_distance needs the sup-norm model")
    if mesh < 2:
        raise ValueError("mesh must be at least 2")
    if space.dim > 3:
        raise ModeError("grid approximation is limited to dimension <= 3")
    P, Q = np.asarray(p, float), np.asarray(q, float)
    lo = np.minimum(P, Q) - pad
    hi = np.maximum(P, Q) + pad
    axes = [np.linspace(lo[i], hi[i], mesh) for i in range(space.dim)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, space.dim)
    pts = [tuple(map(float, x)) for x in grid] + [tuple(map(float, P)), tuple(map(float, Q))]
    shape = (mesh,) * space.dim
    rows, cols, vals = [], [], []

    def add(i, j):
        if i != j:
            w = profile.delta_length(pts[i], pts[j])
            rows.append(i)
            cols.append(j)
            vals.append(w)

    offsets = [o for o in np.ndindex(*(3,) * space.dim) if any(x != 1 for x in o)]
    for flat in range(len(grid)):
        idx = np.unravel_index(flat, shape)
        for o in offsets:
            nb = tuple(int(i) + int(k) - 1 for i, k in zip(idx, o))
            if all(0 <= x < mesh for x in nb):
                j = int(np.ravel_multi_index(nb, shape))
                if j > flat:
                    add(flat, j)
    cell = (hi - lo) / (mesh - 1)
    ip, iq = len(pts) - 2, len(pts) - 1
    for src in (ip, iq):
        X = np.asarray(pts[src])
        near = np.all(np.abs(grid - X) <= 1.5 * cell + 1e-12, axis=1)
        for j in np.nonzero(near)[0]:
            add(src, int(j))
    add(ip, iq)
    n = len(pts)
    A = coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    upper = float(dijkstra(A, directed=False, indices=ip)[iq])
    r = max(space.norm(pts[ip]), space.norm(pts[iq])) + 1e-9
    lower = space.distance(pts[ip], pts[iq]) / profile.c_constant(r)
    return DeltaDistance(upper=upper, lower=lower)
