"""Polyhedral 1-currents: weighted oriented edge sets over an ambient space."""
from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Iterable

import numpy as np

from .errors import GeneratorInconsistency, OverlapError, SpaceMismatchError
from .geometry import (
    EPS_CUT,
    INFINITY,
    Segment,
    SupNormSpace,
    ball_cut,
    check_cut_safe,
    point_key,
)

TOL_W = 1e-9


def is_zero(w, tol=0.0) -> bool:
    if isinstance(w, Fraction):
        return w == 0
    return abs(w) <= tol


# ---------------------------------------------------------------- regions


class Region:
    """A set built from closed balls around the base point."""

    def intervals(self, space, a, b):
        raise NotImplementedError

    def contains(self, space, p) -> bool:
        raise NotImplementedError


class Everywhere(Region):
    def intervals(self, space, a, b):
        return [(0.0, 1.0)]

    def contains(self, space, p):
        return True

    def __repr__(self):
        return "Everywhere()"


class Ball(Region):
    """Closed ball of radius r (open when ``closed=False``)."""

    def __init__(self, r, closed=True):
        self.r = float(r)
        self.closed = closed

    def intervals(self, space, a, b):
        return space.ball_intervals(a, b, self.r)

    def contains(self, space, p):
        if p is INFINITY:
            return False
        n = space.norm(p)
        return n <= self.r if self.closed else n < self.r

    def __repr__(self):
        return f"Ball({self.r}, closed={self.closed})"


class Annulus(Region):
    """Closed ball of radius r2 minus the closed ball of radius r1."""

    def __init__(self, r1, r2):
        if r2 < r1:
            raise ValueError("annulus radii out of order")
        self.r1, self.r2 = float(r1), float(r2)

    def intervals(self, space, a, b):
        outer = space.ball_intervals(a, b, self.r2)
        inner = space.ball_intervals(a, b, self.r1)
        out = []
        for lo, hi in outer:
            pieces = [(lo, hi)]
            for ilo, ihi in inner:
                nxt = []
                for plo, phi in pieces:
                    if ihi <= plo or ilo >= phi:
                        nxt.append((plo, phi))
                        continue
                    if ilo > plo:
                        nxt.append((plo, ilo))
                    if ihi < phi:
                        nxt.append((ihi, phi))
                pieces = nxt
            out.extend(p for p in pieces if p[1] > p[0])
        return out

    def contains(self, space, p):
        if p is INFINITY:
            return False
        n = space.norm(p)
        return self.r1 < n <= self.r2

    def __repr__(self):
        return f"Annulus({self.r1}, {self.r2})"


EVERYWHERE = Everywhere()


# ---------------------------------------------------------------- measures


class AtomMeasure:
    """Finitely many signed atoms."""

    def __init__(self, atoms=None, tol=TOL_W):
        self.atoms = {p: v for p, v in (atoms or {}).items() if not is_zero(v, tol)}

    def __getitem__(self, p):
        return self.atoms.get(p, 0)

    def __len__(self):
        return len(self.atoms)

    def __iter__(self):
        return iter(self.atoms)

    def items(self):
        return self.atoms.items()

    def total_variation(self):
        return sum(abs(v) for v in self.atoms.values())

    def positive(self):
        return AtomMeasure({p: v for p, v in self.atoms.items() if v > 0})

    def negative(self):
        return AtomMeasure({p: -v for p, v in self.atoms.items() if v < 0})

    def restrict(self, pred):
        return AtomMeasure({p: v for p, v in self.atoms.items() if pred(p)})

    def close_to(self, other, tol=TOL_W) -> bool:
        keys = set(self.atoms) | set(other.atoms)
        return all(abs(self[p] - other[p]) <= tol for p in keys)

    def __repr__(self):
        return f"AtomMeasure({self.atoms!r})"


class MassMeasure:
    """Density |w| on each carrier segment of a canonical current."""

    def __init__(self, current):
        self.current = current

    def density(self):
        return {k: abs(w) for k, w in self.current.edges.items()}

    def __call__(self, region: Region = EVERYWHERE):
        return mass_on(self.current, region)

    @property
    def total(self):
        return mass_total(self.current)


# ---------------------------------------------------------------- currents


class EdgeCurrent:
    """Canonical finite weighted oriented edge set.

    ``edges`` maps an ordered pair (a, b), with a before b in
    :func:`point_key` order, to a signed weight; a negative weight means the
    segment is traversed from b to a.
    """

    __slots__ = ("space", "edges")

    def __init__(self, space, edges: dict):
        self.space = space
        self.edges = edges

    @classmethod
    def from_edges(cls, space, edges: Iterable, check_overlap=False, tol=0.0):
        return canonicalize(space, edges, check_overlap=check_overlap, tol=tol)

    @classmethod
    def empty(cls, space):
        return cls(space, {})

    def __len__(self):
        return len(self.edges)

    def __bool__(self):
        return bool(self.edges)

    def __repr__(self):
        return f"EdgeCurrent({len(self.edges)} edges)"

    def oriented(self):
        """(tail, head, |w|) triples of the sign-oriented support."""
        out = []
        for (a, b), w in self.edges.items():
            if w > 0:
                out.append((a, b, w))
            else:
                out.append((b, a, -w))
        return out

    def vertices(self):
        vs = set()
        for a, b in self.edges:
            vs.add(a)
            vs.add(b)
        return vs

    def weight(self, a, b):
        if point_key(a) < point_key(b):
            return self.edges.get((a, b), 0)
        return -self.edges.get((b, a), 0)

    def __neg__(self):
        return EdgeCurrent(self.space, {k: -w for k, w in self.edges.items()})

    def __add__(self, other):
        return combine([self, other], [1, 1])

    def __sub__(self, other):
        return combine([self, other], [1, -1])

    def scaled(self, c):
        if c == 0:
            return EdgeCurrent.empty(self.space)
        return EdgeCurrent(self.space, {k: c * w for k, w in self.edges.items()})

    def equals(self, other, tol=TOL_W) -> bool:
        keys = set(self.edges) | set(other.edges)
        return all(abs(self.edges.get(k, 0) - other.edges.get(k, 0)) <= tol for k in keys)

    def mass(self):
        return MassMeasure(self)

    def boundary(self):
        return boundary(self)


def _orient(a, b, w):
    if point_key(a) < point_key(b):
        return (a, b), w
    return (b, a), -w


def canonicalize(space, edges: Iterable, check_overlap=True, tol=0.0) -> EdgeCurrent:
    """Merge duplicates, drop zero weights, fix the orientation convention."""
    acc: dict = {}
    for a, b, w in edges:
        if a == b:
            raise ValueError(f"zero-length segment at {a!r}")
        key, w = _orient(a, b, w)
        acc[key] = acc.get(key, 0) + w
    out = {k: w for k, w in acc.items() if not is_zero(w, tol)}
    if check_overlap and isinstance(space, SupNormSpace) and len(out) > 1:
        _check_overlaps(space, list(out))
    return EdgeCurrent(space, out)


def _check_overlaps(space, keys, tol=1e-12):
    if any(a is INFINITY or b is INFINITY for a, b in keys):
        keys = [k for k in keys if INFINITY not in k]
    if len(keys) < 2:
        return
    A = np.array([k[0] for k in keys], dtype=float)
    B = np.array([k[1] for k in keys], dtype=float)
    D = B - A
    lens = np.linalg.norm(D, axis=1)
    U = D / lens[:, None]
    n = len(keys)
    i, j = np.triu_indices(n, 1)
    par = np.abs(np.abs(np.einsum("ij,ij->i", U[i], U[j])) - 1.0) <= 1e-12
    if not par.any():
        return
    i, j = i[par], j[par]
    # collinear iff A[j] lies on the line through A[i] with direction U[i]
    w = A[j] - A[i]
    proj = np.einsum("ij,ij->i", w, U[i])
    off = np.linalg.norm(w - proj[:, None] * U[i], axis=1)
    col = off <= tol * np.maximum(1.0, lens[i])
    i, j = i[col], j[col]
    if not len(i):
        return
    s0 = np.einsum("ij,ij->i", A[j] - A[i], U[i])
    s1 = np.einsum("ij,ij->i", B[j] - A[i], U[i])
    lo = np.maximum(0.0, np.minimum(s0, s1))
    hi = np.minimum(lens[i], np.maximum(s0, s1))
    bad = hi - lo > tol * np.maximum(1.0, lens[i])
    if bad.any():
        k = int(np.argmax(bad))
        raise OverlapError(
            f"segments {keys[i[k]]} and {keys[j[k]]} overlap; refine them first"
        )


def mass_total(T: EdgeCurrent):
    return sum(abs(w) * T.space.seg_length(a, b) for (a, b), w in T.edges.items())


def mass_on(T: EdgeCurrent, region: Region = EVERYWHERE):
    if isinstance(region, Everywhere):
        return mass_total(T)
    total = 0.0
    for (a, b), w in T.edges.items():
        frac = sum(t1 - t0 for t0, t1 in region.intervals(T.space, a, b))
        if frac > 0:
            total += abs(w) * T.space.seg_length(a, b) * frac
    return total


def mass(T: EdgeCurrent) -> MassMeasure:
    return MassMeasure(T)


def boundary(T: EdgeCurrent, tol=TOL_W) -> AtomMeasure:
    atoms: dict = {}
    for (a, b), w in T.edges.items():
        atoms[b] = atoms.get(b, 0) + w
        atoms[a] = atoms.get(a, 0) - w
    return AtomMeasure(atoms, tol=tol)


def restrict_ball(T: EdgeCurrent, r: float, eps=EPS_CUT) -> EdgeCurrent:
    """T restricted to the closed ball of radius r around the base point."""
    out = {}
    for (a, b), w in T.edges.items():
        for seg in ball_cut(T.space, Segment(a, b), r, eps).inside:
            key, ww = _orient(seg.a, seg.b, w)
            out[key] = out.get(key, 0) + ww
    return EdgeCurrent(T.space, {k: w for k, w in out.items() if not is_zero(w)})


def crossing_weight(T: EdgeCurrent, r: float, eps=EPS_CUT):
    """Sum of |w| over every crossing of the sphere of radius r (with multiplicity)."""
    total = 0
    for (a, b), w in T.edges.items():
        total += abs(w) * len(ball_cut(T.space, Segment(a, b), r, eps).crossings)
    return total


def refine(T: EdgeCurrent, points) -> EdgeCurrent:
    """Split edges of T at any of ``points`` lying in their interior."""
    verts = T.vertices()
    cand = [p for p in points if p not in verts and p is not INFINITY]
    if not cand:
        return T
    out = {}
    for (a, b), w in T.edges.items():
        ts = []
        if INFINITY not in (a, b):
            for p in cand:
                t = T.space.locate(p, a, b)
                if t is not None and 0.0 < t < 1.0:
                    ts.append((t, p))
        if not ts:
            out[(a, b)] = out.get((a, b), 0) + w
            continue
        ts.sort(key=lambda x: x[0])
        chain = [a] + [p for _, p in ts] + [b]
        for p, q in zip(chain, chain[1:]):
            key, ww = _orient(p, q, w)
            out[key] = out.get(key, 0) + ww
    return EdgeCurrent(T.space, out)


def common_refinement(*currents):
    pts = set()
    for T in currents:
        pts |= T.vertices()
    return [refine(T, pts) for T in currents]


def combine(currents, coefficients, tol=0.0) -> EdgeCurrent:
    """Linear combination over a common refinement."""
    currents = list(currents)
    space = currents[0].space
    for T in currents[1:]:
        if T.space != space:
            raise SpaceMismatchError("currents live in different spaces")
    refined = common_refinement(*currents) if len(currents) > 1 else currents
    acc = {}
    for T, c in zip(refined, coefficients):
        if c == 0:
            continue
        for k, w in T.edges.items():
            acc[k] = acc.get(k, 0) + c * w
    return EdgeCurrent(space, {k: w for k, w in acc.items() if not is_zero(w, tol)})


def is_subcurrent(S: EdgeCurrent, T: EdgeCurrent, tol=TOL_W) -> bool:
    """S <= T: masses add without cancellation, checked edgewise."""
    if S.space != T.space:
        raise SpaceMismatchError("currents live in different spaces")
    S, T = common_refinement(S, T)
    for k in set(S.edges) | set(T.edges):
        s = S.edges.get(k, 0)
        t = T.edges.get(k, 0)
        if abs(s) + abs(t - s) > abs(t) + tol:
            return False
    return True


# ---------------------------------------------------------------- generators


class AnnulusGenerator:
    """Deterministic family R -> T_R of truncations of a locally finite current.

    Subclasses implement :meth:`raw`, which must return a finite edge list
    whose restriction to the closed ball of radius R is T_R and which is
    itself a restriction of the raw list for any larger radius.
    """

    family = "abstract"

    def __init__(self, space, params=None, seed=0):
        self.space = space
        self.params = dict(params or {})
        self.seed = seed
        self._cache = {}

    def raw(self, R):
        raise NotImplementedError

    def current(self, R, eps=EPS_CUT) -> EdgeCurrent:
        key = float(R)
        if key not in self._cache:
            T = canonicalize(self.space, self.raw(R), check_overlap=False)
            check_cut_safe(self.space, T.vertices(), R, eps)
            self._cache[key] = restrict_ball(T, R, eps)
        return self._cache[key]

    def spec(self):
        return {"family": self.family, "params": self.params, "seed": self.seed}


def check_consistency(gen: AnnulusGenerator, radii, tol=1e-12):
    """Raise GeneratorInconsistency unless restrict(T_R', R) == T_R for R < R'."""
    radii = sorted(radii)
    for R, R2 in itertools.combinations(radii, 2):
        small = gen.current(R)
        cut = restrict_ball(gen.current(R2), R)
        if not _same_current(small, cut, tol):
            raise GeneratorInconsistency(
                f"generator {gen.family} is inconsistent between radii {R} and {R2}",
                radii=(R, R2),
            )


def _same_current(S, T, tol):
    if len(S.edges) != len(T.edges):
        return False
    if S.equals(T, tol):
        return True
    # cut points may differ in the last ulp; match edges by position
    def flat(T):
        return sorted(
            (tuple(np.ravel([a, b])), w) for (a, b), w in T.edges.items()
        )

    try:
        fs, ft = flat(S), flat(T)
    except (TypeError, ValueError):
        return False
    for (ks, ws), (kt, wt) in zip(fs, ft):
        if len(ks) != len(kt) or abs(ws - wt) > tol:
            return False
        if max(abs(x - y) for x, y in zip(ks, kt)) > 1e-9:
            return False
    return True
