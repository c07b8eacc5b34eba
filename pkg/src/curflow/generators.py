"""Instance families.

Vertex norms of the locally finite families sit at half-integers (plus the
origin), so every integer radius is cut-safe.
"""
from __future__ import annotations

import math
import random

from .currents import AnnulusGenerator, EdgeCurrent
from .geometry import GraphSpace, SupNormSpace, kuratowski_embed


def _axis_point(dim, axis, x):
    p = [0.0] * dim
    p[axis] = float(x)
    return tuple(p)


class Ray(AnnulusGenerator):
    """Unit-weight half-line from the origin along ``sign * e_axis``."""

    family = "ray"

    def __init__(self, dim=2, axis=0, sign=1, weight=1, seed=0):
        super().__init__(SupNormSpace(dim), {"dim": dim, "axis": axis, "sign": sign, "weight": weight}, seed)

    def raw(self, R):
        p = self.params
        xs = [0.0] + [k + 0.5 for k in range(int(math.ceil(R)) + 1)]
        pts = [_axis_point(p["dim"], p["axis"], p["sign"] * x) for x in xs]
        return [(a, b, p["weight"]) for a, b in zip(pts, pts[1:])]


class Line(AnnulusGenerator):
    """Doubly infinite line through the origin."""

    family = "line"

    def __init__(self, dim=2, axis=0, weight=1, seed=0):
        super().__init__(SupNormSpace(dim), {"dim": dim, "axis": axis, "weight": weight}, seed)

    def raw(self, R):
        p = self.params
        n = int(math.ceil(R)) + 1
        xs = [-(k + 0.5) for k in reversed(range(n))] + [0.0] + [k + 0.5 for k in range(n)]
        pts = [_axis_point(p["dim"], p["axis"], x) for x in xs]
        return [(a, b, p["weight"]) for a, b in zip(pts, pts[1:])]


class Chain(AnnulusGenerator):
    """Outward chain with a source at every vertex: unbounded boundary mass.

    Vertex k sits at k + 1/2 on the axis and emits ``strength_k`` units, so the
    edge k -> k+1 carries the running total.  With unit strengths the edge
    weights are 1, 2, 3, ...
    """

    family = "chain"

    def __init__(self, dim=2, axis=0, sign=1, max_strength=1, seed=0):
        super().__init__(
            SupNormSpace(dim),
            {"dim": dim, "axis": axis, "sign": sign, "max_strength": max_strength},
            seed,
        )

    def strength(self, k):
        m = self.params["max_strength"]
        if m <= 1:
            return 1
        return random.Random(self.seed * 7919 + k).randint(1, m)

    def raw(self, R):
        p = self.params
        n = int(math.ceil(R)) + 2
        out, total = [], 0
        for k in range(n):
            total += self.strength(k)
            a = _axis_point(p["dim"], p["axis"], p["sign"] * (k + 0.5))
            b = _axis_point(p["dim"], p["axis"], p["sign"] * (k + 1.5))
            out.append((a, b, total))
        return out

    def boundary_atoms(self, R):
        """Exact interior boundary atoms inside the open ball of radius R."""
        p = self.params
        return {
            _axis_point(p["dim"], p["axis"], p["sign"] * (k + 0.5)): -self.strength(k)
            for k in range(int(math.ceil(R)) + 1)
            if k + 0.5 < R
        }


# ---------------------------------------------------------------- comb


def comb_graph(extent):
    """Comb truncated at intrinsic radius ``extent``.

    Base vertices: ``b`` (origin) and ``b{n}`` at x = n + 1/2; tooth n rises
    from ``b{n}`` with vertices ``t{n}_{h}`` at height h.  Returns
    (vertices, edges, planar coordinates).
    """
    verts, edges, xy = ["b"], [], {"b": (0.0, 0.0)}
    prev = "b"
    n = 0
    while n + 0.5 <= extent:
        name = f"b{n}"
        verts.append(name)
        xy[name] = (n + 0.5, 0.0)
        edges.append((prev, name, 0.5 if n == 0 else 1.0))
        below = name
        h = 1
        while n + 0.5 + h <= extent:
            t = f"t{n}_{h}"
            verts.append(t)
            xy[t] = (n + 0.5, float(h))
            edges.append((below, t, 1.0))
            below = t
            h += 1
        prev = name
        n += 1
    return verts, edges, xy


def comb_current_edges(verts, edges, teeth=None):
    """Edges of the comb current as (u, v, w) over vertex ids.

    Curve n descends tooth n, runs along the base to tooth n+1 and ascends it,
    carrying weight n + 1; ``teeth`` curves are used (all when None).  Net
    result: every tooth n < teeth carries one unit downwards, tooth ``teeth``
    carries ``teeth`` units upwards, base segment n -> n+1 carries n + 1.
    """
    vset = set(verts)
    out = []
    for u, v, _ in edges:
        if u.startswith("b") and v.startswith("b"):
            if u == "b":
                continue
            n = int(u[1:])
            if teeth is None or n < teeth:
                out.append((u, v, n + 1))
        else:
            n = int(v[1:].split("_")[0])
            if teeth is None or n < teeth:
                out.append((v, u, 1))  # downwards
            elif n == teeth:
                out.append((u, v, teeth))
    assert all(a in vset and b in vset for a, b, _ in out)
    return out


class Comb(AnnulusGenerator):
    """The comb current, either on the intrinsic graph or Kuratowski-embedded."""

    family = "comb"

    def __init__(self, teeth=None, mode="embed", extent=14.0, seed=0):
        verts, edges, xy = comb_graph(extent)
        graph = GraphSpace(verts, edges, base="b")
        self.graph = graph
        self.xy = xy
        self._edges = comb_current_edges(verts, edges, teeth)
        if mode == "intrinsic":
            space = graph
            self.coords = None
        elif mode == "embed":
            space, self.coords = kuratowski_embed(graph)
        else:
            raise ValueError(f"unknown comb mode {mode!r}")
        super().__init__(space, {"teeth": teeth, "mode": mode, "extent": extent}, seed)

    def raw(self, R):
        if R > self.params["extent"] - 1:
            raise ValueError(f"comb built to extent {self.params['extent']} cannot be cut at {R}")
        if self.coords is None:
            return list(self._edges)
        return [(self.coords[u], self.coords[v], w) for u, v, w in self._edges]


# ---------------------------------------------------------------- grid flow


def _face_value(seed, i, j, density):
    rng = random.Random((seed * 1_000_003 + i) * 1_000_033 + j)
    if rng.random() >= density:
        return 0
    return rng.choice((-2, -1, 1, 2))


def _lattice(i, j):
    return (i + 0.5, j + 0.5)


def _face_edges(i, j, psi):
    # counter-clockwise circulation around the unit square with corner (i, j)
    a, b, c, d = _lattice(i, j), _lattice(i + 1, j), _lattice(i + 1, j + 1), _lattice(i, j + 1)
    return [(a, b, psi), (b, c, psi), (c, d, psi), (d, a, psi)]


class GridFlow(AnnulusGenerator):
    """Random divergence-free lattice flow plus a few finite source/sink paths."""

    family = "grid-flow"

    def __init__(self, density=0.35, n_paths=2, seed=0):
        super().__init__(SupNormSpace(2), {"density": density, "n_paths": n_paths}, seed)
        rng = random.Random(seed)
        self.paths = []
        for _ in range(n_paths):
            i0, j0 = rng.randint(-3, 2), rng.randint(-3, 2)
            i1, j1 = rng.randint(-3, 2), rng.randint(-3, 2)
            if (i0, j0) == (i1, j1):
                i1 += 1
            self.paths.append(((i0, j0), (i1, j1), rng.randint(1, 2)))

    def raw(self, R):
        n = int(math.ceil(R)) + 2
        out = []
        dens = self.params["density"]
        for i in range(-n - 1, n + 1):
            for j in range(-n - 1, n + 1):
                psi = _face_value(self.seed, i, j, dens)
                if psi:
                    out.extend(_face_edges(i, j, psi))
        for (i0, j0), (i1, j1), w in self.paths:
            i, j = i0, j0
            while (i, j) != (i1, j1):
                if i != i1:
                    ni, nj = i + (1 if i1 > i else -1), j
                else:
                    ni, nj = i, j + (1 if j1 > j else -1)
                out.append((_lattice(i, j), _lattice(ni, nj), w))
                i, j = ni, nj
        return out


# ---------------------------------------------------------------- finite families


class _Finite(AnnulusGenerator):
    def __init__(self, edges, params, seed, family):
        super().__init__(SupNormSpace(2), params, seed)
        self._edges = edges
        self.family = family

    def raw(self, R):
        return list(self._edges)


def _lattice_edges(half):
    out = []
    for i in range(-half, half):
        for j in range(-half, half + 1):
            out.append(((i, j), (i + 1, j)))
            out.append(((j, i), (j, i + 1)))
    return out


def random_flow(seed, max_edges=60, half=3, integer=True):
    """Finite random current on the half-integer lattice, cycles included."""
    rng = random.Random(seed)
    faces = [(i, j) for i in range(-half, half) for j in range(-half, half)]
    acc = {}
    for i, j in rng.sample(faces, rng.randint(1, min(6, len(faces)))):
        psi = rng.choice((1, 2, 3))
        for a, b, w in _face_edges(i, j, psi):
            key = (a, b) if a < b else (b, a)
            acc[key] = acc.get(key, 0) + (w if a < b else -w)
    lat = _lattice_edges(half)
    for (p, q) in rng.sample(lat, rng.randint(0, 20)):
        w = rng.randint(-3, 3) if integer else rng.uniform(-3, 3)
        a, b = _lattice(*p), _lattice(*q)
        acc[(a, b)] = acc.get((a, b), 0) + w
    items = [(k, w) for k, w in acc.items() if w != 0]
    rng.shuffle(items)
    items = items[:max_edges]
    return _Finite([(a, b, w) for (a, b), w in items], {"max_edges": max_edges, "half": half}, seed, "random-flow")


def random_dag(seed, max_edges=40, half=3):
    """Acyclic finite current: lattice edges oriented along a random potential."""
    rng = random.Random(seed)
    pot = {}

    def phi(p):
        if p not in pot:
            pot[p] = rng.random()
        return pot[p]

    lat = _lattice_edges(half)
    out = []
    for p, q in rng.sample(lat, min(max_edges, len(lat))):
        a, b = _lattice(*p), _lattice(*q)
        if phi(a) > phi(b):
            a, b = b, a
        out.append((a, b, rng.randint(1, 3)))
    return _Finite(out, {"max_edges": max_edges, "half": half}, seed, "random-dag")


FAMILIES = {
    "ray": Ray,
    "line": Line,
    "chain": Chain,
    "comb": Comb,
    "grid-flow": GridFlow,
    "random-flow": random_flow,
    "random-dag": random_dag,
}


def make_generator(spec: dict) -> AnnulusGenerator:
    """Build a generator from {"family": ..., "params": {...}, "seed": int}."""
    family = spec.get("family")
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    params = dict(spec.get("params") or {})
    seed = int(spec.get("seed", 0))
    try:
        return FAMILIES[family](seed=seed, **params)
    except TypeError as exc:
        raise ValueError(f"bad params for {family}: {exc}") from None


def truncate(gen, R) -> EdgeCurrent:
    return gen.current(R)


def random_locally_finite(seed) -> AnnulusGenerator:
    """One of the locally finite families with seeded parameters."""
    rng = random.Random(seed)
    kind = rng.choice(["ray", "line", "comb", "grid-flow", "chain"])
    if kind == "ray":
        dim = rng.choice((2, 3))
        return Ray(dim=dim, axis=rng.randrange(dim), sign=rng.choice((1, -1)), weight=rng.choice((1, 2)), seed=seed)
    if kind == "line":
        dim = rng.choice((2, 3))
        return Line(dim=dim, axis=rng.randrange(dim), weight=rng.choice((1, 3)), seed=seed)
    if kind == "comb":
        return Comb(teeth=rng.choice((None, 3, 6)), mode="embed", extent=12.0, seed=seed)
    if kind == "chain":
        return Chain(dim=2, axis=rng.randrange(2), sign=rng.choice((1, -1)), max_strength=rng.choice((1, 3)), seed=seed)
    return GridFlow(density=0.3, n_paths=rng.randint(0, 3), seed=seed)
