import random
from fractions import Fraction

import pytest

from curflow.currents import (
    Annulus,
    Ball,
    EdgeCurrent,
    boundary,
    canonicalize,
    check_consistency,
    combine,
    crossing_weight,
    is_subcurrent,
    mass,
    mass_on,
    mass_total,
    restrict_ball,
)
from curflow.errors import GeneratorInconsistency, OverlapError, SpaceMismatchError
from curflow.generators import Comb, GridFlow, Line, Ray, random_flow
from curflow.geometry import SupNormSpace

S2 = SupNormSpace(2)
A, B, C, D = (0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (3.0, 3.0)


def test_canonicalize_flip_and_cancel():
    assert canonicalize(S2, [(A, B, 2), (B, A, 1)]).edges == {(A, B): 1}
    assert canonicalize(S2, [(A, B, 1), (A, B, -1)]).edges == {}
    T = canonicalize(S2, [(A, B, 1), (C, D, 2)])
    assert T.edges == {(A, B): 1, (C, D): 2}


def test_canonical_orientation_is_key_order():
    T = canonicalize(S2, [(B, A, 3)])
    assert T.edges == {(A, B): -3}


def test_overlap_rejected():
    with pytest.raises(OverlapError):
        canonicalize(S2, [((0.0, 0.0), (2.0, 0.0), 1), ((1.0, 0.0), (3.0, 0.0), 1)])


def test_mass_examples():
    assert mass_total(canonicalize(S2, [(A, (3.0, 0.0), 2)])) == 6
    assert mass_total(EdgeCurrent.empty(S2)) == 0
    assert mass(canonicalize(S2, [(A, B, 1), (B, C, 1)]))() == 2


def test_boundary_examples():
    assert dict(boundary(canonicalize(S2, [(A, B, 2)])).items()) == {A: -2, B: 2}
    tri = canonicalize(S2, [(A, B, 1), (B, C, 1), (C, A, 1)])
    assert len(boundary(tri)) == 0
    path = canonicalize(S2, [(A, B, 1), (B, C, 1)])
    assert dict(boundary(path).items()) == {A: -1, C: 1}


def test_restrict_ball_axis():
    T = canonicalize(S2, [(A, (3.0, 0.0), 1)])
    R = restrict_ball(T, 2.0)
    assert R.edges == {(A, (2.0, 0.0)): 1}
    assert dict(boundary(R).items()) == {A: -1, (2.0, 0.0): 1}
    inner = canonicalize(S2, [(A, B, 1)])
    assert restrict_ball(inner, 2.0).edges == inner.edges


def _random_current(seed, n=10):
    rng = random.Random(seed)
    pts = [(rng.randint(-4, 4) + 0.5, rng.randint(-4, 4) + 0.5) for _ in range(3 * n)]
    edges, used = [], set()
    for p, q in zip(pts, pts[1:]):
        if p == q or (p, q) in used or (q, p) in used:
            continue
        used.add((p, q))
        edges.append((p, q, rng.choice((-2, -1, 1, 3))))
        if len(edges) == n:
            break
    try:
        return canonicalize(S2, edges)
    except OverlapError:
        return canonicalize(S2, edges[:1])


def _sampled_crossings(a, b, r, n=4000):
    vals = [S2.norm(tuple(x + (i / n) * (y - x) for x, y in zip(a, b))) - r for i in range(n + 1)]
    return sum(1 for u, v in zip(vals, vals[1:]) if (u > 0) != (v > 0))


def test_leibniz_rule_atomwise():
    for seed in range(30):
        T = _random_current(seed)
        norms = sorted(S2.norm(p) for p in T.vertices())
        r = float(int(norms[len(norms) // 2]) + 1)  # integer radii avoid half-integer vertices
        lhs = dict(boundary(restrict_ball(T, r)).items())
        on_sphere = {p: v for p, v in lhs.items() if abs(S2.norm(p) - r) < 1e-9}
        cut_tv = sum(abs(w) * _sampled_crossings(a, b, r) for (a, b), w in T.edges.items())
        assert crossing_weight(T, r) == cut_tv
        assert sum(abs(v) for v in on_sphere.values()) <= cut_tv
        for p, v in boundary(T).items():
            if S2.norm(p) < r:
                assert lhs.get(p, 0) == v
        assert all(S2.norm(p) <= r + 1e-9 for p in lhs)


def test_subcurrent_examples():
    T = canonicalize(S2, [(A, B, 2)])
    assert is_subcurrent(canonicalize(S2, [(A, B, 1)]), T)
    assert not is_subcurrent(canonicalize(S2, [(A, B, -1)]), T)


def test_restriction_is_subcurrent_by_mass_additivity():
    for seed in range(20):
        T = _random_current(seed)
        R = restrict_ball(T, 2.0)
        assert is_subcurrent(R, T)
        rest = combine([T, R], [1, -1])
        assert mass_total(R) + mass_total(rest) == pytest.approx(mass_total(T), abs=1e-12)


def test_combine_examples():
    T = _random_current(1)
    S = _random_current(2)
    assert not combine([T, T], [1, -1]).edges
    assert combine([T, S], [1, 0]).equals(T)
    far = canonicalize(S2, [((10.5, 10.5), (11.5, 10.5), 1)])
    assert len(combine([T, far], [1, 1]).edges) == len(T.edges) + 1


def test_combine_space_mismatch():
    with pytest.raises(SpaceMismatchError):
        combine([EdgeCurrent.empty(S2), EdgeCurrent.empty(SupNormSpace(3))], [1, 1])


def test_mass_on_regions():
    T = canonicalize(S2, [((-3.0, 0.0), (3.0, 0.0), 1)])
    assert mass_on(T, Ball(2.0)) == pytest.approx(4.0)
    assert mass_on(T, Annulus(1.0, 2.0)) == pytest.approx(2.0)


def test_exact_weights_survive():
    T = canonicalize(S2, [(A, B, Fraction(1, 3)), (B, A, Fraction(1, 6))])
    assert T.edges == {(A, B): Fraction(1, 6)}


@pytest.mark.parametrize("gen", [Ray(), Line(dim=3, axis=2), Comb(teeth=4), GridFlow(seed=5), random_flow(3)])
def test_generators_are_consistent(gen):
    check_consistency(gen, [3.0, 4.0, 6.0, 8.0])


def test_inconsistent_generator_detected():
    class Drifting(Ray):
        def raw(self, R):
            edges = super().raw(R)
            return [(a, b, w + (1 if R > 5 else 0)) for a, b, w in edges]

    with pytest.raises(GeneratorInconsistency) as exc:
        check_consistency(Drifting(), [4.0, 6.0])
    assert exc.value.radii == (4.0, 6.0)
