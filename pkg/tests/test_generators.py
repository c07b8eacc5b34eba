import pytest

from curflow.currents import boundary, mass_total
from curflow.generators import (
    Chain,
    Comb,
    GridFlow,
    Line,
    Ray,
    make_generator,
    random_dag,
    random_flow,
    random_locally_finite,
)
from curflow.geometry import EdgePoint


def test_ray_one_edge_per_unit_annulus():
    T = Ray().current(8.0)
    assert mass_total(T) == 8.0
    assert len(T.edges) == 9  # [0, 0.5] and one edge per unit annulus up to the cut
    assert dict(boundary(T).items()) == {(0.0, 0.0): -1, (8.0, 0.0): 1}


def test_line_crosses_twice():
    T = Line(dim=3, axis=1).current(4.0)
    bd = dict(boundary(T).items())
    assert bd == {(0.0, -4.0, 0.0): -1, (0.0, 4.0, 0.0): 1}


def test_comb_three_teeth_by_hand():
    # teeth sit at x = 0.5, 1.5, 2.5, 3.5; teeth 0..2 carry 1 downward, tooth 3 carries 3 upward
    T = Comb(teeth=3, mode="intrinsic").current(4.0)
    weights = {}
    for (a, b), w in T.edges.items():
        weights[(a, b)] = w
    assert weights[("b0", "b1")] == 1
    assert weights[("b1", "b2")] == 2
    assert weights[("b2", "b3")] == 3
    assert mass_total(T) == pytest.approx(3.5 + 2.5 + 1.5 + 3 * 0.5 + 1 + 2 + 3)
    bd = {p: v for p, v in boundary(T).items()}
    assert sorted(bd.values()) == [-1, -1, -1, 3]
    assert all(isinstance(p, EdgePoint) for p in bd)
    G = T.space
    assert all(G.norm(p) == pytest.approx(4.0) for p in bd)


def test_comb_is_boundary_free_inside():
    for mode in ("intrinsic", "embed"):
        T = Comb(teeth=None, mode=mode, extent=10.0).current(7.0)
        bd = boundary(T)
        assert all(abs(T.space.norm(p) - 7.0) < 1e-9 for p in bd)


def test_comb_extent_guard():
    with pytest.raises(ValueError):
        Comb(extent=6.0).current(5.5)


def test_chain_boundary_atoms():
    gen = Chain()
    T = gen.current(5.0)
    bd = dict(boundary(T).items())
    for p, v in gen.boundary_atoms(5.0).items():
        assert bd[p] == v
    assert bd[(5.0, 0.0)] == 5


def test_determinism():
    a = random_flow(7).current(5.0)
    b = random_flow(7).current(5.0)
    assert a.edges == b.edges
    assert GridFlow(seed=3).current(4.0).edges == GridFlow(seed=3).current(4.0).edges


def test_grid_flow_boundary_comes_from_paths():
    gen = GridFlow(seed=11, n_paths=0)
    T = gen.current(6.0)
    assert all(abs(T.space.norm(p) - 6.0) < 1e-9 for p in boundary(T))


def test_random_dag_has_no_cycles():
    from curflow.oracle import enumerate_cycles

    for seed in range(5):
        T = random_dag(seed, max_edges=12).current(5.0)
        assert enumerate_cycles(T) == []


def test_make_generator_errors():
    with pytest.raises(ValueError):
        make_generator({"family": "spiral"})
    with pytest.raises(ValueError):
        make_generator({"family": "ray", "params": {"colour": 3}})
    g = make_generator({"family": "comb", "params": {"teeth": 2, "mode": "embed"}, "seed": 0})
    assert g.spec()["params"]["teeth"] == 2


def test_random_locally_finite_is_seeded():
    assert random_locally_finite(4).spec() == random_locally_finite(4).spec()
