import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from minklab.errors import ClosureOverflow, DegenerateOrbit, NotOrthogonal, UnknownGroup
from minklab.symmetry import (SymmetryGroup, axial, catalog, cyclic, dihedral, gamma_ratio,
                              generate_group, octahedral, orbit, orbit_polytope, spanning_check)

CATALOG = ["dihedral:3", "dihedral:4", "dihedral:6", "tetrahedral", "octahedral", "icosahedral",
           "simplex:2", "hyperoctahedral:3"]
ORDERS = {"dihedral:3": 6, "dihedral:4": 8, "dihedral:6": 12, "tetrahedral": 24, "octahedral": 48,
          "icosahedral": 120, "simplex:2": 24, "hyperoctahedral:3": 384}


def _unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def test_square_dihedral_closure():
    r = np.array([[0.0, -1.0], [1.0, 0.0]])
    s = np.diag([1.0, -1.0])
    assert generate_group([r, s]).order == 8


def test_identity_group():
    assert generate_group([np.eye(3)]).order == 1


def test_signed_permutations_close_to_48():
    swap = np.array([[0.0, 1, 0], [1, 0, 0], [0, 0, 1]])
    cyc = np.array([[0.0, 0, 1], [1, 0, 0], [0, 1, 0]])
    flip = np.diag([-1.0, 1, 1])
    assert generate_group([swap, cyc, flip]).order == 48


def test_non_orthogonal_generator_rejected():
    with pytest.raises(NotOrthogonal):
        generate_group([np.array([[1.0, 0.1], [0.0, 1.0]])])


def test_irrational_rotation_overflows():
    t = 1.0
    rot = np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]])
    with pytest.raises(ClosureOverflow):
        generate_group([rot], cap=200)


@pytest.mark.parametrize("name", CATALOG)
def test_catalog_orders_and_closure(name):
    G = catalog(name)
    assert G.order == ORDERS[name]
    assert G.is_closed()
    E = G.elements
    assert np.max(np.abs(np.einsum("kji,kjl->kil", E, E) - np.eye(G.dim))) <= 1e-12


def test_unknown_group():
    with pytest.raises(UnknownGroup):
        catalog("heptahedral")


@pytest.mark.parametrize("a,count", [((1, 0, 0), 6), ((1, 1, 1), 8), ((1, 1, 0.4), 24)])
def test_octahedral_orbits(a, count):
    assert len(orbit(octahedral(), _unit(a))) == count


def test_orbit_polytope_octahedron():
    P = orbit_polytope(octahedral(), np.array([1.0, 0, 0]))
    assert len(P.vertex_array) == 6
    assert P.max_support() == pytest.approx(1.0, abs=1e-12)
    assert P.min_support() == pytest.approx(1 / math.sqrt(3), abs=1e-12)


def test_axial_orbit_of_axis_is_degenerate():
    P = orbit_polytope(axial(4), np.array([0.0, 0, 1]))
    assert P.degenerate


@pytest.mark.parametrize("seed", range(5))
def test_dihedral_five_orbit_sizes(seed):
    a = _unit(np.random.default_rng(seed).standard_normal(2))
    assert len(orbit(dihedral(5), a)) in (5, 10)


@pytest.mark.parametrize("k", [3, 4, 5, 8])
def test_gamma_rotation_group(k):
    a = _unit([0.3, 0.7])
    assert gamma_ratio(cyclic(k), a) == pytest.approx(1 / math.cos(math.pi / k), abs=1e-12)


@pytest.mark.parametrize("a", [(1, 1, 1), (1, 0, 0)])
def test_gamma_octahedral(a):
    assert gamma_ratio(octahedral(), _unit(a)) == pytest.approx(math.sqrt(3), abs=1e-12)


def test_gamma_degenerate_orbit():
    with pytest.raises(DegenerateOrbit):
        gamma_ratio(axial(4), np.array([0.0, 0, 1]))


def test_spanning_reports():
    rep = spanning_check(octahedral())
    assert rep.passes and rep.worst_gamma <= 2.0
    rep = spanning_check(dihedral(3))
    assert rep.passes and rep.worst_gamma == pytest.approx(2.0, abs=1e-9)
    bad = spanning_check(axial(4))
    assert not bad.passes
    assert abs(abs(bad.witness[2]) - 1) < 1e-6


@pytest.mark.parametrize("name", CATALOG[:6])
def test_catalog_groups_span(name):
    assert spanning_check(catalog(name)).passes


@pytest.mark.parametrize("name", CATALOG)
def test_orbit_stabilizer_divides(name):
    G = catalog(name)
    rng = np.random.default_rng(3)
    for _ in range(100):
        a = _unit(rng.standard_normal(G.dim))
        assert G.order % len(orbit(G, a)) == 0


@given(st.lists(st.floats(-1, 1), min_size=3, max_size=3).filter(lambda v: np.linalg.norm(v) > 0.1),
       st.integers(0, 47))
def test_gamma_constant_on_orbits(v, idx):
    G = octahedral()
    a = _unit(v)
    b = G.elements[idx] @ a
    assert gamma_ratio(G, a) == pytest.approx(gamma_ratio(G, b), abs=1e-9)


@given(st.lists(st.floats(-1, 1), min_size=3, max_size=3).filter(lambda v: np.linalg.norm(v) > 0.1))
def test_orbit_polytope_is_invariant(v):
    G = catalog("icosahedral")
    P = orbit_polytope(G, _unit(v))
    X = np.random.default_rng(0).standard_normal((50, 3))
    X /= np.linalg.norm(X, axis=1)[:, None]
    assert G.invariance_defect(P.support, X) <= 1e-9


def test_json_round_trip():
    G = catalog("dihedral:6")
    H = SymmetryGroup.from_json(G.to_json())
    assert H.order == 12 and np.allclose(H.elements, G.elements)
