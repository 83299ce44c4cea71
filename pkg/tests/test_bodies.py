import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from minklab.bodies import (BodyView, FacetPolytope, VertexPolytope, cut_polytope, dualize,
                            hausdorff, polar, polytope_from_json, volume)
from minklab.errors import DegenerateHull, OriginNotInterior, Unbounded
from minklab.optimize import OrbitParametrization, build_body
from minklab.regular import regular_catalog
from minklab.symmetry import catalog, dihedral, octahedral


def cube():
    E = np.eye(3)
    return FacetPolytope(np.vstack([E, -E]), np.ones(6))


def random_invariant(seed, group=None):
    rng = np.random.default_rng(seed)
    G = group or octahedral()
    while True:
        cls = []
        for _ in range(int(rng.integers(1, 4))):
            u = rng.standard_normal(G.dim)
            cls.append((u / np.linalg.norm(u), float(rng.uniform(0.8, 1.5))))
        try:
            return build_body(OrbitParametrization(G, tuple(cls))).pruned()
        except Unbounded:
            continue


def test_cube_dualizes_to_vertices():
    V = dualize(cube()).vertex_array
    assert len(V) == 8
    assert np.allclose(np.sort(np.abs(V), axis=0), 1.0)


def test_octahedron_facets():
    E = np.eye(3)
    P = VertexPolytope(np.vstack([E, -E])).facets()
    assert len(P.normals) == 8
    assert np.allclose(np.abs(P.normals), 1 / math.sqrt(3))
    assert np.allclose(P.offsets, 1 / math.sqrt(3))


def test_pentagon_inradius():
    t = 2 * math.pi * np.arange(5) / 5
    P = VertexPolytope(np.column_stack([np.cos(t), np.sin(t)])).facets()
    assert len(P.offsets) == 5
    assert np.allclose(P.offsets, math.cos(math.pi / 5), atol=1e-12)


def test_polar_of_cube_is_cross_polytope():
    Q = polar(cube())
    X = np.random.default_rng(1).standard_normal((200, 3))
    assert np.allclose(Q.support(X), np.max(np.abs(X), axis=1))


def test_polar_of_tangent_polygon_is_rotated_unit_polygon():
    T = regular_catalog(6).facet_polytope
    Q = polar(T)
    r = np.linalg.norm(Q.vertex_array, axis=1)
    assert np.allclose(r, 1.0)
    ang = np.sort(np.mod(np.arctan2(Q.vertex_array[:, 1], Q.vertex_array[:, 0]), 2 * math.pi))
    vang = np.sort(np.mod(np.arctan2(T.vertex_array[:, 1], T.vertex_array[:, 0]), 2 * math.pi))
    # polar vertices sit at the edge midpoint directions, a rotation by pi/6
    d = np.mod(ang - vang[0], math.pi / 3)
    assert np.allclose(d, math.pi / 6, atol=1e-12)


@pytest.mark.parametrize("seed", range(4))
def test_polar_involution(seed):
    P = random_invariant(seed)
    assert hausdorff(polar(polar(P)), P, count=3000) <= 1e-9


@pytest.mark.parametrize("seed", range(3))
def test_dualize_round_trip(seed):
    P = random_invariant(seed)
    Q = dualize(dualize(P))
    X = np.random.default_rng(seed).standard_normal((500, 3))
    assert np.allclose(Q.support(X), P.support(X), atol=1e-9)


def test_volumes():
    assert volume(cube()) == pytest.approx(8.0, abs=1e-12)
    assert cube().V() == pytest.approx(24.0, abs=1e-12)
    sq = regular_catalog("square").facet_polytope
    assert volume(sq) == pytest.approx(4.0, abs=1e-12) and sq.V() == pytest.approx(8.0, abs=1e-12)
    hexa = regular_catalog(6).facet_polytope
    assert volume(hexa) == pytest.approx(2 * math.sqrt(3), abs=1e-12)


def test_support_extremes():
    c = cube()
    assert c.min_support() == pytest.approx(1.0) and c.max_support() == pytest.approx(math.sqrt(3))
    sq = regular_catalog("square").facet_polytope
    assert sq.max_support() == pytest.approx(math.sqrt(2))
    P = VertexPolytope(np.array([[1, 1, 1], [1, 1, -1], [1, -1, 1], [1, -1, -1], [-1, 1, 1],
                                 [-1, 1, -1], [-1, -1, 1], [-1, -1, -1]]) / math.sqrt(3))
    assert P.min_support() == pytest.approx(1 / math.sqrt(3)) and P.max_support() == pytest.approx(1.0)


def test_min_support_matches_grid():
    P = random_invariant(5)
    X = np.random.default_rng(0).standard_normal((200000, 3))
    X /= np.linalg.norm(X, axis=1)[:, None]
    grid_min = float(P.support(X).min())
    assert P.min_support() <= grid_min + 1e-12
    assert grid_min - P.min_support() < 5e-3


def test_hausdorff_examples():
    sq = regular_catalog("square").facet_polytope
    assert hausdorff(sq, sq) == 0.0
    disk = BodyView.ball(2)
    assert hausdorff(disk, sq) == pytest.approx(math.sqrt(2) - 1, abs=1e-9)
    hexa = regular_catalog(6).facet_polytope
    assert abs(hausdorff(sq, hexa) - hausdorff(hexa, sq)) <= 1e-12


def test_cut_polytope_examples():
    c = cube()
    P = cut_polytope(c, np.array([0, 0, 1.0]), octahedral())
    assert P.pruned().V() == pytest.approx(24.0)
    ball = BodyView.ball(3)
    P = cut_polytope(ball, np.ones(3) / math.sqrt(3), octahedral())
    assert len(P.facet_normals) == 8 and np.allclose(P.facet_offsets, 1.0)
    assert P.V() >= 4 * math.pi


def test_cut_polytope_unbounded():
    from minklab.symmetry import axial
    with pytest.raises(Unbounded):
        cut_polytope(BodyView.ball(3), np.array([0, 0, 1.0]), axial(4))


def test_validation_errors():
    with pytest.raises(OriginNotInterior):
        FacetPolytope(np.eye(2), np.array([1.0, -1.0]))
    with pytest.raises(Unbounded):
        FacetPolytope(np.eye(2), np.ones(2)).polar_hull
    with pytest.raises(DegenerateHull):
        VertexPolytope(np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0.0]])).hull


def test_redundant_facets_are_pruned_with_log(caplog):
    N = np.vstack([np.eye(2), -np.eye(2), [[math.sqrt(0.5), math.sqrt(0.5)]]])
    P = FacetPolytope(N, np.array([1, 1, 1, 1, 5.0]))
    with caplog.at_level("DEBUG", logger="minklab.bodies"):
        assert len(P.irredundant) == 4
    assert any("pruned" in r.message for r in caplog.records)


def test_json_and_off_round_trip():
    P = random_invariant(2)
    Q = polytope_from_json(P.to_json())
    assert Q.V() == pytest.approx(P.V(), rel=1e-12)
    off = P.to_off()
    assert off.startswith("OFF")


@given(st.integers(0, 10 ** 6))
def test_radial_below_support(seed):
    P = random_invariant(seed % 50)
    X = np.random.default_rng(seed).standard_normal((100, 3))
    X /= np.linalg.norm(X, axis=1)[:, None]
    assert np.all(P.radial(X) <= P.support(X) + 1e-12)
    # equality exactly where the foot point h_i n_i lies on the boundary
    n, h = P.facet_normals, P.facet_offsets
    foot = (n * h[:, None]) @ n.T <= h[None, :] + 1e-12
    inside = np.all(foot, axis=1)
    assert np.allclose(P.radial(n[inside]), P.support(n[inside]), atol=1e-10)
    assert np.all(P.radial(n[~inside]) < P.support(n[~inside]) - 1e-12)


@given(st.integers(0, 10 ** 6))
def test_polar_order_reversal(seed):
    A = random_invariant(seed % 40, dihedral(6))
    B = A.scaled(1.3)
    X = np.random.default_rng(seed).standard_normal((200, 2))
    X /= np.linalg.norm(X, axis=1)[:, None]
    assert np.all(polar(B).support(X) <= polar(A).support(X) + 1e-12)
    assert volume(A) <= volume(B)


@pytest.mark.parametrize("seed", range(25))
def test_volume_against_simplex_decomposition(seed):
    from scipy.spatial import Delaunay

    group = octahedral() if seed % 2 else dihedral(5)
    P = random_invariant(seed, group)
    V = P.vertex_array
    tri = Delaunay(V)
    d = V.shape[1]
    vol = sum(abs(np.linalg.det(V[s[1:]] - V[s[0]])) for s in tri.simplices) / math.factorial(d)
    assert P.V() == pytest.approx(d * vol, rel=1e-10)
