import csv
import io
import math

import numpy as np
import pytest

from minklab import functionals as fx
from minklab.errors import BoundaryStuck, NonSpanningGroup, Unbounded
from minklab.optimize import (OptimizerConfig, OrbitParametrization, active_classes, ball_value,
                              build_body, continuation_study, default_delta, default_params,
                              local_maximize_near, maximize, snapped_polytope, trace_csv)
from minklab.regular import regular_catalog
from minklab.symmetry import SymmetryGroup, axial, dihedral, octahedral

SMALL = OptimizerConfig(classes=1, starts=3, max_evals=300)


def rot(a):
    return np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])


def test_build_cube():
    P = build_body(OrbitParametrization(octahedral(), ((np.array([0, 0, 1.0]), 1.0),)))
    assert len(P.facet_normals) == 6 and P.V() == pytest.approx(24.0)


def test_build_cube_octahedron_intersection():
    c = (np.array([0, 0, 1.0]), 1.0)
    o = (np.ones(3) / math.sqrt(3), 1.0)
    P = build_body(OrbitParametrization(octahedral(), (c, o)))
    assert len(P.facet_normals) == 14
    assert P.min_support() == pytest.approx(1.0)


def test_build_rotated_square():
    u = rot(math.pi / 4) @ np.array([0, 1.0])
    P = build_body(OrbitParametrization(dihedral(4), ((u, 1.0),)))
    assert len(P.facet_normals) == 4
    V = P.vertex_array
    assert np.allclose(np.sort(np.abs(V), axis=None), math.sqrt(2) * np.array([0] * 4 + [1] * 4), atol=1e-12)


def test_build_invariant():
    params = default_params(octahedral(), 3)
    P = build_body(params)
    X = np.random.default_rng(0).standard_normal((50, 3))
    for g in octahedral().elements[::5]:
        assert np.allclose(P.support(X @ g), P.support(X), atol=1e-9)


def test_unbounded_and_validation():
    with pytest.raises(Unbounded):
        build_body(OrbitParametrization(axial(4), ((np.array([0, 0, 1.0]), 1.0),)))
    with pytest.raises(NonSpanningGroup):
        maximize(OrbitParametrization(axial(4), ((np.array([1.0, 0, 0]), 1.0),)), None, -10.0)
    with pytest.raises(ValueError):
        OrbitParametrization(dihedral(4), ((np.array([2.0, 0]), 1.0),))
    with pytest.raises(ValueError):
        OrbitParametrization(dihedral(4), ((np.array([1.0, 0]), -1.0),))


def test_vector_round_trip():
    params = default_params(octahedral(), 3)
    back = params.from_vector(params.to_vector())
    assert np.allclose(build_body(back).support(np.eye(3)), build_body(params).support(np.eye(3)))


@pytest.fixture(scope="module")
def square_run():
    return maximize(default_params(dihedral(4), 1), None, -50.0, None, SMALL)


def test_one_class_matches_scan(square_run):
    # one class of D_4: the angle is the only parameter
    ts = np.linspace(0, math.pi / 4, 2001)
    vals = [fx.F_p(build_body(OrbitParametrization(dihedral(4), ((np.array([math.cos(t), math.sin(t)]), 1.0),))),
                   None, -50.0).value for t in ts]
    best = max(vals)
    assert square_run.value == pytest.approx(best, rel=1e-2)
    assert square_run.value >= best * (1 - 1e-6)


def test_trace_and_nontriviality(square_run):
    tr = square_run.trace
    assert all(b >= a - 1e-12 for a, b in zip(tr, tr[1:]))
    assert square_run.value >= tr[-1] - 1e-12
    ball = ball_value(2, -50.0).value
    assert square_run.value > ball + 10 * square_run.error
    assert square_run.active == (0,)


def test_conjugation_invariance():
    # rotating group and start together only shifts the angle coordinates
    R = rot(0.37)
    G = dihedral(4)
    Gc = SymmetryGroup(np.einsum("ij,gjk,lk->gil", R, G.elements, R), "dihedral:4-rotated")
    cfg = OptimizerConfig(classes=2, starts=1, max_evals=300)
    p0 = default_params(G, 2)
    p1 = OrbitParametrization(Gc, tuple((R @ u, h) for u, h in p0.classes))
    a = maximize(p0, None, -30.0, None, cfg)
    b = maximize(p1, None, -30.0, None, cfg)
    assert b.value == pytest.approx(a.value, rel=1e-9)


def test_relabeling_by_group_element():
    G = dihedral(6)
    cfg = OptimizerConfig(classes=2, starts=3, max_evals=300)
    p0 = default_params(G, 2)
    for g in G.elements[[1, 7]]:
        pg = OrbitParametrization(G, tuple((g @ u, h) for u, h in p0.classes))
        assert maximize(pg, None, -30.0, None, cfg).value == pytest.approx(
            maximize(p0, None, -30.0, None, cfg).value, rel=1e-9)


def test_determinism_across_workers():
    cfg = OptimizerConfig(classes=2, starts=3, max_evals=200)
    a = maximize(default_params(dihedral(6), 2), None, -20.0, None, cfg)
    b = maximize(default_params(dihedral(6), 2), None, -20.0, None, OptimizerConfig(
        classes=2, starts=3, max_evals=200, workers=2))
    assert a.trace == b.trace and a.value == b.value


def test_positive_p_tends_to_ball():
    cfg = OptimizerConfig(classes=3, starts=4, max_evals=1500)
    r = maximize(default_params(dihedral(6), 3), None, 10.0, None, cfg)
    P = r.body
    assert P.max_support() / P.min_support() <= 1.05


def test_nesting_two_classes_octahedral():
    cfg1 = OptimizerConfig(classes=1, starts=2, max_evals=150)
    r1 = maximize(default_params(octahedral(), 1), None, -100.0, None, cfg1)
    # the 1-class optimum plus a redundant class is a feasible 2-class start
    p2 = OrbitParametrization(octahedral(), r1.params.classes + ((np.ones(3) / math.sqrt(3), 3.0),))
    cfg2 = OptimizerConfig(classes=2, starts=1, max_evals=150)
    r2 = maximize(p2, None, -100.0, None, cfg2)
    assert r2.value >= r1.value * (1 - 1e-12)


def test_square_continuation():
    steps = continuation_study([-5.0, -10.0, -20.0, -40.0], dihedral(4), None, SMALL)
    assert all(s.min_h <= 1 + 1e-9 for s in steps)
    assert [s.p for s in steps] == [-5.0, -10.0, -20.0, -40.0]
    rows = list(csv.DictReader(io.StringIO(trace_csv(steps))))
    assert list(rows[0]) == ["iter", "p", "q", "value", "error_est", "min_h", "hausdorff_to_snap"]
    with pytest.raises(ValueError):
        continuation_study([-5.0, -4.0, -6.0], dihedral(4), None, SMALL)


def test_snapped_polytope_and_active_classes():
    c = (np.array([0, 0, 1.0]), 1.0)
    o = (np.ones(3) / math.sqrt(3), 5.0)
    params = OrbitParametrization(octahedral(), (c, o))
    assert active_classes(params) == [0]
    assert snapped_polytope(params).V() == pytest.approx(24.0)


def test_local_maximize_near_square():
    T = regular_catalog("square")
    assert default_delta(T) == pytest.approx(0.3 * (math.sqrt(2) - 1))
    r = local_maximize_near(T, 0.3, None, -200.0, None, OptimizerConfig(classes=2, starts=4, max_evals=300))
    assert r.interior and r.distance <= 0.05


def test_local_maximize_near_cube():
    T = regular_catalog("cube")
    r = local_maximize_near(T, 0.3, None, -200.0, None, OptimizerConfig(classes=2, starts=4, max_evals=120))
    assert r.interior
    # at p=-200 the maximizer tilts each face slightly and beats the cube itself
    assert r.value >= fx.F_p(T.facet_polytope, None, -200.0).value
    assert fx.F_minus_infinity(r.body).value == pytest.approx(24.0, rel=2e-2)


def test_local_maximize_near_mild_p():
    T = regular_catalog("square")
    try:
        r = local_maximize_near(T, 0.05, None, -5.0, None, OptimizerConfig(classes=1, starts=4, max_evals=100))
    except BoundaryStuck:
        return
    assert r.distance <= 0.05
