import csv
import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from minklab.errors import BranchLost, NewtonDiverged
from minklab.functionals import planar_EL_residual
from minklab.planar import (PlanarConfig, PlanarSolution, continuation_csv, continuation_planar,
                            geometric_schedule, polygon_support, solve_planar)


@pytest.fixture(scope="module")
def square_path():
    return continuation_planar(4, None, geometric_schedule(-3.0, -160.0, 16))


@pytest.mark.parametrize("p", [-3.5, -20.0, -90.0])
def test_constant_solution(p):
    s = solve_planar(4, None, p, "constant")
    assert np.allclose(s.h_values, 1.0, atol=1e-12)
    assert s.residual <= 1e-10 and s.is_trivial


def test_square_branch_at_minus_40():
    s = solve_planar(4, None, -40.0)
    assert s.on_polygon_branch
    assert s.F_p() > 2 * math.pi
    assert s.residual <= 1e-10


def test_polygon_start_far_below_bifurcation_agrees_with_path(square_path):
    last = square_path[-1]
    direct = solve_planar(4, None, -160.0)
    assert direct.min_h == pytest.approx(last.min_h, abs=1e-8)
    assert direct.max_h == pytest.approx(last.max_h, abs=1e-8)


def test_square_at_minus_160(square_path):
    s = square_path[-1]
    assert s.p == pytest.approx(-160.0)
    assert abs(s.max_h / math.sqrt(2) - 1) <= 0.05


def test_hexagon_at_minus_160():
    s = solve_planar(6, None, -160.0)
    assert abs(s.max_h / (1 / math.cos(math.pi / 6)) - 1) <= 0.05


def test_distance_decreases_over_last_steps(square_path):
    d = [s.dist_to_polygon() for s in square_path[-4:]]
    assert all(b < a for a, b in zip(d, d[1:]))


def test_min_h_at_most_one(square_path):
    assert all(s.min_h <= 1 + 1e-12 for s in square_path)


def test_solution_invariants(square_path):
    for s in square_path:
        assert np.all(s.h_values > 0)
        a, b = s.boundary_slopes()
        assert abs(a) <= 1e-8 and abs(b) <= 1e-8
        assert s.residual <= 1e-10
        # h'' + h equals h^(p-1) up to the residual, which underflows near vertices at large |p|
        rho = s.curvature_radius()
        assert np.all(rho >= -s.residual)
        big = s.h_values ** (s.p - 1) > 10 * s.residual
        assert np.all(rho[big] > 0)


def test_full_circle_residual_matches_arc(square_path):
    for s in square_path[-5:]:
        # reflected images of the arc nodes form a uniform grid of 2 k N points
        m = 2 * s.k * len(s.nodes)
        t = (np.arange(m) + 0.5) * (2 * math.pi / m)
        h = s.evaluate(t)
        assert abs(planar_EL_residual(h, None, s.p) - s.residual) <= 1e-9
        assert np.allclose(s.evaluate(-t[:50]), s.evaluate(t[:50]), atol=1e-12)
        assert np.allclose(s.evaluate(math.pi / 2 - t[:50]), s.evaluate(t[:50]), atol=1e-12)


def test_grid_doubling_is_spectral():
    def extended_residual(N):
        s = solve_planar(4, None, -40.0, config=PlanarConfig(nodes=N))
        _, h = s.full_circle(4096)
        return planar_EL_residual(h, None, -40.0)

    assert extended_residual(32) <= 1e-2 * extended_residual(16)


def test_nonconstant_density():
    f = lambda X: 1 + 0.2 * (X[:, 0] ** 4 + X[:, 1] ** 4)  # noqa: E731
    s = solve_planar(4, f, -60.0)
    assert s.residual <= 1e-10 and s.on_polygon_branch
    assert s.min_h <= max(1.2 ** (1 / (1 + 60.0)), 1.0) + 1e-12


def test_csv_columns(square_path):
    rows = list(csv.DictReader(io.StringIO(continuation_csv(square_path))))
    assert list(rows[0]) == ["p", "max_h", "min_h", "dist_to_polygon", "residual", "newton_iters"]
    assert len(rows) == len(square_path)
    assert float(rows[-1]["p"]) == pytest.approx(-160.0)


def test_schedule_validation():
    with pytest.raises(ValueError):
        continuation_planar(4, None, [-5.0, -4.0])
    with pytest.raises(ValueError):
        solve_planar(2, None, -10.0)
    with pytest.raises(ValueError):
        solve_planar(4, None, -1.0)


def test_newton_failure_is_reported():
    with pytest.raises(NewtonDiverged):
        solve_planar(4, None, -300.0, "polygon" if False else np.full(112, 1.0) + 0.6 *
                     np.cos(np.linspace(0, math.pi, 112)), PlanarConfig(max_iter=1))


@settings(max_examples=15)
@given(st.floats(0.0, 2 * math.pi), st.integers(3, 9))
def test_polygon_support_bounds(t, k):
    v = float(polygon_support(np.array([t]), k)[0])
    assert 1 - 1e-12 <= v <= 1 / math.cos(math.pi / k) + 1e-12
