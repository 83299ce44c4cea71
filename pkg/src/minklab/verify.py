"""Acceptance checks shared by ``minklab verify`` and the test suite.

Each check returns a :class:`CheckResult` whose ``detail`` holds the measured
numbers.  Reports are built from rounded values only, so repeated runs print
identical text.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import functionals as fx
from .bodies import BodyView, FacetPolytope, hausdorff
from .errors import MinklabError, SampleViolation
from .optimize import (OptimizerConfig, OrbitParametrization, ball_value, build_body,
                       continuation_study, maximize, snapped_polytope)
from .planar import PlanarConfig, continuation_planar, polygon_support
from .quadrature import fibonacci_sphere, sphere_area
from .regular import (base_simplex, centroid_chain, derivative_at_zero, local_max_sample_test,
                      regular_catalog, tiling_defect, vbar)
from .symmetry import catalog, dihedral, octahedral

PLANAR_SCHEDULE = tuple(-5.0 * 2 ** (j / 2) for j in range(13))  # -5 ... -320
LIMIT_P_SCHEDULE = tuple(-200.0 * 2.0 ** (-j) for j in range(5, -1, -1))  # -6.25 ... -200
LIMIT_Q_SCHEDULE = tuple(4.0 * 2 ** j for j in range(7))  # 4 ... 256


@dataclass(frozen=True)
class CheckResult:
    number: int
    title: str
    passed: bool
    detail: dict = field(default_factory=dict)

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number}. {self.title}"

    def to_json(self) -> dict:
        return {"number": self.number, "title": self.title, "passed": self.passed,
                "detail": self.detail}


def _r(x: float, digits: int = 6) -> float:
    return float(f"{x:.{digits}g}")


# 1 -------------------------------------------------------------------------

def circumscribed_ball_approximant(dim: int, count: int) -> FacetPolytope:
    """Tangent polytope with ``count`` quasi-uniform facet normals."""
    if dim == 2:
        t = 2 * math.pi * np.arange(count) / count
        N = np.column_stack([np.cos(t), np.sin(t)])
    else:
        N = fibonacci_sphere(count)
    return FacetPolytope(N, np.ones(len(N)))


def check_closed_forms() -> CheckResult:
    detail, ok = {}, True
    ball2 = fx.F_minus_infinity(BodyView.ball(2)).value
    ball3 = fx.F_minus_infinity(BodyView.ball(3)).value
    for k in (3, 4, 6, 12):
        T = regular_catalog(k).facet_polytope
        v = fx.F_minus_infinity(T).value
        exact = 2 * k * math.tan(math.pi / k)
        good = abs(v - exact) <= 1e-9 and v > ball2
        detail[f"{k}-gon"] = _r(abs(v - exact), 3)
        ok &= good
    for name, exact in (("cube", 24.0), ("octahedron", 12 * math.sqrt(3))):
        v = fx.F_minus_infinity(regular_catalog(name).facet_polytope).value
        detail[name] = _r(abs(v - exact), 3)
        ok &= abs(v - exact) <= 1e-9 and v > ball3
    for dim, count, exact in ((2, 4096, 2 * math.pi), (3, 40000, 4 * math.pi)):
        v = fx.F_minus_infinity(circumscribed_ball_approximant(dim, count)).value
        detail[f"ball_{dim}"] = _r(abs(v - exact), 3)
        ok &= abs(v - exact) <= 2e-3
    detail["ball_values"] = [_r(ball2, 12), _r(ball3, 12)]
    ok &= abs(ball2 - 2 * math.pi) <= 2e-3 and abs(ball3 - 4 * math.pi) <= 2e-3
    return CheckResult(1, "closed-form functional values", bool(ok), detail)


# 2, 3 ----------------------------------------------------------------------

def planar_run(k: int):
    return continuation_planar(k, None, PLANAR_SCHEDULE, PlanarConfig())


def check_planar_limit(runs: dict | None = None) -> CheckResult:
    runs = runs or {k: planar_run(k) for k in (4, 6)}
    detail, ok = {}, True
    for k, sols in runs.items():
        at = [s for s in sols if abs(s.p + 160) < 1e-9][0]
        target = 1 / math.cos(math.pi / k)
        res = []
        for s in sols:
            t, h = s.full_circle(1024)
            res.append(fx.planar_EL_residual(h, None, s.p))
        max_ok = abs(at.max_h / target - 1) <= 0.05
        min_ok = abs(at.min_h - 1) <= 0.01
        res_ok = max(res) <= 1e-8
        bound_ok = all(s.min_h <= 1 + 1e-12 for s in sols)
        detail[f"k={k}"] = {"max_h/target": _r(at.max_h / target), "min_h": _r(at.min_h),
                            "max_residual": _r(max(res), 2), "min_h<=1": bound_ok,
                            "max_h_within_5%": max_ok, "min_h_within_1%": min_ok}
        ok &= max_ok and min_ok and res_ok and bound_ok
    return CheckResult(2, "planar limit toward the tangent polygon", bool(ok), detail)


def _trend_ok(deficits: list[float]) -> bool:
    last = deficits[-4:]
    return all(b <= a + 1e-12 for a, b in zip(last, last[1:])) and last[-1] <= 0.02


def optimizer_polygon_study(classes: int = 3):
    return continuation_study(PLANAR_SCHEDULE, dihedral(4), None,
                              OptimizerConfig(classes=classes, max_evals=1500))


def check_min_h_trend(runs: dict | None = None, study=None) -> CheckResult:
    runs = runs or {4: planar_run(4)}
    study = study if study is not None else optimizer_polygon_study()
    detail, ok = {}, True
    for k, sols in runs.items():
        d = [abs(s.min_h - 1) for s in sols]
        good = _trend_ok(d)
        detail[f"planar k={k}"] = [_r(x, 4) for x in d[-4:]]
        ok &= good
    d = [abs(s.min_h - 1) for s in study]
    detail["optimizer dihedral:4"] = [_r(x, 4) for x in d[-4:]]
    ok &= _trend_ok(d)
    return CheckResult(3, "min h approaches 1 along p-continuation", bool(ok), detail)


# 4 -------------------------------------------------------------------------

def cube_flag(T):
    V = T.vertices
    top = frozenset(np.flatnonzero(V[:, 2] > 0.5).tolist())
    edge = frozenset(np.flatnonzero((V[:, 2] > 0.5) & (V[:, 0] > 0.5)).tolist())
    return top, edge, T.face_index([1, 1, 1])


def check_subdivision() -> CheckResult:
    detail, ok = {}, True
    for name in ("square", "cube", "octahedron", "dodecahedron"):
        T = regular_catalog(name)
        orth = centroid_chain(T).orthogonality_residual
        tile = tiling_defect(T)
        detail[name] = {"orthogonality": _r(orth, 2), "tiling": _r(tile, 2)}
        ok &= orth <= 1e-10 and tile <= 1e-8
    T = regular_catalog("cube")
    base = base_simplex(T, centroid_chain(T, cube_flag(T)))
    a = np.array([1.0, 0.0])
    d = derivative_at_zero(base, a)
    h = 1e-4
    fd = (vbar(base, h * a, check=False) - vbar(base, -h * a, check=False)) / (2 * h)
    detail["cube_derivative"] = _r(d, 12)
    detail["fd_gap"] = _r(abs(fd - d), 2)
    ok &= abs(d - 1.0) <= 1e-9 and abs(fd - d) <= 1e-6
    return CheckResult(4, "subdivision correctness", bool(ok), detail)


# 5 -------------------------------------------------------------------------

SAMPLE_CASES = (("V", {}), ("V_q", {"q": 2.0}), ("V_q", {"q": 3.0}),
                ("V_pf", {"p": 1.0}), ("V_pf", {"p": -1.0}))


def check_local_max_sampling(trials: int = 500, workers: int = 1) -> CheckResult:
    detail, ok = {}, True
    for name in ("square", "cube"):
        T = regular_catalog(name)
        for functional, kw in SAMPLE_CASES:
            key = f"{name} {functional}{kw or ''}"
            try:
                rep = local_max_sample_test(T, 0.1, trials, 0, functional, workers=workers, **kw)
                detail[key] = {"worst_margin": _r(rep.worst_margin, 4), "skipped": rep.skipped}
            except SampleViolation as exc:
                detail[key] = {"violation": str(exc)}
                ok = False
    return CheckResult(5, "local-maximality falsification harness", bool(ok), detail)


# 6, 7 ------------------------------------------------------------------------

def random_invariant_polytopes(count: int, seed: int = 0) -> list[FacetPolytope]:
    """Bounded invariant polytopes from random facet classes over several groups."""
    rng = np.random.default_rng(seed)
    groups = [dihedral(4), dihedral(6), catalog("dihedral:5"), octahedral(), catalog("tetrahedral"),
              catalog("icosahedral")]
    out = []
    while len(out) < count:
        g = groups[len(out) % len(groups)]
        m = int(rng.integers(1, 4))
        cls = []
        for _ in range(m):
            u = rng.standard_normal(g.dim)
            cls.append((u / np.linalg.norm(u), float(rng.uniform(0.8, 1.6))))
        try:
            P = build_body(OrbitParametrization(g, tuple(cls)))
        except MinklabError:
            continue
        out.append(P.pruned())
    return out


def check_duality(count: int = 20) -> CheckResult:
    worst = 0.0
    for P in random_invariant_polytopes(count, seed=6):
        for p, q in ((-8.0, 2.0), (-3.0, 4.0)):
            worst = max(worst, fx.duality_check(P, None, p, q))
    return CheckResult(6, "duality identity", worst <= 1e-6, {"worst_residual": _r(worst, 2)})


def check_ball_bound(count: int = 20) -> CheckResult:
    bodies = random_invariant_polytopes(count, seed=7)
    worst_excess, min_gap = -math.inf, math.inf
    ball_gap = 0.0
    for i, P in enumerate(bodies):
        q = (-1.0, -2.0, -3.5)[i % 3]
        b = fx.ball_bound_check(P, q)
        worst_excess = max(worst_excess, b.value - b.bound)
        min_gap = min(min_gap, b.gap)
    for dim in (2, 3):
        for q in (-1.0, -2.0):
            ball_gap = max(ball_gap, abs(fx.ball_bound_check(BodyView.ball(dim, 1.7), q).gap))
    ok = worst_excess <= 1e-6 and min_gap >= 1e-9 and ball_gap < 1e-9
    return CheckResult(7, "ball bound for q < 0", bool(ok),
                       {"worst_excess": _r(worst_excess, 3), "min_polytope_gap": _r(min_gap, 3),
                        "ball_gap": _r(ball_gap, 2)})


# 8 -------------------------------------------------------------------------

def limit_shape_studies(classes: int = 2, max_evals: int = 800):
    cfg = OptimizerConfig(classes=classes, max_evals=max_evals)
    G = octahedral()
    p_study = continuation_study(LIMIT_P_SCHEDULE, G, None, cfg)
    q_study = continuation_study(LIMIT_Q_SCHEDULE, G, None, cfg, p_fixed=-2.0)
    return p_study, q_study


def tangent_scaled_distance(step) -> float:
    """Hausdorff distance to the snapped polytope after scaling to ``min h = 1``."""
    body = step.result.body
    return hausdorff(body.scaled(1.0 / body.min_support()), snapped_polytope(step.result.params, body))


def check_limit_shape(studies=None) -> CheckResult:
    p_study, q_study = studies or limit_shape_studies()
    end = p_study[-1]
    ball = ball_value(3, end.p).value
    min_ok = 0.98 <= end.min_h <= 1.02
    dist_ok = end.hausdorff_to_snap <= 0.05
    gain = end.value / ball - 1
    gain_ok = gain >= 0.05
    qend = q_study[-1]
    q_dist = [s.hausdorff_to_snap for s in q_study]
    q_ok = qend.hausdorff_to_snap <= 0.05
    detail = {"p_terminal": end.p, "min_h": _r(end.min_h, 5), "hausdorff_to_snap": _r(end.hausdorff_to_snap, 4),
              "gain_over_ball": _r(gain, 4), "active_classes": list(end.result.active),
              "q_terminal": qend.q, "q_hausdorff_to_snap": [_r(x, 4) for x in q_dist],
              "q_min_h": _r(qend.min_h, 5),
              "min_h_scaled_distance": [_r(tangent_scaled_distance(end), 4),
                                        _r(tangent_scaled_distance(qend), 4)]}
    return CheckResult(8, "limit-shape study in R^3", bool(min_ok and dist_ok and gain_ok and q_ok), detail)


# 9 -------------------------------------------------------------------------

def _functional_values(body) -> list[float]:
    return [fx.F_p(body, None, -6.0).value, fx.F_p(body, None, 3.0).value,
            fx.F_pq(body, None, -4.0, 2.0).value, fx.F_minus_infinity(body).value,
            fx.F_minus_infinity_q(body, -2.0).value, fx.F_star_pq(body, None, -3.0, 4.0).value]


def determinism_payload(workers: int) -> str:
    params = OrbitParametrization(dihedral(4), ((np.array([1.0, 0.0]), 1.0),
                                                (np.array([math.cos(0.3), math.sin(0.3)]), 1.2)))
    res = maximize(params, None, -20.0, None,
                   OptimizerConfig(classes=2, starts=8, max_evals=120, seed=11, workers=workers))
    return json.dumps(res.to_json(), sort_keys=True)


def check_scale_and_determinism() -> CheckResult:
    worst = 0.0
    for P in random_invariant_polytopes(6, seed=9):
        base = _functional_values(P)
        for mu in (0.5, 2.0, 10.0):
            vals = _functional_values(P.scaled(mu))
            worst = max(worst, max(abs(a - b) / abs(b) for a, b in zip(vals, base)))
    payloads = {w: determinism_payload(w) for w in (1, 2, 8)}
    same = len(set(payloads.values())) == 1
    return CheckResult(9, "scale invariance and determinism", worst <= 1e-9 and same,
                       {"worst_relative_change": _r(worst, 2), "identical_across_workers": same})


FAST: dict[int, Callable[[], CheckResult]] = {
    1: check_closed_forms, 4: check_subdivision, 6: check_duality, 7: check_ball_bound,
    9: check_scale_and_determinism,
}
FULL: dict[int, Callable[[], CheckResult]] = {
    **FAST, 2: check_planar_limit, 3: check_min_h_trend, 5: check_local_max_sampling,
    8: check_limit_shape,
}


def run_suite(suite: str = "fast") -> list[CheckResult]:
    table = FAST if suite == "fast" else FULL
    out = []
    for number in sorted(table):
        try:
            out.append(table[number]())
        except MinklabError as exc:
            out.append(CheckResult(number, table[number].__name__, False, {"error": exc.to_json()}))
    return out


def report(results: list[CheckResult]) -> str:
    lines = [r.line() for r in results]
    lines.append(json.dumps([r.to_json() for r in results], sort_keys=True))
    return "\n".join(lines) + "\n"
