"""Derivative-free maximization of scale-invariant functionals over invariant polytopes.

A body is described by facet classes ``(direction, offset)``; the facet set
is the union of the group orbits of the classes, so every built body is
invariant and convex by construction.  The search variables are angles of
each class direction and log-offsets of all classes but the first (the
functionals are scale invariant).

Search: compass search with shrinking steps, followed by Nelder-Mead restarts
and a final compass polish, from several quasi-random starts.  Starts run in a
thread pool (``MINKLAB_THREADS``) and are reduced in start order, so the
result does not depend on the worker count.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from . import functionals as fx
from .bodies import BodyView, FacetPolytope, hausdorff
from .errors import BoundaryStuck, MinklabError, NonSpanningGroup
from .symmetry import SymmetryGroup, orbit, spanning_check

log = logging.getLogger(__name__)

CLASS_DEFAULT = 3
CLASS_CAP = 6
ACTIVE_AREA_SHARE = 0.01


@lru_cache(maxsize=64)
def _spanning(group: SymmetryGroup):
    return spanning_check(group)


def threads() -> int:
    try:
        return max(1, int(os.environ.get("MINKLAB_THREADS", "1")))
    except ValueError:
        return 1


# parametrization -------------------------------------------------------------

def _angles_to_dir(ang: np.ndarray, dim: int) -> np.ndarray:
    if dim == 2:
        return np.array([math.cos(ang[0]), math.sin(ang[0])])
    th, ph = ang
    return np.array([math.sin(th) * math.cos(ph), math.sin(th) * math.sin(ph), math.cos(th)])


def _dir_to_angles(u: np.ndarray) -> np.ndarray:
    if len(u) == 2:
        return np.array([math.atan2(u[1], u[0])])
    return np.array([math.acos(max(-1.0, min(1.0, u[2]))), math.atan2(u[1], u[0])])


def _angle_key(u: np.ndarray) -> np.ndarray:
    a = _dir_to_angles(u)
    a[-1] = a[-1] % (2 * math.pi)
    return a


@dataclass(frozen=True, eq=False)
class OrbitParametrization:
    """Facet classes ``((direction, offset), ...)`` under ``group``."""

    group: SymmetryGroup
    classes: tuple

    def __post_init__(self):
        cls = []
        for u, h in self.classes:
            u = np.asarray(u, dtype=float)
            if abs(np.linalg.norm(u) - 1) > 1e-9:
                raise ValueError("class directions must be unit vectors")
            if not h > 0:
                raise ValueError("class offsets must be positive")
            cls.append((u / np.linalg.norm(u), float(h)))
        if not 1 <= len(cls) <= CLASS_CAP:
            raise ValueError(f"between 1 and {CLASS_CAP} classes are allowed")
        object.__setattr__(self, "classes", tuple(cls))

    @property
    def dim(self) -> int:
        return self.group.dim

    @property
    def angle_count(self) -> int:
        return self.dim - 1

    def facet_data(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Normals, offsets and class label of every facet in the orbit union."""
        N, h, lab = [], [], []
        for c, (u, off) in enumerate(self.classes):
            pts = orbit(self.group, u).points
            N.append(pts)
            h.append(np.full(len(pts), off))
            lab.append(np.full(len(pts), c))
        return np.vstack(N), np.concatenate(h), np.concatenate(lab)

    def to_vector(self) -> np.ndarray:
        ang = np.concatenate([_dir_to_angles(u) for u, _ in self.classes])
        logs = np.log([h / self.classes[0][1] for _, h in self.classes[1:]])
        return np.concatenate([ang, logs])

    def from_vector(self, x: np.ndarray) -> "OrbitParametrization":
        m, a = len(self.classes), self.angle_count
        cls = []
        for c in range(m):
            u = _angles_to_dir(x[c * a:(c + 1) * a], self.dim)
            off = 1.0 if c == 0 else math.exp(x[m * a + c - 1])
            cls.append((u, off))
        return OrbitParametrization(self.group, tuple(cls))

    def canonical(self) -> "OrbitParametrization":
        """Each class direction replaced by its orbit image with the smallest angles."""
        cls = []
        for u, off in self.classes:
            imgs = self.group.apply(u)
            keys = [tuple(np.round(_angle_key(v), 9)) for v in imgs]
            cls.append((imgs[min(range(len(imgs)), key=keys.__getitem__)], off))
        return OrbitParametrization(self.group, tuple(cls))

    def to_json(self) -> dict:
        return {"group": self.group.name,
                "classes": [{"rep_direction": u.tolist(), "offset": h} for u, h in self.classes]}


def build_body(params: OrbitParametrization) -> FacetPolytope:
    """Polytope cut out by the orbit union; raises Unbounded when it does not close."""
    N, h, _ = params.facet_data()
    P = FacetPolytope(N, h)
    P.irredundant  # raises Unbounded; logs pruning
    return P


def active_classes(params: OrbitParametrization, body: FacetPolytope | None = None) -> list[int]:
    """Classes whose irredundant facets carry at least 1% of the surface area."""
    body = build_body(params) if body is None else body
    _, _, lab = params.facet_data()
    hd = body.hull
    area = np.zeros(len(params.classes))
    for n_i, a_i in zip(hd.normals, hd.facet_areas):
        same = np.flatnonzero(body.normals @ n_i > 1 - 1e-9)
        j = same[np.argmin(body.offsets[same])]
        area[lab[j]] += a_i
    share = area / area.sum()
    return [c for c in range(len(params.classes)) if share[c] >= ACTIVE_AREA_SHARE]


def snapped_polytope(params: OrbitParametrization, body: FacetPolytope | None = None) -> FacetPolytope:
    """Active classes with offsets set to 1."""
    act = active_classes(params, body)
    cls = tuple((params.classes[c][0], 1.0) for c in act)
    return build_body(OrbitParametrization(params.group, cls))


# objective -------------------------------------------------------------------

@dataclass(frozen=True)
class Objective:
    """``F_p`` (``q`` is None) or ``F_{p,q}``; ``f`` a density accepted by the functionals."""

    p: float
    q: float | None = None
    f: object = None

    def estimate(self, body) -> fx.Estimate:
        if self.q is None:
            return fx.F_p(body, self.f, self.p)
        return fx.F_pq(body, self.f, self.p, self.q)

    def label(self) -> str:
        return f"F_{{{self.p:g}}}" if self.q is None else f"F_{{{self.p:g},{self.q:g}}}"


@dataclass(frozen=True)
class OptimizerConfig:
    classes: int = CLASS_DEFAULT
    starts: int = 8
    seed: int = 0
    tol_step: float = 1e-4
    initial_step: float = 0.2
    max_evals: int = 4000
    restarts: int = 2
    workers: int = 0

    def worker_count(self) -> int:
        return self.workers or threads()


def _safe_log_value(obj: Objective, params: OrbitParametrization, x: np.ndarray,
                    guard=None) -> float:
    try:
        P = build_body(params.from_vector(x))
        if guard is not None and not guard(P):
            return -math.inf
        v = obj.estimate(P).value
    except (MinklabError, ValueError, FloatingPointError, OverflowError, ZeroDivisionError):
        return -math.inf
    return math.log(v) if v > 0 and math.isfinite(v) else -math.inf


@dataclass
class _Search:
    """Ascent state for one start; ``trace`` holds accepted values only."""

    fn: object
    x: np.ndarray
    value: float
    evals: int = 0
    trace: list = field(default_factory=list)

    def eval(self, x):
        self.evals += 1
        return self.fn(x)

    def accept(self, x, v):
        if v > self.value:
            self.x, self.value = np.array(x, dtype=float), float(v)
            self.trace.append(self.value)
            return True
        return False


def _compass(s: _Search, step: float, tol: float, max_evals: int) -> float:
    d = len(s.x)
    while step >= tol and s.evals < max_evals:
        improved = False
        for i in range(d):
            for sign in (1.0, -1.0):
                y = s.x.copy()
                y[i] += sign * step
                if s.accept(y, s.eval(y)):
                    improved = True
                    break
        if not improved:
            step /= 2
    return step


def _local_optimality(s: _Search, tol: float) -> bool:
    """No improving compass step of size ``tol`` (or ``2 tol``) in any axis direction."""
    for h in (tol, 2 * tol):
        for i in range(len(s.x)):
            for sign in (1.0, -1.0):
                y = s.x.copy()
                y[i] += sign * h
                if s.eval(y) > s.value + 1e-13:
                    return False
    return True


def _run_start(fn, x0: np.ndarray, cfg: OptimizerConfig) -> _Search:
    s = _Search(fn, np.array(x0, dtype=float), -math.inf)
    s.accept(s.x, s.eval(s.x))
    if not math.isfinite(s.value):
        return s
    _compass(s, cfg.initial_step, cfg.tol_step, cfg.max_evals)
    for _ in range(cfg.restarts):
        budget = max(0, cfg.max_evals - s.evals)
        if budget < 10:
            break
        before = s.value
        res = minimize(lambda y: -s.eval(y), s.x, method="Nelder-Mead",
                       options={"maxfev": budget, "xatol": cfg.tol_step, "fatol": 1e-12,
                                "initial_simplex": s.x + np.vstack([np.zeros(len(s.x)),
                                                                    0.05 * np.eye(len(s.x))])})
        if np.isfinite(res.fun):
            s.accept(res.x, -float(res.fun))
        _compass(s, 4 * cfg.tol_step, cfg.tol_step, cfg.max_evals)
        if s.value <= before + 1e-13:
            break
    return s


def _start_points(params0: OrbitParametrization, cfg: OptimizerConfig) -> list[np.ndarray]:
    """First start is ``params0``; the rest are Sobol points in the angle/log-offset box."""
    x0 = params0.to_vector()
    d = len(x0)
    out = [x0]
    if cfg.starts <= 1:
        return out
    sob = qmc.Sobol(d, scramble=True, seed=np.random.default_rng(cfg.seed)).random(
        2 ** math.ceil(math.log2(cfg.starts)))
    m, a = len(params0.classes), params0.angle_count
    for row in sob[:cfg.starts - 1]:
        x = np.empty(d)
        for c in range(m):
            if a == 1:
                x[c] = math.pi * row[c]
            else:
                x[2 * c] = math.acos(1 - row[2 * c])
                x[2 * c + 1] = 0.5 * math.pi * row[2 * c + 1]
        x[m * a:] = np.log(1.0 + 0.5 * row[m * a:])
        out.append(x)
    return out


@dataclass(frozen=True, eq=False)
class MaximizerResult:
    params: OrbitParametrization
    body: FacetPolytope
    value: float
    error: float
    trace: tuple
    p: float
    q: float | None
    f_label: str
    active: tuple
    locally_optimal: bool = True
    start_values: tuple = ()
    interior: bool | None = None
    distance: float | None = None
    f: object = field(default=None, repr=False)

    @property
    def group(self) -> SymmetryGroup:
        return self.params.group

    @property
    def log_value(self) -> float:
        return math.log(self.value)

    def normalized_body(self) -> FacetPolytope:
        return self.body.scaled(1.0 / fx.normalization_lambda(self.body, self.f, self.p))

    def to_json(self) -> dict:
        return {"p": self.p, "q": self.q, "f": self.f_label, "group": self.group.name,
                "value": self.value, "error": self.error, "trace": list(self.trace),
                "active_classes": list(self.active), "locally_optimal": self.locally_optimal,
                "start_values": list(self.start_values), "interior": self.interior,
                "distance": self.distance, "params": self.params.to_json(),
                "body": self.body.pruned().to_json()}


def _label(f) -> str:
    if f is None:
        return "1"
    return getattr(f, "label", None) or (repr(float(f)) if np.isscalar(f) else "f")


def _validate(params0: OrbitParametrization, p: float, q: float | None):
    if not _spanning(params0.group).passes:
        raise NonSpanningGroup(f"group {params0.group.name} admits degenerate orbits")
    if p == 0:
        raise ValueError("p must be nonzero")
    if q is not None and q == 0:
        raise ValueError("q must be nonzero")
    if params0.dim not in (2, 3):
        raise ValueError("the optimizer works in dimensions 2 and 3")


def maximize(params0: OrbitParametrization, f=None, p: float = -10.0, q: float | None = None,
             config: OptimizerConfig | None = None, guard=None,
             extra_starts: list[np.ndarray] | None = None) -> MaximizerResult:
    """Multi-start derivative-free ascent of ``log F``.

    ``guard(body) -> bool`` rejects bodies (used for neighbourhood barriers).
    Equal values (to 1e-12 relative) are resolved by the lexicographically
    smallest class angles.
    """
    cfg = config or OptimizerConfig()
    _validate(params0, p, q)
    obj = Objective(p, q, f)

    def fn(x):
        return _safe_log_value(obj, params0, x, guard)

    starts = (extra_starts or []) + _start_points(params0, cfg)
    workers = cfg.worker_count()
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            runs = list(ex.map(lambda x: _run_start(fn, x, cfg), starts))
    else:
        runs = [_run_start(fn, x, cfg) for x in starts]
    best_i = None
    for i, s in enumerate(runs):
        if not math.isfinite(s.value):
            continue
        if best_i is None or s.value > runs[best_i].value + 1e-12 * abs(s.value):
            best_i = i
        elif abs(s.value - runs[best_i].value) <= 1e-12 * abs(s.value):
            a = tuple(np.round(params0.from_vector(s.x).canonical().to_vector(), 9))
            b = tuple(np.round(params0.from_vector(runs[best_i].x).canonical().to_vector(), 9))
            if a < b:
                best_i = i
    if best_i is None:
        from .errors import NoImprovement
        raise NoImprovement("no start produced a bounded admissible body")
    best = runs[best_i]
    ok = _local_optimality(best, cfg.tol_step)
    if not ok:
        log.warning("maximize: best start is not compass-stationary at step %g", cfg.tol_step)
    params = params0.from_vector(best.x).canonical()
    body = build_body(params)
    est = obj.estimate(body)
    res = MaximizerResult(params, body, est.value, est.error, tuple(math.exp(v) for v in best.trace),
                          p, q, _label(f), tuple(active_classes(params, body)), ok,
                          tuple(s.value for s in runs), f=f)
    return res


def default_params(group: SymmetryGroup, classes: int = 1) -> OrbitParametrization:
    """One class along a facet-like axis plus classes on other quasi-random directions."""
    d = group.dim
    base = [np.eye(d)[-1] if d == 3 else np.array([1.0, 0.0])]
    rng = np.random.default_rng(1)
    while len(base) < classes:
        u = rng.standard_normal(d)
        base.append(u / np.linalg.norm(u))
    cls = [(base[0], 1.0)] + [(u, 1.3) for u in base[1:]]
    return OrbitParametrization(group, tuple(cls))


# studies ---------------------------------------------------------------------

@dataclass(frozen=True)
class StudyStep:
    p: float
    q: float | None
    value: float
    error: float
    min_h: float
    hausdorff_to_snap: float
    result: MaximizerResult = field(repr=False, compare=False)

    def row(self, i: int) -> dict:
        return {"iter": i, "p": self.p, "q": "" if self.q is None else self.q,
                "value": self.value, "error_est": self.error, "min_h": self.min_h,
                "hausdorff_to_snap": self.hausdorff_to_snap}


def geometric_p_schedule(dim: int, steps: int, start: float | None = None, ratio: float = 2.0) -> list[float]:
    """``-(n+2) * ratio^j`` by default, with ``n + 1 = dim``."""
    s = -(dim + 1.0) if start is None else float(start)
    return [s * ratio ** j for j in range(steps)]


def study_step(res: MaximizerResult, f=None) -> StudyStep:
    lam = fx.normalization_lambda(res.body, f, res.p)
    norm = res.body.scaled(1.0 / lam)
    snap = snapped_polytope(res.params, res.body)
    dist = hausdorff(norm, snap)
    return StudyStep(res.p, res.q, res.value, res.error, norm.min_support(), dist, res)


def continuation_study(schedule, group: SymmetryGroup, f=None, config: OptimizerConfig | None = None,
                       params0: OrbitParametrization | None = None, p_fixed: float | None = None,
                       warm_starts: int = 2) -> list[StudyStep]:
    """Warm-started maximization along a strictly monotone p (or q) schedule.

    With ``p_fixed`` the schedule is a q-sequence for ``F_{p_fixed, q}``.  The
    first step uses every start; later steps start from the previous optimum
    plus ``warm_starts`` fresh quasi-random points.
    """
    cfg = config or OptimizerConfig()
    sched = [float(s) for s in schedule]
    diffs = np.diff(sched)
    if len(sched) > 1 and not (np.all(diffs < 0) or np.all(diffs > 0)):
        raise ValueError("schedule must be strictly monotone")
    params = params0 or default_params(group, cfg.classes)
    steps: list[StudyStep] = []
    prev: MaximizerResult | None = None
    for s in sched:
        p, q = (s, None) if p_fixed is None else (p_fixed, s)
        if prev is None:
            res = maximize(params, f, p, q, cfg)
        else:
            warm = replace(cfg, starts=warm_starts)
            res = maximize(prev.params, f, p, q, warm)
        steps.append(study_step(res, f))
        prev = res
        log.info("continuation %s: value %.6g min_h %.5f dist %.4f",
                 res.p if q is None else q, res.value, steps[-1].min_h, steps[-1].hausdorff_to_snap)
    return steps


def trace_csv(steps: list[StudyStep]) -> str:
    buf = io.StringIO()
    cols = ["iter", "p", "q", "value", "error_est", "min_h", "hausdorff_to_snap"]
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for i, st in enumerate(steps):
        row = st.row(i)
        w.writerow({k: (repr(float(v)) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


def ball_value(dim: int, p: float, q: float | None = None, f=None) -> fx.Estimate:
    """The objective on the unit ball (exact for constant ``f``)."""
    ball = BodyView.ball(dim)
    return Objective(p, q, f).estimate(ball)


def default_delta(T) -> float:
    return 0.3 * (T.circumradius - T.inradius)


def local_maximize_near(T, delta: float | None = None, f=None, p: float = -200.0,
                        q: float | None = None, config: OptimizerConfig | None = None) -> MaximizerResult:
    """Maximize within the Hausdorff ``delta``-neighbourhood of tangent ``T``.

    Bodies are compared with ``T`` after scaling both to the same constraint
    level ``int f h^p``; proposals outside the neighbourhood are rejected.
    """
    from .regular import RegularPolytope

    if not isinstance(T, RegularPolytope) or T.group is None:
        raise ValueError("T must be a catalog polytope with a known group")
    T = T.normalized("tangent")
    delta = default_delta(T) if delta is None else float(delta)
    if delta <= 0:
        raise ValueError("delta must be positive")
    cfg = config or OptimizerConfig()
    TP = T.facet_polytope.pruned()
    lam_T = fx.normalization_lambda(TP, f, p)
    count = 2048 if T.dim == 2 else 3000

    def dist(P):
        lam = fx.normalization_lambda(P, f, p)
        return hausdorff(P.scaled(lam_T / lam), TP, count=count, refine=1)

    n0 = TP.normals[0]
    params0 = OrbitParametrization(T.group, ((n0, 1.0),) + tuple(
        (u, off) for u, off in default_params(T.group, cfg.classes).classes[1:]))
    # keep extra classes redundant at the start so the first body is T itself
    params0 = OrbitParametrization(T.group, (params0.classes[0],) + tuple(
        (u, 3.0) for u, _ in params0.classes[1:]))
    runs = []
    seeds = [cfg.seed + 7919 * i for i in range(max(1, cfg.starts // 4))]
    for sd in seeds:
        c = replace(cfg, seed=sd, starts=4)
        try:
            r = maximize(params0, f, p, q, c, guard=lambda P: dist(P) <= delta)
        except MinklabError:
            continue
        d = dist(r.body)
        runs.append((r, d))
    if not runs:
        raise BoundaryStuck("no admissible body found inside the neighbourhood")
    if all(d >= 0.95 * delta for _, d in runs):
        raise BoundaryStuck(f"every start ends within 0.05*delta of the neighbourhood boundary "
                            f"(delta={delta:g}, p={p:g})")
    best, d = max(runs, key=lambda t: t[0].value)
    return replace(best, interior=bool(d <= 0.8 * delta), distance=float(d))
