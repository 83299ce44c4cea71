"""Planar Euler-Lagrange equation ``h'' + h = f h^(p-1)`` under dihedral symmetry.

A D_k-invariant support function is even about 0 and about ``pi/k``, so it
expands in ``cos(j k theta)``.  Collocation at the DCT-II nodes of the
fundamental arc ``[0, pi/k]`` makes the Neumann conditions exact, and the
second derivative is the dense matrix ``M^T diag(-(jk)^2) M`` with ``M`` the
orthonormal DCT-II matrix.  Newton's method with damping and a positivity
guard solves the collocation system.

Roundoff in the differentiation matrix grows like ``(N k)^2 * eps``; ``N``
around 128 keeps the achievable residual near 1e-11 for ``k <= 6``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy.fft import dct

from .errors import BranchLost, NewtonDiverged, NonPositive


def default_nodes(k: int) -> int:
    """Keeps ``N k`` near 450, where differentiation roundoff stays below 1e-10."""
    return max(32, 16 * round(28 / k))


@dataclass(frozen=True)
class PlanarConfig:
    nodes: int = 0
    tol: float = 1e-10
    max_iter: int = 60
    max_halvings: int = 3

    def for_k(self, k: int) -> "PlanarConfig":
        return self if self.nodes else replace(self, nodes=default_nodes(k))


@lru_cache(maxsize=None)
def _operators(k: int, N: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    theta = (np.arange(N) + 0.5) * (math.pi / k) / N
    M = dct(np.eye(N), type=2, norm="ortho", axis=0)
    D2 = M.T @ np.diag(-(k * np.arange(N)) ** 2.0) @ M
    # constants are annihilated exactly; trims roundoff on near-constant data
    D2[np.diag_indices(N)] -= D2.sum(axis=1)
    return theta, M, D2


def polygon_support(theta: np.ndarray, k: int) -> np.ndarray:
    """Support of the tangent k-gon with a facet normal at 0, any angle."""
    step = 2 * math.pi / k
    t = np.mod(np.asarray(theta, dtype=float), step)
    return np.cos(t - math.pi / k) / math.cos(math.pi / k)


def _density_values(f, theta: np.ndarray) -> np.ndarray:
    if f is None:
        return np.ones_like(theta)
    if np.isscalar(f):
        return np.full_like(theta, float(f))
    X = np.column_stack([np.cos(theta), np.sin(theta)])
    return np.asarray(f(X), dtype=float) * np.ones_like(theta)


@dataclass(frozen=True, eq=False)
class PlanarSolution:
    k: int
    p: float
    nodes: np.ndarray
    h_values: np.ndarray
    residual: float
    iterations: int = 0
    f_values: np.ndarray | None = field(default=None, repr=False)

    @property
    def coefficients(self) -> np.ndarray:
        """Coefficients of ``h = sum a_j cos(j k theta)``."""
        N = len(self.nodes)
        a = dct(self.h_values, type=2, norm="ortho")
        scale = np.full(N, math.sqrt(2.0 / N))
        scale[0] = math.sqrt(1.0 / N)
        return a * scale

    def evaluate(self, theta, derivative: int = 0) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        a = self.coefficients
        jk = self.k * np.arange(len(a))
        ang = np.multiply.outer(theta, jk)
        if derivative == 0:
            return np.cos(ang) @ a
        if derivative == 1:
            return -np.sin(ang) @ (a * jk)
        if derivative == 2:
            return -np.cos(ang) @ (a * jk ** 2)
        raise ValueError("derivative order must be 0, 1 or 2")

    @property
    def max_h(self) -> float:
        return float(np.max(self.evaluate(np.linspace(0, math.pi / self.k, 2001))))

    @property
    def min_h(self) -> float:
        return float(np.min(self.evaluate(np.linspace(0, math.pi / self.k, 2001))))

    @property
    def is_trivial(self) -> bool:
        return float(np.ptp(self.h_values)) < 1e-8

    @property
    def on_polygon_branch(self) -> bool:
        """Leading mode ``cos(k theta)`` dominates with a facet normal at 0."""
        a = self.coefficients[1:]
        return not self.is_trivial and a[0] < 0 and abs(a[0]) >= np.max(np.abs(a[1:]))

    def dist_to_polygon(self, samples: int = 4001) -> float:
        """``sup |h - h_T|`` over the arc, ``h_T`` the tangent k-gon support."""
        t = np.linspace(0, math.pi / self.k, samples)
        return float(np.max(np.abs(self.evaluate(t) - polygon_support(t, self.k))))

    def boundary_slopes(self) -> tuple[float, float]:
        d = self.evaluate(np.array([0.0, math.pi / self.k]), derivative=1)
        return float(d[0]), float(d[1])

    def full_circle(self, m: int = 2048) -> tuple[np.ndarray, np.ndarray]:
        t = 2 * math.pi * np.arange(m) / m
        return t, self.evaluate(t)

    def curvature_radius(self) -> np.ndarray:
        """``h'' + h`` at the nodes."""
        _, _, D2 = _operators(self.k, len(self.nodes))
        return D2 @ self.h_values + self.h_values

    def _arc_mean(self, g: np.ndarray) -> float:
        return math.fsum(g) / len(g)

    def V(self) -> float:
        """``int (h^2 - h'^2)`` over the circle, twice the area."""
        d1 = self.evaluate(self.nodes, derivative=1)
        return 2 * math.pi * self._arc_mean(self.h_values ** 2 - d1 ** 2)

    def F_p(self) -> float:
        fv = np.ones_like(self.h_values) if self.f_values is None else self.f_values
        mean = self._arc_mean(fv * self.h_values ** self.p) / self._arc_mean(fv)
        return self.V() * mean ** (-2.0 / self.p)

    def row(self) -> dict:
        return {"p": self.p, "max_h": self.max_h, "min_h": self.min_h,
                "dist_to_polygon": self.dist_to_polygon(), "residual": self.residual,
                "newton_iters": self.iterations}


def _residual(h, D2, fv, p):
    return D2 @ h + h - fv * h ** (p - 1)


def polygon_init(k: int, N: int) -> np.ndarray:
    theta, _, _ = _operators(k, N)
    prof = np.clip(polygon_support(theta, k), 1.0, 1.0 / math.cos(math.pi / k))
    return 0.9 + 0.1 * prof


def solve_planar(k: int, f=None, p: float = -40.0, init="polygon",
                 config: PlanarConfig | None = None) -> PlanarSolution:
    """Newton solve on the fundamental arc.

    ``init`` is ``"polygon"`` (perturbed polygon profile), ``"constant"``, a
    node array, or a previous :class:`PlanarSolution` (warm start).  When
    Newton fails from the polygon profile the branch is followed down from
    ``p = 1.1 (2 - k^2)`` instead.
    """
    cfg = (config or PlanarConfig()).for_k(k)
    if k < 3:
        raise ValueError("k must be at least 3")
    if not p < -2:
        raise ValueError("the planar solver needs p < -2")
    N = cfg.nodes
    theta, _, D2 = _operators(k, N)
    fv = _density_values(f, theta)
    if np.any(fv <= 0):
        raise ValueError("density must be positive")
    if isinstance(init, PlanarSolution):
        h = init.evaluate(theta) if len(init.nodes) != N else init.h_values.copy()
    elif isinstance(init, str) and init == "polygon":
        h = polygon_init(k, N)
    elif isinstance(init, str) and init == "constant":
        h = np.full(N, float(np.mean(fv)) ** (1.0 / (2.0 - p)))
    else:
        h = np.asarray(init, dtype=float).copy()
    if np.any(h <= 0):
        raise NonPositive("initial guess is not positive")
    polygon = isinstance(init, str) and init == "polygon"
    start = 1.1 * (2.0 - k * k)
    try:
        h, res, it = _newton(h, D2, fv, p, cfg)
        sol = PlanarSolution(k, float(p), theta, h, res, it, None if f is None else fv)
    except (NewtonDiverged, NonPositive):
        if not polygon or p >= start:
            raise
        sol = None
    if polygon and p < start and (sol is None or not sol.on_polygon_branch):
        # far below the bifurcation the polygon profile leaves Newton's basin; follow the branch down
        steps = 2 + math.ceil(4 * math.log2(p / start))
        sol = continuation_planar(k, f, geometric_schedule(start, p, steps), cfg)[-1]
    return sol


def _newton(h, D2, fv, p, cfg):
    R = _residual(h, D2, fv, p)
    res = float(np.max(np.abs(R)))
    I = np.eye(len(h))
    it = 0
    while res > cfg.tol:
        if it >= cfg.max_iter:
            raise NewtonDiverged(f"no convergence after {it} iterations at p={p} (residual {res:.3e}); "
                                 "try a smaller p-step")
        J = D2 + I - (p - 1) * np.diag(fv * h ** (p - 2))
        step = np.linalg.solve(J, -R)
        alpha = 1.0
        while True:
            trial = h + alpha * step
            if np.all(trial > 0):
                Rt = _residual(trial, D2, fv, p)
                rt = float(np.max(np.abs(Rt)))
                if rt < res or alpha < 1e-3:
                    break
            alpha /= 2
            if alpha < 1e-6:
                raise NonPositive(f"Newton iterate lost positivity at p={p}")
        stalled = alpha < 1e-3 and rt >= res
        h, R, res = trial, Rt, rt
        it += 1
        if stalled:
            raise NewtonDiverged(f"Newton stalled at p={p} (residual {res:.3e})")
    return h, res, it


def geometric_schedule(p_start: float, p_end: float, steps: int) -> np.ndarray:
    return -np.geomspace(-p_start, -p_end, steps)


SEED_WEIGHTS = (0.1, 0.3, 0.5, 1.0)


def _seeded_solve(k, f, p, cfg) -> PlanarSolution:
    """First polygon-branch solution over increasing seed amplitudes.

    Weak seeds can fall onto the constant solution or onto a branch with
    doubled symmetry; the trivial solution is returned when no seed reaches
    the polygon branch (before the bifurcation point).
    """
    theta, _, _ = _operators(k, cfg.nodes)
    prof = polygon_support(theta, k)
    for w in SEED_WEIGHTS:
        seed = polygon_init(k, cfg.nodes) if w == 0.1 else (1 - w) + w * prof
        try:
            sol = solve_planar(k, f, p, seed, cfg)
        except (NewtonDiverged, NonPositive):
            continue
        if sol.on_polygon_branch:
            return sol
    return solve_planar(k, f, p, "constant", cfg)


def continuation_planar(k: int, f=None, p_schedule=None,
                        config: PlanarConfig | None = None) -> list[PlanarSolution]:
    """Warm-started continuation along a decreasing schedule.

    The nontrivial branch bifurcates from ``h = const`` near ``p = 2 - k^2``;
    while the tracked solution is still trivial every step is re-seeded from
    the polygon profile.  A failed step is retried at midpoints up to
    ``max_halvings`` times before :class:`BranchLost` is raised.
    """
    cfg = (config or PlanarConfig()).for_k(k)
    sched = np.asarray(p_schedule if p_schedule is not None
                       else geometric_schedule(-3.0, -160.0, 16), dtype=float)
    if len(sched) > 1 and not np.all(np.diff(sched) < 0):
        raise ValueError("p schedule must be strictly decreasing")
    out: list[PlanarSolution] = []
    prev: PlanarSolution | None = None
    for target in sched:
        start = prev.p if prev is not None else None
        p_try = float(target)
        halvings = 0
        while True:
            try:
                if prev is None or prev.is_trivial:
                    sol = _seeded_solve(k, f, p_try, cfg)
                else:
                    try:
                        sol = solve_planar(k, f, p_try, prev, cfg)
                    except (NewtonDiverged, NonPositive):
                        sol = None
                    if sol is None or not sol.on_polygon_branch:
                        sol = _seeded_solve(k, f, p_try, cfg)
                if prev is not None and not prev.is_trivial and not sol.on_polygon_branch:
                    raise BranchLost(f"fell onto the trivial branch at p={p_try}")
            except (NewtonDiverged, NonPositive, BranchLost) as exc:
                if start is None or halvings >= cfg.max_halvings:
                    raise BranchLost(f"branch lost near p={p_try}: {exc}") from exc
                halvings += 1
                p_try = (start + p_try) / 2
                continue
            prev = sol
            if p_try == float(target):
                out.append(sol)
                break
            start, p_try, halvings = p_try, float(target), 0
    return out


def continuation_csv(solutions: list[PlanarSolution]) -> str:
    buf = io.StringIO()
    cols = ["p", "max_h", "min_h", "dist_to_polygon", "residual", "newton_iters"]
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for s in solutions:
        row = s.row()
        w.writerow({c: (repr(float(row[c])) if c != "newton_iters" else row[c]) for c in cols})
    return buf.getvalue()
