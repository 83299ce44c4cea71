"""Scale-invariant functionals on convex bodies containing the origin.

For polytopes in dimensions 2 and 3 every sphere integral is evaluated by the
exact cone decomposition of :mod:`minklab.quadrature`; other bodies fall back
to the default sphere grids, with the difference to a half-resolution grid as
error estimate.  Every functional returns an :class:`Estimate`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from .bodies import BodyView, is_polytope
from .quadrature import (SphereGrid, default_grid, polytope_radial_integral,
                         polytope_support_integral, s1_grid, s2_grid, sphere_area)

EXACT_RTOL = 1e-12


@dataclass(frozen=True)
class Estimate:
    value: float
    error: float = 0.0

    def __float__(self) -> float:
        return self.value

    def to_json(self) -> dict:
        return {"value": self.value, "error": self.error}


@dataclass(frozen=True, eq=False)
class DensitySpec:
    """A positive density ``f`` on the sphere with bounds ``c1 <= f <= c2``.

    ``fn`` is ``None`` for a constant density, which then cancels from every
    normalized average.
    """

    dim: int
    fn: Callable[[np.ndarray], np.ndarray] | None = None
    constant: float = 1.0
    c1: float = 1.0
    c2: float = 1.0
    label: str = "1"

    @classmethod
    def const(cls, dim: int, c: float = 1.0) -> "DensitySpec":
        if c <= 0:
            raise ValueError("density must be positive")
        return cls(dim, None, float(c), float(c), float(c), label=repr(float(c)))

    @classmethod
    def from_function(cls, dim: int, fn, label: str = "f",
                      grid: SphereGrid | None = None) -> "DensitySpec":
        """Wrap ``fn`` and certify positive bounds on ``grid``."""
        grid = grid or default_grid(dim)
        vals = np.asarray(fn(grid.nodes), dtype=float)
        c1, c2 = float(vals.min()), float(vals.max())
        if not np.all(np.isfinite(vals)) or c1 <= 0:
            raise ValueError(f"density {label!r} is not positive on the sphere grid")
        return cls(dim, fn, 1.0, c1, c2, label=label)

    @property
    def is_constant(self) -> bool:
        return self.fn is None

    def __call__(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        if self.fn is None:
            return np.full(len(X), self.constant)
        return np.asarray(self.fn(X), dtype=float)

    @cached_property
    def total(self) -> float:
        """``int_{S^n} f``."""
        n = self.dim - 1
        if self.fn is None:
            return self.constant * sphere_area(n)
        return default_grid(self.dim).integrate(self(default_grid(self.dim).nodes))

    def invariance_defect(self, group, X: np.ndarray | None = None) -> float:
        if self.fn is None:
            return 0.0
        X = default_grid(self.dim).nodes[::7] if X is None else X
        return group.invariance_defect(self, X)


def _density(f, dim: int) -> DensitySpec:
    if f is None:
        return DensitySpec.const(dim)
    if isinstance(f, DensitySpec):
        return f
    if np.isscalar(f):
        return DensitySpec.const(dim, float(f))
    return DensitySpec.from_function(dim, f)


def _coarse_grid(dim: int) -> SphereGrid:
    return s1_grid(1024) if dim == 2 else s2_grid(5)


def _grid_integral(values_fn, dim: int) -> Estimate:
    fine = default_grid(dim)
    coarse = _coarse_grid(dim)
    a = fine.integrate(values_fn(fine.nodes))
    b = coarse.integrate(values_fn(coarse.nodes))
    return Estimate(a, abs(a - b))


def support_integral(body, p: float, f=None) -> Estimate:
    """``int f h^p`` over the sphere."""
    dens = _density(f, body.dim)
    if is_polytope(body) and body.dim in (2, 3):
        fn = None if dens.is_constant else dens
        v = polytope_support_integral(body, p, fn) * (dens.constant if dens.is_constant else 1.0)
        return Estimate(v, EXACT_RTOL * abs(v))
    return _grid_integral(lambda X: dens(X) * body.support(X) ** p, body.dim)


def radial_integral(body, q: float, f=None) -> Estimate:
    """``int f r^q`` over the sphere."""
    dens = _density(f, body.dim)
    if is_polytope(body) and body.dim in (2, 3):
        fn = None if dens.is_constant else dens
        v = polytope_radial_integral(body, q, fn) * (dens.constant if dens.is_constant else 1.0)
        return Estimate(v, EXACT_RTOL * abs(v))
    return _grid_integral(lambda X: dens(X) * body.radial(X) ** q, body.dim)


def V(body) -> Estimate:
    """``(n+1)`` times the volume."""
    if is_polytope(body):
        v = body.V()
        return Estimate(v, EXACT_RTOL * v)
    return radial_integral(body, body.dim)


def Vq(body, q: float) -> Estimate:
    if q == 0:
        raise ValueError("q must be nonzero")
    return radial_integral(body, q)


def min_support(body) -> Estimate:
    """Exact for polytopes; grid minimum with Lipschitz uncertainty otherwise."""
    if is_polytope(body):
        return Estimate(body.min_support(), 0.0)
    if isinstance(body, BodyView) and body.is_ball:
        return Estimate(float(body.support(np.eye(body.dim)[0])), 0.0)
    grid = default_grid(body.dim)
    return Estimate(float(np.min(body.support(grid.nodes))),
                    getattr(body, "lipschitz", 1.0) * grid.spacing)


def max_radial(body) -> Estimate:
    if is_polytope(body):
        return Estimate(body.max_radial(), 0.0)
    if isinstance(body, BodyView) and body.is_ball:
        return Estimate(float(body.radial(np.eye(body.dim)[0])), 0.0)
    grid = default_grid(body.dim)
    return Estimate(float(np.max(body.radial(grid.nodes))),
                    getattr(body, "lipschitz", 1.0) * grid.spacing)


def _mean_power(body, f, p: float) -> tuple[float, float]:
    """``log(int f h^p / int f)`` and its absolute error."""
    dens = _density(f, body.dim)
    I = support_integral(body, p, dens)
    return math.log(I.value / dens.total), I.error / I.value


def normalization_lambda(body, f=None, p: float = -2.0) -> float:
    """``(int f h^p / int f)^(1/p)``; the body scaled by ``1/lambda`` satisfies the constraint."""
    if p == 0:
        raise ValueError("p must be nonzero")
    lm, _ = _mean_power(body, f, p)
    return math.exp(lm / p)


def _combine(logv: float, rel_v: float, expo: float, logm: float, rel_m: float) -> Estimate:
    val = math.exp(logv + expo * logm)
    return Estimate(val, val * (rel_v + abs(expo) * rel_m))


def F_p(body, f=None, p: float = -2.0) -> Estimate:
    """``V (int f h^p / int f)^(-(n+1)/p)``."""
    if p == 0:
        raise ValueError("p must be nonzero")
    v = V(body)
    lm, em = _mean_power(body, f, p)
    return _combine(math.log(v.value), v.error / v.value, -body.dim / p, lm, em)


def F_pq(body, f=None, p: float = -2.0, q: float = 1.0) -> Estimate:
    """``V_q (int f h^p / int f)^(-q/p)``."""
    if p == 0 or q == 0:
        raise ValueError("p and q must be nonzero")
    v = Vq(body, q)
    lm, em = _mean_power(body, f, p)
    return _combine(math.log(v.value), v.error / v.value, -q / p, lm, em)


def F_minus_infinity(body) -> Estimate:
    """``V / (min h)^(n+1)``."""
    v = V(body)
    m = min_support(body)
    val = v.value / m.value ** body.dim
    return Estimate(val, val * (v.error / v.value + body.dim * m.error / m.value))


def F_minus_infinity_q(body, q: float) -> Estimate:
    """``V_q / (min h)^q``."""
    v = Vq(body, q)
    m = min_support(body)
    val = v.value / m.value ** q
    return Estimate(val, val * (v.error / v.value + abs(q) * m.error / m.value))


def F_star_pq(body, f=None, p: float = -2.0, q: float = 1.0) -> Estimate:
    """``(int h^p) (int f r^q / int f)^(-p/q)``, the dual functional evaluated on ``body``."""
    if p == 0 or q == 0:
        raise ValueError("p and q must be nonzero")
    dens = _density(f, body.dim)
    a = support_integral(body, p)
    b = radial_integral(body, q, dens)
    return _combine(math.log(a.value), a.error / a.value, -p / q,
                    math.log(b.value / dens.total), b.error / b.value)


def duality_check(body, f=None, p: float = -8.0, q: float = 2.0) -> float:
    """``|F_{-q,-p}(body) - F*_{p,q}(polar body)|``."""
    lhs = F_pq(body, f, -q, -p)
    rhs = F_star_pq(body.polar(), f, p, q)
    return abs(lhs.value - rhs.value)


@dataclass(frozen=True)
class BallBound:
    value: float
    bound: float

    @property
    def gap(self) -> float:
        return self.bound - self.value

    @property
    def holds(self) -> bool:
        return self.value <= self.bound + 1e-6

    def to_json(self) -> dict:
        return {"value": self.value, "bound": self.bound, "gap": self.gap}


def ball_bound_check(body, q: float) -> BallBound:
    """``int h_{K}^{-q}`` for the polar ``K`` of ``body`` scaled to ``max r_K = 1``.

    Since ``h_K = 1 / r_body`` this equals ``V_q(body) / (min h_body)^q``; the
    bound is ``|S^n|`` with equality only for balls.
    """
    if q >= 0:
        raise ValueError("the ball bound needs q < 0")
    value = F_minus_infinity_q(body, q).value
    return BallBound(value, sphere_area(body.dim - 1))


# residuals -----------------------------------------------------------------

def spectral_second_derivative(h: np.ndarray) -> np.ndarray:
    """Second derivative of uniformly sampled periodic data on [0, 2 pi)."""
    m = len(h)
    k = np.fft.rfftfreq(m, d=1.0 / m)
    spec = np.fft.rfft(h)
    if m % 2 == 0:
        spec[-1] = 0.0
    return np.fft.irfft(-(k ** 2) * spec, n=m)


def planar_EL_residual(h: np.ndarray, f=None, p: float = -2.0) -> float:
    """``max |h'' + h - f h^(p-1)|`` for periodic samples ``h`` on a uniform circle grid."""
    h = np.asarray(h, dtype=float)
    m = len(h)
    t = 2 * math.pi * np.arange(m) / m
    X = np.column_stack([np.cos(t), np.sin(t)])
    fv = _density(f, 2)(X)
    return float(np.max(np.abs(spectral_second_derivative(h) + h - fv * h ** (p - 1))))


def dual_EL_residual(h: np.ndarray, f=None, p: float = -2.0, q: float = 2.0) -> float:
    """Planar residual of the dual equation ``h''+h = f h^(p-1) (h^2+h'^2)^((2-q)/2)``."""
    h = np.asarray(h, dtype=float)
    m = len(h)
    k = np.fft.rfftfreq(m, d=1.0 / m)
    spec = np.fft.rfft(h)
    if m % 2 == 0:
        spec[-1] = 0.0
    hp = np.fft.irfft(1j * k * spec, n=m)
    t = 2 * math.pi * np.arange(m) / m
    fv = _density(f, 2)(np.column_stack([np.cos(t), np.sin(t)]))
    rhs = fv * h ** (p - 1) * (h * h + hp * hp) ** ((2 - q) / 2)
    return float(np.max(np.abs(spectral_second_derivative(h) + h - rhs)))
