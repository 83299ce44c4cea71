"""Quadrature on S^1, S^2 and Euclidean simplices.

Two families of sphere integrals are provided:

* grid rules (:func:`s1_grid`, :func:`s2_grid`) for arbitrary integrands;
* exact-to-roundoff cone integrals over polytopes
  (:func:`polytope_radial_integral`, :func:`polytope_support_integral`).
  A polytope's radial function is ``h_i / <n_i, y>`` on the cone over facet
  ``i``; in gnomonic coordinates ``z`` centred at the foot point the cone
  contributes ``h_i^q * int f (1+|z|^2)^((q-n-1)/2) dz`` over the scaled
  facet, and the polygonal facet is fanned from the foot point so that the
  radial part integrates in closed form.  The remaining one-dimensional
  angular integrals use adaptive Gauss-Legendre.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from .errors import DegenerateSimplex, NonpositiveRadial, NonpositiveSupport

S1_DEFAULT = 2048
S2_DEFAULT_LEVEL = 10


def sphere_area(n: int) -> float:
    """``|S^n|``, the surface measure of the unit n-sphere."""
    return 2 * math.pi ** ((n + 1) / 2) / math.gamma((n + 1) / 2)


@dataclass(frozen=True, eq=False)
class SphereGrid:
    nodes: np.ndarray
    weights: np.ndarray
    kind: str = "grid"
    spacing: float = 0.0

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    def __len__(self) -> int:
        return len(self.weights)

    def integrate(self, values) -> float:
        """Compensated weighted sum (order-fixed, bit-stable)."""
        return math.fsum(self.weights * np.asarray(values, dtype=float))

    def to_json(self) -> dict:
        return {"kind": self.kind, "nodes": self.nodes.tolist(), "weights": self.weights.tolist()}


def s1_grid(m: int = S1_DEFAULT, phase: float = 0.0) -> SphereGrid:
    """``m`` uniform angles; the trapezoid rule is spectrally accurate for smooth periodic data."""
    if m < 8:
        raise ValueError("S^1 grid needs m >= 8")
    t = phase + 2 * math.pi * np.arange(m) / m
    return SphereGrid(np.column_stack([np.cos(t), np.sin(t)]), np.full(m, 2 * math.pi / m),
                      kind=f"s1:{m}", spacing=2 * math.pi / m)


def s2_grid(level: int = S2_DEFAULT_LEVEL) -> SphereGrid:
    """Product rule: ``10*level`` Gauss-Legendre nodes in cos(theta) times ``20*level`` angles.

    Exact for spherical polynomials of degree ``< min(20*level, 20*level)``,
    i.e. degree ``20*level - 1``.  Level 10 gives 20000 nodes.
    """
    if level < 1:
        raise ValueError("S^2 grid level must be >= 1")
    nt = 10 * level
    nphi = 2 * nt
    x, w = roots_legendre(nt)
    phi = 2 * math.pi * (np.arange(nphi) + 0.5) / nphi
    ct, ph = np.meshgrid(x, phi, indexing="ij")
    st = np.sqrt(1 - ct ** 2)
    nodes = np.column_stack([(st * np.cos(ph)).ravel(), (st * np.sin(ph)).ravel(), ct.ravel()])
    weights = np.repeat(w, nphi) * (2 * math.pi / nphi)
    return SphereGrid(nodes, weights, kind=f"s2:{level}", spacing=math.pi / nt)


def default_grid(dim: int) -> SphereGrid:
    if dim == 2:
        return s1_grid()
    if dim == 3:
        return s2_grid()
    raise ValueError("sphere grids exist for S^1 and S^2 only")


def fibonacci_sphere(m: int) -> np.ndarray:
    i = np.arange(m) + 0.5
    z = 1 - 2 * i / m
    t = math.pi * (3 - math.sqrt(5)) * i
    s = np.sqrt(1 - z * z)
    return np.column_stack([s * np.cos(t), s * np.sin(t), z])


def _values(fn, nodes: np.ndarray) -> np.ndarray:
    if fn is None:
        return np.ones(len(nodes))
    if callable(fn):
        return np.asarray(fn(nodes), dtype=float) * np.ones(len(nodes))
    arr = np.asarray(fn, dtype=float)
    return arr * np.ones(len(nodes))


def integral_fhp(grid: SphereGrid, f, h, p: float) -> float:
    """``sum w_i f(x_i) h(x_i)^p``; ``f`` and ``h`` are callables or node arrays."""
    if p == 0:
        raise ValueError("p must be nonzero")
    hv = _values(h, grid.nodes)
    if np.any(hv <= 0):
        raise NonpositiveSupport("support function is not positive on the grid")
    return grid.integrate(_values(f, grid.nodes) * hv ** p)


def Vq(grid: SphereGrid, r, q: float) -> float:
    """``sum w_i r(y_i)^q``."""
    if q == 0:
        raise ValueError("q must be nonzero")
    rv = _values(r, grid.nodes)
    if np.any(rv <= 0):
        raise NonpositiveRadial("radial function is not positive on the grid")
    return grid.integrate(rv ** q)


# adaptive Gauss-Legendre on batches of intervals ---------------------------

_GL_ORDER = 24


@lru_cache(maxsize=None)
def _gl(order: int) -> tuple[np.ndarray, np.ndarray]:
    return roots_legendre(order)


def adaptive_gl(fn: Callable[[np.ndarray, np.ndarray], np.ndarray], a: np.ndarray,
                b: np.ndarray, nowners: int, owners: np.ndarray | None = None,
                rtol: float = 1e-13, max_rounds: int = 40,
                max_active: int = 200_000) -> np.ndarray:
    """Integrate ``fn(t, owner)`` over intervals ``[a_j, b_j]``, summed per owner.

    ``fn`` receives flat arrays of abscissae and owner ids.  Each interval is
    accepted once the rule on the interval and on its two halves agree to
    ``rtol`` (relative to the interval result, with an absolute floor based on
    the running owner totals).  Intervals stuck at roundoff level are
    accepted once more than ``max_active`` of them remain.
    """
    x, w = _gl(_GL_ORDER)
    a = np.asarray(a, dtype=float).copy()
    b = np.asarray(b, dtype=float).copy()
    own = np.arange(len(a)) if owners is None else np.asarray(owners).copy()
    total = np.zeros(nowners)

    def rule(lo, hi, ow):
        mid, rad = (lo + hi) / 2, (hi - lo) / 2
        t = mid[:, None] + rad[:, None] * x[None, :]
        vals = fn(t.ravel(), np.repeat(ow, len(x))).reshape(t.shape)
        return rad * (vals @ w)

    whole = rule(a, b, own)
    for _ in range(max_rounds):
        if len(a) == 0:
            break
        m = (a + b) / 2
        left, right = rule(a, m, own), rule(m, b, own)
        fine = left + right
        scale = np.abs(total[own]) + np.abs(fine)
        floor = 1e-16 * (np.abs(total).sum() + np.abs(fine).sum())
        ok = (np.abs(fine - whole) <= rtol * scale + floor) | (np.abs(b - a) < 1e-12)
        if len(a) - ok.sum() > max_active:
            ok[:] = True  # roundoff-limited; accept the refined values
        np.add.at(total, own[ok], fine[ok])
        keep = ~ok
        a, m, b, own = a[keep], m[keep], b[keep], own[keep]
        left, right = left[keep], right[keep]
        a, b = np.concatenate([a, m]), np.concatenate([m, b])
        own = np.concatenate([own, own])
        whole = np.concatenate([left, right])
    if len(a):
        np.add.at(total, own, whole)
    return total


# exact polytope integrals -------------------------------------------------

def _facet_frames(normals: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Right-handed tangent bases ``(e1, e2)`` with ``e1 x e2 = n``."""
    helper = np.where(np.abs(normals[:, [0]]) < 0.9, np.array([[1.0, 0, 0]]), np.array([[0, 1.0, 0]]))
    e1 = np.cross(normals, helper)
    e1 /= np.linalg.norm(e1, axis=1)[:, None]
    e2 = np.cross(normals, e1)
    return e1, e2


def _radial_primitive(R2: np.ndarray, s: float) -> np.ndarray:
    """``int_0^R (1+rho^2)^s rho d rho`` as a function of ``R^2``."""
    if abs(s + 1) < 1e-14:
        return 0.5 * np.log1p(R2)
    return np.expm1((s + 1) * np.log1p(R2)) / (2 * (s + 1))


_INNER_ORDER = 40


def _cone_integral_2d(hd, q: float, f) -> float:
    """``int_{S^1} f r^q`` for the polygon with hull data ``hd``."""
    N, h = hd.normals, hd.offsets
    m = len(h)
    a = np.empty(m)
    b = np.empty(m)
    for i, idx in enumerate(hd.facets):
        P = hd.vertices[idx]
        t = np.array([-N[i, 1], N[i, 0]])
        ang = np.arctan2(P @ t, P @ N[i])
        a[i], b[i] = ang.min(), ang.max()
    hq = h ** q

    def fn(psi, ow):
        base = hq[ow] * np.cos(psi) ** (-q)
        if f is None:
            return base
        c, s = np.cos(psi), np.sin(psi)
        n = N[ow]
        dirs = np.column_stack([c * n[:, 0] - s * n[:, 1], s * n[:, 0] + c * n[:, 1]])
        return base * np.asarray(f(dirs), dtype=float)

    return math.fsum(adaptive_gl(fn, a, b, m))


def _cone_integral_3d(hd, q: float, f) -> float:
    N, h = hd.normals, hd.offsets
    e1, e2 = _facet_frames(N)
    s = (q - 3) / 2
    lo, hi, owner, dist, phin = [], [], [], [], []
    for i, idx in enumerate(hd.facets):
        P = hd.vertices[idx] / h[i]
        z = np.column_stack([P @ e1[i], P @ e2[i]])
        c = z.mean(axis=0)
        order = np.argsort(np.arctan2(z[:, 1] - c[1], z[:, 0] - c[0]))
        z = z[order]
        u, w = z, np.roll(z, -1, axis=0)
        cross = u[:, 0] * w[:, 1] - u[:, 1] * w[:, 0]
        use = np.abs(cross) > 1e-15
        u, w, cross = u[use], w[use], cross[use]
        edge = w - u
        L = np.linalg.norm(edge, axis=1)
        nrm = np.column_stack([edge[:, 1], -edge[:, 0]]) / L[:, None]
        d = np.einsum("ij,ij->i", nrm, u)
        nrm *= np.sign(d)[:, None]  # unit normal pointing from the foot point to the edge line
        pu = np.arctan2(u[:, 1], u[:, 0])
        dphi = np.arctan2(cross, np.einsum("ij,ij->i", u, w))
        lo.append(pu)
        hi.append(pu + dphi)
        owner.append(np.full(len(pu), i))
        dist.append(np.abs(d))
        phin.append(np.arctan2(nrm[:, 1], nrm[:, 0]))
    lo, hi = np.concatenate(lo), np.concatenate(hi)
    owner = np.concatenate(owner)
    dist, phin = np.concatenate(dist), np.concatenate(phin)
    hq = h ** q
    xs, ws = _gl(_INNER_ORDER)
    ts = (xs + 1) / 2

    def fn(phi, tri):
        R = dist[tri] / np.cos(phi - phin[tri])
        i = owner[tri]
        if f is None:
            return hq[i] * _radial_primitive(R * R, s)
        rho = R[:, None] * ts[None, :]
        zx, zy = rho * np.cos(phi)[:, None], rho * np.sin(phi)[:, None]
        Y = (N[i][:, None, :] + zx[..., None] * e1[i][:, None, :]
             + zy[..., None] * e2[i][:, None, :])
        Y /= np.linalg.norm(Y, axis=2)[..., None]
        fv = np.asarray(f(Y.reshape(-1, 3)), dtype=float).reshape(rho.shape)
        g = fv * (1 + rho * rho) ** s * rho
        return hq[i] * (R / 2) * (g @ ws)

    # signed angular ranges: adaptive_gl handles hi < lo through negative radii
    per_tri = adaptive_gl(fn, lo, hi, len(lo))
    return math.fsum(per_tri)


def polytope_radial_integral(P, q: float, f: Callable | None = None) -> float:
    """``int_{S^n} f r_P^q`` (``f`` = 1 when omitted) to near roundoff."""
    hd = P.hull
    if np.any(hd.offsets <= 0):
        raise NonpositiveRadial("origin is not interior")
    if P.dim == 2:
        return _cone_integral_2d(hd, q, f)
    if P.dim == 3:
        return _cone_integral_3d(hd, q, f)
    raise ValueError("exact cone integrals are available for dimensions 2 and 3")


def polytope_support_integral(P, p: float, f: Callable | None = None) -> float:
    """``int_{S^n} f h_P^p``, evaluated as ``int f r_{P*}^{-p}`` over the polar."""
    return polytope_radial_integral(P.polar(), -p, f)


# simplex quadrature -------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SimplexRule:
    """Conical-product Gauss-Jacobi rule in barycentric form (weights sum to 1)."""

    bary: np.ndarray
    weights: np.ndarray
    degree: int

    @property
    def dim(self) -> int:
        return self.bary.shape[1] - 1


@lru_cache(maxsize=None)
def simplex_rule(n: int, points: int = 10) -> SimplexRule:
    """Collapsed-coordinate rule on the n-simplex, exact to degree ``2*points - 1``."""
    if n < 1:
        raise ValueError("simplex dimension must be >= 1")
    axes = []
    for k in range(n):
        alpha = n - 1 - k
        x, w = roots_jacobi(points, alpha, 0.0)
        axes.append(((x + 1) / 2, w / 2 ** (alpha + 1)))
    grids = np.meshgrid(*[t for t, _ in axes], indexing="ij")
    wgrid = np.ones_like(grids[0])
    for k, (_, w) in enumerate(axes):
        shape = [1] * n
        shape[k] = points
        wgrid = wgrid * w.reshape(shape)
    T = np.column_stack([g.ravel() for g in grids])
    # Duffy map: x_1 = t_1, x_k = (1 - t_1)...(1 - t_{k-1}) t_k
    X = np.empty_like(T)
    rem = np.ones(len(T))
    for k in range(n):
        X[:, k] = rem * T[:, k]
        rem = rem * (1 - T[:, k])
    bary = np.column_stack([rem, X])
    weights = wgrid.ravel() * math.factorial(n)
    return SimplexRule(bary, weights / weights.sum(), 2 * points - 1)


def _simplex_volume(V: np.ndarray) -> float:
    n = V.shape[1]
    return abs(np.linalg.det(V[1:] - V[0])) / math.factorial(n)


def _apply_rule(V: np.ndarray, integrand, rule: SimplexRule) -> float:
    X = rule.bary @ V
    return _simplex_volume(V) * math.fsum(rule.weights * np.asarray(integrand(X), dtype=float))


def _bisect(V: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    m = len(V)
    best, pair = -1.0, (0, 1)
    for i in range(m):
        for j in range(i + 1, m):
            d = np.linalg.norm(V[i] - V[j])
            if d > best + 1e-15:
                best, pair = d, (i, j)
    i, j = pair
    mid = (V[i] + V[j]) / 2
    A, B = V.copy(), V.copy()
    A[j] = mid
    B[i] = mid
    return A, B


def simplex_integrate(simplex, integrand: Callable[[np.ndarray], np.ndarray],
                      rule: SimplexRule | None = None, rtol: float = 1e-10,
                      max_depth: int = 30) -> float:
    """Integrate ``integrand`` (vectorized over rows) over a simplex.

    The reference rule is mapped affinely; a piece is accepted once its value
    agrees with the sum over its longest-edge halves to ``rtol`` relative to
    the running total, otherwise both halves are refined.
    """
    V = np.atleast_2d(np.asarray(simplex, dtype=float))
    n = V.shape[1]
    if V.shape[0] != n + 1:
        raise DegenerateSimplex(f"need {n + 1} vertices in R^{n}")
    scale = max(1.0, float(np.abs(V).max())) ** n
    if _simplex_volume(V) <= 1e-14 * scale:
        raise DegenerateSimplex("simplex has zero volume")
    rule = rule or simplex_rule(n)
    whole = _apply_rule(V, integrand, rule)
    stack = [(V, whole, 0)]
    parts: list[float] = []
    ref = abs(whole)
    while stack:
        S, val, depth = stack.pop()
        A, B = _bisect(S)
        va, vb = _apply_rule(A, integrand, rule), _apply_rule(B, integrand, rule)
        if abs(va + vb - val) <= rtol * max(ref, 1e-300) or depth >= max_depth:
            parts.append(va + vb)
        else:
            stack.append((B, vb, depth + 1))
            stack.append((A, va, depth + 1))
    return math.fsum(parts)


def grid_to_json(grid: SphereGrid) -> str:
    return json.dumps(grid.to_json())
