"""Convex bodies containing the origin.

Polytopes come in two representations that convert into each other:

* :class:`FacetPolytope` -- unit facet normals ``n_i`` and offsets ``h_i > 0``,
  the body ``{x : <n_i, x> <= h_i}``;
* :class:`VertexPolytope` -- a vertex list.

Both expose the same geometric surface (support and radial functions, exact
volume, polar body, extreme supports).  Non-polytopal bodies appear only as a
:class:`BodyView`, a pair of support/radial callables.

Hull computations are delegated to Qhull (``scipy.spatial.ConvexHull``); the
triangulated output is merged back into true facets by joining adjacent
simplices with matching hyperplanes.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
from scipy.optimize import minimize
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import ConvexHull, QhullError

from .errors import DegenerateHull, OriginNotInterior, Unbounded

log = logging.getLogger(__name__)

GEOM_TOL = 1e-9
_CHUNK = 4096


def affine_rank(points: np.ndarray, tol: float = GEOM_TOL) -> int:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if len(pts) <= 1:
        return 0
    centered = pts - pts.mean(axis=0)
    sv = np.linalg.svd(centered, compute_uv=False)
    scale = max(1.0, float(np.abs(pts).max()))
    return int(np.sum(sv > tol * scale))


@dataclass(frozen=True, eq=False)
class HullData:
    """Boundary structure of a full-dimensional convex hull.

    ``simplices`` triangulate the boundary; ``simplex_facet`` maps every
    simplex to its merged facet.  ``vertex_index`` records which input points
    are extreme.
    """

    vertices: np.ndarray
    vertex_index: np.ndarray
    normals: np.ndarray
    offsets: np.ndarray
    facets: tuple
    simplices: np.ndarray
    simplex_facet: np.ndarray

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @cached_property
    def simplex_areas(self) -> np.ndarray:
        d = self.dim
        P = self.vertices[self.simplices]
        E = P[:, 1:, :] - P[:, :1, :]
        G = E @ np.swapaxes(E, 1, 2)
        det = np.linalg.det(G) if d > 1 else np.ones(len(P))
        return np.sqrt(np.clip(det, 0.0, None)) / math.factorial(d - 1)

    @cached_property
    def facet_areas(self) -> np.ndarray:
        return np.bincount(self.simplex_facet, weights=self.simplex_areas,
                           minlength=len(self.facets))

    @cached_property
    def volume(self) -> float:
        # facet-pyramid decomposition about the origin
        return math.fsum(self.offsets * self.facet_areas) / self.dim


def convex_hull(points, tol: float = GEOM_TOL) -> HullData:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    npts, d = pts.shape
    if npts < d + 1 or affine_rank(pts, tol) < d:
        raise DegenerateHull(f"affine rank below {d} for {npts} points")
    try:
        hull = ConvexHull(pts)
    except QhullError as exc:
        raise DegenerateHull(str(exc).splitlines()[0]) from exc

    eq = hull.equations
    normals = eq[:, :-1]
    offs = -eq[:, -1]
    ns = len(eq)
    scale = max(1.0, float(np.abs(pts).max()))

    rows = np.repeat(np.arange(ns), hull.neighbors.shape[1])
    cols = hull.neighbors.ravel()
    same = (np.max(np.abs(normals[rows] - normals[cols]), axis=1) <= tol) & (
        np.abs(offs[rows] - offs[cols]) <= tol * scale)
    graph = coo_matrix((np.ones(int(same.sum())), (rows[same], cols[same])),
                       shape=(ns, ns))
    _, labels = connected_components(graph, directed=False)
    # relabel facets in order of first appearance for reproducibility
    _, first = np.unique(labels, return_index=True)
    order = np.argsort(first)
    relabel = np.empty_like(order)
    relabel[order] = np.arange(len(order))
    labels = relabel[labels]
    nf = len(order)

    fnormals = np.zeros((nf, d))
    np.add.at(fnormals, labels, normals)
    fnormals /= np.linalg.norm(fnormals, axis=1)[:, None]
    counts = np.bincount(labels, minlength=nf)
    foffs = np.bincount(labels, weights=offs, minlength=nf) / counts

    vmap = -np.ones(npts, dtype=int)
    vmap[hull.vertices] = np.arange(len(hull.vertices))
    simplices = vmap[hull.simplices]
    if np.any(simplices < 0):
        raise DegenerateHull("triangulation references a non-vertex point")

    pairs = np.unique(np.column_stack([np.repeat(labels, d), simplices.ravel()]), axis=0)
    splits = np.searchsorted(pairs[:, 0], np.arange(1, nf))
    facets = tuple(np.split(pairs[:, 1], splits))

    return HullData(
        vertices=pts[hull.vertices],
        vertex_index=np.asarray(hull.vertices),
        normals=fnormals,
        offsets=foffs,
        facets=facets,
        simplices=simplices,
        simplex_facet=labels,
    )


def _rowwise_max_dot(X: np.ndarray, V: np.ndarray) -> np.ndarray:
    out = np.empty(len(X))
    for s in range(0, len(X), _CHUNK):
        out[s:s + _CHUNK] = np.max(X[s:s + _CHUNK] @ V.T, axis=1)
    return out


def _radial_from_facets(Y: np.ndarray, N: np.ndarray, h: np.ndarray) -> np.ndarray:
    out = np.empty(len(Y))
    for s in range(0, len(Y), _CHUNK):
        dots = Y[s:s + _CHUNK] @ N.T
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(dots > 0, h[None, :] / dots, np.inf)
        out[s:s + _CHUNK] = ratio.min(axis=1)
    return out


def _as_points(X, dim: int) -> tuple[np.ndarray, bool]:
    arr = np.asarray(X, dtype=float)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[1] != dim:
        raise ValueError(f"expected points of dimension {dim}, got {arr.shape[1]}")
    return arr, single


class _PolytopeOps:
    """Geometry shared by both polytope representations.

    Subclasses provide ``vertex_array``, ``facet_normals``, ``facet_offsets``
    (irredundant H-representation) and ``hull``.
    """

    dim: int

    def support(self, X):
        arr, single = _as_points(X, self.dim)
        out = _rowwise_max_dot(arr, self.vertex_array)
        return out[0] if single else out

    def radial(self, Y):
        arr, single = _as_points(Y, self.dim)
        norms = np.linalg.norm(arr, axis=1)
        out = _radial_from_facets(arr / norms[:, None], self.facet_normals,
                                  self.facet_offsets) / norms
        return out[0] if single else out

    def volume(self) -> float:
        return self.hull.volume

    def V(self) -> float:
        """``(n+1)`` times the volume, the normalization used by the functionals."""
        return self.dim * self.volume()

    def min_support(self) -> float:
        return float(np.min(self.facet_offsets))

    def max_support(self) -> float:
        return float(np.max(np.linalg.norm(self.vertex_array, axis=1)))

    def max_radial(self) -> float:
        return self.max_support()

    def min_radial(self) -> float:
        return self.min_support()

    def to_off(self) -> str:
        """OFF export (3-D facets ordered counter-clockwise seen from outside)."""
        hd = self.hull
        lines = ["OFF", f"{len(hd.vertices)} {len(hd.facets)} 0"]
        lines += [" ".join(f"{c:.17g}" for c in v) for v in hd.vertices]
        for nrm, idx in zip(hd.normals, hd.facets):
            idx = np.asarray(idx)
            if self.dim == 3:
                idx = _ccw_order(hd.vertices[idx], nrm, idx)
            lines.append(" ".join(str(int(i)) for i in [len(idx), *idx]))
        return "\n".join(lines) + "\n"


def _ccw_order(P: np.ndarray, normal: np.ndarray, idx: np.ndarray) -> np.ndarray:
    c = P.mean(axis=0)
    u = P[0] - c
    u /= np.linalg.norm(u)
    w = np.cross(normal, u)
    ang = np.arctan2((P - c) @ w, (P - c) @ u)
    return idx[np.argsort(ang)]


@dataclass(frozen=True, eq=False)
class FacetPolytope(_PolytopeOps):
    """``{x : <n_i, x> <= h_i}`` with unit normals and positive offsets."""

    normals: np.ndarray
    offsets: np.ndarray

    def __post_init__(self):
        N = np.atleast_2d(np.array(self.normals, dtype=float))
        h = np.array(self.offsets, dtype=float).ravel()
        if len(N) != len(h):
            raise ValueError("normals and offsets differ in length")
        if np.any(np.abs(np.linalg.norm(N, axis=1) - 1.0) > 1e-12):
            raise ValueError("facet normals must be unit vectors")
        if np.any(~np.isfinite(h)) or np.any(h <= 0):
            raise OriginNotInterior("facet offsets must be positive")
        N.flags.writeable = False
        h.flags.writeable = False
        object.__setattr__(self, "normals", N)
        object.__setattr__(self, "offsets", h)

    @property
    def dim(self) -> int:
        return self.normals.shape[1]

    @cached_property
    def polar_hull(self) -> HullData:
        try:
            hd = convex_hull(self.normals / self.offsets[:, None])
        except DegenerateHull as exc:
            raise Unbounded("facet normals do not positively span") from exc
        if np.any(hd.offsets <= GEOM_TOL):
            raise Unbounded("facet normals do not positively span")
        return hd

    @cached_property
    def irredundant(self) -> np.ndarray:
        keep = np.sort(self.polar_hull.vertex_index)
        dropped = len(self.offsets) - len(keep)
        if dropped:
            log.debug("pruned %d redundant facets of %d", dropped, len(self.offsets))
        return keep

    @property
    def facet_normals(self) -> np.ndarray:
        return self.normals[self.irredundant]

    @property
    def facet_offsets(self) -> np.ndarray:
        return self.offsets[self.irredundant]

    @cached_property
    def vertex_array(self) -> np.ndarray:
        ph = self.polar_hull
        return ph.normals / ph.offsets[:, None]

    @cached_property
    def hull(self) -> HullData:
        return convex_hull(self.vertex_array)

    def pruned(self) -> "FacetPolytope":
        return FacetPolytope(self.facet_normals, self.facet_offsets)

    def dualize(self) -> "VertexPolytope":
        return VertexPolytope(self.vertex_array)

    def polar(self) -> "VertexPolytope":
        return VertexPolytope(self.facet_normals / self.facet_offsets[:, None])

    def scaled(self, mu: float) -> "FacetPolytope":
        return FacetPolytope(self.normals, self.offsets * mu)

    def transformed(self, M: np.ndarray) -> "FacetPolytope":
        """Image under an orthogonal map ``x -> M x``."""
        return FacetPolytope(self.normals @ np.asarray(M).T, self.offsets)

    def to_json(self) -> dict:
        return {"dim": self.dim, "normals": self.normals.tolist(),
                "offsets": self.offsets.tolist()}


@dataclass(frozen=True, eq=False)
class VertexPolytope(_PolytopeOps):
    """Convex hull of a point set, reduced to its extreme points.

    Degenerate inputs (affine rank below the ambient dimension) are kept as
    given and flagged through :attr:`degenerate`; any hull-based query on them
    raises :class:`DegenerateHull`.
    """

    vertices: np.ndarray

    def __post_init__(self):
        V = np.atleast_2d(np.array(self.vertices, dtype=float))
        if affine_rank(V) == V.shape[1]:
            hd = convex_hull(V)
            V = V[np.sort(hd.vertex_index)]
        V.flags.writeable = False
        object.__setattr__(self, "vertices", V)

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @cached_property
    def degenerate(self) -> bool:
        return affine_rank(self.vertices) < self.dim

    @property
    def vertex_array(self) -> np.ndarray:
        return self.vertices

    @cached_property
    def hull(self) -> HullData:
        return convex_hull(self.vertices)

    def _check_origin(self):
        if np.any(self.hull.offsets <= GEOM_TOL):
            raise OriginNotInterior("origin is not interior to the hull")

    @property
    def facet_normals(self) -> np.ndarray:
        self._check_origin()
        return self.hull.normals

    @property
    def facet_offsets(self) -> np.ndarray:
        self._check_origin()
        return self.hull.offsets

    def facets(self) -> FacetPolytope:
        return FacetPolytope(self.facet_normals, self.facet_offsets)

    def dualize(self) -> FacetPolytope:
        return self.facets()

    def polar(self) -> FacetPolytope:
        self._check_origin()
        r = np.linalg.norm(self.vertices, axis=1)
        return FacetPolytope(self.vertices / r[:, None], 1.0 / r)

    def scaled(self, mu: float) -> "VertexPolytope":
        return VertexPolytope(self.vertices * mu)

    def transformed(self, M: np.ndarray) -> "VertexPolytope":
        return VertexPolytope(self.vertices @ np.asarray(M).T)

    def to_json(self) -> dict:
        return {"dim": self.dim, "vertices": self.vertices.tolist()}


Polytope = FacetPolytope | VertexPolytope


def is_polytope(body) -> bool:
    return isinstance(body, (FacetPolytope, VertexPolytope))


def dualize(p):
    """Switch representation: facets to vertices or vertices to facets."""
    return p.dualize()


def polar(p):
    return p.polar()


def volume(p) -> float:
    return p.volume()


def min_support(p) -> float:
    return p.min_support()


def max_support(p) -> float:
    return p.max_support()


def polytope_from_json(data: dict | str):
    if isinstance(data, str):
        data = json.loads(data)
    if "vertices" in data:
        return VertexPolytope(np.asarray(data["vertices"], dtype=float))
    return FacetPolytope(np.asarray(data["normals"], dtype=float),
                         np.asarray(data["offsets"], dtype=float))


@dataclass(frozen=True, eq=False)
class BodyView:
    """A convex body known only through its support and radial functions.

    ``lipschitz`` bounds the Lipschitz constant of the support function on the
    sphere (the circumradius works); it feeds the uncertainty of grid minima.
    """

    dim: int
    support_fn: Callable[[np.ndarray], np.ndarray]
    radial_fn: Callable[[np.ndarray], np.ndarray]
    source: str = "function"
    lipschitz: float = 1.0

    def support(self, X):
        arr, single = _as_points(X, self.dim)
        out = np.asarray(self.support_fn(arr), dtype=float)
        return out[0] if single else out

    def radial(self, Y):
        arr, single = _as_points(Y, self.dim)
        norms = np.linalg.norm(arr, axis=1)
        out = np.asarray(self.radial_fn(arr / norms[:, None]), dtype=float) / norms
        return out[0] if single else out

    def polar(self) -> "BodyView":
        return BodyView(self.dim, lambda X: 1.0 / self.radial_fn(X),
                        lambda Y: 1.0 / self.support_fn(Y),
                        source=f"polar({self.source})", lipschitz=self.lipschitz)

    def scaled(self, mu: float) -> "BodyView":
        return BodyView(self.dim, lambda X: mu * self.support_fn(X),
                        lambda Y: mu * self.radial_fn(Y),
                        source=self.source, lipschitz=abs(mu) * self.lipschitz)

    @classmethod
    def ball(cls, dim: int, radius: float = 1.0) -> "BodyView":
        R = float(radius)
        return cls(dim, lambda X: np.full(len(X), R), lambda Y: np.full(len(Y), R),
                   source="ball", lipschitz=R)

    @classmethod
    def from_polytope(cls, p) -> "BodyView":
        return cls(p.dim, p.support, p.radial, source=type(p).__name__,
                   lipschitz=p.max_support())

    @property
    def is_ball(self) -> bool:
        return self.source == "ball"


def _sphere_points(dim: int, count: int | None = None) -> tuple[np.ndarray, float]:
    """Dense quasi-uniform sphere sample and its nominal spacing."""
    from .quadrature import fibonacci_sphere, s1_grid

    if dim == 2:
        m = count or 8192
        return s1_grid(m).nodes, 2 * math.pi / m
    if dim == 3:
        m = count or 40000
        return fibonacci_sphere(m), math.sqrt(4 * math.pi / m)
    m = count or 200000
    X = np.random.default_rng(0).standard_normal((m, dim))
    return X / np.linalg.norm(X, axis=1)[:, None], (1.0 / m) ** (1.0 / (dim - 1))


def hausdorff(A, B, count: int | None = None, refine: int = 6) -> float:
    """Support-function sup distance ``max_x |h_A(x) - h_B(x)|``.

    Evaluated on a dense sphere sample (8192 angles on S^1, 40000 Fibonacci
    points on S^2) and then polished by local maximization from the
    ``refine`` best nodes.  Without refinement the grid value underestimates
    the true distance by at most ``L * spacing``.
    """
    if A.dim != B.dim:
        raise ValueError("bodies live in different dimensions")
    X, _ = _sphere_points(A.dim, count)
    diff = np.abs(A.support(X) - B.support(X))
    best = float(diff.max())
    if refine <= 0 or A.dim > 3:
        return best
    for i in np.argsort(diff)[::-1][:refine]:
        x0 = X[i]
        basis = np.linalg.svd(x0[None, :])[2][1:]

        def neg(u, x0=x0, basis=basis):
            x = x0 + u @ basis
            x = x / np.linalg.norm(x)
            return -abs(float(A.support(x)) - float(B.support(x)))

        res = minimize(neg, np.zeros(A.dim - 1), method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": 1e-15, "initial_simplex":
                                None if A.dim != 2 else np.array([[0.0], [1e-3]])})
        best = max(best, -float(res.fun))
    return best


def cut_polytope(body, x0, group) -> FacetPolytope:
    """Intersection of the group orbit of the supporting half-space at ``x0``."""
    from .symmetry import orbit

    x0 = np.asarray(x0, dtype=float)
    x0 = x0 / np.linalg.norm(x0)
    normals = orbit(group, x0).points
    h0 = float(body.support(x0))
    P = FacetPolytope(normals, np.full(len(normals), h0))
    P.polar_hull  # raises Unbounded when the orbit does not positively span
    return P
