"""Regular polytopes, flags, centroid chains and local-maximality integrals.

A flag ``F_n > F_{n-1} > ... > F_0`` of a tangent regular polytope, together
with the polytope centre, gives the centroid chain ``O_{n+1}=0, O_n, ...,
O_0``.  Consecutive chain segments are mutually orthogonal, so in the facet
frame with ``e_j`` along ``O_{n-j+1} -> O_{n-j}`` the base simplex is

    conv{0, R_n e_1, R_n e_1 + R_{n-1} e_2, ...},   R_j = |O_j - O_{j-1}|,

which lies in the closed positive orthant.  Copies of it tile every facet.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from .bodies import FacetPolytope, VertexPolytope, affine_rank, hausdorff
from .errors import (ClosureOverflow, InvalidFlag, OutsideSimplex, SampleViolation,
                     UnknownSymbol)
from .quadrature import simplex_integrate
from .symmetry import (SymmetryGroup, dihedral, hyperoctahedral, icosahedral, octahedral,
                       simplex_frame, simplex_group, tetrahedral)

log = logging.getLogger(__name__)

PHI = (1 + math.sqrt(5)) / 2

_NAMES = {
    "triangle": (3,), "square": (4,), "pentagon": (5,), "hexagon": (6,),
    "octagon": (8,), "tetrahedron": (3, 3), "cube": (4, 3), "octahedron": (3, 4),
    "dodecahedron": (5, 3), "icosahedron": (3, 5), "5-cell": (3, 3, 3),
    "tesseract": (4, 3, 3), "16-cell": (3, 3, 4), "24-cell": (3, 4, 3),
    "120-cell": (5, 3, 3), "600-cell": (3, 3, 5),
}
_LABELS = {v: k for k, v in _NAMES.items()}


def parse_schlafli(symbol) -> tuple[int, ...]:
    if isinstance(symbol, (tuple, list)):
        return tuple(int(s) for s in symbol)
    if isinstance(symbol, int):
        return (symbol,)
    text = str(symbol).strip().lower()
    if text in _NAMES:
        return _NAMES[text]
    if text.endswith("-gon"):
        text = text[:-4]
    text = text.strip("{}")
    try:
        return tuple(int(s) for s in text.split(","))
    except ValueError as exc:
        raise UnknownSymbol(f"cannot parse Schlafli symbol {symbol!r}") from exc


def _even_permutations(m: int):
    for perm in itertools.permutations(range(m)):
        inv = sum(1 for i in range(m) for j in range(i + 1, m) if perm[i] > perm[j])
        if inv % 2 == 0:
            yield perm


def _signed(points) -> np.ndarray:
    out = set()
    for p in points:
        nz = [i for i, c in enumerate(p) if c != 0]
        for signs in itertools.product((1, -1), repeat=len(nz)):
            q = list(p)
            for i, s in zip(nz, signs):
                q[i] = s * q[i]
            out.add(tuple(q))
    return np.array(sorted(out), dtype=float)


def _vertices_and_group(sym: tuple[int, ...]) -> tuple[np.ndarray, SymmetryGroup | None]:
    d = len(sym) + 1
    if d == 2:
        k = sym[0]
        if k < 3:
            raise UnknownSymbol("polygons need at least 3 sides")
        t = (2 * np.arange(k) + 1) * math.pi / k
        return np.column_stack([np.cos(t), np.sin(t)]), dihedral(k)
    if sym == (3, 3):
        return np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], float), tetrahedral()
    if sym == (4, 3):
        return _signed([(1, 1, 1)]), octahedral()
    if sym == (3, 4):
        return _signed([(1, 0, 0), (0, 1, 0), (0, 0, 1)]), octahedral()
    if sym == (3, 5):
        base = [(0, 1, PHI), (1, PHI, 0), (PHI, 0, 1)]
        return _signed(base), icosahedral()
    if sym == (5, 3):
        # dual of the icosahedron, so both share the orientation of the group
        hd = VertexPolytope(_signed([(0, 1, PHI), (1, PHI, 0), (PHI, 0, 1)])).hull
        return hd.normals / hd.offsets[:, None], icosahedral()
    if d == 4 and sym == (3, 4, 3):
        pts = set()
        for perm in itertools.permutations([1, 1, 0, 0]):
            pts.add(perm)
        return _signed(sorted(pts)), None
    if d == 4 and sym == (3, 3, 5):
        return _six_hundred_cell(), None
    if d == 4 and sym == (5, 3, 3):
        hd = VertexPolytope(_six_hundred_cell()).hull
        return hd.normals / hd.offsets[:, None], None
    n = d - 1
    if all(s == 3 for s in sym):
        B = simplex_frame(n)
        try:
            grp = simplex_group(n)
        except ClosureOverflow:
            grp = None
        return B.T.copy(), grp
    if sym == (4,) + (3,) * (n - 1) or sym == (3,) * (n - 1) + (4,):
        try:
            grp = hyperoctahedral(n)
        except ClosureOverflow:
            grp = None
        if sym[0] == 4:
            return _signed([(1,) * d]), grp
        return _signed([tuple(np.eye(d, dtype=int)[i]) for i in range(d)]), grp
    raise UnknownSymbol(f"no regular polytope {{{','.join(map(str, sym))}}} in dimension {d}")


def _six_hundred_cell() -> np.ndarray:
    pts = set(map(tuple, _signed([(0.5, 0.5, 0.5, 0.5)])))
    pts |= set(map(tuple, _signed([tuple(np.eye(4)[i]) for i in range(4)])))
    base = (PHI / 2, 0.5, 1 / (2 * PHI), 0.0)
    for perm in _even_permutations(4):
        pts |= set(map(tuple, _signed([tuple(base[perm[i]] for i in range(4))])))
    return np.array(sorted(pts), dtype=float)


@dataclass(frozen=True, eq=False)
class RegularPolytope:
    """A regular polytope centred at the origin.

    ``normalization`` is ``"tangent"`` (all facet offsets 1) or
    ``"circumradius"`` (all vertices on the unit sphere).
    """

    schlafli: tuple
    vertices: np.ndarray
    group: SymmetryGroup | None
    normalization: str = "tangent"

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def n(self) -> int:
        return self.dim - 1

    @property
    def name(self) -> str:
        if self.dim == 2:
            return f"{self.schlafli[0]}-gon"
        return _LABELS.get(tuple(self.schlafli), "{" + ",".join(map(str, self.schlafli)) + "}")

    @cached_property
    def polytope(self) -> VertexPolytope:
        return VertexPolytope(self.vertices)

    @cached_property
    def facet_polytope(self) -> FacetPolytope:
        return self.polytope.facets()

    @property
    def hull(self):
        return self.polytope.hull

    @property
    def facets(self) -> list[frozenset]:
        return [frozenset(map(int, f)) for f in self.hull.facets]

    @property
    def inradius(self) -> float:
        return float(np.min(self.hull.offsets))

    @property
    def circumradius(self) -> float:
        return float(np.max(np.linalg.norm(self.vertices, axis=1)))

    def normalized(self, kind: str) -> "RegularPolytope":
        if kind == "tangent":
            scale = self.inradius
        elif kind == "circumradius":
            scale = self.circumradius
        else:
            raise ValueError("normalization is 'tangent' or 'circumradius'")
        return RegularPolytope(self.schlafli, self.vertices / scale, self.group, kind)

    def face_index(self, points) -> frozenset:
        """Vertex-index set of the given coordinates (each must be a vertex)."""
        P = np.atleast_2d(np.asarray(points, dtype=float))
        idx = []
        for p in P:
            d = np.linalg.norm(self.vertices - p, axis=1)
            j = int(np.argmin(d))
            if d[j] > 1e-9:
                raise InvalidFlag(f"{p.tolist()} is not a vertex")
            idx.append(j)
        return frozenset(idx)

    def face_through(self, points) -> frozenset:
        """Smallest face containing all ``points`` (which need not be vertices)."""
        P = np.atleast_2d(np.asarray(points, dtype=float))
        hd = self.hull
        tight = np.all(np.abs(P @ hd.normals.T - hd.offsets) < 1e-9, axis=0)
        if not np.any(tight):
            return frozenset(range(len(self.vertices)))
        on = np.all(np.abs(self.vertices @ hd.normals[tight].T - hd.offsets[tight]) < 1e-9, axis=1)
        return frozenset(np.flatnonzero(on).tolist())

    def face_dim(self, face) -> int:
        return affine_rank(self.vertices[sorted(face)])

    def subfaces(self, face) -> list[frozenset]:
        """Faces of one dimension less contained in ``face``."""
        face = frozenset(face)
        d = self.face_dim(face)
        if d == 0:
            return []
        if d == self.dim:
            return sorted(self.facets, key=sorted)
        out = set()
        for G in self.facets:
            S = face & G
            if S != face and len(S) >= d and self.face_dim(S) == d - 1:
                out.add(frozenset(S))
        return sorted(out, key=sorted)

    def is_face(self, face) -> bool:
        face = frozenset(face)
        if not face or not all(0 <= i < len(self.vertices) for i in face):
            return False
        if len(face) == 1:
            return True
        containing = [G for G in self.facets if face <= G]
        if not containing:
            return False
        return frozenset.intersection(*containing) == face

    def flags_through(self, facet) -> list[tuple[frozenset, ...]]:
        """All flags ``(facet, ..., vertex)`` starting at ``facet``."""
        out = []

        def walk(chain):
            subs = self.subfaces(chain[-1])
            if not subs:
                out.append(tuple(chain))
                return
            for s in subs:
                walk(chain + [s])

        walk([frozenset(facet)])
        return out

    def default_flag(self) -> tuple[frozenset, ...]:
        chain = [sorted(self.facets, key=sorted)[0]]
        while self.face_dim(chain[-1]) > 0:
            chain.append(self.subfaces(chain[-1])[0])
        return tuple(chain)

    @cached_property
    def flag_count(self) -> int:
        """Flags of the whole polytope (equals the order of its symmetry group)."""
        return len(self.facets) * len(self.flags_through(self.facets[0]))

    def to_json(self) -> dict:
        return {"schlafli": list(self.schlafli), "name": self.name, "dim": self.dim,
                "normalization": self.normalization,
                "vertices": self.vertices.tolist(),
                "facets": len(self.facets),
                "group": None if self.group is None else self.group.name,
                "group_order": None if self.group is None else self.group.order}


def regular_catalog(schlafli, n: int | None = None) -> RegularPolytope:
    """Tangent-normalized regular polytope for a Schlafli symbol or common name."""
    sym = parse_schlafli(schlafli)
    if n is not None and len(sym) != n:
        raise UnknownSymbol(f"symbol {sym} does not describe a polytope in R^{n + 1}")
    V, grp = _vertices_and_group(sym)
    T = RegularPolytope(sym, V, grp, "circumradius")
    return T.normalized("tangent")


def catalog_listing() -> list[dict]:
    out = []
    for sym in [(3,), (4,), (5,), (6,), (8,), (3, 3), (4, 3), (3, 4), (5, 3), (3, 5),
                (3, 3, 3), (4, 3, 3), (3, 3, 4), (3, 4, 3), (5, 3, 3), (3, 3, 5)]:
        V, grp = _vertices_and_group(sym)
        out.append({"schlafli": list(sym), "name": _LABELS.get(sym, f"{sym[0]}-gon"),
                    "dim": V.shape[1], "vertices": len(V),
                    "group": None if grp is None else grp.name,
                    "group_order": None if grp is None else grp.order})
    return out


@dataclass(frozen=True, eq=False)
class CentroidChain:
    """Centroids ``O_{n+1}, ..., O_0`` (rows) and lengths ``R_{n+1}, ..., R_1``."""

    points: np.ndarray
    lengths: np.ndarray
    flag: tuple = field(default=(), repr=False)

    @property
    def n(self) -> int:
        return len(self.points) - 2

    def R(self, j: int) -> float:
        """``|O_j - O_{j-1}|`` for ``j`` in ``1..n+1``."""
        return float(self.lengths[self.n + 1 - j])

    def O(self, j: int) -> np.ndarray:
        return self.points[self.n + 1 - j]

    @cached_property
    def orthogonality_residual(self) -> float:
        """Max ``|<O_j - O_{j-1}, O_i - O_{j-1}>|`` over ``i < j - 1``."""
        worst = 0.0
        for j in range(self.n + 1, 1, -1):
            seg = self.O(j) - self.O(j - 1)
            for i in range(j - 1):
                worst = max(worst, abs(float(seg @ (self.O(i) - self.O(j - 1)))))
        return worst

    def to_json(self) -> dict:
        return {"points": self.points.tolist(), "lengths": self.lengths.tolist(),
                "orthogonality_residual": self.orthogonality_residual}


def centroid_chain(T: RegularPolytope, flag=None) -> CentroidChain:
    flag = T.default_flag() if flag is None else tuple(frozenset(f) for f in flag)
    if len(flag) != T.dim:
        raise InvalidFlag(f"a flag of a {T.dim}-polytope has {T.dim} faces")
    for j, face in enumerate(flag):
        if not T.is_face(face) or T.face_dim(face) != T.n - j:
            raise InvalidFlag(f"entry {j} is not a face of dimension {T.n - j}")
        if j and not face < flag[j - 1]:
            raise InvalidFlag("flag faces are not nested")
    pts = [np.zeros(T.dim)] + [T.vertices[sorted(f)].mean(axis=0) for f in flag]
    pts = np.array(pts)
    lengths = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    chain = CentroidChain(pts, lengths, flag)
    if chain.orthogonality_residual > 1e-8:
        raise InvalidFlag(f"centroid chain is not orthogonal ({chain.orthogonality_residual:.2e})")
    return chain


@dataclass(frozen=True, eq=False)
class BaseSimplex:
    """``Omega_n`` in facet coordinates; ``frame`` rows are ``e_1..e_n, nu``."""

    vertices: np.ndarray
    frame: np.ndarray
    chain: CentroidChain

    @property
    def n(self) -> int:
        return self.vertices.shape[1]

    @property
    def volume(self) -> float:
        V = self.vertices
        return abs(np.linalg.det(V[1:] - V[0])) / math.factorial(self.n)

    def barycentric(self, w) -> np.ndarray:
        V = self.vertices
        w = np.asarray(w, dtype=float)
        lam = np.linalg.solve((V[1:] - V[0]).T, w - V[0])
        return np.concatenate([[1 - lam.sum()], lam])

    def contains(self, w, tol: float = 1e-12) -> bool:
        return bool(np.all(self.barycentric(w) >= -tol))

    def to_sphere(self, Z: np.ndarray) -> np.ndarray:
        """Unit directions of the facet points with coordinates ``Z``."""
        Z = np.atleast_2d(Z)
        X = self.frame[-1] * np.linalg.norm(self.chain.O(self.n)) + Z @ self.frame[:-1]
        return X / np.linalg.norm(X, axis=1)[:, None]

    def to_json(self) -> dict:
        return {"vertices": self.vertices.tolist(), "frame": self.frame.tolist(),
                "chain": self.chain.to_json()}


def base_simplex(T: RegularPolytope, chain: CentroidChain | None = None) -> BaseSimplex:
    chain = centroid_chain(T) if chain is None else chain
    n = T.n
    On = chain.O(n)
    nu = On / np.linalg.norm(On)
    basis = []
    for j in range(1, n + 1):
        seg = chain.O(n - j) - chain.O(n - j + 1)
        basis.append(seg / np.linalg.norm(seg))
    frame = np.vstack(basis + [nu])
    Z = (chain.points[1:] - On) @ frame[:-1].T
    Z[np.abs(Z) < 1e-14] = 0.0
    return BaseSimplex(Z, frame, chain)


# local-maximality integrals -------------------------------------------------

def _ratio(Z: np.ndarray, w0: np.ndarray) -> np.ndarray:
    return math.sqrt(1 + float(w0 @ w0)) / (1 + Z @ w0)


def _checked(base: BaseSimplex, w0) -> np.ndarray:
    w0 = np.asarray(w0, dtype=float)
    if not base.contains(w0):
        raise OutsideSimplex(f"{w0.tolist()} lies outside the base simplex")
    return w0


def _integrate(base: BaseSimplex, fn) -> float:
    return simplex_integrate(base.vertices, fn)


def vbar(base: BaseSimplex, w0, check: bool = True) -> float:
    """Volume-difference integral ``int (1 - |ratio|^(n+1)) dz`` over the base simplex."""
    w0 = _checked(base, w0) if check else np.asarray(w0, dtype=float)
    if not np.any(w0):
        return 0.0
    n = base.n
    return _integrate(base, lambda Z: 1 - np.abs(_ratio(Z, w0)) ** (n + 1))


def vbar_q(base: BaseSimplex, w0, q: float, check: bool = True) -> float:
    w0 = _checked(base, w0) if check else np.asarray(w0, dtype=float)
    if not np.any(w0):
        return 0.0
    n = base.n
    return _integrate(base, lambda Z: (1 + np.einsum("ij,ij->i", Z, Z)) ** ((q - n - 1) / 2)
                      * (1 - np.abs(_ratio(Z, w0)) ** q))


def vbar_pf(base: BaseSimplex, w0, p: float, f: Callable | None = None,
            check: bool = True) -> float:
    """``f`` is a function of facet coordinates (rows of ``Z``); default 1."""
    w0 = _checked(base, w0) if check else np.asarray(w0, dtype=float)
    if not np.any(w0):
        return 0.0
    n = base.n

    def integrand(Z):
        fv = 1.0 if f is None else np.asarray(f(Z), dtype=float)
        return (fv * (1 + np.einsum("ij,ij->i", Z, Z)) ** ((-p - n - 1) / 2)
                * (1 - np.abs(_ratio(Z, w0)) ** (-p)))

    return _integrate(base, integrand)


def derivative_at_zero(base: BaseSimplex, a, variant: str = "volume", q: float | None = None,
                       p: float | None = None, f: Callable | None = None) -> float:
    """Radial derivative at ``w0 = 0`` along ``a`` of the chosen volume-difference integral."""
    a = np.asarray(a, dtype=float)
    if np.any(a < 0) or not np.any(a > 0):
        raise ValueError("direction must lie in the closed positive orthant and be nonzero")
    n = base.n
    if variant == "volume":
        return (n + 1) * _integrate(base, lambda Z: Z @ a)
    if variant == "q":
        if q is None:
            raise ValueError("q variant needs q")
        return q * _integrate(base, lambda Z: (1 + np.einsum("ij,ij->i", Z, Z)) ** ((q - n - 1) / 2)
                              * (Z @ a))
    if variant == "pf":
        if p is None:
            raise ValueError("pf variant needs p")

        def integrand(Z):
            fv = 1.0 if f is None else np.asarray(f(Z), dtype=float)
            return fv * (1 + np.einsum("ij,ij->i", Z, Z)) ** ((-p - n - 1) / 2) * (Z @ a)

        return -p * _integrate(base, integrand)
    raise ValueError(f"unknown variant {variant!r}")


def vbar_scan_csv(base: BaseSimplex, points: np.ndarray, variant: str = "volume",
                  q: float | None = None, p: float | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"w{i + 1}" for i in range(base.n)] + ["value"])
    for pt in np.atleast_2d(points):
        if variant == "volume":
            v = vbar(base, pt)
        elif variant == "q":
            v = vbar_q(base, pt, q)
        else:
            v = vbar_pf(base, pt, p)
        w.writerow([repr(float(c)) for c in pt] + [repr(float(v))])
    return buf.getvalue()


def tiling_defect(T: RegularPolytope) -> float:
    """``|#flags per facet * vol(Omega_n) - facet area|``."""
    base = base_simplex(T)
    facet = sorted(T.facets, key=sorted)[0]
    count = len(T.flags_through(facet))
    idx = [i for i, f in enumerate(T.hull.facets) if frozenset(map(int, f)) == facet][0]
    return abs(count * base.volume - float(T.hull.facet_areas[idx]))


# falsification harness ----------------------------------------------------

@dataclass(frozen=True)
class SampleReport:
    functional: str
    trials: int
    violations: int
    worst_margin: float
    skipped: int = 0  # exact copies of T drawn and redrawn

    def to_json(self) -> dict:
        return {"functional": self.functional, "trials": self.trials,
                "violations": self.violations, "worst_margin": self.worst_margin,
                "skipped": self.skipped}


def _perturbed_classes(T: RegularPolytope, rng: np.random.Generator, delta: float):
    n0 = T.hull.normals[0]
    classes = []
    d = T.dim
    if rng.random() < 0.5:
        g = rng.standard_normal(d)
        g -= (g @ n0) * n0
        g /= np.linalg.norm(g)
        n0 = n0 + rng.uniform(0, 0.5 * delta) * g
        n0 /= np.linalg.norm(n0)
    classes.append((n0, 1.0))
    for _ in range(int(rng.integers(0, 3))):
        u = rng.standard_normal(d)
        u /= np.linalg.norm(u)
        hT = float(T.polytope.support(u))
        classes.append((u, hT * (1 - rng.uniform(0, delta))))
    return classes


def _functional_value(body, functional: str, q, p, f) -> float:
    from . import functionals as fx

    if functional == "V":
        return body.V()
    if functional == "V_q":
        return fx.radial_integral(body, q).value
    if functional == "V_pf":
        return fx.support_integral(body, p, f).value
    raise ValueError(f"unknown functional {functional!r}")


def _one_trial(T, Tn, delta, seed, functional, q, p, f, max_attempts: int = 400):
    """One accepted sample: ``(margin, body, exact_T_draws)`` or None when none is found."""
    from .optimize import OrbitParametrization, build_body

    rng = np.random.default_rng(seed)
    use_max = functional == "V_pf"
    exact = 0
    for _ in range(max_attempts):
        classes = _perturbed_classes(Tn, rng, delta)
        try:
            P = build_body(OrbitParametrization(T.group, tuple(classes)))
        except Exception:  # noqa: BLE001 - unbounded or degenerate proposals are redrawn
            continue
        scale = P.max_support() if use_max else P.min_support()
        P = P.scaled(1.0 / scale)
        dist = hausdorff(P, Tn.polytope, count=4000 if T.dim == 3 else 2048, refine=2)
        if dist > delta:
            continue
        if dist < 1e-12:
            exact += 1
            continue
        vT = _functional_value(Tn.polytope, functional, q, p, f)
        vO = _functional_value(P, functional, q, p, f)
        if use_max and p > 0:
            margin = vO - vT
        else:
            margin = vT - vO
        return margin, P, exact
    return None


def local_max_sample_test(T: RegularPolytope, delta: float = 0.1, trials: int = 500,
                          seed: int = 0, functional: str = "V", q: float | None = None,
                          p: float | None = None, f: Callable | None = None,
                          workers: int = 1) -> SampleReport:
    """Random invariant bodies near ``T`` against the strict local-extremum inequality.

    ``V`` and ``V_q`` compare bodies with minimal support 1 against tangent
    ``T``; ``V_pf`` (the weighted support integral) compares bodies with
    maximal support 1 against ``T`` scaled to circumradius 1.  Raises
    :class:`SampleViolation` on the first failing sample.
    """
    if T.group is None:
        raise ValueError("sampling needs the symmetry group of T")
    Tn = T.normalized("circumradius" if functional == "V_pf" else "tangent")
    seeds = np.random.SeedSequence(seed).spawn(trials)
    ints = [int(s.generate_state(1)[0]) for s in seeds]

    def run(s):
        return _one_trial(T, Tn, delta, s, functional, q, p, f)

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            results = list(ex.map(run, ints))
    else:
        results = [run(s) for s in ints]
    worst, skipped, missing = math.inf, 0, 0
    for i, res in enumerate(results):
        if res is None:
            missing += 1
            continue
        margin, body, exact = res
        skipped += exact
        if margin <= 0:
            raise SampleViolation(f"trial {i}: margin {margin:.3e} for {functional}",
                                  body=body.to_json())
        worst = min(worst, margin)
    label = functional + (f"(q={q})" if q is not None else "") + (f"(p={p})" if p is not None else "")
    if missing:
        log.warning("%d of %d trials found no admissible body", missing, trials)
    report = SampleReport(label, trials - missing, 0, worst, skipped)
    log.info("local max test %s on %s: worst margin %.3e", label, T.name, worst)
    return report


def chain_json(T: RegularPolytope) -> str:
    base = base_simplex(T)
    return json.dumps({"polytope": T.to_json(), "base_simplex": base.to_json()})
