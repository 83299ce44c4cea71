"""Finite orthogonal groups, orbits and orbit polytopes.

Groups are stored as explicit element lists.  Catalog names are the strings
accepted by the CLI: ``dihedral:k``, ``cyclic:k``, ``axial:k`` (rotations
about the z-axis in O(3)), ``tetrahedral``, ``octahedral``, ``icosahedral``,
``simplex:n`` and ``hyperoctahedral:n``.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .bodies import VertexPolytope, affine_rank
from .errors import ClosureOverflow, DegenerateOrbit, NotOrthogonal, UnknownGroup

DEDUP_TOL = 1e-9
ORTHO_TOL = 1e-12
DEFAULT_CAP = 1000
_KEY_SCALE = 1e7


def _key(arr: np.ndarray) -> tuple:
    return tuple(np.rint(np.asarray(arr).ravel() * _KEY_SCALE).astype(np.int64).tolist())


def check_orthogonal(M: np.ndarray) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise NotOrthogonal("matrix must be square")
    if np.max(np.abs(M.T @ M - np.eye(len(M)))) > ORTHO_TOL:
        raise NotOrthogonal("columns are not orthonormal within 1e-12")
    if abs(abs(np.linalg.det(M)) - 1.0) > 1e-10:
        raise NotOrthogonal("determinant is not +-1")
    return M


class _Dedup:
    """Near-equality set keyed on rounded entries with an exact-distance check."""

    def __init__(self, tol: float = DEDUP_TOL):
        self.tol = tol
        self.items: list[np.ndarray] = []
        self._index: dict[tuple, list[int]] = {}

    def add(self, x: np.ndarray) -> bool:
        k = _key(x)
        for j in self._index.get(k, ()):
            if np.max(np.abs(self.items[j] - x)) <= self.tol:
                return False
        self._index.setdefault(k, []).append(len(self.items))
        self.items.append(x)
        return True


@dataclass(frozen=True, eq=False)
class SymmetryGroup:
    """A finite subgroup of O(d) given by its elements."""

    elements: np.ndarray
    name: str = "custom"

    def __post_init__(self):
        E = np.array(self.elements, dtype=float)
        if E.ndim == 2:
            E = E[None]
        E.flags.writeable = False
        object.__setattr__(self, "elements", E)

    @property
    def dim(self) -> int:
        return self.elements.shape[1]

    @property
    def order(self) -> int:
        return len(self.elements)

    def __len__(self) -> int:
        return self.order

    def apply(self, x: np.ndarray) -> np.ndarray:
        """All images ``phi(x)``, shape ``(order, d)``."""
        return self.elements @ np.asarray(x, dtype=float)

    def is_closed(self, tol: float = DEDUP_TOL) -> bool:
        E = self.elements
        keys = {}
        for i, M in enumerate(E):
            keys.setdefault(_key(M), []).append(i)

        def member(M):
            return any(np.max(np.abs(E[j] - M)) <= tol for j in keys.get(_key(M), ()))

        if not member(np.eye(self.dim)):
            return False
        return all(member(A @ B) for A in E for B in E) and all(member(A.T) for A in E)

    @cached_property
    def rotation_subgroup(self) -> "SymmetryGroup":
        dets = np.linalg.det(self.elements)
        return SymmetryGroup(self.elements[dets > 0], name=f"{self.name}+")

    def conjugated(self, Q: np.ndarray) -> "SymmetryGroup":
        Q = np.asarray(Q, dtype=float)
        return SymmetryGroup(Q @ self.elements @ Q.T, name=f"{self.name}^Q")

    def invariance_defect(self, fn, X: np.ndarray) -> float:
        """``max |fn(phi^T x) - fn(x)|`` over elements and sample points."""
        base = np.asarray(fn(X), dtype=float)
        worst = 0.0
        for M in self.elements:
            worst = max(worst, float(np.max(np.abs(np.asarray(fn(X @ M), dtype=float) - base))))
        return worst

    def to_json(self) -> dict:
        return {"name": self.name, "dim": self.dim, "order": self.order,
                "elements": [M.ravel().tolist() for M in self.elements]}

    @classmethod
    def from_json(cls, data: dict | str) -> "SymmetryGroup":
        if isinstance(data, str):
            data = json.loads(data)
        d = int(data["dim"])
        return cls(np.asarray(data["elements"], dtype=float).reshape(-1, d, d),
                   name=data.get("name", "custom"))


def generate_group(generators, cap: int = DEFAULT_CAP, name: str = "custom") -> SymmetryGroup:
    """Multiplicative closure of ``generators`` and the identity."""
    if cap < 1:
        raise ValueError("cap must be at least 1")
    gens = [check_orthogonal(G) for G in generators]
    if not gens:
        raise ValueError("at least one generator is required")
    d = gens[0].shape[0]
    if any(G.shape != (d, d) for G in gens):
        raise NotOrthogonal("generators have mismatched sizes")
    seen = _Dedup()
    seen.add(np.eye(d))
    frontier = [np.eye(d)]
    while frontier:
        nxt = []
        for A in frontier:
            for G in gens:
                B = A @ G
                if seen.add(B):
                    if len(seen.items) > cap:
                        raise ClosureOverflow(f"closure exceeds {cap} elements")
                    nxt.append(B)
        frontier = nxt
    return SymmetryGroup(np.array(seen.items), name=name)


@dataclass(frozen=True, eq=False)
class Orbit:
    base_point: np.ndarray
    points: np.ndarray

    def __len__(self) -> int:
        return len(self.points)


def orbit(group: SymmetryGroup, a) -> Orbit:
    a = np.asarray(a, dtype=float)
    if abs(np.linalg.norm(a) - 1.0) > ORTHO_TOL:
        raise ValueError("base point must be a unit vector")
    seen = _Dedup()
    for y in group.apply(a):
        seen.add(y)
    return Orbit(a, np.array(seen.items))


def orbit_polytope(group: SymmetryGroup, a) -> VertexPolytope:
    """``conv{phi(a)}``; check :attr:`VertexPolytope.degenerate` for rank loss."""
    return VertexPolytope(orbit(group, a).points)


def gamma_ratio(group: SymmetryGroup, a) -> float:
    """Max over min of the support function of the orbit polytope of ``a``."""
    P = orbit_polytope(group, np.asarray(a, dtype=float) / np.linalg.norm(a))
    if P.degenerate:
        raise DegenerateOrbit("orbit polytope has affine rank below the dimension")
    offs = P.hull.offsets
    if np.min(offs) <= 1e-12:
        raise DegenerateOrbit("orbit polytope does not contain the origin in its interior")
    return P.max_support() / float(np.min(offs))


def _special_directions(group: SymmetryGroup, rng: np.random.Generator) -> np.ndarray:
    """Directions where orbits are most likely to collapse.

    Eigenvectors for eigenvalues +-1 of each element (axes and mirrors) and
    eigenvectors of group averages of random symmetric matrices, which expose
    invariant subspaces.
    """
    d = group.dim
    out = []
    for M in group.elements:
        for lam in (1.0, -1.0):
            _, s, vt = np.linalg.svd(M - lam * np.eye(d))
            out.extend(vt[s < 1e-8])
    for _ in range(3):
        A = rng.standard_normal((d, d))
        A = A + A.T
        avg = np.mean(group.elements @ A @ np.transpose(group.elements, (0, 2, 1)), axis=0)
        out.extend(np.linalg.eigh(avg)[1].T)
    if not out:
        return np.zeros((0, d))
    X = np.array(out)
    return X / np.linalg.norm(X, axis=1)[:, None]


def _sphere_sample(d: int, count: int) -> np.ndarray:
    from .quadrature import fibonacci_sphere

    if d == 2:
        t = (np.arange(count) + 0.5) * 2 * math.pi / count
        return np.column_stack([np.cos(t), np.sin(t)])
    if d == 3:
        return fibonacci_sphere(count)
    X = np.random.default_rng(12345).standard_normal((count, d))
    return X / np.linalg.norm(X, axis=1)[:, None]


def fundamental_patch(group: SymmetryGroup, X: np.ndarray, seed: int = 7) -> np.ndarray:
    """Points of ``X`` inside the Dirichlet domain of a generic centre ``u``.

    Every orbit meets the domain ``{x : <x, u> >= <x, phi u>}``, so sampling it
    is equivalent to sampling the whole sphere.
    """
    u = np.random.default_rng(seed).standard_normal(group.dim)
    u /= np.linalg.norm(u)
    images = group.apply(u)  # phi(u)
    scores = X @ images.T
    return X[scores.max(axis=1) <= X @ u + 1e-12]


@dataclass(frozen=True)
class SpanningReport:
    passes: bool
    worst_gamma: float
    witness: np.ndarray
    samples: int
    absolutely_irreducible: bool = field(default=True)

    def to_json(self) -> dict:
        return {"passes": self.passes, "worst_gamma": self.worst_gamma,
                "witness": self.witness.tolist(), "samples": self.samples,
                "absolutely_irreducible": self.absolutely_irreducible}


def commutant_dimension(group: SymmetryGroup) -> int:
    """Dimension of the matrices commuting with every element (1 iff absolutely irreducible)."""
    d = group.dim
    rows = [np.kron(M, np.eye(d)) - np.kron(np.eye(d), M.T) for M in group.elements]
    A = np.vstack(rows)
    s = np.linalg.svd(A, compute_uv=False)
    return int(np.sum(s < 1e-8)) + max(0, d * d - len(s))


def _degenerate(group: SymmetryGroup, x) -> bool:
    try:
        gamma_ratio(group, x)
    except DegenerateOrbit:
        return True
    return False


def spanning_check(group: SymmetryGroup, sample_density: int = 12) -> SpanningReport:
    """Sample gamma over one fundamental patch; any degenerate orbit fails.

    Axes and mirror directions are probed first, so a witness for a collapsed
    orbit is an exact special direction whenever one exists.
    """
    if sample_density < 10:
        raise ValueError("sample_density must be at least 10")
    d = group.dim
    rng = np.random.default_rng(2024)
    special = _special_directions(group, rng)
    want = sample_density ** (d - 1)
    full = _sphere_sample(d, max(want * group.order, want))
    patch = fundamental_patch(group, full)
    worst, witness = 0.0, np.eye(d)[0]
    for x in itertools.chain(special, patch):
        try:
            g = gamma_ratio(group, x)
        except DegenerateOrbit:
            # the most collapsed orbit (e.g. a fixed axis) is the clearest witness
            bad = [y for y in itertools.chain(special, [x]) if _degenerate(group, y)]
            w = min(bad, key=lambda y: len(orbit(group, y)))
            return SpanningReport(False, math.inf, np.asarray(w), len(special) + len(patch),
                                  commutant_dimension(group) == 1)
        if g > worst:
            worst, witness = g, np.asarray(x)
    return SpanningReport(True, worst, witness, len(special) + len(patch),
                          commutant_dimension(group) == 1)


# catalog -------------------------------------------------------------------

def _rot2(t: float) -> np.ndarray:
    c, s = math.cos(t), math.sin(t)
    return np.array([[c, -s], [s, c]])


def dihedral(k: int) -> SymmetryGroup:
    """Symmetries of the regular k-gon with a vertex on the x-axis (order 2k)."""
    if k < 1:
        raise UnknownGroup("dihedral order must be positive")
    rots = [_rot2(2 * math.pi * j / k) for j in range(k)]
    refl = np.diag([1.0, -1.0])
    return SymmetryGroup(np.array(rots + [R @ refl for R in rots]), name=f"dihedral:{k}")


def cyclic(k: int) -> SymmetryGroup:
    return SymmetryGroup(np.array([_rot2(2 * math.pi * j / k) for j in range(k)]),
                         name=f"cyclic:{k}")


def axial(k: int) -> SymmetryGroup:
    """Rotations by multiples of 2 pi / k about the z-axis in O(3)."""
    els = []
    for j in range(k):
        M = np.eye(3)
        M[:2, :2] = _rot2(2 * math.pi * j / k)
        els.append(M)
    return SymmetryGroup(np.array(els), name=f"axial:{k}")


def _signed_permutations(d: int, even_signs: bool = False) -> np.ndarray:
    out = []
    for perm in itertools.permutations(range(d)):
        P = np.eye(d)[list(perm)]
        for signs in itertools.product((1.0, -1.0), repeat=d):
            if even_signs and np.prod(signs) < 0:
                continue
            out.append(np.diag(signs) @ P)
    return np.array(out)


def hyperoctahedral(n: int, cap: int = DEFAULT_CAP) -> SymmetryGroup:
    d = n + 1
    order = 2 ** d * math.factorial(d)
    if order > cap:
        raise ClosureOverflow(f"hyperoctahedral group of R^{d} has order {order} > {cap}")
    return SymmetryGroup(_signed_permutations(d), name=f"hyperoctahedral:{n}")


def octahedral() -> SymmetryGroup:
    g = hyperoctahedral(2)
    return SymmetryGroup(g.elements, name="octahedral")


def tetrahedral() -> SymmetryGroup:
    """Full symmetry group of the tetrahedron with vertices (1,1,1), (1,-1,-1), ...."""
    return SymmetryGroup(_signed_permutations(3, even_signs=True), name="tetrahedral")


def icosahedral() -> SymmetryGroup:
    phi = (1 + math.sqrt(5)) / 2
    cyc = np.array([[0.0, 0, 1], [1, 0, 0], [0, 1, 0]])
    flip = np.diag([-1.0, 1, 1])
    u = np.array([phi, 1.0, 1.0 / phi]) / 2.0
    mirror = np.eye(3) - 2 * np.outer(u, u)
    g = generate_group([cyc, flip, mirror], cap=200, name="icosahedral")
    if g.order != 120:
        raise RuntimeError(f"icosahedral closure has order {g.order}")
    return g


def simplex_frame(n: int) -> np.ndarray:
    """Orthonormal rows spanning ``{x in R^{n+2} : sum x = 0}``."""
    m = n + 2
    A = np.eye(m) - 1.0 / m
    q, _ = np.linalg.qr(A[:, : m - 1])
    return q.T


def simplex_group(n: int, cap: int = DEFAULT_CAP) -> SymmetryGroup:
    """Symmetries of the regular (n+1)-simplex in R^{n+1}, order (n+2)!."""
    m = n + 2
    if math.factorial(m) > cap:
        raise ClosureOverflow(f"simplex group has order {math.factorial(m)} > {cap}")
    B = simplex_frame(n)
    els = [B @ np.eye(m)[list(perm)] @ B.T for perm in itertools.permutations(range(m))]
    return SymmetryGroup(np.array(els), name=f"simplex:{n}")


CATALOG_NAMES = ("dihedral", "cyclic", "axial", "tetrahedral", "octahedral",
                 "icosahedral", "simplex", "hyperoctahedral")


def catalog(name: str, n: int | None = None) -> SymmetryGroup:
    """Catalog group by label, e.g. ``catalog("dihedral:6")`` or ``catalog("simplex", 3)``."""
    base, _, arg = str(name).strip().partition(":")
    base = base.lower()
    try:
        param = int(arg) if arg else None
    except ValueError as exc:
        raise UnknownGroup(f"bad group parameter in {name!r}") from exc
    if base == "dihedral":
        k = param if param is not None else n
        if k is None or (n not in (None, 1) and arg):
            raise UnknownGroup("dihedral groups need k and live in n=1")
        return dihedral(k)
    if base == "cyclic":
        if param is None:
            raise UnknownGroup("cyclic groups need k")
        return cyclic(param) if n in (None, 1) else axial(param)
    if base == "axial":
        if param is None:
            raise UnknownGroup("axial groups need k")
        return axial(param)
    if base in ("tetrahedral", "octahedral", "icosahedral"):
        if n not in (None, 2):
            raise UnknownGroup(f"{base} group lives in n=2")
        return {"tetrahedral": tetrahedral, "octahedral": octahedral,
                "icosahedral": icosahedral}[base]()
    if base in ("simplex", "hyperoctahedral"):
        dim = param if param is not None else n
        if dim is None or dim < 1:
            raise UnknownGroup(f"{base} needs a dimension n >= 1")
        return simplex_group(dim) if base == "simplex" else hyperoctahedral(dim)
    raise UnknownGroup(f"unknown group {name!r}")
