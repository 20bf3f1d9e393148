"""Euclidean isometry algebra in R^n.

Isometries are pairs ``(A, b)`` acting by ``x -> A x + b``. Everything here is
immutable and tolerance based; the single rank cutoff ``RANK_CUTOFF`` decides
every subspace dimension in the package.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

TOL = 1e-9
RANK_CUTOFF = 1e-9


class GeometryError(ValueError):
    """Raised for malformed isometries, dimension mismatches and bad joins."""


def _vec(x, name="vector") -> np.ndarray:
    arr = np.array(x, dtype=np.float64).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise GeometryError(f"{name} has non-finite entries")
    arr.setflags(write=False)
    return arr


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


def null_space(m: np.ndarray, cutoff: float = RANK_CUTOFF) -> np.ndarray:
    """Orthonormal basis (as columns) of the kernel of ``m``."""
    m = np.atleast_2d(m)
    ncols = m.shape[1]
    if m.shape[0] == 0:
        return np.eye(ncols)
    _, s, vt = np.linalg.svd(m)
    rank = int(np.sum(s > cutoff))
    return vt[rank:].T.copy()


def orthonormalize(vectors: np.ndarray, cutoff: float = RANK_CUTOFF) -> np.ndarray:
    """Orthonormal basis (columns) for the span of the columns of ``vectors``."""
    vectors = np.atleast_2d(vectors)
    if vectors.size == 0:
        return np.zeros((vectors.shape[0], 0))
    u, s, _ = np.linalg.svd(vectors, full_matrices=False)
    rank = int(np.sum(s > cutoff))
    return u[:, :rank].copy()


@dataclass(frozen=True, eq=False)
class EuclideanIsometry:
    linear: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        a = _frozen(self.linear)
        b = _vec(self.translation, "translation")
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] != b.shape[0]:
            raise GeometryError(f"inconsistent shapes {a.shape} and {b.shape}")
        if not np.all(np.isfinite(a)):
            raise GeometryError("linear part has non-finite entries")
        object.__setattr__(self, "linear", a)
        object.__setattr__(self, "translation", b)

    @classmethod
    def identity(cls, n: int) -> EuclideanIsometry:
        return cls(np.eye(n), np.zeros(n))

    @classmethod
    def translation_by(cls, b) -> EuclideanIsometry:
        b = _vec(b)
        return cls(np.eye(b.shape[0]), b)

    @classmethod
    def linear_map(cls, a) -> EuclideanIsometry:
        a = np.asarray(a, dtype=float)
        return cls(a, np.zeros(a.shape[0]))

    @property
    def dim(self) -> int:
        return self.translation.shape[0]

    def orthogonality_defect(self) -> float:
        a = self.linear
        return float(np.max(np.abs(a.T @ a - np.eye(self.dim))))

    def check_orthogonal(self, tol: float = TOL) -> None:
        defect = self.orthogonality_defect()
        if defect > tol:
            raise GeometryError(f"linear part is not orthogonal: max|A^T A - I| = {defect:.3e} > {tol:g}")

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.linear))

    def __call__(self, x) -> np.ndarray:
        return apply(self, x)

    def __matmul__(self, other: EuclideanIsometry) -> EuclideanIsometry:
        return compose(self, other)

    def close_to(self, other: EuclideanIsometry, tol: float = TOL) -> bool:
        return (
            self.dim == other.dim
            and float(np.max(np.abs(self.linear - other.linear))) <= tol
            and float(np.linalg.norm(self.translation - other.translation)) <= tol
        )

    def is_identity(self, tol: float = TOL) -> bool:
        return self.close_to(EuclideanIsometry.identity(self.dim), tol)

    def __repr__(self) -> str:
        return f"EuclideanIsometry(linear={self.linear.tolist()}, translation={self.translation.tolist()})"


def compose(g: EuclideanIsometry, h: EuclideanIsometry) -> EuclideanIsometry:
    """The isometry ``g o h`` (apply ``h`` first)."""
    if g.dim != h.dim:
        raise GeometryError(f"dimension mismatch: {g.dim} vs {h.dim}")
    return EuclideanIsometry(g.linear @ h.linear, g.linear @ h.translation + g.translation)


def inverse(g: EuclideanIsometry) -> EuclideanIsometry:
    at = g.linear.T
    return EuclideanIsometry(at, -(at @ g.translation))


def apply(g: EuclideanIsometry, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != g.dim:
        raise GeometryError(f"point of dimension {x.shape[-1]} for isometry of dimension {g.dim}")
    return x @ g.linear.T + g.translation


def power(g: EuclideanIsometry, k: int) -> EuclideanIsometry:
    result = EuclideanIsometry.identity(g.dim)
    base = g if k >= 0 else inverse(g)
    for _ in range(abs(k)):
        result = compose(base, result)
    return result


def conjugate(h: EuclideanIsometry, g: EuclideanIsometry) -> EuclideanIsometry:
    """``h g h^-1``."""
    return compose(compose(h, g), inverse(h))


def rotation(angle: float, axis=None) -> EuclideanIsometry:
    """Rotation by ``angle`` about the origin (2D) or about ``axis`` through the origin (3D)."""
    c, s = np.cos(angle), np.sin(angle)
    if axis is None:
        return EuclideanIsometry.linear_map([[c, -s], [s, c]])
    u = np.asarray(axis, dtype=float)
    u = u / np.linalg.norm(u)
    k = np.array([[0, -u[2], u[1]], [u[2], 0, -u[0]], [-u[1], u[0], 0]])
    return EuclideanIsometry.linear_map(np.eye(3) + s * k + (1 - c) * (k @ k))


@dataclass(frozen=True, eq=False)
class AffineSubspace:
    """``base_point + span(basis columns)``; the base point is the foot of the origin."""

    base_point: np.ndarray
    basis: np.ndarray = field(repr=False)

    def __post_init__(self):
        p = _vec(self.base_point, "base point")
        u = np.array(self.basis, dtype=float).reshape(p.shape[0], -1)
        if u.shape[1]:
            gram = u.T @ u
            if np.max(np.abs(gram - np.eye(u.shape[1]))) > 1e-8:
                raise GeometryError("basis is not orthonormal")
            p = p - u @ (u.T @ p)
        object.__setattr__(self, "base_point", _frozen(p))
        object.__setattr__(self, "basis", _frozen(u))

    @classmethod
    def point(cls, p) -> AffineSubspace:
        p = _vec(p)
        return cls(p, np.zeros((p.shape[0], 0)))

    @classmethod
    def whole(cls, n: int) -> AffineSubspace:
        return cls(np.zeros(n), np.eye(n))

    @classmethod
    def spanned(cls, p, directions) -> AffineSubspace:
        p = _vec(p)
        d = np.asarray(directions, dtype=float).reshape(-1, p.shape[0]).T
        return cls(p, orthonormalize(d))

    @property
    def ambient_dim(self) -> int:
        return self.base_point.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def orthonormal_basis(self) -> list[np.ndarray]:
        return [self.basis[:, i].copy() for i in range(self.dim)]

    def project(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        u = self.basis
        return self.base_point + (x - self.base_point) @ u @ u.T

    def distance(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(np.linalg.norm(x - self.project(x)))

    def contains(self, x, tol: float = TOL) -> bool:
        return self.distance(x) <= tol

    def at(self, coords) -> np.ndarray:
        return self.base_point + self.basis @ np.asarray(coords, dtype=float)

    def contains_subspace(self, other: AffineSubspace, tol: float = TOL) -> bool:
        if other.dim > self.dim or not self.contains(other.base_point, tol):
            return False
        if other.dim == 0:
            return True
        resid = other.basis - self.basis @ (self.basis.T @ other.basis)
        return float(np.max(np.abs(resid))) <= tol

    def same_as(self, other: AffineSubspace, tol: float = TOL) -> bool:
        return self.dim == other.dim and self.contains_subspace(other, tol)

    def equations(self) -> tuple[np.ndarray, np.ndarray]:
        """``(M, c)`` with the subspace equal to ``{x : M x = c}``."""
        comp = null_space(self.basis.T) if self.dim else np.eye(self.ambient_dim)
        m = comp.T
        return m, m @ self.base_point

    def intersect(self, other: AffineSubspace, tol: float = TOL) -> AffineSubspace | None:
        m1, c1 = self.equations()
        m2, c2 = other.equations()
        return solve_affine(np.vstack([m1, m2]), np.concatenate([c1, c2]), tol)

    def transformed(self, g: EuclideanIsometry) -> AffineSubspace:
        return AffineSubspace(apply(g, self.base_point), g.linear @ self.basis)

    def sort_key(self) -> tuple:
        return tuple(np.round(self.base_point, 9).tolist())

    def __repr__(self) -> str:
        return f"AffineSubspace(dim={self.dim}, base_point={self.base_point.tolist()})"


def solve_affine(m: np.ndarray, c: np.ndarray, tol: float = TOL) -> AffineSubspace | None:
    """Solution set of ``m x = c`` or ``None`` when the least-squares residual exceeds ``tol``."""
    m = np.atleast_2d(np.asarray(m, dtype=float))
    c = np.asarray(c, dtype=float).reshape(-1)
    n = m.shape[1]
    if m.shape[0] == 0:
        return AffineSubspace.whole(n)
    u, s, vt = np.linalg.svd(m)
    rank = int(np.sum(s > RANK_CUTOFF))
    coeffs = (u[:, :rank].T @ c) / s[:rank]
    x0 = vt[:rank].T @ coeffs
    if np.linalg.norm(m @ x0 - c) > tol:
        return None
    return AffineSubspace(x0, vt[rank:].T)


def fixed_set(g: EuclideanIsometry, tol: float = TOL) -> AffineSubspace | None:
    """Points with ``g x = x`` within ``tol``; ``None`` exactly when :func:`classify` says hyperbolic."""
    value, axis = min_displacement(g)
    return axis if value <= tol else None


def common_fixed_set(gs: Sequence[EuclideanIsometry], tol: float = TOL) -> AffineSubspace | None:
    gs = list(gs)
    if not gs:
        raise GeometryError("common_fixed_set needs at least one isometry")
    n = gs[0].dim
    if any(g.dim != n for g in gs):
        raise GeometryError("isometries of mixed dimension")
    m = np.vstack([g.linear - np.eye(n) for g in gs])
    c = np.concatenate([-g.translation for g in gs])
    return solve_affine(m, c, tol)


def fixed_vectors(linears: Sequence[np.ndarray]) -> np.ndarray:
    """Orthonormal basis (columns) of vectors fixed by every matrix in ``linears``."""
    linears = list(linears)
    n = linears[0].shape[0]
    return null_space(np.vstack([a - np.eye(n) for a in linears]))


def min_displacement(g: EuclideanIsometry) -> tuple[float, AffineSubspace]:
    """Minimal displacement of ``g`` and the affine set where it is attained.

    The translation splits into a part along ``ker(A - I)`` and a part in its
    orthogonal complement ``im(A - I)``; only the first survives on the axis.
    """
    n = g.dim
    kernel = null_space(g.linear - np.eye(n))
    b = g.translation
    along = kernel @ (kernel.T @ b)
    perp = b - along
    axis = solve_affine(g.linear - np.eye(n), -perp, tol=1e-7)
    if axis is None:  # only reachable for non-orthogonal input
        raise GeometryError("could not solve for the displacement axis")
    return float(np.linalg.norm(along)), axis


class IsometryKind(enum.Enum):
    IDENTITY = "identity"
    ELLIPTIC = "elliptic"
    HYPERBOLIC = "hyperbolic"


def classify(g: EuclideanIsometry, tol: float = TOL) -> IsometryKind:
    if float(np.max(np.abs(g.linear - np.eye(g.dim)))) <= tol and np.linalg.norm(g.translation) <= tol:
        return IsometryKind.IDENTITY
    value, _ = min_displacement(g)
    return IsometryKind.ELLIPTIC if value <= tol else IsometryKind.HYPERBOLIC


# --- geodesic segments -------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GeodesicSegment:
    """Constant-velocity segment ``t -> start + (t - t0) * velocity`` on ``[t0, t1]``."""

    start: np.ndarray
    velocity: np.ndarray
    t0: float = 0.0
    t1: float = 1.0

    def __post_init__(self):
        start = _vec(self.start, "start")
        vel = _vec(self.velocity, "velocity")
        if start.shape != vel.shape:
            raise GeometryError("start and velocity dimensions differ")
        if not self.t0 <= self.t1:
            raise GeometryError(f"empty parameter interval [{self.t0}, {self.t1}]")
        object.__setattr__(self, "start", start)
        object.__setattr__(self, "velocity", vel)
        object.__setattr__(self, "t0", float(self.t0))
        object.__setattr__(self, "t1", float(self.t1))

    @classmethod
    def between(cls, p, q, t0: float = 0.0, t1: float = 1.0) -> GeodesicSegment:
        p, q = _vec(p), _vec(q)
        if t1 <= t0:
            raise GeometryError("need t1 > t0 to join two points")
        return cls(p, (q - p) / (t1 - t0), t0, t1)

    @property
    def dim(self) -> int:
        return self.start.shape[0]

    @property
    def end(self) -> np.ndarray:
        return self.evaluate(self.t1)

    @property
    def speed(self) -> float:
        return float(np.linalg.norm(self.velocity))

    def evaluate(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return self.start + np.multiply.outer(t - self.t0, self.velocity)

    def length(self) -> float:
        return self.speed * (self.t1 - self.t0)

    def restrict(self, a: float, b: float) -> GeodesicSegment:
        if not (self.t0 - TOL <= a <= b <= self.t1 + TOL):
            raise GeometryError(f"[{a}, {b}] is not inside [{self.t0}, {self.t1}]")
        return GeodesicSegment(self.evaluate(a), self.velocity, a, b)

    def shifted(self, dt: float) -> GeodesicSegment:
        return GeodesicSegment(self.start, self.velocity, self.t0 + dt, self.t1 + dt)

    def reparametrized(self, a: float, b: float) -> GeodesicSegment:
        """Same image and orientation, constant speed on ``[a, b]``."""
        return GeodesicSegment.between(self.start, self.end, a, b)


def reverse(s: GeodesicSegment) -> GeodesicSegment:
    return GeodesicSegment(s.end, -s.velocity, s.t0, s.t1)


def translate(g: EuclideanIsometry, s: GeodesicSegment) -> GeodesicSegment:
    return GeodesicSegment(apply(g, s.start), g.linear @ s.velocity, s.t0, s.t1)


def length(s: GeodesicSegment) -> float:
    return s.length()


def evaluate(s: GeodesicSegment, t) -> np.ndarray:
    return s.evaluate(t)


@dataclass(frozen=True, eq=False)
class BrokenGeodesic:
    """Chain of segments joined continuously but possibly with corners."""

    pieces: tuple[GeodesicSegment, ...]

    def length(self) -> float:
        return sum(p.length() for p in self.pieces)

    @property
    def start(self) -> np.ndarray:
        return self.pieces[0].start

    @property
    def end(self) -> np.ndarray:
        return self.pieces[-1].end

    def is_smooth(self, tol: float = TOL) -> bool:
        return all(
            np.linalg.norm(a.velocity - b.velocity) <= tol for a, b in zip(self.pieces, self.pieces[1:])
        )


def concatenate(
    s1: GeodesicSegment | BrokenGeodesic, s2: GeodesicSegment, allow_corner: bool = False, tol: float = TOL
) -> GeodesicSegment | BrokenGeodesic:
    """Join ``s2`` after ``s1``; the second piece is re-timed to start where ``s1`` stops.

    A smooth join (matching endpoint and velocity) yields a single segment.
    With ``allow_corner`` a non-smooth join yields a :class:`BrokenGeodesic`.
    """
    last = s1.pieces[-1] if isinstance(s1, BrokenGeodesic) else s1
    gap = float(np.linalg.norm(last.end - s2.start))
    if gap > tol:
        raise GeometryError(f"endpoint mismatch: |s1(t1) - s2(t0)| = {gap:.3e}")
    s2 = s2.shifted(last.t1 - s2.t0)
    smooth = float(np.linalg.norm(last.velocity - s2.velocity)) <= tol
    if smooth and isinstance(s1, GeodesicSegment):
        return GeodesicSegment(s1.start, s1.velocity, s1.t0, s2.t1)
    if not allow_corner and not smooth:
        raise GeometryError(
            f"non-smooth join: velocity jump {np.linalg.norm(last.velocity - s2.velocity):.3e}"
        )
    prev = s1.pieces if isinstance(s1, BrokenGeodesic) else (s1,)
    return BrokenGeodesic(prev + (s2,))


@dataclass(frozen=True, eq=False)
class Box:
    """Closed axis-aligned box ``[lo, hi]``."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo, hi = _vec(self.lo, "box min"), _vec(self.hi, "box max")
        if lo.shape != hi.shape:
            raise GeometryError("box corners have different dimensions")
        if np.any(hi - lo <= 0):
            raise GeometryError("degenerate box: every side must have positive length")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    @property
    def center(self) -> np.ndarray:
        return (self.lo + self.hi) / 2

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.hi - self.lo))

    def contains(self, x, tol: float = TOL) -> bool | np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.all((x >= self.lo - tol) & (x <= self.hi + tol), axis=-1)

    def expanded(self, margin: float) -> Box:
        return Box(self.lo - margin, self.hi + margin)

    def corners(self) -> np.ndarray:
        n = self.dim
        bits = (np.arange(2**n)[:, None] >> np.arange(n)) & 1
        return np.where(bits, self.hi, self.lo)

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return rng.uniform(self.lo, self.hi, size=(count, self.dim))
