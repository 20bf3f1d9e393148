"""Discrete groups of Euclidean isometries given by generators.

Enumeration is breadth first over generator words. When a lattice of
translations is declared the word search only runs over cosets of the lattice
(a finite set for crystallographic input) and the lattice part of a query is
solved analytically, which makes the ball enumeration exhaustive.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import linprog

from orbistrat import kernels
from orbistrat.geom import (
    TOL,
    Box,
    EuclideanIsometry,
    GeometryError,
    apply,
    compose,
    fixed_vectors,
    inverse,
)

DEFAULT_ELEMENT_CAP = 10_000
MAX_EXHAUSTIVE_ORDER = 48


class GroupError(ValueError):
    pass


class EnumerationBudgetExceeded(GroupError):
    """More elements than the configured cap; the input is probably not discrete."""


class PropernessFailure(GroupError):
    def __init__(self, reason: str, elements_seen: int):
        super().__init__(reason)
        self.reason = reason
        self.elements_seen = elements_seen


class ToleranceIndex:
    """Hash index of objects compared up to a tolerance.

    Keys are coordinates rounded to a grid of size ``quantum``. A coordinate
    within ``tol`` of a rounding boundary is probed on both sides, so two
    objects within ``tol`` always meet. Subclasses define ``_coords`` and
    ``_close``.
    """

    def __init__(self, tol: float = TOL, quantum: float = 1e-6):
        self.tol = tol
        self.quantum = quantum
        self._buckets: dict[tuple, list[int]] = {}
        self.items: list = []

    def __len__(self) -> int:
        return len(self.items)

    def _coords(self, g) -> np.ndarray:
        raise NotImplementedError

    def _close(self, a, b) -> bool:
        raise NotImplementedError

    def _keys(self, g) -> Iterable[tuple]:
        r = self._coords(g)
        base = np.round(r)
        frac = r - base
        ambiguous = np.flatnonzero(np.abs(np.abs(frac) - 0.5) < 2 * self.tol / self.quantum)
        base = base.astype(np.int64)
        if len(ambiguous) == 0:
            yield tuple(base.tolist())
            return
        for signs in itertools.product((0, 1), repeat=len(ambiguous)):
            key = base.copy()
            for idx, flip in zip(ambiguous, signs):
                if flip:
                    key[idx] += 1 if frac[idx] > 0 else -1
            yield tuple(key.tolist())

    def find(self, g) -> int | None:
        for key in self._keys(g):
            for i in self._buckets.get(key, ()):
                if self._close(self.items[i], g):
                    return i
        return None

    def add(self, g) -> tuple[int, bool]:
        """Insert ``g`` unless present; returns ``(index, inserted)``."""
        found = self.find(g)
        if found is not None:
            return found, False
        i = len(self.items)
        self.items.append(g)
        r = np.round(self._coords(g)).astype(np.int64)
        self._buckets.setdefault(tuple(r.tolist()), []).append(i)
        return i, True


class IsometryIndex(ToleranceIndex):
    def _coords(self, g: EuclideanIsometry) -> np.ndarray:
        return np.concatenate([g.linear.ravel(), g.translation]) / self.quantum

    def _close(self, a: EuclideanIsometry, b: EuclideanIsometry) -> bool:
        return a.close_to(b, self.tol)


@dataclass(frozen=True, eq=False)
class GroupElement:
    isometry: EuclideanIsometry
    witness_word: tuple[int, ...] = ()

    @property
    def linear(self) -> np.ndarray:
        return self.isometry.linear

    @property
    def translation(self) -> np.ndarray:
        return self.isometry.translation

    def __matmul__(self, other: GroupElement) -> GroupElement:
        return GroupElement(compose(self.isometry, other.isometry), self.witness_word + other.witness_word)

    def inverse(self) -> GroupElement:
        return GroupElement(inverse(self.isometry), tuple(-w for w in reversed(self.witness_word)))

    def __call__(self, x) -> np.ndarray:
        return apply(self.isometry, x)

    def __repr__(self) -> str:
        return f"GroupElement(word={list(self.witness_word)}, {self.isometry!r})"


class ElementList(list):
    """List of group elements carrying an exhaustiveness flag."""

    def __init__(self, items=(), complete: bool = True):
        super().__init__(items)
        self.complete = complete


def _sort_key(center: np.ndarray):
    def key(e: GroupElement):
        d = float(np.linalg.norm(apply(e.isometry, center) - center))
        return (round(d, 9), not e.isometry.is_identity(), tuple(np.round(e.linear.ravel(), 9)), tuple(np.round(e.translation, 9)))

    return key


@dataclass(frozen=True, eq=False)
class GeneratedGroup:
    """Discrete group generated by isometries of R^n.

    ``lattice_basis`` rows are lattice vectors. Lattice translations that are not
    among the generators are appended to ``generators`` so that witness words
    can always be written; ``declared_generators`` counts the original ones.
    """

    dimension: int
    generators: tuple[EuclideanIsometry, ...]
    lattice_basis: np.ndarray | None = None
    max_word_length: int = 8
    enumeration_radius: float = 2.0
    element_cap: int = DEFAULT_ELEMENT_CAP
    tol: float = TOL
    declared_generators: int = field(default=-1)

    def __post_init__(self):
        gens = tuple(self.generators)
        n = self.dimension
        if n < 1:
            raise GroupError("dimension must be at least 1")
        for i, g in enumerate(gens):
            if g.dim != n:
                raise GroupError(f"generator {i} has dimension {g.dim}, expected {n}")
            try:
                g.check_orthogonal(max(self.tol, 1e-12))
            except GeometryError as exc:
                raise GroupError(f"generator {i}: {exc}") from None
        if self.declared_generators < 0:
            object.__setattr__(self, "declared_generators", len(gens))
        if self.lattice_basis is not None:
            basis = np.array(self.lattice_basis, dtype=float).reshape(n, n)
            if abs(np.linalg.det(basis)) < 1e-9:
                raise GroupError("lattice basis is degenerate")
            cols = basis.T
            inv = np.linalg.inv(cols)
            for i, g in enumerate(gens):
                k = inv @ g.linear @ cols
                if np.max(np.abs(k - np.round(k))) > 1e-7:
                    raise GroupError(f"generator {i} does not preserve the lattice (A L != L)")
            basis.setflags(write=False)
            object.__setattr__(self, "lattice_basis", basis)
            extra = []
            for j in range(n):
                t = EuclideanIsometry.translation_by(basis[j])
                if not any(g.close_to(t, self.tol) or g.close_to(inverse(t), self.tol) for g in gens):
                    extra.append(t)
            gens = gens + tuple(extra)
        object.__setattr__(self, "generators", gens)

    # -- words -----------------------------------------------------------------------------

    def letter(self, w: int) -> EuclideanIsometry:
        g = self.generators[abs(w) - 1]
        return g if w > 0 else inverse(g)

    def evaluate_word(self, word: Sequence[int]) -> EuclideanIsometry:
        result = EuclideanIsometry.identity(self.dimension)
        for w in reversed(word):
            result = compose(self.letter(w), result)
        return result

    def identity_element(self) -> GroupElement:
        return GroupElement(EuclideanIsometry.identity(self.dimension), ())

    def generator_elements(self) -> list[GroupElement]:
        return [GroupElement(g, (i + 1,)) for i, g in enumerate(self.generators)]

    # -- lattice machinery -------------------------------------------------------------------

    @property
    def has_lattice(self) -> bool:
        return self.lattice_basis is not None

    @cached_property
    def _basis_cols(self) -> np.ndarray:
        return self.lattice_basis.T.copy()

    @cached_property
    def _basis_inv(self) -> np.ndarray:
        return np.linalg.inv(self._basis_cols)

    @cached_property
    def _basis_letters(self) -> list[int]:
        """Signed letter realizing each lattice basis translation."""
        letters = []
        for j in range(self.dimension):
            t = EuclideanIsometry.translation_by(self.lattice_basis[j])
            for i, g in enumerate(self.generators):
                if g.close_to(t, self.tol):
                    letters.append(i + 1)
                    break
                if g.close_to(inverse(t), self.tol):
                    letters.append(-(i + 1))
                    break
        return letters

    def lattice_word(self, coeffs) -> tuple[int, ...]:
        word: list[int] = []
        for j, k in enumerate(np.asarray(coeffs, dtype=np.int64).tolist()):
            letter = self._basis_letters[j]
            word.extend([letter if k > 0 else -letter] * abs(k))
        return tuple(word)

    def lattice_translation(self, coeffs) -> GroupElement:
        coeffs = np.asarray(coeffs, dtype=np.int64)
        t = EuclideanIsometry.translation_by(self._basis_cols @ coeffs)
        return GroupElement(t, self.lattice_word(coeffs))

    def _reduce(self, e: GroupElement) -> GroupElement:
        """Move the translation part into the fundamental cell ``B [0, 1)^n``."""
        coef = self._basis_inv @ e.translation
        shift = -np.floor(coef + 1e-7).astype(np.int64)
        if not shift.any():
            return e
        return self.lattice_translation(shift) @ e

    @cached_property
    def coset_representatives(self) -> tuple[GroupElement, ...]:
        """Representatives of the cosets of the lattice in the group (identity first)."""
        if not self.has_lattice:
            raise GroupError("coset representatives need a declared lattice")
        index = IsometryIndex(self.tol)
        reps = [self.identity_element()]
        index.add(reps[0].isometry)
        frontier = [reps[0]]
        letters = [s for i in range(len(self.generators)) for s in (i + 1, -(i + 1))]
        while frontier:
            nxt = []
            for r in frontier:
                for s in letters:
                    cand = self._reduce(GroupElement(self.letter(s), (s,)) @ r)
                    _, inserted = index.add(cand.isometry)
                    if inserted:
                        reps.append(cand)
                        nxt.append(cand)
                        if len(reps) > self.element_cap:
                            raise EnumerationBudgetExceeded(
                                f"more than {self.element_cap} lattice cosets; the declared lattice "
                                "is not of finite index"
                            )
            frontier = nxt
        return tuple(reps)

    @cached_property
    def _coset_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        reps = self.coset_representatives
        return (
            np.array([r.linear for r in reps]).reshape(len(reps), self.dimension, self.dimension),
            np.array([r.translation for r in reps]).reshape(len(reps), self.dimension),
        )

    def point_group(self) -> list[np.ndarray]:
        """Distinct linear parts (needs a lattice)."""
        out: list[np.ndarray] = []
        for r in self.coset_representatives:
            if not any(np.max(np.abs(r.linear - a)) <= self.tol for a in out):
                out.append(r.linear)
        return out

    def _lattice_ball(self, center: np.ndarray, radius: float) -> ElementList:
        found: list[GroupElement] = []
        inv = self._basis_inv
        widths = radius * np.linalg.norm(inv, axis=1) + 1e-9
        for rep in self.coset_representatives:
            y = apply(rep.isometry, center) - center
            k0 = -inv @ y
            ranges = [range(int(math.floor(k0[i] - widths[i])), int(math.ceil(k0[i] + widths[i])) + 1)
                      for i in range(self.dimension)]
            ks = np.array(list(itertools.product(*ranges)), dtype=np.int64).reshape(-1, self.dimension)
            d = np.linalg.norm(y[None, :] + ks @ self._basis_cols.T, axis=1)
            for k in ks[d <= radius + self.tol]:
                found.append(self.lattice_translation(k) @ rep)
                if len(found) > self.element_cap:
                    raise EnumerationBudgetExceeded(
                        f"ball of radius {radius} holds more than {self.element_cap} elements"
                    )
        found.sort(key=_sort_key(center))
        return ElementList(found, complete=True)

    # -- word search ---------------------------------------------------------------------------

    def _word_bfs(self, center: np.ndarray, radius: float, max_len: int | None) -> ElementList:
        index = IsometryIndex(self.tol)
        ident = self.identity_element()
        index.add(ident.isometry)
        elements = [ident]
        frontier = [ident]
        letters = [s for i in range(len(self.generators)) for s in (i + 1, -(i + 1))]
        reach = max((float(np.linalg.norm(apply(g, center) - center)) for g in self.generators), default=0.0)
        margin = radius + 2 * reach
        length = 0
        complete = False
        while True:
            if not frontier:
                complete = True  # the group is finite and fully listed
                break
            if length > 0 and all(
                np.linalg.norm(apply(e.isometry, center) - center) > margin + self.tol for e in frontier
            ):
                complete = True
                break
            if max_len is not None and length >= max_len:
                break
            nxt = []
            for e in frontier:
                for s in letters:
                    cand = GroupElement(self.letter(s), (s,)) @ e
                    _, inserted = index.add(cand.isometry)
                    if inserted:
                        elements.append(cand)
                        nxt.append(cand)
                        if len(elements) > self.element_cap:
                            raise EnumerationBudgetExceeded(
                                f"word search passed the element cap {self.element_cap} at word length "
                                f"{length + 1}"
                            )
            frontier = nxt
            length += 1
        inside = [e for e in elements if np.linalg.norm(apply(e.isometry, center) - center) <= radius + self.tol]
        inside.sort(key=_sort_key(center))
        return ElementList(inside, complete=complete)


def enumerate_ball(G: GeneratedGroup, center, radius: float) -> ElementList:
    """All elements moving ``center`` by at most ``radius``.

    The returned list has ``complete=False`` when the word search stopped at
    ``G.max_word_length`` while frontier words still landed near the ball.
    """
    if radius < 0:
        raise GroupError("radius must be non-negative")
    center = np.asarray(center, dtype=float)
    if G.has_lattice:
        return G._lattice_ball(center, radius)
    return G._word_bfs(center, radius, G.max_word_length)


# --- finite groups --------------------------------------------------------------------------------


class FiniteGroup:
    """Finite group of isometries stored with its multiplication table."""

    def __init__(self, elements: Sequence[GroupElement], tol: float = TOL):
        elements = list(elements)
        if not elements:
            raise GroupError("a group has at least the identity")
        ident_pos = next((i for i, e in enumerate(elements) if e.isometry.is_identity(tol)), None)
        if ident_pos is None:
            raise GroupError("element list does not contain the identity")
        elements.insert(0, elements.pop(ident_pos))
        self.tol = tol
        self.index = IsometryIndex(tol)
        self.elements: list[GroupElement] = []
        for e in elements:
            _, inserted = self.index.add(e.isometry)
            if inserted:
                self.elements.append(e)
        m = len(self.elements)
        table = np.empty((m, m), dtype=np.int64)
        for i, a in enumerate(self.elements):
            for j, b in enumerate(self.elements):
                k = self.index.find(compose(a.isometry, b.isometry))
                if k is None:
                    raise GroupError("element list is not closed under composition")
                table[i, j] = k
        self.table = table
        self.inverses = np.array([int(np.flatnonzero(table[i] == 0)[0]) for i in range(m)])

    @property
    def order(self) -> int:
        return len(self.elements)

    def __len__(self) -> int:
        return self.order

    def __iter__(self):
        return iter(self.elements)

    def __repr__(self) -> str:
        return f"FiniteGroup(order={self.order})"

    def locate(self, g: EuclideanIsometry | GroupElement) -> int | None:
        iso = g.isometry if isinstance(g, GroupElement) else g
        return self.index.find(iso)

    def indices_of(self, H: FiniteGroup | Iterable[GroupElement]) -> frozenset[int]:
        out = set()
        for e in H:
            i = self.locate(e)
            if i is None:
                raise GroupError("subgroup containment violation: element not in the parent group")
            out.add(i)
        return frozenset(out)

    def closure(self, gens: Iterable[int]) -> frozenset[int]:
        gens = list(gens)
        seen = {0}
        frontier = [0]
        while frontier:
            nxt = []
            for a in frontier:
                for g in gens:
                    c = int(self.table[a, g])
                    if c not in seen:
                        seen.add(c)
                        nxt.append(c)
            frontier = nxt
        return frozenset(seen)

    def subgroup(self, indices: Iterable[int]) -> FiniteGroup:
        idx = sorted(set(indices))
        sub = FiniteGroup([self.elements[i] for i in idx], self.tol)
        sub.parent_indices = tuple(idx)
        return sub

    def conjugate_set(self, g: int, indices: frozenset[int]) -> frozenset[int]:
        gi = int(self.inverses[g])
        return frozenset(int(self.table[self.table[g, h], gi]) for h in indices)

    def normalizer_indices(self, indices: frozenset[int]) -> frozenset[int]:
        return frozenset(g for g in range(self.order) if self.conjugate_set(g, indices) == indices)

    def element_order(self, i: int) -> int:
        k, cur = 1, i
        while cur != 0:
            cur = int(self.table[cur, i])
            k += 1
        return k

    def linear_parts(self) -> list[np.ndarray]:
        return [e.linear for e in self.elements]


@dataclass(frozen=True, eq=False)
class SubgroupRecord:
    subgroup: FiniteGroup
    parent: FiniteGroup
    normalizer: FiniteGroup
    conjugacy_class_id: int
    indices: frozenset[int] = field(repr=False)
    normalizer_indices: frozenset[int] = field(repr=False)

    @property
    def order(self) -> int:
        return self.subgroup.order

    @property
    def class_size(self) -> int:
        return self.parent.order // self.normalizer.order


def subgroup_index_sets(H: FiniteGroup) -> list[frozenset[int]]:
    """Every subgroup of ``H`` as a set of element indices.

    Grows subgroups one generator at a time starting from the cyclic ones.
    Every subgroup is reached because it is generated by finitely many
    elements added in some order.
    """
    found: set[frozenset[int]] = {frozenset({0})}
    queue: list[frozenset[int]] = [frozenset({0})]
    gens_of: dict[frozenset[int], tuple[int, ...]] = {frozenset({0}): ()}
    while queue:
        k = queue.pop()
        for g in range(H.order):
            if g in k:
                continue
            gens = gens_of[k] + (g,)
            j = H.closure(gens)
            if j not in found:
                found.add(j)
                gens_of[j] = gens
                queue.append(j)
    return sorted(found, key=lambda s: (len(s), sorted(s)))


def subgroups(H: FiniteGroup) -> list[SubgroupRecord]:
    if H.order > MAX_EXHAUSTIVE_ORDER:
        raise GroupError(f"group order {H.order} exceeds the exhaustive cap {MAX_EXHAUSTIVE_ORDER}")
    sets = subgroup_index_sets(H)
    class_of: dict[frozenset[int], int] = {}
    next_id = 0
    records = []
    for s in sets:
        if s not in class_of:
            for g in range(H.order):
                class_of.setdefault(H.conjugate_set(g, s), next_id)
            next_id += 1
        norm = H.normalizer_indices(s)
        records.append(
            SubgroupRecord(
                subgroup=H.subgroup(s),
                parent=H,
                normalizer=H.subgroup(norm),
                conjugacy_class_id=class_of[s],
                indices=s,
                normalizer_indices=norm,
            )
        )
    return records


def normalizer(H: FiniteGroup | Iterable[GroupElement], G: FiniteGroup) -> FiniteGroup:
    """``{g in G : g H g^-1 = H}``."""
    return G.subgroup(G.normalizer_indices(_as_subgroup(G, H)))


def are_conjugate(G: FiniteGroup, H1, H2) -> bool:
    s1, s2 = _as_subgroup(G, H1), _as_subgroup(G, H2)
    if len(s1) != len(s2):
        return False
    return any(G.conjugate_set(g, s1) == s2 for g in range(G.order))


def _as_subgroup(G: FiniteGroup, H) -> frozenset[int]:
    s = G.indices_of(H)
    if G.closure(s) != s:
        raise GroupError("subgroup containment violation: elements do not form a subgroup")
    return s


def linearize_at(H: FiniteGroup | Iterable[GroupElement], x, tol: float = TOL) -> list[np.ndarray]:
    """Linear parts of the elements, i.e. their action on the tangent space at ``x``.

    Conjugating by the translation to ``x`` turns ``y -> A y + b`` into
    ``y -> A y + (A x + b - x)``; the residual translation must vanish.
    """
    x = np.asarray(x, dtype=float)
    out = []
    for e in H:
        iso = e.isometry if isinstance(e, GroupElement) else e
        resid = float(np.linalg.norm(apply(iso, x) - x))
        if resid > tol:
            raise GroupError(f"element does not fix the point (residual {resid:.3e})")
        out.append(np.array(iso.linear))
    return out


def isotropy_at(G: GeneratedGroup, x) -> FiniteGroup:
    """The finite group of elements fixing ``x`` within the group tolerance."""
    x = np.asarray(x, dtype=float)
    if G.has_lattice:
        lin, trans = G._coset_arrays
        res, shifts = kernels.lattice_residuals(lin, trans, G._basis_cols, x[None, :])
        elems = [
            G.lattice_translation(shifts[k, 0]) @ rep
            for k, rep in enumerate(G.coset_representatives)
            if res[k, 0] <= G.tol
        ]
        return FiniteGroup(elems, G.tol)
    elems = enumerate_ball(G, x, G.tol)
    return FiniteGroup(list(elems), G.tol)


def singular_dimension_of_linears(linears: Sequence[np.ndarray]) -> int:
    return fixed_vectors(linears).shape[1]


@dataclass(frozen=True, eq=False)
class PropernessCertificate:
    box: Box
    elements: tuple[GroupElement, ...]
    search_radius: float
    frontier_separated: bool

    @property
    def count(self) -> int:
        return len(self.elements)


def boxes_meet(g: EuclideanIsometry, box: Box, tol: float = TOL) -> bool:
    """Whether ``g.box`` and ``box`` intersect (closed boxes), decided by a feasibility LP."""
    n = box.dim
    at = g.linear.T
    shift = at @ g.translation
    a_ub = np.vstack([at, -at])
    b_ub = np.concatenate([box.hi + shift + tol, -(box.lo + shift) + tol])
    bounds = list(zip(box.lo - tol, box.hi + tol))
    res = linprog(np.zeros(n), A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs")
    return res.status == 0


def properness_check(G: GeneratedGroup, box: Box) -> PropernessCertificate:
    """Certify that only finitely many elements move ``box`` onto itself.

    Any such element moves the box center by at most the box diameter, so the
    search is a ball enumeration of that radius. Without a lattice the word
    search keeps lengthening until the frontier separates or the element cap
    is hit.
    """
    center = box.center
    radius = box.diameter
    try:
        if G.has_lattice:
            ball = G._lattice_ball(center, radius)
        else:
            ball = G._word_bfs(center, radius, None)
    except EnumerationBudgetExceeded as exc:
        raise PropernessFailure(f"enumeration budget exhausted: {exc}", G.element_cap) from None
    if not ball.complete:
        raise PropernessFailure("word frontier never separated from the box", len(ball))
    meeting = tuple(e for e in ball if boxes_meet(e.isometry, box, G.tol))
    return PropernessCertificate(box, meeting, radius, True)
