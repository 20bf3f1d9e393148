"""Stratification of the singular locus of a flat orbifold R^n / G by singular dimension.

The singular set upstairs is the arrangement of fixed subspaces of elliptic
elements. Every flat of that arrangement meeting the fundamental box is
collected (fixed sets plus all their intersections); the flats are grouped
into G-orbits, and each orbit gives the components of one stratum:

* points give components of the zero-dimensional stratum,
* lines are cut at their singular points into open intervals, and the
  stabilizer of the line decides which intervals are the same component,
* higher flats give one component per orbit.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from orbistrat import kernels
from orbistrat.geom import (
    AffineSubspace,
    Box,
    EuclideanIsometry,
    IsometryKind,
    apply,
    classify,
    common_fixed_set,
    fixed_set,
    fixed_vectors,
)
from orbistrat.groups import (
    FiniteGroup,
    GeneratedGroup,
    GroupElement,
    GroupError,
    PropernessCertificate,
    PropernessFailure,
    ToleranceIndex,
    enumerate_ball,
    isotropy_at,
    linearize_at,
    properness_check,
)

log = logging.getLogger(__name__)

GENERIC_RETRIES = 100
ORBIT_RADIUS_FACTOR = 3.0


class StrataError(ValueError):
    pass


class ModelInvariantError(StrataError):
    """A model violates one of its declared invariants; ``invariant`` names it."""

    def __init__(self, invariant: str, detail: str):
        super().__init__(f"{invariant}: {detail}")
        self.invariant = invariant


class HypothesisError(StrataError):
    pass


@dataclass(frozen=True, eq=False)
class OrbifoldModel:
    dimension: int
    group: GeneratedGroup
    fundamental_box: Box
    tolerance: float = 1e-9
    label: str = ""

    def __post_init__(self):
        if self.group.dimension != self.dimension or self.fundamental_box.dim != self.dimension:
            raise StrataError("group, box and model dimensions disagree")

    @cached_property
    def certificate(self) -> PropernessCertificate:
        return properness_check(self.group, self.fundamental_box)

    @cached_property
    def _near(self) -> list[GroupElement]:
        box = self.fundamental_box
        return list(enumerate_ball(self.group, box.center, 2 * box.diameter))

    def canonical_point(self, x) -> np.ndarray:
        """Orbit representative of ``x`` inside the box (lexicographically least)."""
        return self.push_into_box(x)[0]

    @cached_property
    def _near_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return np.array([e.linear for e in self._near]), np.array([e.translation for e in self._near])

    def push_into_box(self, x) -> tuple[np.ndarray, GroupElement]:
        x = np.asarray(x, dtype=float)
        box = self.fundamental_box
        offset = float(np.linalg.norm(x - box.center))
        best = None
        if offset <= 1.5 * box.diameter:
            # every element landing x in the box moves the centre by at most 2 diam
            lin, trans = self._near_arrays
            images = np.einsum("kij,j->ki", lin, x) + trans
            inside = np.all((images >= box.lo - self.tolerance) & (images <= box.hi + self.tolerance), axis=1)
            for i in np.flatnonzero(inside):
                key = tuple(np.round(images[i], 7))
                if best is None or key < best[0]:
                    best = (key, images[i], self._near[i])
        else:
            for e in enumerate_ball(self.group, x, offset + box.diameter / 2):
                y = apply(e.isometry, x)
                if box.contains(y, self.tolerance):
                    key = tuple(np.round(y, 7))
                    if best is None or key < best[0]:
                        best = (key, y, e)
        if best is None:
            raise ModelInvariantError("box covering", f"no translate of {x.tolist()} lands in the box")
        y = np.clip(best[1], box.lo, box.hi) + 0.0
        return y, best[2]

    def equivalent_points(self, x, y) -> GroupElement | None:
        """An element mapping ``x`` to ``y`` within tolerance, if one exists."""
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        radius = float(np.linalg.norm(x - y)) + self.tolerance
        for e in enumerate_ball(self.group, x, radius):
            if np.linalg.norm(apply(e.isometry, x) - y) <= 10 * self.tolerance:
                return e
        return None


def validate_model(model: OrbifoldModel, samples: int = 256, seed: int = 0) -> PropernessCertificate:
    """Check properness on the box and that translates of the box cover a neighbourhood of it."""
    try:
        cert = model.certificate
    except PropernessFailure as exc:
        raise ModelInvariantError("properness", str(exc)) from None
    box = model.fundamental_box
    margin = 0.1 * box.diameter
    rng = np.random.default_rng(seed)
    outer = box.expanded(margin)
    pts = np.vstack([outer.sample(rng, samples), outer.corners()])
    elems = model._near
    lin = np.array([e.linear for e in elems])
    trans = np.array([e.translation for e in elems])
    covered = np.zeros(len(pts), dtype=bool)
    for a, b in zip(lin, trans):
        covered |= box.contains(pts @ a.T + b, model.tolerance)
        if covered.all():
            break
    if not covered.all():
        bad = pts[~covered][0]
        raise ModelInvariantError("box covering", f"point {bad.tolist()} near the box is not covered")
    return cert


# --- singular dimension ------------------------------------------------------------------------


def isotropy(model: OrbifoldModel, x) -> FiniteGroup:
    return isotropy_at(model.group, x)


def singular_dimension(model: OrbifoldModel, x) -> int:
    x = np.asarray(x, dtype=float)
    H = isotropy_at(model.group, x)
    return fixed_vectors(linearize_at(H, x, model.tolerance)).shape[1]


def singular_dimensions(model: OrbifoldModel, points, backend=None) -> np.ndarray:
    """Vectorized :func:`singular_dimension` for an ``(M, n)`` array of points."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    G = model.group
    tol = model.tolerance
    if G.has_lattice:
        lin, trans = G._coset_arrays
        res, _ = kernels.lattice_residuals(lin, trans, G._basis_cols, pts, backend=backend)
    else:
        box = model.fundamental_box
        radius = 2 * float(np.max(np.linalg.norm(pts - box.center, axis=1))) + tol
        elems = enumerate_ball(G, box.center, radius)
        lin = np.array([e.linear for e in elems])
        trans = np.array([e.translation for e in elems])
        res = kernels.displacements(lin, trans, pts, backend=backend)
    mask = res <= tol
    out = np.empty(len(pts), dtype=np.int64)
    cache: dict[bytes, int] = {}
    for m in range(len(pts)):
        key = np.packbits(mask[:, m]).tobytes()
        if key not in cache:
            cache[key] = fixed_vectors([lin[k] for k in np.flatnonzero(mask[:, m])] or [np.eye(G.dimension)]).shape[1]
        out[m] = cache[key]
    return out


# --- result types ------------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FrontierPoint:
    """A frontier point of a component, seen from a lift on the component's flat."""

    point: np.ndarray
    representative: np.ndarray
    isotropy: FiniteGroup
    local_flat: AffineSubspace
    local_subgroup: FiniteGroup
    singular_dimension: int
    param: float | None = None


@dataclass(eq=False)
class _Line:
    """Interval structure of one representative fixed line."""

    flat: AffineSubspace
    origin: np.ndarray
    direction: np.ndarray
    period: float
    period_element: GroupElement
    flip: GroupElement | None
    flip_offset: float | None
    cuts: list[float]
    cut_isotropy: list[FiniteGroup]
    interval_class: list[int]
    interval_component: dict[int, int] = field(default_factory=dict)

    def point(self, s: float) -> np.ndarray:
        return self.origin + s * self.direction

    def intervals(self) -> list[tuple[float, float]]:
        c = self.cuts
        return [(c[i], c[i + 1] if i + 1 < len(c) else c[0] + self.period) for i in range(len(c))]

    def locate(self, s: float) -> int:
        """Index of the interval containing parameter ``s`` (taken mod the period)."""
        s0 = self.cuts[0]
        t = s0 + (s - s0) % self.period
        for i, (a, b) in enumerate(self.intervals()):
            if a < t < b:
                return i
        raise StrataError(f"parameter {s} lies on a cut point")


@dataclass(frozen=True, eq=False)
class StratumComponent:
    id: int
    k: int
    isotropy: FiniteGroup
    upstairs_fixed: AffineSubspace
    sample_points: tuple[np.ndarray, ...]
    is_closed: bool
    frontier_points: tuple[FrontierPoint, ...]
    length: float | None = None
    line: _Line | None = field(default=None, repr=False)
    intervals: tuple[int, ...] = ()

    @property
    def isotropy_order(self) -> int:
        return self.isotropy.order

    @property
    def is_regular(self) -> bool:
        return self.k == self.upstairs_fixed.ambient_dim


@dataclass(frozen=True, eq=False)
class Stratification:
    model: OrbifoldModel
    components: tuple[StratumComponent, ...]
    regular_dimension_check: bool
    flats: tuple[AffineSubspace, ...] = field(repr=False, default=())

    def by_k(self, k: int) -> list[StratumComponent]:
        return [c for c in self.components if c.k == k]

    def singular(self) -> list[StratumComponent]:
        n = self.model.dimension
        return [c for c in self.components if c.k < n]

    def counts(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for c in self.components:
            out[c.k] = out.get(c.k, 0) + 1
        return out

    def smallest_positive_k(self) -> int:
        return min(c.k for c in self.components if c.k > 0)

    def component(self, cid: int) -> StratumComponent:
        return self.components[cid]

    @cached_property
    def _membership_elements(self) -> tuple[np.ndarray, np.ndarray]:
        box = self.model.fundamental_box
        periods = [c.line.period for c in self.components if c.line is not None]
        radius = 2 * box.diameter + max(periods, default=0.0)
        elems = enumerate_ball(self.model.group, box.center, radius)
        return np.array([e.linear for e in elems]), np.array([e.translation for e in elems])


@dataclass(frozen=True)
class End:
    pass


@dataclass(frozen=True)
class ExtendsInto:
    component_id: int


@dataclass(frozen=True, eq=False)
class FrontierEffective:
    point: np.ndarray
    isotropy: FiniteGroup
    normalizer: FiniteGroup
    effective: FiniteGroup


@dataclass(frozen=True, eq=False)
class ClosedStratumOrbifold:
    component: StratumComponent
    kernel: FiniteGroup
    frontier: tuple[FrontierEffective, ...]
    is_manifold: bool

    @property
    def frontier_effective_groups(self) -> dict[tuple[float, ...], FiniteGroup]:
        return {tuple(np.round(f.point, 12).tolist()): f.effective for f in self.frontier}


# --- arrangement -------------------------------------------------------------------------------


class _FlatIndex(ToleranceIndex):
    def _coords(self, f: AffineSubspace) -> np.ndarray:
        proj = f.basis @ f.basis.T
        return np.concatenate([[f.dim], f.base_point, proj.ravel()]) / self.quantum

    def _close(self, a: AffineSubspace, b: AffineSubspace) -> bool:
        return a.same_as(b, self.tol * 100)


def _flat_meets_box(f: AffineSubspace, box: Box, tol: float) -> bool:
    if f.dim == 0:
        return bool(box.contains(f.base_point, tol))
    u = f.basis
    res = linprog(
        np.zeros(f.dim),
        A_ub=np.vstack([u, -u]),
        b_ub=np.concatenate([box.hi - f.base_point + tol, f.base_point - box.lo + tol]),
        bounds=[(None, None)] * f.dim,
        method="highs",
    )
    return res.status == 0


@dataclass(eq=False)
class _FlatRecord:
    flat: AffineSubspace
    elements: list[GroupElement]
    group: FiniteGroup | None = None
    generic: np.ndarray | None = None
    orbit: int = -1


def _arrangement(model: OrbifoldModel) -> tuple[list[_FlatRecord], list[GroupElement]]:
    """All flats of the fixed-subspace arrangement that meet the box."""
    box = model.fundamental_box
    tol = model.tolerance
    near = enumerate_ball(model.group, box.center, box.diameter)
    elliptic = [e for e in near if classify(e.isometry, tol) is IsometryKind.ELLIPTIC]
    index = _FlatIndex(tol)
    flats: list[AffineSubspace] = []
    for e in elliptic:
        f = fixed_set(e.isometry, tol)
        if f is not None and _flat_meets_box(f, box, 1e-7):
            _, new = index.add(f)
            if new:
                flats.append(f)
    frontier = list(range(len(flats)))
    while frontier:
        fresh = []
        for i in frontier:
            for j in range(len(flats)):
                if j == i:
                    continue
                a, b = flats[i], flats[j]
                if a.contains_subspace(b, 100 * tol) or b.contains_subspace(a, 100 * tol):
                    continue
                f = a.intersect(b, 1e-7)
                if f is None or not _flat_meets_box(f, box, 1e-7):
                    continue
                _, new = index.add(f)
                if new:
                    flats.append(f)
                    fresh.append(len(flats) - 1)
        frontier = fresh
    records = []
    for f in flats:
        members = [e for e in elliptic if _fixes_flat(e.isometry, f, tol)]
        common = common_fixed_set([e.isometry for e in members], 1e-7)
        if common is None or common.dim != f.dim:
            log.debug("dropping flat %r: not the fixed set of its stabilizer", f)
            continue
        records.append(_FlatRecord(f, members))
    return records, elliptic


def _fixes_flat(g: EuclideanIsometry, f: AffineSubspace, tol: float) -> bool:
    if np.linalg.norm(apply(g, f.base_point) - f.base_point) > 10 * tol:
        return False
    if f.dim == 0:
        return True
    return float(np.max(np.abs(g.linear @ f.basis - f.basis))) <= 10 * tol


def _generic_point(model: OrbifoldModel, rec: _FlatRecord, lower: Sequence[AffineSubspace], rng) -> np.ndarray:
    f = rec.flat
    box = model.fundamental_box
    tol = model.tolerance
    target = len(rec.elements) + 1
    if f.dim == 0:
        return f.base_point.copy()
    anchor = f.project(box.center)
    half = box.diameter / 2
    fallback = None
    for attempt in range(GENERIC_RETRIES):
        p = anchor + f.basis @ rng.uniform(-half, half, size=f.dim)
        if any(g.distance(p) <= 10 * tol for g in lower):
            continue
        if isotropy_at(model.group, p).order != target:
            continue
        if box.contains(p, tol):
            return p
        if fallback is None:
            fallback = p
    if fallback is not None:
        return fallback
    raise StrataError(f"no generic point found on flat {f!r} after {GENERIC_RETRIES} attempts")


def _group_orbits(model: OrbifoldModel, records: list[_FlatRecord]) -> list[list[int]]:
    box = model.fundamental_box
    elems = enumerate_ball(model.group, box.center, ORBIT_RADIUS_FACTOR * box.diameter)
    index = _FlatIndex(model.tolerance)
    for r in records:
        index.add(r.flat)
    orbits: list[list[int]] = []
    for i, r in enumerate(records):
        if r.orbit >= 0:
            continue
        oid = len(orbits)
        members = [i]
        r.orbit = oid
        for e in elems:
            j = index.find(r.flat.transformed(e.isometry))
            if j is not None and records[j].orbit < 0:
                records[j].orbit = oid
                members.append(j)
        orbits.append(sorted(members))
    return orbits


# --- lines -------------------------------------------------------------------------------------


def _analyze_line(model: OrbifoldModel, rec: _FlatRecord) -> _Line:
    f = rec.flat
    tol = model.tolerance
    box = model.fundamental_box
    u = f.basis[:, 0].copy()
    origin = f.project(box.center)
    radius = box.diameter
    period_elem = None
    for _ in range(12):
        best = None
        for e in enumerate_ball(model.group, origin, radius):
            if np.max(np.abs(e.linear @ u - u)) > 1e-7:
                continue
            q = apply(e.isometry, origin)
            if f.distance(q) > 1e-7:
                continue
            c = float((q - origin) @ u)
            if c > 1e-7 and (best is None or c < best[0] - 1e-9):
                best = (c, e)
        if best is not None:
            period, period_elem = best
            break
        radius *= 2
    if period_elem is None:
        raise StrataError(f"no translation along the line {f!r}: component is not compact")
    window_center = origin + 0.5 * period * u
    cuts: list[float] = []
    flip = None
    flip_offset = None
    for e in enumerate_ball(model.group, window_center, period + 1e-7):
        iso = e.isometry
        if _fixes_flat(iso, f, tol):
            continue
        fs = fixed_set(iso, tol)
        if fs is None:
            continue
        meet = fs.intersect(f, 1e-7)
        if meet is None or meet.dim != 0:
            continue
        s = float((meet.base_point - origin) @ u) % period
        if period - s < 1e-7:
            s = 0.0
        if not any(abs(s - c) < 1e-7 for c in cuts):
            cuts.append(s)
        if flip is None and np.max(np.abs(e.linear @ u + u)) <= 1e-7:
            flip = e
            flip_offset = float((apply(iso, origin) - origin) @ u)
    cuts.sort()
    line = _Line(f, origin, u, period, period_elem, flip, flip_offset, cuts, [], [])
    line.cut_isotropy = [isotropy_at(model.group, line.point(s)) for s in cuts]
    if not cuts:
        return line
    intervals = line.intervals()
    parent = list(range(len(intervals)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    if flip is not None:
        for i, (a, b) in enumerate(intervals):
            j = line.locate(flip_offset - 0.5 * (a + b))
            parent[find(i)] = find(j)
    line.interval_class = [find(i) for i in range(len(intervals))]
    return line


# --- stratify ----------------------------------------------------------------------------------


def stratify(model: OrbifoldModel, seed: int = 0) -> Stratification:
    """Components of every stratum, ordered by (k, isotropy order, base point)."""
    validate_model(model)
    rng = np.random.default_rng(seed)
    n = model.dimension
    tol = model.tolerance
    box = model.fundamental_box
    records, _ = _arrangement(model)
    records.sort(key=lambda r: (r.flat.dim, -len(r.elements), tuple(np.round(r.flat.base_point, 9))))
    for r in records:
        lower = [s.flat for s in records if s.flat.dim < r.flat.dim and r.flat.contains_subspace(s.flat, 1e-7)]
        r.generic = _generic_point(model, r, lower, rng)
        r.group = isotropy_at(model.group, r.generic)
    orbits = _group_orbits(model, records)
    draft: list[dict] = []

    def sub_flat_frontier(orbit_members: list[int]) -> list[FrontierPoint]:
        dim = records[orbit_members[0]].flat.dim
        seen: set[int] = set()
        out = []
        for s in records:
            if s.flat.dim >= dim or s.orbit in seen:
                continue
            host = next((records[j] for j in orbit_members if records[j].flat.contains_subspace(s.flat, 1e-7)), None)
            if host is None:
                continue
            seen.add(s.orbit)
            out.append(_frontier_entry(model, s.generic, host.flat, host.group, s.group))
        return out

    for members in orbits:
        rep = records[members[0]]
        k = rep.flat.dim
        if k == 0:
            draft.append(dict(k=0, group=rep.group, flat=rep.flat, samples=[rep.generic], frontier=[]))
        elif k == 1:
            draft.extend(_line_components(model, rep))
        else:
            frontier = sub_flat_frontier(members)
            draft.append(dict(k=k, group=rep.group, flat=rep.flat, samples=[rep.generic], frontier=frontier))
    regular_frontier = []
    seen_orbits: set[int] = set()
    for r in records:
        if r.orbit not in seen_orbits:
            seen_orbits.add(r.orbit)
            regular_frontier.append(
                _frontier_entry(model, r.generic, AffineSubspace.whole(n), _trivial(model), r.group)
            )
    regular_sample = _regular_sample(model, rng, [r.flat for r in records])
    draft.append(
        dict(k=n, group=_trivial(model), flat=AffineSubspace.whole(n), samples=[regular_sample], frontier=regular_frontier)
    )

    for d in draft:
        d["samples"] = [model.canonical_point(p) for p in d["samples"]]
    draft.sort(key=lambda d: (d["k"], d["group"].order, tuple(np.round(d["samples"][0], 9))))
    components = []
    for cid, d in enumerate(draft):
        line = d.get("line")
        if line is not None:
            for i in d["intervals"]:
                line.interval_component[i] = cid
        components.append(
            StratumComponent(
                id=cid,
                k=d["k"],
                isotropy=d["group"],
                upstairs_fixed=d["flat"],
                sample_points=tuple(d["samples"]),
                is_closed=not d["frontier"],
                frontier_points=tuple(d["frontier"]),
                length=d.get("length"),
                line=line,
                intervals=tuple(d.get("intervals", ())),
            )
        )
    check = bool(np.all(singular_dimensions(model, box.sample(rng, 64)) == n))
    return Stratification(model, tuple(components), check, tuple(r.flat for r in records))


def _trivial(model: OrbifoldModel) -> FiniteGroup:
    return FiniteGroup([model.group.identity_element()], model.tolerance)


def _regular_sample(model: OrbifoldModel, rng, flats: Sequence[AffineSubspace]) -> np.ndarray:
    box = model.fundamental_box
    for _ in range(GENERIC_RETRIES):
        p = box.sample(rng, 1)[0]
        if all(f.distance(p) > 1e-6 for f in flats) and singular_dimension(model, p) == model.dimension:
            return p
    raise StrataError("could not find a regular point in the box")


def _frontier_entry(model, x, local_flat, local_group, x_group, param=None) -> FrontierPoint:
    x = np.asarray(x, dtype=float)
    local = FiniteGroup([x_group.elements[x_group.locate(e)] for e in local_group], model.tolerance)
    dim = fixed_vectors(linearize_at(x_group, x, model.tolerance)).shape[1]
    return FrontierPoint(
        point=x,
        representative=model.canonical_point(x),
        isotropy=x_group,
        local_flat=local_flat,
        local_subgroup=local,
        singular_dimension=dim,
        param=param,
    )


def _line_components(model: OrbifoldModel, rec: _FlatRecord) -> list[dict]:
    line = _analyze_line(model, rec)
    if not line.cuts:
        return [
            dict(k=1, group=rec.group, flat=rec.flat, samples=[rec.generic], frontier=[], line=line,
                 intervals=[], length=line.period)
        ]
    intervals = line.intervals()
    classes: dict[int, list[int]] = {}
    for i, c in enumerate(line.interval_class):
        classes.setdefault(c, []).append(i)
    out = []
    for members in classes.values():
        samples = [line.point(0.5 * (intervals[i][0] + intervals[i][1])) for i in members]
        frontier: list[FrontierPoint] = []
        seen_params: list[float] = []
        for i in members:
            for s in intervals[i]:
                s_mod = s % line.period
                if any(abs(s_mod - t) < 1e-7 or abs(abs(s_mod - t) - line.period) < 1e-7 for t in seen_params):
                    continue
                seen_params.append(s_mod)
                idx = min(range(len(line.cuts)), key=lambda c: min(abs(line.cuts[c] - s_mod), line.period - abs(line.cuts[c] - s_mod)))
                x = line.point(line.cuts[idx])
                entry = _frontier_entry(model, x, rec.flat, rec.group, line.cut_isotropy[idx], param=line.cuts[idx])
                if any(model.equivalent_points(entry.point, f.point) is not None for f in frontier):
                    continue
                frontier.append(entry)
        a, b = intervals[members[0]]
        out.append(
            dict(k=1, group=rec.group, flat=rec.flat, samples=samples, frontier=frontier, line=line,
                 intervals=members, length=b - a)
        )
    return out


def components_containing(model: OrbifoldModel, strat: Stratification, x) -> list[int]:
    """Ids of the components whose lift meets the orbit of ``x`` (exactly one for a partition)."""
    tol = model.tolerance
    n = model.dimension
    y = model.canonical_point(x)
    G_y = isotropy_at(model.group, y)
    k = fixed_vectors(linearize_at(G_y, y, tol)).shape[1]
    lin, trans = strat._membership_elements
    images = np.einsum("kij,j->ki", lin, y) + trans
    found = []
    for c in strat.components:
        if c.k != k or c.isotropy_order != G_y.order:
            continue
        if k == n:
            found.append(c.id)
            continue
        flat = c.upstairs_fixed
        rel = images - flat.base_point
        off = rel - (rel @ flat.basis) @ flat.basis.T
        hits = images[np.linalg.norm(off, axis=1) <= 10 * tol]
        if c.line is not None and c.intervals:
            ok = False
            for q in hits:
                try:
                    ok = c.line.locate(float((q - c.line.origin) @ c.line.direction)) in c.intervals
                except StrataError:
                    ok = False
                if ok:
                    break
        else:
            ok = len(hits) > 0
        if ok:
            found.append(c.id)
    return found


def frontier(model: OrbifoldModel, S: StratumComponent) -> list[tuple[np.ndarray, FiniteGroup]]:
    """Frontier points of ``S`` (box representatives) with their isotropy groups."""
    return [(f.representative, f.isotropy) for f in S.frontier_points]


def _match_frontier(model: OrbifoldModel, S: StratumComponent, x) -> FrontierPoint:
    x = np.asarray(x, dtype=float)
    for f in S.frontier_points:
        if np.linalg.norm(f.point - x) <= 10 * model.tolerance:
            return f
    for f in S.frontier_points:
        if model.equivalent_points(f.point, x) is not None:
            return f
    raise StrataError(f"{x.tolist()} is not a frontier point of component {S.id}")


def analyze_frontier_sigma1(model: OrbifoldModel, S: StratumComponent, x) -> End | ExtendsInto:
    """Whether the one-dimensional component ``S`` terminates at ``x`` or continues past it."""
    if S.k != 1 or S.line is None:
        raise StrataError("analyze_frontier_sigma1 needs a one-dimensional component")
    f = _match_frontier(model, S, x)
    line = S.line
    intervals = line.intervals()
    s = f.param
    right = line.locate(s + 1e-6 * line.period)
    left = line.locate(s - 1e-6 * line.period)
    if right in S.intervals:
        v0, back = line.direction, left
    elif left in S.intervals:
        v0, back = -line.direction, right
    else:
        raise StrataError("frontier point is not adjacent to the component on its line")
    if reversing_element(f.isotropy, v0) is not None:
        return End()
    return ExtendsInto(line.interval_component[back])


def reversing_element(G: FiniteGroup, direction, tol: float = 1e-7) -> GroupElement | None:
    """First element of ``G`` whose linear part sends ``direction`` to its negative."""
    v = np.asarray(direction, dtype=float)
    for e in G.elements:
        if np.linalg.norm(e.linear @ v + v) <= tol:
            return e
    return None


def closed_stratum(model: OrbifoldModel, S: StratumComponent, strat: Stratification | None = None) -> ClosedStratumOrbifold:
    """Kernel and frontier isotropy of the closure of ``S`` as a k-orbifold.

    At a frontier point x with isotropy G_x, the local lift of ``S`` is the fixed
    flat of a subgroup H; its normalizer acts on that flat with kernel H, so
    the effective isotropy of x is N(H)/H, realized here as the restricted
    action on the flat.
    """
    strat = strat if strat is not None else stratify(model)
    kmin = strat.smallest_positive_k()
    if S.k != kmin:
        raise HypothesisError(f"component has k={S.k} but the smallest positive singular dimension is {kmin}")
    if S.k >= 2 and strat.by_k(1):
        raise HypothesisError("closed-stratum construction for k >= 2 requires an empty one-dimensional stratum")
    effective = []
    for f in S.frontier_points:
        G = f.isotropy
        h = G.indices_of(f.local_subgroup)
        norm = G.normalizer_indices(h)
        effective.append(
            FrontierEffective(f.point, G, G.subgroup(norm), _restricted_quotient(G, h, norm, f.local_flat, f.point))
        )
    manifold = all(e.effective.order == 1 for e in effective)
    return ClosedStratumOrbifold(S, S.isotropy, tuple(effective), manifold)


def _restricted_quotient(G: FiniteGroup, h, norm, flat: AffineSubspace, x) -> FiniteGroup:
    """``N/H`` as the group of linear maps it induces on the flat's directions at ``x``."""
    u = flat.basis
    k = u.shape[1]
    reps: list[GroupElement] = []
    seen: list[np.ndarray] = []
    for i in sorted(norm):
        e = G.elements[i]
        m = u.T @ e.linear @ u
        if not any(np.max(np.abs(m - s)) <= 1e-7 for s in seen):
            seen.append(m)
            reps.append(GroupElement(EuclideanIsometry(m, np.zeros(k)), e.witness_word))
    quotient = FiniteGroup(reps, 1e-7)
    expected = len(norm) // len(h)
    if quotient.order != expected:
        raise StrataError(f"restricted action has order {quotient.order}, expected |N/H| = {expected}")
    return quotient
