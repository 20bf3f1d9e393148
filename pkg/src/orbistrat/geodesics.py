"""Closed orbifold geodesics as pairs ``(segment, g)`` and constructors that produce them.

A pair is closed when ``g`` carries the end of the segment (point and
velocity) onto its start. Each constructor below returns a pair that passes
:func:`is_closed`; :func:`existence_dispatch` tries them in a fixed order.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from orbistrat.geom import (
    TOL,
    AffineSubspace,
    EuclideanIsometry,
    GeodesicSegment,
    GeometryError,
    IsometryKind,
    apply,
    classify,
    concatenate,
    inverse,
    min_displacement,
    reverse,
    translate,
)
from orbistrat.groups import GroupElement, enumerate_ball, isotropy_at, linearize_at
from orbistrat.strata import (
    OrbifoldModel,
    Stratification,
    StratumComponent,
    analyze_frontier_sigma1,
    closed_stratum,
    End,
    HypothesisError,
    reversing_element,
    stratify,
)

HYPERBOLIC_WORD_LENGTH = 4
SEARCH_DOUBLINGS = 12


class GeodesicError(ValueError):
    pass


class PreconditionError(GeodesicError):
    """A constructor was called on data that does not meet its hypotheses."""


@dataclass(frozen=True, eq=False)
class GeodesicPair:
    segment: GeodesicSegment
    gamma: GroupElement

    @property
    def length(self) -> float:
        return self.segment.length()


@dataclass(frozen=True, eq=False)
class GeodesicPathSequence:
    """Pieces ``(c_1, g_1, ..., c_k, g_k)``; ``g_i`` carries the end of piece i onto the start of piece i+1."""

    pieces: tuple[tuple[GeodesicSegment, GroupElement], ...]

    def __post_init__(self):
        if not self.pieces:
            raise GeodesicError("a path sequence needs at least one piece")


@dataclass(frozen=True)
class ClosednessReport:
    position_residual: float
    velocity_residual: float
    is_closed: bool
    length: float


class Strategy(enum.Enum):
    HYPERBOLIC = "HyperbolicElement"
    CLOSED_COMPONENT = "ClosedComponent"
    SIGMA1 = "Sigma1"
    EVEN_ISOTROPY = "EvenIsotropyPoint"
    ODD_STRATUM = "OddStratumReduction"
    OPEN = "OpenCase"


STRATEGY_NAMES = {
    "hyperbolic": Strategy.HYPERBOLIC,
    "sigma1": Strategy.SIGMA1,
    "closed-component": Strategy.CLOSED_COMPONENT,
    "even-isotropy": Strategy.EVEN_ISOTROPY,
    "odd-stratum": Strategy.ODD_STRATUM,
}

DISPATCH_ORDER = (
    Strategy.HYPERBOLIC,
    Strategy.SIGMA1,
    Strategy.CLOSED_COMPONENT,
    Strategy.EVEN_ISOTROPY,
    Strategy.ODD_STRATUM,
)


@dataclass(frozen=True, eq=False)
class ExistenceOutcome:
    strategy: Strategy
    geodesic: GeodesicPair | None
    report: ClosednessReport | None
    explanation: str = ""
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.strategy is not Strategy.OPEN and (self.report is None or not self.report.is_closed):
            raise GeodesicError(f"{self.strategy.value} outcome without a verified closed geodesic")


# --- pair calculus ---------------------------------------------------------------------------


def is_closed(p: GeodesicPair, tol: float = TOL) -> ClosednessReport:
    s, g = p.segment, p.gamma
    pos = float(np.linalg.norm(apply(g.isometry, s.end) - s.start))
    vel = float(np.linalg.norm(g.linear @ s.velocity - s.velocity))
    length = s.length()
    return ClosednessReport(pos, vel, pos <= tol and vel <= tol and length > tol, length)


def reduce(seq: GeodesicPathSequence, tol: float = 1e-9) -> GeodesicPair:
    """Unwind a path sequence into one segment and the product of its transitions."""
    (first, g1), *rest = seq.pieces
    path = first
    unwind = EuclideanIsometry.identity(first.dim)
    gamma = g1
    prev = g1
    for seg, g in rest:
        unwind = unwind @ inverse(prev.isometry)
        try:
            path = concatenate(path, translate(unwind, seg), tol=tol)
        except GeometryError as exc:
            raise GeodesicError(f"pieces do not join smoothly after unwinding: {exc}") from None
        gamma = g @ gamma
        prev = g
    return GeodesicPair(path, gamma)


def split(p: GeodesicPair, cuts: Sequence[float], lifts: Sequence[GroupElement]) -> GeodesicPathSequence:
    """Cut the segment at interior parameters and move piece i by ``lifts[i]``.

    ``lifts`` has one element per piece and the first must be the identity.
    Transitions are ``lifts[i+1] lifts[i]^-1``, the last one ``gamma lifts[-1]^-1``,
    so :func:`reduce` recovers ``p``.
    """
    s = p.segment
    ts = [s.t0, *sorted(cuts), s.t1]
    if len(lifts) != len(ts) - 1:
        raise GeodesicError(f"need {len(ts) - 1} lifts, got {len(lifts)}")
    if not lifts[0].isometry.is_identity():
        raise GeodesicError("the first piece must stay in place")
    pieces = []
    for i, (a, b) in enumerate(zip(ts, ts[1:])):
        h = lifts[i]
        nxt = lifts[i + 1] if i + 1 < len(lifts) else p.gamma
        pieces.append((translate(h.isometry, s.restrict(a, b)), nxt @ h.inverse()))
    return GeodesicPathSequence(tuple(pieces))


def conjugate_pair(p: GeodesicPair, delta: GroupElement) -> GeodesicPair:
    """``(delta.c, delta g delta^-1)``: the same orbifold geodesic seen from another lift."""
    return GeodesicPair(translate(delta.isometry, p.segment), delta @ p.gamma @ delta.inverse())


def equivalent(model: OrbifoldModel, p1: GeodesicPair, p2: GeodesicPair, search_radius: float) -> bool:
    """Whether some element moving the start of ``p1`` by at most ``search_radius`` conjugates it to ``p2``.

    ``False`` only means no such element was found within the radius.
    """
    tol = model.tolerance * 10
    s1, s2 = p1.segment, p2.segment
    if abs(s1.t0 - s2.t0) > tol or abs(s1.t1 - s2.t1) > tol:
        return False
    for d in enumerate_ball(model.group, s1.start, search_radius):
        if np.linalg.norm(apply(d.isometry, s1.start) - s2.start) > tol:
            continue
        if np.linalg.norm(d.linear @ s1.velocity - s2.velocity) > tol:
            continue
        if (d @ p1.gamma @ d.inverse()).isometry.close_to(p2.gamma.isometry, tol):
            return True
    return False


def _verified(p: GeodesicPair, tol: float) -> GeodesicPair:
    rep = is_closed(p, tol)
    if not rep.is_closed:
        raise GeodesicError(
            f"construction did not close: residuals {rep.position_residual:.2e}, {rep.velocity_residual:.2e}"
        )
    return p


# --- constructors ----------------------------------------------------------------------------


def from_hyperbolic(model: OrbifoldModel, gamma: GroupElement) -> GeodesicPair:
    if classify(gamma.isometry, model.tolerance) is not IsometryKind.HYPERBOLIC:
        raise PreconditionError("element is not hyperbolic (it has a fixed point)")
    _, axis = min_displacement(gamma.isometry)
    x = axis.project(model.fundamental_box.center)
    seg = GeodesicSegment.between(x, gamma(x))
    return _verified(GeodesicPair(seg, gamma.inverse()), max(model.tolerance, 1e-9))


def from_even_isotropy(model: OrbifoldModel, x, gamma: GroupElement, delta: GroupElement,
                       check_isolated: bool = True) -> GeodesicPair:
    """Double the segment from ``x`` to ``delta.x`` through the point reflection ``gamma`` at ``x``.

    ``check_isolated=False`` skips the model-side checks so that hand-built
    configurations can exercise the branch where ``gamma`` fixes ``delta.x``.
    """
    x = np.asarray(x, dtype=float)
    tol = model.tolerance
    n = x.shape[0]
    if check_isolated:
        iso = isotropy_at(model.group, x)
        if iso.locate(gamma.isometry) is None:
            raise PreconditionError("gamma does not fix x")
        if iso.locate(delta.isometry) is not None:
            raise PreconditionError("delta fixes x; it must lie outside the isotropy group")
        if linearize_at(iso, x, tol) and np.linalg.matrix_rank(
            np.vstack([a - np.eye(n) for a in linearize_at(iso, x, tol)]), tol=1e-7
        ) != n:
            raise PreconditionError("x is not an isolated singular point")
    if np.linalg.norm(gamma(x) - x) > 10 * tol:
        raise PreconditionError("gamma does not fix x")
    if np.max(np.abs(gamma.linear + np.eye(n))) > 1e-7:
        raise PreconditionError("gamma does not act as -I at x")
    dx = delta(x)
    if np.linalg.norm(dx - x) <= tol:
        raise PreconditionError("delta fixes x")
    c = GeodesicSegment.between(x, dx)
    try:
        joined = concatenate(reverse(c), translate(gamma.isometry, c), tol=1e-7)
    except GeometryError as exc:
        raise GeodesicError(f"doubling is not smooth at x: {exc}") from None
    doubled = joined.reparametrized(0.0, 1.0)
    if np.linalg.norm(gamma(dx) - dx) <= 10 * tol:
        ident = GroupElement(EuclideanIsometry.identity(n))
        return GeodesicPair(doubled, ident)
    lam = delta @ gamma @ delta.inverse() @ gamma
    return _verified(GeodesicPair(doubled, lam), max(tol, 1e-9))


def _line_walk(model: OrbifoldModel, S: StratumComponent, forward: bool) -> tuple[float, GroupElement | None]:
    """Follow the line of ``S`` from its interval until a cut point where the line stops.

    Returns the parameter of that point and an isotropy element reversing the
    line there, or ``(inf, None)`` when a whole period passes without one.
    """
    line = S.line
    a, b = line.intervals()[S.intervals[0]]
    sign = 1.0 if forward else -1.0
    start = b if forward else a
    u = sign * line.direction
    cuts = line.cuts
    tau = line.period
    s = start
    for step in range(len(cuts) + 1):
        idx = min(range(len(cuts)), key=lambda i: min((cuts[i] - s) % tau, (s - cuts[i]) % tau))
        g = reversing_element(line.cut_isotropy[idx], u)
        if g is not None:
            # stored isotropy sits at the cut in [0, period); carry it over to s
            k = round((s - cuts[idx]) / tau)
            if k:
                t = GroupElement(_power(line.period_element.isometry, k))
                g = t @ g @ t.inverse()
            x = line.point(s)
            if np.linalg.norm(g(x) - x) > 1e-7:
                raise GeodesicError("reflecting element does not fix the end point")
            return s, g
        nxt = sorted(((c - s) * sign) % tau for c in cuts)
        gap = next((d for d in nxt if d > 1e-9), tau)
        s = s + sign * gap
    return float("inf"), None


def _power(g: EuclideanIsometry, k: int) -> EuclideanIsometry:
    out = EuclideanIsometry.identity(g.dim)
    base = g if k > 0 else inverse(g)
    for _ in range(abs(k)):
        out = base @ out
    return out


def from_sigma1(model: OrbifoldModel, S: StratumComponent) -> GeodesicPair:
    """Closed geodesic along a one-dimensional component and its prolongation.

    If the prolongation stops at both ends it is traversed there and back;
    otherwise it closes up into a circle.
    """
    if S.k != 1 or S.line is None:
        raise PreconditionError("component is not one-dimensional")
    tol = max(model.tolerance, 1e-9)
    line = S.line
    for f in S.frontier_points:
        analyze_frontier_sigma1(model, S, f.point)
    if line.cuts:
        sb, gb = _line_walk(model, S, forward=True)
        sa, ga = _line_walk(model, S, forward=False)
    else:
        gb = ga = None
    if gb is not None and ga is not None:
        ea, eb = line.point(sa), line.point(sb)
        c = GeodesicSegment.between(ea, eb)
        back = GeodesicSegment.between(eb, ea, 1.0, 2.0)
        seq = GeodesicPathSequence(((c, gb), (back, ga)))
        pair = reduce(seq, tol=1e-7)
        return _verified(GeodesicPair(pair.segment.reparametrized(0.0, 1.0), pair.gamma), tol)
    if (gb is None) != (ga is None):
        raise GeodesicError("prolongation stops at one end only")
    p = line.point(0.5 * sum(line.intervals()[S.intervals[0]])) if line.cuts else line.origin
    g = line.period_element
    seg = GeodesicSegment.between(p, g(p))
    return _verified(GeodesicPair(seg, g.inverse()), tol)


def prolonged_length(model: OrbifoldModel, S: StratumComponent) -> float:
    """Length of the maximal prolongation of a one-dimensional component (a period if it closes)."""
    if S.k != 1 or S.line is None:
        raise PreconditionError("component is not one-dimensional")
    if not S.line.cuts:
        return S.line.period
    sb, gb = _line_walk(model, S, forward=True)
    sa, ga = _line_walk(model, S, forward=False)
    if gb is None or ga is None:
        return S.line.period
    return sb - sa


def shortest_translation_along(model: OrbifoldModel, flat: AffineSubspace) -> GroupElement:
    """Element acting on ``flat`` as the shortest nonzero translation."""
    if flat.dim == 0:
        raise PreconditionError("a point carries no translations")
    u = flat.basis
    p = flat.project(model.fundamental_box.center)
    radius = max(model.fundamental_box.diameter, 1e-3)
    for _ in range(SEARCH_DOUBLINGS):
        best = None
        for e in enumerate_ball(model.group, p, radius):
            if np.max(np.abs(e.linear @ u - u)) > 1e-7:
                continue
            q = e(p)
            if flat.distance(q) > 1e-7:
                continue
            d = float(np.linalg.norm(q - p))
            if d > 1e-7 and (best is None or d < best[0] - 1e-12):
                best = (d, e)
        if best is not None:
            return best[1]
        radius *= 2
    raise GeodesicError("no translation along the component found: it is not compact")


def from_closed_component(model: OrbifoldModel, S: StratumComponent) -> GeodesicPair:
    """Shortest closed geodesic inside a closed component of positive dimension."""
    if not S.is_closed:
        raise PreconditionError("component has a non-empty frontier")
    if S.k < 1:
        raise PreconditionError("component is a point")
    g = shortest_translation_along(model, S.upstairs_fixed)
    p = S.upstairs_fixed.project(model.fundamental_box.center)
    return _verified(GeodesicPair(GeodesicSegment.between(p, g(p)), g.inverse()), max(model.tolerance, 1e-9))


def nearest_outside(model: OrbifoldModel, x, excluded, within: AffineSubspace | None = None) -> GroupElement:
    """Element outside ``excluded`` moving ``x`` least; ties go to the lexicographically least image.

    With ``within`` set, only elements mapping that subspace onto itself count.
    """
    x = np.asarray(x, dtype=float)
    radius = max(model.fundamental_box.diameter, 1e-3)
    for _ in range(SEARCH_DOUBLINGS):
        cands = []
        for e in enumerate_ball(model.group, x, radius):
            if excluded.locate(e.isometry) is not None:
                continue
            if within is not None and not within.transformed(e.isometry).same_as(within, 1e-7):
                continue
            y = e(x)
            d = float(np.linalg.norm(y - x))
            if d <= 10 * model.tolerance:
                continue
            cands.append((round(d, 9), tuple(np.round(y, 9)), e))
        if cands:
            cands.sort(key=lambda c: (c[0], c[1]))
            return cands[0][2]
        radius *= 2
    raise GeodesicError("no element moves the point within the search budget")


def _even_point_data(model: OrbifoldModel, S: StratumComponent):
    x = S.sample_points[0]
    iso = isotropy_at(model.group, x)
    n = model.dimension
    gamma = next(
        (e for e in iso.elements if np.max(np.abs(e.linear + np.eye(n))) <= 1e-7), None
    )
    return x, iso, gamma


def hyperbolic_candidates(model: OrbifoldModel, max_len: int = HYPERBOLIC_WORD_LENGTH) -> Iterable[GroupElement]:
    """Generators first, then products of generator letters up to ``max_len``."""
    G = model.group
    for e in G.generator_elements():
        yield e
    letters = [i for k in range(1, len(G.generators) + 1) for i in (k, -k)]
    for length in range(2, max_len + 1):
        for word in itertools.product(letters, repeat=length):
            if any(a == -b for a, b in zip(word, word[1:])):
                continue
            yield GroupElement(G.evaluate_word(word), tuple(word))


def _try_hyperbolic(model, strat):
    for e in hyperbolic_candidates(model):
        if classify(e.isometry, model.tolerance) is IsometryKind.HYPERBOLIC:
            return from_hyperbolic(model, e), {"element": list(e.witness_word)}
    return None, "no hyperbolic element among generators and short words"


def _try_sigma1(model, strat):
    comps = strat.by_k(1)
    if not comps:
        return None, "one-dimensional stratum is empty"
    # a component that stops at both ends gives the doubled path; circles come after
    comps.sort(key=lambda c: (not _terminates(model, c), c.id))
    return from_sigma1(model, comps[0]), {"component": comps[0].id}


def _terminates(model: OrbifoldModel, S: StratumComponent) -> bool:
    return any(isinstance(analyze_frontier_sigma1(model, S, f.point), End) for f in S.frontier_points)


def _try_closed(model, strat):
    for c in strat.components:
        if c.k >= 1 and c.is_closed:
            return from_closed_component(model, c), {"component": c.id}
    return None, "no closed component of positive dimension"


def _try_even(model, strat):
    for c in strat.by_k(0):
        if c.isotropy_order % 2:
            continue
        x, iso, gamma = _even_point_data(model, c)
        if gamma is None:
            continue
        delta = nearest_outside(model, x, iso)
        return from_even_isotropy(model, x, gamma, delta), {
            "component": c.id,
            "x": x.tolist(),
            "gamma": list(gamma.witness_word),
            "delta": list(delta.witness_word),
        }
    return None, "no isolated singular point of even isotropy order"


def _try_odd_stratum(model, strat):
    n = model.dimension
    positive = [c for c in strat.components if 0 < c.k < n]
    if not positive:
        return None, "no singular stratum of positive dimension"
    k = min(c.k for c in positive)
    if not (k % 2 == 1 or (2 * k >= n and (n - k) % 2 == 1)):
        return None, f"smallest singular dimension {k} is neither odd nor at least n/2 with odd codimension"
    tol = model.tolerance
    for S in (c for c in positive if c.k == k):
        try:
            cs = closed_stratum(model, S, strat)
        except HypothesisError as exc:
            return None, str(exc)
        flat = S.upstairs_fixed
        for fe, fp in zip(cs.frontier, S.frontier_points):
            flip_on_flat = next(
                (
                    e
                    for e in fe.normalizer.elements
                    if np.max(np.abs(flat.basis.T @ e.linear @ flat.basis + np.eye(k))) <= 1e-7
                ),
                None,
            )
            if flip_on_flat is None:
                continue
            x = fp.point
            delta = nearest_outside(model, x, fp.isotropy, within=flat)
            c = GeodesicSegment.between(x, delta(x))
            joined = concatenate(reverse(c), translate(flip_on_flat.isometry, c), tol=1e-7)
            lam = delta @ flip_on_flat @ delta.inverse() @ flip_on_flat
            pair = _verified(GeodesicPair(joined.reparametrized(0.0, 1.0), lam), max(tol, 1e-9))
            return pair, {"component": S.id, "x": x.tolist()}
    return None, "no frontier point whose effective group reverses the stratum"


_STRATEGY_IMPL = {
    Strategy.HYPERBOLIC: _try_hyperbolic,
    Strategy.SIGMA1: _try_sigma1,
    Strategy.CLOSED_COMPONENT: _try_closed,
    Strategy.EVEN_ISOTROPY: _try_even,
    Strategy.ODD_STRATUM: _try_odd_stratum,
}


def run_strategy(model: OrbifoldModel, strategy: Strategy, strat: Stratification | None = None) -> ExistenceOutcome:
    """Run one named strategy; raises :class:`PreconditionError` if it does not apply."""
    strat = strat if strat is not None else stratify(model)
    pair, info = _STRATEGY_IMPL[strategy](model, strat)
    if pair is None:
        raise PreconditionError(f"{strategy.value} does not apply: {info}")
    return ExistenceOutcome(strategy, pair, is_closed(pair, max(model.tolerance, 1e-9)), details=info)


def existence_dispatch(
    model: OrbifoldModel,
    disable: Iterable[Strategy] = (),
    strat: Stratification | None = None,
) -> ExistenceOutcome:
    """First strategy in the fixed order that yields a verified closed geodesic."""
    disabled = set(disable)
    strat = strat if strat is not None else stratify(model)
    reasons = []
    for strategy in DISPATCH_ORDER:
        if strategy in disabled:
            reasons.append(f"{strategy.value}: disabled")
            continue
        pair, info = _STRATEGY_IMPL[strategy](model, strat)
        if pair is not None:
            return ExistenceOutcome(strategy, pair, is_closed(pair, max(model.tolerance, 1e-9)), details=info)
        reasons.append(f"{strategy.value}: {info}")
    explanation = (
        "no strategy applies; the remaining configuration (even dimension, singular locus of "
        "dimension zero, odd isotropy orders, no hyperbolic element found) is not covered. "
        + "; ".join(reasons)
    )
    return ExistenceOutcome(Strategy.OPEN, None, None, explanation=explanation)
