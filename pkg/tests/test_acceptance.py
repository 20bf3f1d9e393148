"""Acceptance gate. Each test carries a ``criterion`` mark; the terminal summary prints one verdict per criterion."""

import numpy as np
import pytest

from orbistrat.cli import main
from orbistrat.geodesics import (
    GeodesicPair,
    PreconditionError,
    Strategy,
    conjugate_pair,
    existence_dispatch,
    from_hyperbolic,
    from_sigma1,
    is_closed,
    prolonged_length,
    reduce,
    run_strategy,
    split,
)
from orbistrat.geom import Box, EuclideanIsometry, compose, inverse, min_displacement
from orbistrat.groups import GeneratedGroup, GroupElement, enumerate_ball, isotropy_at, subgroups
from orbistrat.models import CATALOG, dumps_model
from orbistrat.strata import (
    End,
    ExtendsInto,
    OrbifoldModel,
    analyze_frontier_sigma1,
    closed_stratum,
    components_containing,
    frontier,
    singular_dimensions,
)
from oracles import grid_min_displacement, random_hyperbolic, singular_point_classes

from conftest import catalog_model, catalog_strata, p3_spec

HEX = "hexagonal3d_d3"


def z_axis(strat):
    return next(c for c in strat.by_k(1) if c.isotropy_order == 3 and not c.is_closed)


@pytest.mark.criterion(1, "dihedral point group of order 6 has six subgroups")
def test_dihedral_subgroup_structure():
    D3 = isotropy_at(catalog_model(HEX).group, [0, 0, 0])
    records = subgroups(D3)
    assert D3.order == 6 and len(records) == 6
    proper = [r for r in records if 1 < r.order < 6]
    assert sorted(r.order for r in proper) == [2, 2, 2, 3]
    twos = [r for r in proper if r.order == 2]
    assert len({r.conjugacy_class_id for r in twos}) == 1
    assert all(D3.order // r.normalizer.order == 3 for r in twos)


@pytest.mark.criterion(2, "frontier of the line strata in the hexagonal model")
def test_frontier_end_and_extension():
    model = catalog_model(HEX)
    strat = catalog_strata(HEX)
    axis = z_axis(strat)
    d3_points = [fp for fp in axis.frontier_points if fp.isotropy.order == 6]
    assert d3_points
    assert all(analyze_frontier_sigma1(model, axis, fp.point) == End() for fp in d3_points)
    order_two = [c for c in strat.by_k(1) if c.isotropy_order == 2]
    assert order_two
    for c in order_two:
        hits = [fp for fp in c.frontier_points if fp.isotropy.order == 6]
        assert hits
        for fp in hits:
            assert isinstance(analyze_frontier_sigma1(model, c, fp.point), ExtendsInto)


@pytest.mark.criterion(3, "effective group at the dihedral frontier point is cyclic of order 2")
def test_effective_group_order_two():
    model = catalog_model(HEX)
    strat = catalog_strata(HEX)
    axis = z_axis(strat)
    cs = closed_stratum(model, axis, strat)
    at_d3 = [f for f, fp in zip(cs.frontier, axis.frontier_points) if fp.isotropy.order == 6]
    assert at_d3 and all(f.effective.order == 2 for f in at_d3)


@pytest.mark.parametrize(
    "name,orders", [("pillowcase_p2", [2, 2, 2, 2]), ("wallpaper_p4", [2, 4, 4]), ("torus2", [])]
)
@pytest.mark.criterion(4, "point strata match brute-force fixed point enumeration")
def test_stratification_tables(name, orders):
    model = catalog_model(name)
    gens = [(g.linear, g.translation) for g in model.group.generators]
    assert singular_point_classes(gens) == orders
    strat = catalog_strata(name)
    assert sorted(c.isotropy_order for c in strat.by_k(0)) == orders
    if name == "torus2":
        assert list(strat.singular()) == []


@pytest.mark.criterion(5, "forced even-isotropy construction on the pillowcase")
def test_even_isotropy_construction():
    model = catalog_model("pillowcase_p2")
    G = model.group
    out = run_strategy(model, Strategy.EVEN_ISOTROPY, catalog_strata("pillowcase_p2"))
    x = np.array(out.details["x"])
    gamma = G.evaluate_word(out.details["gamma"])
    delta = G.evaluate_word(out.details["delta"])
    expected = compose(compose(compose(delta, gamma), inverse(delta)), gamma)
    assert out.geodesic.gamma.isometry.close_to(expected, 1e-12)
    assert out.report.position_residual <= 1e-9 and out.report.velocity_residual <= 1e-9
    assert abs(out.report.length - 2 * np.linalg.norm(x - delta(x))) <= 1e-9


@pytest.mark.criterion(6, "doubling the one-dimensional stratum in the hexagonal model")
def test_sigma1_doubling():
    model = catalog_model(HEX)
    axis = z_axis(catalog_strata(HEX))
    pair = from_sigma1(model, axis)
    rep = is_closed(pair)
    assert rep.position_residual <= 1e-9 and rep.velocity_residual <= 1e-9
    assert abs(rep.length - 2 * prolonged_length(model, axis)) <= 1e-9


@pytest.mark.criterion(7, "hyperbolic axis length against a grid search")
def test_hyperbolic_axis_lengths(rng):
    kinds = ["translation", "glide", "screw"]
    for i in range(100):
        a, b = random_hyperbolic(rng, kinds[i % 3])
        n = a.shape[0]
        g = EuclideanIsometry(a, b)
        model = OrbifoldModel(n, GeneratedGroup(n, (g,)), Box(-np.ones(n), np.ones(n)))
        pair = from_hyperbolic(model, GroupElement(g, (1,)))
        value, _ = min_displacement(g)
        assert abs(pair.length - value) <= 1e-9
        assert abs(value - grid_min_displacement(a, b)) <= 1e-6


def constructed_pairs():
    out = []
    for name in CATALOG:
        model = catalog_model(name)
        for strategy in Strategy:
            if strategy is Strategy.OPEN:
                continue
            try:
                out.append((model, run_strategy(model, strategy, catalog_strata(name)).geodesic))
            except PreconditionError:
                pass
    return out


@pytest.mark.criterion(8, "conjugation and split/reduce invariants of geodesic pairs")
def test_pair_calculus(rng):
    pairs = constructed_pairs()
    balls = [enumerate_ball(m.group, p.segment.start, 2.5) for m, p in pairs]
    for i in range(1000):
        j = i % len(pairs)
        model, p = pairs[j]
        delta = balls[j][int(rng.integers(len(balls[j])))]
        q = conjugate_pair(p, delta)
        rep = is_closed(q, 1e-9)
        assert rep.is_closed and abs(rep.length - p.length) <= 1e-9
    for i in range(200):
        j = i % len(pairs)
        model, p = pairs[j]
        cuts = np.sort(rng.uniform(p.segment.t0, p.segment.t1, size=int(rng.integers(1, 5))))
        ball = balls[j]
        lifts = [GroupElement(EuclideanIsometry.identity(model.dimension))]
        lifts += [ball[int(rng.integers(len(ball)))] for _ in cuts]
        back = reduce(split(p, list(cuts), lifts), tol=1e-9)
        assert np.allclose(back.segment.start, p.segment.start, atol=1e-9)
        assert np.allclose(back.segment.end, p.segment.end, atol=1e-9)
        assert back.gamma.isometry.close_to(p.gamma.isometry, 1e-9)
        assert is_closed(back, 1e-9).is_closed


@pytest.mark.parametrize("name", CATALOG)
@pytest.mark.criterion(9, "partition and frontier growth on every shipped model")
def test_partition_and_frontier_growth(name, rng):
    model = catalog_model(name)
    strat = catalog_strata(name)
    n = model.dimension
    pts = model.fundamental_box.sample(rng, 10_000)
    ks = singular_dimensions(model, pts)
    assert ks.shape == (10_000,) and set(ks.tolist()) <= set(range(n + 1))
    by_id = {c.id: c for c in strat.components}
    for p, k in zip(pts, ks):
        hits = components_containing(model, strat, p)
        assert len(hits) == 1 and by_id[hits[0]].k == k
    for S in strat.components:
        for x, Gx in frontier(model, S):
            assert Gx.order > S.isotropy_order and Gx.order % S.isotropy_order == 0


@pytest.mark.criterion(10, "dispatch finds a verified geodesic on every shipped model; open case exits 10")
def test_dispatch_soundness(tmp_path, capsys):
    for name in CATALOG:
        out = existence_dispatch(catalog_model(name), strat=catalog_strata(name))
        assert out.strategy is not Strategy.OPEN
        assert isinstance(out.geodesic, GeodesicPair) and out.report.is_closed
        assert out.report.position_residual <= 1e-9 and out.report.velocity_residual <= 1e-9
    path = tmp_path / "p3.model"
    path.write_text(dumps_model(p3_spec()), encoding="utf-8")
    assert main(["geodesic", str(path), "--disable", "hyperbolic"]) == 10
