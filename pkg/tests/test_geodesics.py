import math

import numpy as np
import pytest

from orbistrat.geodesics import (
    GeodesicError,
    GeodesicPair,
    GeodesicPathSequence,
    PreconditionError,
    Strategy,
    conjugate_pair,
    equivalent,
    existence_dispatch,
    from_closed_component,
    from_even_isotropy,
    from_hyperbolic,
    from_sigma1,
    is_closed,
    prolonged_length,
    reduce,
    run_strategy,
    split,
)
from orbistrat.geom import Box, EuclideanIsometry, GeodesicSegment
from orbistrat.groups import GeneratedGroup, GroupElement, enumerate_ball
from orbistrat.strata import OrbifoldModel, stratify

from conftest import catalog_model, catalog_strata, synthetic_model


def element(linear, translation, word=()):
    return GroupElement(EuclideanIsometry(linear, translation), tuple(word))


def shift(*v):
    return element(np.eye(len(v)), v)


def test_closedness_on_torus():
    seg = GeodesicSegment.between([0, 0], [1, 0])
    rep = is_closed(GeodesicPair(seg, shift(-1, 0)))
    assert rep.is_closed and rep.length == pytest.approx(1)
    rep = is_closed(GeodesicPair(seg, shift(0, 0)))
    assert not rep.is_closed and rep.position_residual == pytest.approx(1)


def test_constant_pair_is_not_closed():
    seg = GeodesicSegment([0.5, 0.5], [0, 0])
    assert not is_closed(GeodesicPair(seg, shift(0, 0))).is_closed


def test_reduce_single_piece():
    seg = GeodesicSegment.between([0, 0], [1, 0])
    pair = reduce(GeodesicPathSequence(((seg, shift(-1, 0)),)))
    assert np.allclose(pair.segment.end, [1, 0]) and np.allclose(pair.gamma.translation, [-1, 0])


def test_reduce_two_torus_pieces():
    half = GeodesicSegment.between([0, 0], [0.5, 0], 0.0, 0.5)
    second = GeodesicSegment.between([0, 0], [0.5, 0], 0.5, 1.0)
    seq = GeodesicPathSequence(((half, shift(-0.5, 0)), (second, shift(-0.5, 0))))
    pair = reduce(seq)
    assert np.allclose(pair.segment.start, [0, 0]) and np.allclose(pair.segment.end, [1, 0])
    assert np.allclose(pair.gamma.translation, [-1, 0])
    assert is_closed(pair).is_closed


def test_reduce_rejects_velocity_jump():
    a = GeodesicSegment.between([0, 0], [1, 0])
    b = GeodesicSegment.between([1, 0], [1, 1], 1.0, 2.0)
    with pytest.raises(GeodesicError, match="smoothly"):
        reduce(GeodesicPathSequence(((a, shift(0, 0)), (b, shift(0, 0)))))


def test_split_then_reduce_recovers_pair():
    model = catalog_model("pillowcase_p2")
    pair = from_hyperbolic(model, shift(1, 0))
    lifts = [shift(0, 0), element(-np.eye(2), [1, 0]), shift(3, -2)]
    back = reduce(split(pair, [0.3, 0.6], lifts), tol=1e-9)
    assert np.allclose(back.segment.start, pair.segment.start) and np.allclose(back.segment.end, pair.segment.end)
    assert back.gamma.isometry.close_to(pair.gamma.isometry)


def test_equivalence_checks():
    model = catalog_model("torus2")
    p = from_hyperbolic(model, shift(1, 0))
    assert equivalent(model, p, p, 0.5)
    delta = shift(2, -1)
    assert equivalent(model, p, conjugate_pair(p, delta), 3.0)
    q = from_hyperbolic(model, shift(0, 1))
    assert not equivalent(model, p, q, 3.0)


@pytest.mark.parametrize("v,expected", [((1, 0), 1.0), ((2, 1), math.sqrt(5))])
def test_hyperbolic_on_torus(v, expected):
    pair = from_hyperbolic(catalog_model("torus2"), shift(*v))
    assert pair.length == pytest.approx(expected, abs=1e-12)


def test_hyperbolic_glide():
    glide = EuclideanIsometry([[1, 0], [0, -1]], [1, 0])
    G = GeneratedGroup(2, (glide, EuclideanIsometry.translation_by([0, 1])))
    model = OrbifoldModel(2, G, Box([0, 0], [1, 1]))
    pair = from_hyperbolic(model, GroupElement(glide, (1,)))
    rep = is_closed(pair)
    assert rep.is_closed and rep.length == pytest.approx(1.0, abs=1e-12)
    assert abs(pair.segment.start[1]) < 1e-12 or abs(pair.segment.start[1] - 0.5) < 1e-12


def test_hyperbolic_needs_fixed_point_free_element():
    with pytest.raises(PreconditionError):
        from_hyperbolic(catalog_model("pillowcase_p2"), element(-np.eye(2), [0, 0]))


def test_even_isotropy_with_translation():
    model = catalog_model("pillowcase_p2")
    gamma = element(-np.eye(2), [0, 0], (3,))
    delta = shift(1, 0)
    pair = from_even_isotropy(model, [0, 0], gamma, delta)
    assert np.allclose(pair.segment.start, [1, 0]) and np.allclose(pair.segment.end, [-1, 0])
    assert pair.gamma.isometry.close_to(EuclideanIsometry.translation_by([2, 0]))
    rep = is_closed(pair)
    assert rep.is_closed and rep.length == pytest.approx(2.0)


def test_even_isotropy_with_point_reflection():
    model = catalog_model("pillowcase_p2")
    gamma = element(-np.eye(2), [0, 0])
    delta = element(-np.eye(2), [1, 1])
    pair = from_even_isotropy(model, [0, 0], gamma, delta)
    assert is_closed(pair).is_closed
    assert pair.length == pytest.approx(2 * math.sqrt(2))


def test_even_isotropy_branch_where_gamma_fixes_image():
    # Only a displacement below the case-split tolerance can make gamma fix delta.x.
    model = catalog_model("pillowcase_p2")
    gamma = element(-np.eye(2), [0, 0])
    delta = shift(3e-9, 0)
    pair = from_even_isotropy(model, [0, 0], gamma, delta, check_isolated=False)
    assert pair.gamma.isometry.is_identity()
    assert np.allclose(pair.segment.start, pair.segment.end, atol=1e-8)


def test_even_isotropy_preconditions():
    model = catalog_model("pillowcase_p2")
    with pytest.raises(PreconditionError):
        from_even_isotropy(model, [0, 0], shift(0, 0), shift(1, 0))
    with pytest.raises(PreconditionError):
        from_even_isotropy(model, [0, 0], element(-np.eye(2), [0, 0]), element(-np.eye(2), [0, 0]))
    with pytest.raises(PreconditionError):
        from_even_isotropy(model, [0.5, 0.5], element(-np.eye(2), [0, 0]), shift(1, 0))


def z_axis_component():
    strat = catalog_strata("hexagonal3d_d3")
    return next(c for c in strat.by_k(1) if c.isotropy_order == 3 and not c.is_closed)


def test_sigma1_doubles_the_z_axis_segment():
    model = catalog_model("hexagonal3d_d3")
    S = z_axis_component()
    assert prolonged_length(model, S) == pytest.approx(0.5)
    pair = from_sigma1(model, S)
    rep = is_closed(pair)
    assert rep.is_closed and rep.length == pytest.approx(1.0, abs=1e-9)


def test_sigma1_circle_components():
    model = catalog_model("hexagonal3d_d3")
    strat = catalog_strata("hexagonal3d_d3")
    for c in strat.by_k(1):
        if c.isotropy_order == 2:
            pair = from_sigma1(model, c)
            assert is_closed(pair).is_closed and pair.length == pytest.approx(1.0)
    circle = next(c for c in strat.by_k(1) if c.is_closed)
    assert from_sigma1(model, circle).length == pytest.approx(from_closed_component(model, circle).length)


def test_sigma1_rejects_other_dimensions():
    with pytest.raises(PreconditionError):
        from_sigma1(catalog_model("pillowcase_p2"), catalog_strata("pillowcase_p2").components[0])


def test_closed_component_on_torus():
    model = catalog_model("torus2")
    pair = from_closed_component(model, catalog_strata("torus2").components[0])
    assert pair.length == pytest.approx(1.0)


def test_closed_mirror_plane():
    model = synthetic_model("mirror_slab")
    strat = stratify(model)
    planes = strat.by_k(2)
    assert len(planes) == 2 and all(c.is_closed for c in planes)
    for c in planes:
        pair = from_closed_component(model, c)
        assert is_closed(pair).is_closed and pair.length == pytest.approx(1.0)
        assert c.upstairs_fixed.distance(pair.segment.start) < 1e-12


def test_closed_component_needs_empty_frontier():
    with pytest.raises(PreconditionError):
        from_closed_component(catalog_model("pillowcase_p2"), catalog_strata("pillowcase_p2").components[-1])


def test_dispatch_order_and_fallbacks():
    torus = existence_dispatch(catalog_model("torus2"), strat=catalog_strata("torus2"))
    assert torus.strategy is Strategy.HYPERBOLIC and torus.report.length == pytest.approx(1)
    pillow = existence_dispatch(catalog_model("pillowcase_p2"), disable=[Strategy.HYPERBOLIC],
                                strat=catalog_strata("pillowcase_p2"))
    assert pillow.strategy is Strategy.EVEN_ISOTROPY and pillow.report.length == pytest.approx(2)
    hexa = existence_dispatch(catalog_model("hexagonal3d_d3"), disable=[Strategy.HYPERBOLIC],
                              strat=catalog_strata("hexagonal3d_d3"))
    assert hexa.strategy is Strategy.SIGMA1 and hexa.report.length == pytest.approx(1)


def test_odd_stratum_reduction_on_klein_four():
    model = catalog_model("kleinfour3d")
    out = run_strategy(model, Strategy.ODD_STRATUM, catalog_strata("kleinfour3d"))
    # on the edge the effective group is z -> +-z + m; from z = 1/2 the nearest other orbit point is 1 away
    assert out.report.is_closed and out.report.length == pytest.approx(2.0)


def test_open_case_for_odd_cone_points():
    model = synthetic_model("wallpaper_p3")
    strat = stratify(model)
    assert sorted(c.isotropy_order for c in strat.by_k(0)) == [3, 3, 3]
    out = existence_dispatch(model, disable=[Strategy.HYPERBOLIC], strat=strat)
    assert out.strategy is Strategy.OPEN and out.geodesic is None
    assert "odd isotropy" in out.explanation


def test_every_constructor_output_survives_conjugation(catalog_name, rng):
    model = catalog_model(catalog_name)
    strat = catalog_strata(catalog_name)
    pairs = []
    for strategy in Strategy:
        if strategy is Strategy.OPEN:
            continue
        try:
            pairs.append(run_strategy(model, strategy, strat).geodesic)
        except PreconditionError:
            pass
    assert pairs
    for p in pairs:
        deltas = enumerate_ball(model.group, p.segment.start, 2.0)
        for d in [deltas[i] for i in rng.choice(len(deltas), size=10)]:
            q = conjugate_pair(p, d)
            rep = is_closed(q)
            assert rep.is_closed and abs(rep.length - p.length) <= 1e-9
            assert equivalent(model, p, q, 2.5)
