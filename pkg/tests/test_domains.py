"""Geometry tests: membership, distances, inradii, horn structure."""

import math

import numpy as np
import pytest

from levylab.domains import (
    Ball,
    CallableProfile,
    ConstantProfile,
    HalfSpace,
    Horn,
    Interval,
    Predicate,
    RationalProfile,
    SwissCheese,
    Tube,
    WavyStripWithHoles,
    contains,
    cross_section,
    dist_to_complement,
    inradius,
    projection,
)
from levylab.errors import (
    DimensionMismatchError,
    HypothesisViolationError,
    ParameterError,
)

EXAMPLE_HORN = Horn(RationalProfile(1.0))


def sample_domains():
    return [
        Interval(-1.0, 1.0),
        Ball((0.2, -0.3), 0.8),
        HalfSpace((1.0, 1.0), 0.5),
        Tube(0.0, Interval(-1.0, 1.0)),
        Tube(-math.inf, Interval(-0.5, 0.5)),
        EXAMPLE_HORN,
        SwissCheese(0.25),
        WavyStripWithHoles(),
    ]


class TestMembership:
    def test_interval_contains_center(self):
        assert contains(Interval(-1, 1), [0.0])

    def test_open_set_convention_on_boundary(self):
        assert not contains(Interval(-1, 1), [1.0])
        assert not contains(Ball((0.0, 0.0), 1.0), [1.0, 0.0])

    def test_horn_profile_membership(self):
        # width at x1 = 1 is 1/(1+1) = 0.5
        assert contains(EXAMPLE_HORN, [1.0, 0.4])
        assert not contains(EXAMPLE_HORN, [1.0, 0.5])
        assert not contains(EXAMPLE_HORN, [-0.5, 0.0])

    def test_swiss_cheese_hole_center(self):
        assert not contains(SwissCheese(0.25), [0.5, 0.5])
        assert contains(SwissCheese(0.25), [0.0, 0.0])

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            contains(Interval(-1, 1), [0.0, 0.0])


class TestDistance:
    def test_interval_distance(self):
        assert dist_to_complement(Interval(-1, 1), [0.3]) == pytest.approx(0.7)

    def test_ball_distance(self):
        assert dist_to_complement(Ball((0.0, 0.0), 1.0), [0.6, 0.0]) == pytest.approx(0.4)

    def test_swiss_cheese_corner(self):
        # lattice corner is equidistant from four hole centers at sqrt(1/2)
        d = dist_to_complement(SwissCheese(0.25), [0.0, 0.0])
        assert d == pytest.approx(math.sqrt(0.5) - 0.25, abs=1e-12)

    def test_outside_points_have_zero_distance(self):
        for dom in sample_domains():
            far = np.full(dom.dim, 1e6)
            if not dom.contains(far):
                assert dom.dist_to_complement(far) == 0.0

    def test_horn_distance_near_wide_end(self):
        # far down the horn the nearest boundary is nearly the profile height
        d = dist_to_complement(EXAMPLE_HORN, [5.0, 0.0])
        assert 0.80 <= d <= 5.0 / 6.0 + 1e-9

    def test_consistency_and_lipschitz(self):
        gen = np.random.default_rng(1)
        for dom in sample_domains():
            pts = gen.uniform(-3, 3, size=(150, dom.dim))
            inside = dom.contains_many(pts)
            dist = dom.dist_many(pts)
            assert np.all((dist > 0) == inside)
            for _ in range(40):
                i, j = gen.integers(0, len(pts), 2)
                gap = np.linalg.norm(pts[i] - pts[j])
                assert abs(dist[i] - dist[j]) <= gap + 1e-7


class TestInradius:
    def test_interval(self):
        assert inradius(Interval(-1, 1)) == 1.0

    def test_swiss_cheese_formula(self):
        assert inradius(SwissCheese(0.25)) == pytest.approx(1 / math.sqrt(2) - 0.25)

    def test_horn_limit(self):
        assert inradius(EXAMPLE_HORN) == pytest.approx(1.0, abs=1e-4)

    def test_halfspace_infinite(self):
        assert math.isinf(inradius(HalfSpace((0.0, 1.0), 0.0)))

    def test_dominates_sampled_distances(self):
        gen = np.random.default_rng(2)
        for dom in sample_domains():
            r = inradius(dom)
            pts = gen.uniform(-3, 3, size=(200, dom.dim))
            assert np.all(dom.dist_many(pts) <= r + 1e-6)


class TestHornStructure:
    def test_cross_section_at_one(self):
        cs = cross_section(EXAMPLE_HORN, 1.0)
        assert isinstance(cs, Interval)
        assert (cs.a, cs.b) == (-0.5, 0.5)

    def test_cross_section_degenerates_at_tip(self):
        cs = cross_section(EXAMPLE_HORN, 1e-9)
        assert cs.b - cs.a < 1e-8

    def test_cross_sections_are_monotone(self):
        c1 = cross_section(EXAMPLE_HORN, 1.0)
        c2 = cross_section(EXAMPLE_HORN, 2.0)
        assert c1.a >= c2.a and c1.b <= c2.b

    def test_projection_example_horn(self):
        proj = projection(EXAMPLE_HORN)
        assert (proj.a, proj.b) == (-1.0, 1.0)

    def test_projection_constant_profile(self):
        proj = projection(Horn(ConstantProfile(0.7)))
        assert (proj.a, proj.b) == (-0.7, 0.7)

    def test_projection_scaled_profile(self):
        proj = projection(Horn(RationalProfile(2.0)))
        assert (proj.a, proj.b) == (-2.0, 2.0)

    def test_unbounded_profile_rejected(self):
        horn = Horn(CallableProfile(fn=lambda x: 1.0 + np.asarray(x)))
        with pytest.raises(HypothesisViolationError):
            projection(horn)

    def test_semitube_sandwich(self):
        # membership implications Q_a(H(a)) within H within Q_0(h)
        a = 2.0
        inner = Tube(a, cross_section(EXAMPLE_HORN, a))
        outer = Tube(0.0, projection(EXAMPLE_HORN))
        pts = np.random.default_rng(3).uniform([-1, -2], [8, 2], size=(3000, 2))
        ci = inner.contains_many(pts)
        ch = EXAMPLE_HORN.contains_many(pts)
        co = outer.contains_many(pts)
        assert np.all(~ci | ch)
        assert np.all(~ch | co)

    def test_type_errors(self):
        with pytest.raises(TypeError):
            cross_section(Interval(-1, 1), 1.0)
        with pytest.raises(ParameterError):
            cross_section(EXAMPLE_HORN, 0.0)


class TestPredicate:
    def test_matches_exact_ball(self):
        ball = Ball((0.0, 0.0), 1.0)
        pred = Predicate(
            fn=lambda p: float(np.hypot(p[0], p[1])) < 1.0,
            lo=(-1.5, -1.5),
            hi=(1.5, 1.5),
            dim=2,
        )
        for p in [(0.3, 0.2), (0.9, 0.0), (0.0, 0.0)]:
            exact = ball.dist_to_complement(p)
            approx = pred.dist_to_complement(p)
            # fan of 64 directions overshoots by at most the angular factor
            assert exact - 1e-5 <= approx <= exact / math.cos(math.pi / 64) + 1e-4

    def test_membership_callback(self):
        pred = Predicate(fn=lambda p: p[0] > 0, lo=(-1.0,), hi=(1.0,), dim=1)
        assert pred.contains([0.5])
        assert not pred.contains([-0.5])


class TestConstruction:
    def test_interval_needs_order(self):
        with pytest.raises(ParameterError):
            Interval(1.0, -1.0)

    def test_swiss_cheese_radius_range(self):
        with pytest.raises(ParameterError):
            SwissCheese(0.5)
        with pytest.raises(ParameterError):
            SwissCheese(0.0)

    def test_wavy_strip_holes_must_fit(self):
        with pytest.raises(ParameterError):
            WavyStripWithHoles(base=1.0, amplitude=0.9, hole_radius=0.5)

    def test_c11_metadata(self):
        assert SwissCheese(0.25).c11_scale == 0.25
        assert Ball((0.0,), 0.7).c11_scale == 0.7
        assert Interval(-1, 1).c11_scale == 1.0
