"""Test suite for cones, boundary distance and sampling."""

import math

import numpy as np
import pytest

from cone_carleman import geometry
from cone_carleman.errors import NumericalError, NumericalErrorReason, ParameterError
from cone_carleman.models import ConeSpec, SamplingRegion, SpaceTimePoint
from tests.test_data import CRITICAL_ANGLE_DEGREES


class TestConeSpec:
    """Construction and cached trigonometry of cones."""

    def test_half_space_is_exact(self):
        """theta = pi gives eps = 0 and sin_half = 1 without rounding."""
        cone = ConeSpec(n=3, theta=math.pi)
        assert cone.eps == 0.0
        assert cone.sin_half == 1.0
        assert cone.degrees == pytest.approx(180.0)

    def test_from_eps(self):
        """The cone with eps = 0.5 opens 120 degrees."""
        cone = ConeSpec.from_eps(2, 0.5)
        assert cone.degrees == pytest.approx(120.0)
        assert cone.eps == pytest.approx(0.5)

    @pytest.mark.parametrize("n, theta", [(1, 1.0), (2, 0.0), (2, 4.0), (2.5, 1.0)])
    def test_invalid(self, n, theta):
        """Dimension below 2 or angle outside (0, pi] is rejected."""
        with pytest.raises(ParameterError):
            ConeSpec(n=n, theta=theta)


class TestMembership:
    """Cone, offset cone and Q_theta predicates."""

    def test_cone_contains(self, cone):
        """Strict inequality x_1 > eps |x|."""
        assert geometry.cone_contains(cone, [1.0, 0.0])
        assert not geometry.cone_contains(cone, [1.0, 2.0])
        assert not geometry.cone_contains(cone, [-1.0, 0.0])

    def test_boundary_ray_is_outside(self):
        """On the half-space boundary x_1 = 0 the point is not inside."""
        cone = ConeSpec(n=2, theta=math.pi)
        assert not geometry.cone_contains(cone, [0.0, 1.0])

    def test_batch(self, cone):
        """A batch of points gives an array of flags."""
        result = geometry.cone_contains(cone, np.array([[1.0, 0.0], [1.0, 2.0]]))
        np.testing.assert_array_equal(result, [True, False])

    def test_dimension_mismatch(self, cone):
        """A 3D point is rejected by a planar cone."""
        with pytest.raises(ParameterError):
            geometry.cone_contains(cone, [1.0, 0.0, 0.0])

    def test_offset_cone(self, cone):
        """Membership in the offset cone compares the boundary distance with c."""
        assert geometry.offset_cone_contains(cone, 0.5, [2.0, 0.0])
        assert not geometry.offset_cone_contains(cone, 2.0, [2.0, 0.0])
        with pytest.raises(ParameterError):
            geometry.offset_cone_contains(cone, -1.0, [2.0, 0.0])

    def test_q_theta(self, cone):
        """Q_theta needs x_1 > 1 and 0 < t < 1."""
        assert geometry.q_theta_contains(cone, SpaceTimePoint(x=(2.0, 0.0), t=0.5))
        assert not geometry.q_theta_contains(cone, SpaceTimePoint(x=(2.0, 0.0), t=1.0))
        assert not geometry.q_theta_contains(cone, SpaceTimePoint(x=(0.5, 0.0), t=0.5))
        assert not geometry.q_theta_contains(cone, SpaceTimePoint(x=(2.0, 5.0), t=0.5))


class TestDistance:
    """Signed distance to the cone boundary."""

    def test_half_space(self):
        """For theta = pi the distance is x_1."""
        cone = ConeSpec(n=2, theta=math.pi)
        assert geometry.distance_to_boundary(cone, [3.0, 4.0]) == pytest.approx(3.0)

    def test_right_angle(self):
        """For theta = pi/2 the point (1, 0) is sqrt(2)/2 from both rays."""
        cone = ConeSpec(n=2, theta=math.pi / 2.0)
        assert geometry.distance_to_boundary(cone, [1.0, 0.0]) == pytest.approx(
            math.sqrt(2.0) / 2.0
        )

    def test_exterior_points_are_negative(self, cone):
        """Points outside the cone have a negative distance."""
        assert geometry.distance_to_boundary(cone, [0.0, 1.0]) < 0.0

    def test_rotation_of_transverse_coordinates(self):
        """Only |x'| matters in three dimensions."""
        cone = ConeSpec(n=3, theta=2.0)
        assert geometry.distance_to_boundary(cone, [2.0, 0.3, 0.4]) == pytest.approx(
            geometry.distance_to_boundary(cone, [2.0, 0.5, 0.0])
        )


class TestAngles:
    """Critical, median and shrunken-cone angles."""

    def test_critical_angle(self):
        """2 arccos(1/sqrt(3)) in degrees."""
        assert math.degrees(geometry.CRITICAL_ANGLE) == pytest.approx(
            CRITICAL_ANGLE_DEGREES, abs=1e-9
        )
        assert math.cos(geometry.CRITICAL_ANGLE / 2.0) == pytest.approx(
            1.0 / math.sqrt(3.0), abs=1e-12
        )

    def test_median_angle(self):
        """Midpoint of theta and the critical angle."""
        assert geometry.median_angle(math.pi) == pytest.approx(
            0.5 * (math.pi + geometry.CRITICAL_ANGLE)
        )
        with pytest.raises(ParameterError):
            geometry.median_angle(geometry.CRITICAL_ANGLE)

    def test_beta_prime(self):
        """beta sin^2((theta - delta)/2), and delta must be below theta."""
        delta = geometry.median_angle(math.pi)
        assert geometry.beta_prime(2.0, math.pi, delta) == pytest.approx(
            2.0 * math.sin(0.5 * (math.pi - delta)) ** 2
        )
        with pytest.raises(ParameterError):
            geometry.beta_prime(1.0, 1.0, 1.0)


class TestSampling:
    """Seeded rejection sampling of Q_theta."""

    def test_deterministic(self, cone):
        """The same seed gives the same points."""
        region = SamplingRegion()
        first = geometry.sample_arrays(cone, region, 50, 11)
        second = geometry.sample_arrays(cone, region, 50, 11)
        np.testing.assert_array_equal(first[0], second[0])
        np.testing.assert_array_equal(first[1], second[1])

    def test_points_respect_region(self, cone):
        """Every point lies in Q_theta at least d_min from the boundary."""
        region = SamplingRegion(x1_range=(1.0, 5.0), d_min=0.5)
        x, t = geometry.sample_arrays(cone, region, 200, 2)
        assert x.shape == (200, 2)
        assert np.all(geometry.q_theta_mask(cone, x, t))
        assert np.all(geometry.distance_to_boundary(cone, x) >= 0.5)

    def test_zero_count(self, cone):
        """No points requested, none returned."""
        x, t = geometry.sample_arrays(cone, SamplingRegion(), 0, 0)
        assert x.shape == (0, 2)
        assert t.shape == (0,)

    def test_empty_region(self):
        """An unreachable distance floor exhausts the draw cap."""
        cone = ConeSpec(n=2, theta=0.1)
        region = SamplingRegion(x1_range=(1.0, 2.0), d_min=50.0)
        with pytest.raises(NumericalError) as error:
            geometry.sample_arrays(cone, region, 1, 0)
        assert error.value.reason == NumericalErrorReason.EMPTY_REGION

    def test_sample_points(self, cone):
        """The list form wraps the same draws in SpaceTimePoint."""
        points = geometry.sample_points(cone, SamplingRegion(), 5, 4)
        x, t = geometry.sample_arrays(cone, SamplingRegion(), 5, 4)
        assert [p.x for p in points] == [tuple(row) for row in x]
        assert [p.t for p in points] == list(t)

    def test_boundary_band(self):
        """Band samples have x_1/|x| just above eps."""
        cone = ConeSpec.from_eps(2, 0.6)
        x, _ = geometry.sample_boundary_band(cone, SamplingRegion(), 100, 1, 0.05)
        cosine = x[:, 0] / np.linalg.norm(x, axis=1)
        assert np.all(cosine > 0.6 - 1e-12)
        assert np.all(cosine <= 0.65 + 1e-12)

    def test_boundary_band_stays_above_x1_one(self):
        """Band samples lie in Q_theta even when x1_range starts at or below 1."""
        cone = ConeSpec.from_eps(2, 0.6)
        region = SamplingRegion(x1_range=(0.5, 1.0 + 1e-12), t_range=(0.0, 1e-12))
        x, t = geometry.sample_boundary_band(cone, region, 1000, 5, 0.05)
        assert np.all(x[:, 0] > 1.0)
        assert np.all(t > 0.0)
        assert np.all(geometry.q_theta_mask(cone, x, t))


class TestSampledInvariants:
    """Distance and membership identities over seeded point clouds."""

    COUNT = 10_000

    @pytest.mark.parametrize("n", [2, 3])
    @pytest.mark.parametrize("theta", [math.pi / 2.0, 2.0 * math.pi / 3.0, math.pi])
    def test_membership_matches_distance_sign(self, n: int, theta: float):
        """x lies in the cone exactly when d_theta(x) > 0."""
        cone = ConeSpec(n=n, theta=theta)
        rng = np.random.default_rng(17)
        box = rng.uniform(-10.0, 10.0, (self.COUNT, n))
        inside, _ = geometry.sample_arrays(cone, SamplingRegion(), self.COUNT, 17)
        for x in (box, inside):
            np.testing.assert_array_equal(
                geometry.cone_contains(cone, x), geometry.distance_to_boundary(cone, x) > 0.0
            )
        assert np.all(geometry.distance_to_boundary(cone, inside) > 0.0)

    @pytest.mark.parametrize("n", [2, 3])
    def test_distance_is_homogeneous(self, n: int):
        """d_theta(lambda x) = lambda d_theta(x) for lambda > 0."""
        cone = ConeSpec(n=n, theta=2.0 * math.pi / 3.0)
        x, _ = geometry.sample_arrays(cone, SamplingRegion(), self.COUNT, 23)
        scale = np.random.default_rng(23).uniform(0.1, 10.0, self.COUNT)
        np.testing.assert_allclose(
            geometry.distance_to_boundary(cone, scale[:, None] * x),
            scale * geometry.distance_to_boundary(cone, x),
            rtol=1e-12,
            atol=1e-10,
        )

    @pytest.mark.parametrize("n", [2, 3])
    @pytest.mark.parametrize("theta", [2.0 * math.pi / 3.0, math.pi])
    def test_subcone_distance_bound(self, n: int, theta: float):
        """Points of the delta-cone are at least |x| sin((theta - delta)/2) from the boundary."""
        delta = geometry.median_angle(theta)
        subcone = ConeSpec(n=n, theta=delta)
        x, _ = geometry.sample_arrays(subcone, SamplingRegion(), self.COUNT, 29)
        assert np.all(geometry.cone_contains(subcone, x))
        norm = np.linalg.norm(x, axis=-1)
        distance = geometry.distance_to_boundary(ConeSpec(n=n, theta=theta), x)
        assert np.all(distance >= norm * math.sin(0.5 * (theta - delta)) - 1e-12 * norm)
