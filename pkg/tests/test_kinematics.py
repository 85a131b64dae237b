import numpy as np
import pytest

from sfaforce.kinematics import (
    SeeGeometry,
    UncontrollableGeometryError,
    actuator_to_cartesian,
    build_wrench_transform,
    cartesian_to_actuator,
    constant_curvature_pose,
    default_see_geometry,
)

TILT = np.deg2rad(15.0)


class TestConstantCurvaturePose:
    def test_straight(self):
        pose = constant_curvature_pose(60.0, 0.0)
        np.testing.assert_allclose(pose.position[:2], [0.0, 60.0], atol=1e-12)
        np.testing.assert_allclose(pose.tangent[:2], [0.0, 1.0], atol=1e-12)

    def test_quarter_circle(self):
        # closed form: radius = L/alpha = 120/pi, tip at (r, r), tangent +x
        pose = constant_curvature_pose(60.0, np.pi / 2.0)
        r = 120.0 / np.pi
        np.testing.assert_allclose(pose.position[:2], [r, r], rtol=1e-12)
        np.testing.assert_allclose(pose.tangent[:2], [1.0, 0.0], atol=1e-12)

    def test_continuity_at_tiny_angle(self):
        pose = constant_curvature_pose(60.0, 1e-9)
        assert np.linalg.norm(pose.position - np.array([0.0, 60.0, 0.0])) < 1e-6

    def test_series_matches_closed_form_at_boundary(self):
        a = 2e-6
        exact = constant_curvature_pose(60.0, a)
        series = constant_curvature_pose(60.0, a / 2.0)
        # both branches remain smooth and close to straight
        assert abs(exact.position[1] - 60.0) < 1e-9
        assert abs(series.position[1] - 60.0) < 1e-9

    @pytest.mark.parametrize("angle", [0.3, 1.0, np.pi / 2, 3.0, -1.2])
    def test_arc_length_preserved(self, angle):
        # independent oracle: polyline length of the densely sampled arc,
        # where each sample is the tip pose of a proportionally shorter arc
        length = 60.0
        s = np.linspace(1e-9, 1.0, 2001)
        pts = np.array([
            constant_curvature_pose(length * si, angle * si).position[:2] for si in s
        ])
        numeric = np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1)) + length * s[0]
        assert abs(numeric - length) / length < 1e-3
        tip = constant_curvature_pose(length, angle).position[:2]
        np.testing.assert_allclose(tip, pts[-1], rtol=1e-9)

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            constant_curvature_pose(0.0, 0.1)
        with pytest.raises(ValueError):
            constant_curvature_pose(60.0, 2.0 * np.pi)


class TestWrenchTransform:
    def test_parallel_directions_rejected(self):
        geom = SeeGeometry(directions=np.tile([0.0, 0.0, 1.0], (3, 1)))
        with pytest.raises(UncontrollableGeometryError):
            build_wrench_transform(geom)

    def test_default_geometry_full_rank(self):
        h = build_wrench_transform(default_see_geometry())
        assert np.linalg.matrix_rank(h) == 3

    def test_single_actuator_column(self):
        geom = SeeGeometry(directions=[[0.0, 0.0, 1.0]])
        h = build_wrench_transform(geom)
        np.testing.assert_allclose(h, [[0.0], [0.0], [1.0]])

    def test_columns_are_directions(self):
        geom = default_see_geometry()
        h = build_wrench_transform(geom)
        np.testing.assert_allclose(h.T, geom.directions)

    def test_non_unit_direction_rejected(self):
        with pytest.raises(ValueError):
            SeeGeometry(directions=[[0.0, 0.0, 2.0]])


class TestForceMaps:
    def test_single_actuator_map(self):
        np.testing.assert_allclose(
            actuator_to_cartesian([[0.0], [0.0], [1.0]], [2.0]), [0.0, 0.0, 2.0]
        )

    def test_symmetric_assembly_cancels_lateral(self):
        # with 120 degree spacing the radial components cancel and the axial
        # components add up to 3*cos(tilt)
        h = build_wrench_transform(default_see_geometry())
        f = actuator_to_cartesian(h, [1.0, 1.0, 1.0])
        np.testing.assert_allclose(f[:2], [0.0, 0.0], atol=1e-12)
        np.testing.assert_allclose(f[2], 3.0 * np.cos(TILT), rtol=1e-12)

    def test_zero_force(self):
        h = build_wrench_transform(default_see_geometry())
        np.testing.assert_allclose(actuator_to_cartesian(h, np.zeros(3)), np.zeros(3))

    def test_identity_inverse_map(self):
        np.testing.assert_allclose(
            cartesian_to_actuator(np.eye(3), [1.0, 2.0, 3.0]), [1.0, 2.0, 3.0]
        )

    def test_axial_demand_splits_evenly(self):
        h = build_wrench_transform(default_see_geometry())
        f_act = cartesian_to_actuator(h, [0.0, 0.0, 3.0 * np.cos(TILT)])
        np.testing.assert_allclose(f_act, [1.0, 1.0, 1.0], rtol=1e-9)

    def test_round_trip(self):
        h = build_wrench_transform(default_see_geometry())
        rng = np.random.default_rng(2)
        for _ in range(20):
            f = rng.uniform(-10.0, 10.0, 3)
            np.testing.assert_allclose(
                actuator_to_cartesian(h, cartesian_to_actuator(h, f)), f, atol=1e-9
            )

    def test_linearity(self):
        h = build_wrench_transform(default_see_geometry())
        rng = np.random.default_rng(4)
        a, b = rng.standard_normal(3), rng.standard_normal(3)
        lhs = actuator_to_cartesian(h, 2.0 * a + b)
        rhs = 2.0 * actuator_to_cartesian(h, a) + actuator_to_cartesian(h, b)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)
