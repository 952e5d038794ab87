import math

import numpy as np
from django.test import SimpleTestCase

from skeleton.frames import (
    DeltaThresholds,
    SkeletonFrame,
    frame_delta_joints,
    seconds_to_us,
)
from skeleton.geometry import (
    Pose,
    Position,
    UnitQuaternion,
    angular_distance,
    angular_distances,
    quat_from_rotvec,
    quat_to_rotvec,
)
from skeleton.layout import DEFAULT_LAYOUT, SkeletonLayout
from utils.exceptions import InvalidArgument


def rest_frame(joints=21, user=1, seq=0, t=0):
    rotations = np.tile([1.0, 0.0, 0.0, 0.0], (joints, 1))
    positions = np.zeros((joints, 3))
    return SkeletonFrame(user, seq, t, rotations, positions)


class AngularDistanceTests(SimpleTestCase):
    def test_identity_to_itself_is_zero(self):
        q = UnitQuaternion.identity()
        self.assertEqual(angular_distance(q, q), 0.0)

    def test_ninety_degrees_about_z(self):
        q = UnitQuaternion.from_axis_angle((0, 0, 1), 90)
        self.assertAlmostEqual(angular_distance(UnitQuaternion.identity(), q), 90.0, places=9)

    def test_double_cover(self):
        q = UnitQuaternion.from_axis_angle((1, 2, 3), 37)
        self.assertAlmostEqual(angular_distance(q, -q), 0.0, places=9)

    def test_small_angles_keep_precision(self):
        q = UnitQuaternion.from_axis_angle((0, 1, 0), 0.001)
        self.assertAlmostEqual(angular_distance(UnitQuaternion.identity(), q), 0.001, places=9)

    def test_rejects_non_unit_input(self):
        with self.assertRaises(InvalidArgument):
            angular_distance(np.array([2.0, 0, 0, 0]), np.array([1.0, 0, 0, 0]))

    def test_vectorized_matches_scalar(self):
        rng = np.random.default_rng(3)
        a = rng.normal(size=(50, 4))
        b = rng.normal(size=(50, 4))
        a /= np.linalg.norm(a, axis=1, keepdims=True)
        b /= np.linalg.norm(b, axis=1, keepdims=True)
        many = angular_distances(a, b)
        for k in range(50):
            self.assertAlmostEqual(many[k], angular_distance(a[k], b[k]), places=9)


class UnitQuaternionTests(SimpleTestCase):
    def test_rejects_non_unit(self):
        with self.assertRaises(InvalidArgument):
            UnitQuaternion(1.0, 1.0, 0.0, 0.0)

    def test_rejects_nan(self):
        with self.assertRaises(ValueError):
            UnitQuaternion(math.nan, 0.0, 0.0, 0.0)

    def test_rotvec_round_trip(self):
        rotvec = np.array([0.3, -0.2, 0.9])
        np.testing.assert_allclose(quat_to_rotvec(quat_from_rotvec(rotvec)), rotvec, atol=1e-12)


class PoseTests(SimpleTestCase):
    def test_compose_with_inverse_is_identity(self):
        pose = Pose(Position(1.0, 2.0, 3.0), UnitQuaternion.from_axis_angle((0, 0, 1), 30))
        result = pose.compose(pose.inverse())
        self.assertLess(result.position.distance_to(Position.origin()), 1e-12)
        self.assertLess(angular_distance(result.rotation, UnitQuaternion.identity()), 1e-6)

    def test_compose_applies_offset_in_body_frame(self):
        turned = Pose(Position.origin(), UnitQuaternion.from_axis_angle((0, 0, 1), 90))
        step = Pose(Position(1.0, 0.0, 0.0), UnitQuaternion.identity())
        moved = turned.compose(step)
        np.testing.assert_allclose(moved.position.as_array(), [0.0, 1.0, 0.0], atol=1e-12)


class SkeletonLayoutTests(SimpleTestCase):
    def test_default_layout(self):
        self.assertEqual(DEFAULT_LAYOUT.joint_count, 21)
        self.assertEqual(DEFAULT_LAYOUT.index('head'), 2)
        self.assertEqual(len(DEFAULT_LAYOUT.wrists()), 2)
        self.assertEqual(len(DEFAULT_LAYOUT.head_and_hands()), 19)

    def test_rejects_duplicates_and_empty(self):
        with self.assertRaises(InvalidArgument):
            SkeletonLayout(('a', 'a'))
        with self.assertRaises(InvalidArgument):
            SkeletonLayout(())

    def test_unknown_joint(self):
        with self.assertRaises(InvalidArgument):
            DEFAULT_LAYOUT.index('tail')


class SkeletonFrameTests(SimpleTestCase):
    def test_arrays_are_read_only(self):
        frame = rest_frame()
        with self.assertRaises(ValueError):
            frame.positions[0, 0] = 1.0

    def test_rejects_mismatched_arrays(self):
        with self.assertRaises(InvalidArgument):
            SkeletonFrame(1, 0, 0, np.tile([1.0, 0, 0, 0], (3, 1)), np.zeros((2, 3)))

    def test_restamped_keeps_joint_data(self):
        frame = rest_frame()
        moved = frame.restamped(seq=5, t=seconds_to_us(0.05))
        self.assertEqual(moved.seq, 5)
        self.assertEqual(moved.t, 50_000)
        self.assertTrue(np.array_equal(moved.rotations, frame.rotations))


class FrameDeltaJointsTests(SimpleTestCase):
    def test_identical_frames_have_no_delta(self):
        self.assertEqual(frame_delta_joints(rest_frame(), rest_frame()), frozenset())

    def test_rotation_below_threshold_is_ignored(self):
        rotations = np.tile([1.0, 0.0, 0.0, 0.0], (21, 1))
        rotations[4] = UnitQuaternion.from_axis_angle((0, 0, 1), 0.05).as_array()
        current = SkeletonFrame(1, 1, 10_000, rotations, np.zeros((21, 3)))
        self.assertEqual(frame_delta_joints(current, rest_frame()), frozenset())

    def test_rotation_and_position_changes_are_reported(self):
        rotations = np.tile([1.0, 0.0, 0.0, 0.0], (21, 1))
        rotations[4] = UnitQuaternion.from_axis_angle((0, 0, 1), 0.15).as_array()
        positions = np.zeros((21, 3))
        positions[7, 1] = 0.002
        current = SkeletonFrame(1, 1, 10_000, rotations, positions)
        self.assertEqual(frame_delta_joints(current, rest_frame()), frozenset({4, 7}))

    def test_threshold_is_inclusive(self):
        positions = np.zeros((21, 3))
        positions[0, 0] = 0.5
        current = SkeletonFrame(1, 1, 10_000, np.tile([1.0, 0, 0, 0], (21, 1)), positions)
        thresholds = DeltaThresholds(rotation_deg=0.1, position_m=0.5)
        self.assertEqual(frame_delta_joints(current, rest_frame(), thresholds), frozenset({0}))

    def test_layout_mismatch(self):
        with self.assertRaises(InvalidArgument):
            frame_delta_joints(rest_frame(joints=20), rest_frame())


def random_quaternions(rng, count):
    q = rng.normal(size=(count, 4))
    return q / np.linalg.norm(q, axis=1, keepdims=True)


def random_frame(rng, joints=21, seq=0):
    positions = rng.normal(scale=0.5, size=(joints, 3))
    return SkeletonFrame(1, seq, seq * 10_000, random_quaternions(rng, joints), positions)


class AngularDistancePropertyTests(SimpleTestCase):
    def setUp(self):
        rng = np.random.default_rng(21)
        self.a, self.b, self.c = (random_quaternions(rng, 1000) for _ in range(3))

    def test_symmetric(self):
        for qa, qb in zip(self.a, self.b):
            self.assertAlmostEqual(angular_distance(qa, qb), angular_distance(qb, qa), places=9)

    def test_triangle_inequality(self):
        for qa, qb, qc in zip(self.a, self.b, self.c):
            direct = angular_distance(qa, qc)
            self.assertLessEqual(direct, angular_distance(qa, qb) + angular_distance(qb, qc) + 1e-9)

    def test_within_half_turn(self):
        distances = angular_distances(self.a, self.b)
        self.assertTrue(np.all((distances >= 0.0) & (distances <= 180.0 + 1e-9)))


class FrameDeltaPropertyTests(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(22)

    def random_thresholds(self):
        return DeltaThresholds(
            rotation_deg=float(self.rng.uniform(1e-6, 5.0)),
            position_m=float(self.rng.uniform(1e-9, 0.02)),
        )

    def test_frame_against_itself_is_empty(self):
        for _ in range(200):
            frame = random_frame(self.rng)
            self.assertEqual(frame_delta_joints(frame, frame, self.random_thresholds()), frozenset())

    def test_larger_thresholds_report_a_subset(self):
        for seq in range(200):
            baseline = random_frame(self.rng)
            # small perturbation so joints straddle the thresholds
            rotations = baseline.rotations + self.rng.normal(scale=0.01, size=baseline.rotations.shape)
            rotations /= np.linalg.norm(rotations, axis=1, keepdims=True)
            positions = baseline.positions + self.rng.normal(scale=0.005, size=baseline.positions.shape)
            current = SkeletonFrame(1, seq + 1, (seq + 1) * 10_000, rotations, positions)
            small = self.random_thresholds()
            large = DeltaThresholds(
                rotation_deg=small.rotation_deg * float(self.rng.uniform(1.0, 4.0)),
                position_m=small.position_m * float(self.rng.uniform(1.0, 4.0)),
            )
            self.assertLessEqual(
                frame_delta_joints(current, baseline, large),
                frame_delta_joints(current, baseline, small),
            )
