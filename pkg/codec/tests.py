import numpy as np
from django.test import SimpleTestCase

from codec.config import CodecConfig
from codec.rotation import (
    component_bits,
    quantize_rotation,
    quantize_rotations,
    random_rotations,
    search_component_bits,
    worst_case_error_deg,
)
from codec.state import CodecState
from codec.wire import (
    HEADER,
    HEADER_SIZE,
    EncodedFrame,
    compressed_joint_size,
    decode_frame,
    encode_frame,
    serialized_size,
    uncompressed_size,
)
from skeleton.frames import SkeletonFrame
from skeleton.geometry import (
    UnitQuaternion,
    angular_distance,
    angular_distances,
    quat_from_rotvec,
    quat_multiply,
)
from skeleton.layout import DEFAULT_LAYOUT
from utils.exceptions import DecodeError, InvalidArgument, OrderingError

JOINTS = DEFAULT_LAYOUT.joint_count


def random_walk(frames, seed, user=1, rotation_step=0.004, position_step=0.0015):
    """Smoothly wandering frames; some joints cross the thresholds each step."""
    rng = np.random.default_rng(seed)
    rotations = random_rotations(JOINTS, rng)
    positions = rng.uniform(-1.0, 1.0, size=(JOINTS, 3))
    out = []
    for seq in range(frames):
        out.append(SkeletonFrame(user, seq, seq * 10_000, rotations, positions))
        turn = quat_from_rotvec(rng.normal(scale=rotation_step, size=(JOINTS, 3)))
        rotations = quat_multiply(rotations, turn)
        rotations /= np.linalg.norm(rotations, axis=1, keepdims=True)
        positions = positions + rng.normal(scale=position_step, size=(JOINTS, 3))
    return out


def still_frame(seq, user=1, rotations=None, positions=None):
    if rotations is None:
        rotations = np.tile(UnitQuaternion.from_axis_angle((0, 1, 0), 20).as_array(), (JOINTS, 1))
    if positions is None:
        positions = np.linspace(0.0, 1.6, JOINTS * 3).reshape(JOINTS, 3)
    return SkeletonFrame(user, seq, seq * 10_000, rotations, positions)


class CodecConfigTests(SimpleTestCase):
    def test_default_widths(self):
        config = CodecConfig()
        self.assertEqual(config.rotation_bits, 12)
        self.assertEqual(config.rotation_bytes, 5)
        self.assertEqual(compressed_joint_size(config), 12)

    def test_rejects_non_positive(self):
        with self.assertRaises(InvalidArgument):
            CodecConfig(rotation_threshold_deg=0)

    def test_resolution_must_not_exceed_threshold(self):
        with self.assertRaises(InvalidArgument):
            CodecConfig(rotation_threshold_deg=0.1, rotation_resolution_deg=0.2)
        with self.assertRaises(InvalidArgument):
            CodecConfig(position_threshold_m=0.001, position_resolution_m=0.002)


class QuantizeRotationTests(SimpleTestCase):
    def test_identity_is_exact(self):
        self.assertEqual(quantize_rotation(UnitQuaternion.identity(), 0.1), UnitQuaternion.identity())

    def test_random_rotations_within_resolution(self):
        rotations = random_rotations(1000, np.random.default_rng(11))
        quantized = quantize_rotations(rotations, component_bits(0.1))
        self.assertLessEqual(float(angular_distances(rotations, quantized).max()), 0.1)

    def test_idempotent(self):
        rotations = random_rotations(200_000, np.random.default_rng(12))
        bits = component_bits(0.1)
        once = quantize_rotations(rotations, bits)
        twice = quantize_rotations(once, bits)
        self.assertEqual(int(np.count_nonzero((once != twice).any(axis=1))), 0)

    def test_idempotent_near_ties(self):
        # two or more components of nearly equal magnitude
        rng = np.random.default_rng(13)
        base = rng.choice([-0.5, 0.5], size=(20_000, 4)) + rng.normal(scale=1e-4, size=(20_000, 4))
        rotations = base / np.linalg.norm(base, axis=1, keepdims=True)
        for bits in (8, 12, 16):
            once = quantize_rotations(rotations, bits)
            self.assertTrue(np.array_equal(once, quantize_rotations(once, bits)))

    def test_double_cover_quantizes_alike(self):
        q = UnitQuaternion.from_axis_angle((1, -1, 0.5), 71)
        a = quantize_rotation(q, 0.1)
        b = quantize_rotation(-q, 0.1)
        self.assertLess(angular_distance(a, b), 1e-9)

    def test_analytic_width_is_an_upper_bound_of_the_search(self):
        self.assertLessEqual(worst_case_error_deg(12), 0.1)
        self.assertGreater(worst_case_error_deg(11), 0.1)
        self.assertLessEqual(search_component_bits(0.1, samples=1000, seed=5), component_bits(0.1))

    def test_rejects_bad_resolution(self):
        with self.assertRaises(InvalidArgument):
            quantize_rotation(UnitQuaternion.identity(), 0)


class FrameSizeTests(SimpleTestCase):
    def test_uncompressed_default_layout(self):
        self.assertEqual(HEADER_SIZE, 15)
        self.assertEqual(uncompressed_size(DEFAULT_LAYOUT), 15 + 21 * 29)

    def test_full_first_frame(self):
        state = CodecState(DEFAULT_LAYOUT)
        payload = encode_frame(still_frame(0), state)
        self.assertEqual(payload.count, JOINTS)
        self.assertEqual(serialized_size(payload), HEADER_SIZE + JOINTS * 12)

    def test_header_only_frame(self):
        state = CodecState(DEFAULT_LAYOUT)
        encode_frame(still_frame(0), state)
        payload = encode_frame(still_frame(1), state)
        self.assertEqual(payload.count, 0)
        self.assertEqual(serialized_size(payload), HEADER_SIZE)
        self.assertEqual(serialized_size(payload.data), HEADER_SIZE)

    def test_uncompressed_frames_are_constant(self):
        state = CodecState(DEFAULT_LAYOUT, CodecConfig(compression_enabled=False))
        sizes = {encode_frame(f, state).size for f in random_walk(5, seed=2)}
        self.assertEqual(sizes, {uncompressed_size(DEFAULT_LAYOUT)})


class EncodeFrameTests(SimpleTestCase):
    def test_sub_threshold_rotation_is_not_sent(self):
        state = CodecState(DEFAULT_LAYOUT)
        first = still_frame(0)
        encode_frame(first, state)
        rotations = np.array(first.rotations)
        twist = UnitQuaternion.from_axis_angle((0, 0, 1), 0.05).as_array()
        rotations[5] = quat_multiply(rotations[5], twist)
        payload = encode_frame(still_frame(1, rotations=rotations), state)
        self.assertTrue(payload.header_only)

    def test_changed_joints_only(self):
        state = CodecState(DEFAULT_LAYOUT)
        first = still_frame(0)
        encode_frame(first, state)
        positions = np.array(first.positions)
        positions[[2, 9]] += 0.01
        payload = encode_frame(still_frame(1, positions=positions), state)
        self.assertEqual(payload.count, 2)
        self.assertEqual(payload.data[HEADER_SIZE], 2)
        self.assertEqual(payload.data[HEADER_SIZE + 12], 9)

    def test_stale_seq(self):
        state = CodecState(DEFAULT_LAYOUT)
        encode_frame(still_frame(4), state)
        with self.assertRaises(OrderingError):
            encode_frame(still_frame(4), state)

    def test_baseline_is_quantized(self):
        state = CodecState(DEFAULT_LAYOUT)
        frame = random_walk(1, seed=4)[0]
        encode_frame(frame, state)
        baseline = state.baseline(1)
        self.assertFalse(np.array_equal(baseline.positions, frame.positions))
        self.assertTrue(np.array_equal(baseline.rotations, quantize_rotations(frame.rotations, 12)))

    def test_far_position_uses_absolute_escape(self):
        state = CodecState(DEFAULT_LAYOUT)
        decoder = CodecState(DEFAULT_LAYOUT)
        first = still_frame(0)
        decode_frame(encode_frame(first, state), decoder)
        positions = np.array(first.positions)
        positions[3] += (30.0, 0.0, 0.0)
        payload = encode_frame(still_frame(1, positions=positions), state)
        self.assertEqual(payload.size, HEADER_SIZE + 18)
        frame = decode_frame(payload, decoder)
        self.assertLessEqual(abs(frame.positions[3, 0] - positions[3, 0]), 0.00025 + 1e-12)
        self.assertEqual(frame, state.baseline(1))

    def test_compressed_never_larger(self):
        compressed = CodecState(DEFAULT_LAYOUT)
        for frame in random_walk(50, seed=8):
            self.assertLessEqual(encode_frame(frame, compressed).size, uncompressed_size(DEFAULT_LAYOUT))


class DecodeFrameTests(SimpleTestCase):
    def test_header_only_repeats_previous_pose(self):
        encoder = CodecState(DEFAULT_LAYOUT)
        decoder = CodecState(DEFAULT_LAYOUT)
        first = decode_frame(encode_frame(still_frame(0), encoder), decoder)
        second = decode_frame(encode_frame(still_frame(1), encoder).data, decoder)
        self.assertEqual(second.seq, 1)
        self.assertEqual(second.t, 10_000)
        self.assertTrue(np.array_equal(second.rotations, first.rotations))
        self.assertTrue(np.array_equal(second.positions, first.positions))

    def test_random_trace_round_trip(self):
        encoder = CodecState(DEFAULT_LAYOUT)
        decoder = CodecState(DEFAULT_LAYOUT)
        for frame in random_walk(500, seed=21):
            decoded = decode_frame(encode_frame(frame, encoder), decoder)
            self.assertLessEqual(float(angular_distances(frame.rotations, decoded.rotations).max()), 0.2)
            error = np.linalg.norm(frame.positions - decoded.positions, axis=1)
            self.assertLessEqual(float(error.max()), 0.0015)
            self.assertEqual(decoded, encoder.baseline(frame.user))

    def test_ten_thousand_random_frames(self):
        encoder = CodecState(DEFAULT_LAYOUT)
        decoder = CodecState(DEFAULT_LAYOUT)
        frames = random_walk(5000, seed=40) + [
            SkeletonFrame(1, 5000 + f.seq, (5000 + f.seq) * 10_000, f.rotations, f.positions)
            for f in random_walk(5000, seed=41, rotation_step=0.05, position_step=0.05)
        ]
        worst_rotation = 0.0
        worst_position = 0.0
        for frame in frames:
            decoded = decode_frame(encode_frame(frame, encoder), decoder)
            worst_rotation = max(worst_rotation, float(angular_distances(frame.rotations, decoded.rotations).max()))
            worst_position = max(worst_position, float(np.linalg.norm(frame.positions - decoded.positions, axis=1).max()))
        self.assertLessEqual(worst_rotation, 0.2)
        self.assertLessEqual(worst_position, 0.0015)
        self.assertEqual(decoder.baseline(1), encoder.baseline(1))

    def test_uncompressed_round_trip_agrees(self):
        config = CodecConfig(compression_enabled=False)
        encoder = CodecState(DEFAULT_LAYOUT, config)
        decoder = CodecState(DEFAULT_LAYOUT, config)
        for frame in random_walk(20, seed=22):
            decoded = decode_frame(encode_frame(frame, encoder), decoder)
            self.assertEqual(decoded, encoder.baseline(frame.user))
            self.assertLess(float(angular_distances(frame.rotations, decoded.rotations).max()), 0.01)

    def test_users_keep_separate_baselines(self):
        encoder = CodecState(DEFAULT_LAYOUT)
        decoder = CodecState(DEFAULT_LAYOUT)
        for a, b in zip(random_walk(30, seed=1, user=1), random_walk(30, seed=2, user=2)):
            decode_frame(encode_frame(a, encoder), decoder)
            decode_frame(encode_frame(b, encoder), decoder)
        self.assertEqual(decoder.users(), (1, 2))
        self.assertEqual(decoder.baseline(2), encoder.baseline(2))

    def test_rollback_keeps_sides_in_step(self):
        encoder = CodecState(DEFAULT_LAYOUT)
        decoder = CodecState(DEFAULT_LAYOUT)
        frames = random_walk(10, seed=30)
        for frame in frames:
            previous = encoder.baseline(frame.user)
            payload = encode_frame(frame, encoder)
            if frame.seq % 3 == 1:
                encoder.rollback(frame.user, previous)
                continue
            decode_frame(payload, decoder)
        self.assertEqual(decoder.baseline(1), encoder.baseline(1))

    def test_out_of_order(self):
        encoder = CodecState(DEFAULT_LAYOUT)
        decoder = CodecState(DEFAULT_LAYOUT)
        first, second = random_walk(2, seed=3)
        stale = encode_frame(first, encoder)
        decode_frame(stale, decoder)
        decode_frame(encode_frame(second, encoder), decoder)
        with self.assertRaises(OrderingError):
            decode_frame(stale, decoder)

    def test_joint_id_outside_layout(self):
        encoder = CodecState(DEFAULT_LAYOUT)
        decoder = CodecState(DEFAULT_LAYOUT)
        first, second = random_walk(2, seed=5, position_step=0.01)
        decode_frame(encode_frame(first, encoder), decoder)
        data = bytearray(encode_frame(second, encoder).data)
        data[HEADER_SIZE] = 99
        with self.assertRaises(DecodeError):
            decode_frame(bytes(data), decoder)

    def test_truncated_payloads(self):
        decoder = CodecState(DEFAULT_LAYOUT)
        payload = encode_frame(still_frame(0), CodecState(DEFAULT_LAYOUT))
        with self.assertRaises(DecodeError):
            decode_frame(payload.data[:10], decoder)
        with self.assertRaises(DecodeError):
            decode_frame(payload.data[:-3], decoder)

    def test_partial_frame_without_baseline(self):
        data = HEADER.pack(1, 0, 0, 0)
        with self.assertRaises(DecodeError):
            decode_frame(EncodedFrame.from_bytes(data), CodecState(DEFAULT_LAYOUT))

    def test_duplicate_joint_ids(self):
        encoder = CodecState(DEFAULT_LAYOUT)
        decoder = CodecState(DEFAULT_LAYOUT)
        first = still_frame(0)
        decode_frame(encode_frame(first, encoder), decoder)
        positions = np.array(first.positions)
        positions[[2, 9]] += 0.01
        data = bytearray(encode_frame(still_frame(1, positions=positions), encoder).data)
        data[HEADER_SIZE + 12] = 2
        with self.assertRaises(DecodeError):
            decode_frame(bytes(data), decoder)
