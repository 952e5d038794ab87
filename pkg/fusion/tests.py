import math
import tempfile
from io import StringIO
from pathlib import Path

import numpy as np
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from fusion.config import fusion_config_from_dict, load_profiles, run_fusion
from fusion.fuse import Correction, FusionPolicy, fuse
from fusion.metrics import (
    position_errors,
    relative_accuracy_rms,
    rotation_errors_deg,
    static_jitter_rms,
    static_rotation_jitter_deg,
)
from fusion.sensors import (
    SensorNoiseModel,
    ground_truth,
    latch_indices,
    mounted,
    run_bar,
    run_single,
)
from fusion.streams import CSV_COLUMNS, AbsoluteSample, FusedTrack
from utils.exceptions import ConfigError, FusionInitError, InvalidArgument

PROFILES = load_profiles()


def track_of(positions):
    positions = np.asarray(positions, dtype=float)
    rotations = np.tile([1.0, 0.0, 0.0, 0.0], (len(positions), 1))
    return FusedTrack(np.arange(len(positions)) * 10_000, positions, rotations)


def naive_jitter(positions):
    n = len(positions)
    mean = [sum(p[axis] for p in positions) / n for axis in range(3)]
    total = 0.0
    for p in positions:
        total += sum((p[axis] - mean[axis]) ** 2 for axis in range(3))
    return math.sqrt(total / n) * 1000.0


def naive_relative(a, b):
    distances = []
    for pa, pb in zip(a, b):
        distances.append(math.sqrt(sum((pa[axis] - pb[axis]) ** 2 for axis in range(3))))
    mean = sum(distances) / len(distances)
    return math.sqrt(sum((d - mean) ** 2 for d in distances) / len(distances)) * 1000.0


class MetricTests(SimpleTestCase):
    def test_constant_position_has_no_jitter(self):
        self.assertEqual(static_jitter_rms(track_of([[0.1, 1.0, 2.0]] * 50)), 0.0)

    def test_two_samples(self):
        self.assertAlmostEqual(static_jitter_rms(track_of([[0, 0, 0], [0.002, 0, 0]])), 1.0, places=9)

    def test_too_few_samples(self):
        with self.assertRaises(InvalidArgument):
            static_jitter_rms(np.zeros((0, 3)))
        with self.assertRaises(InvalidArgument):
            static_jitter_rms(np.zeros((1, 3)))

    def test_gaussian_jitter_matches_expectation(self):
        rng = np.random.default_rng(2100)
        positions = rng.normal(0.0, 0.000554, (2100, 3))
        self.assertAlmostEqual(static_jitter_rms(positions), 0.96, delta=0.96 * 0.05)

    def test_rigid_motion_has_no_relative_error(self):
        truth = ground_truth('walking', 500)
        a = mounted(truth, [-0.25, 0.0, 0.0])
        b = mounted(truth, [0.25, 0.0, 0.0])
        self.assertLess(relative_accuracy_rms(a, b), 1e-9)

    def test_constant_pair_has_no_relative_error(self):
        a = np.tile([0.1, 1.0, 2.0], (50, 1))
        b = np.tile([0.6, 1.3, 1.7], (50, 1))
        self.assertEqual(relative_accuracy_rms(a, b), 0.0)

    def test_relative_length_mismatch(self):
        with self.assertRaises(InvalidArgument):
            relative_accuracy_rms(np.zeros((5, 3)), np.zeros((4, 3)))

    def test_against_brute_force(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            n = int(rng.integers(2, 60))
            a = rng.normal(0.0, 0.01, (n, 3)) + [0.0, 1.0, 0.0]
            b = a + [0.5, 0.0, 0.0] + rng.normal(0.0, 0.004, (n, 3))
            self.assertAlmostEqual(static_jitter_rms(a) / naive_jitter(a.tolist()), 1.0, delta=1e-9)
            expected = naive_relative(a.tolist(), b.tolist())
            self.assertAlmostEqual(relative_accuracy_rms(a, b), expected, delta=1e-9 * max(expected, 1e-12))

    def test_rotation_jitter_of_constant_orientation(self):
        truth = ground_truth('static', 100)
        self.assertAlmostEqual(static_rotation_jitter_deg(truth), 0.0, places=6)

    def test_errors_need_aligned_tracks(self):
        truth = ground_truth('walking', 100)
        with self.assertRaises(InvalidArgument):
            position_errors(ground_truth('walking', 90), truth)


class LatchTests(SimpleTestCase):
    def test_twelve_on_ninety(self):
        self.assertEqual(latch_indices(30, 90, 12).tolist(), [0, 7, 15, 22])

    def test_long_grid_keeps_alternating(self):
        gaps = np.diff(latch_indices(17500, 90, 12))
        self.assertEqual(set(gaps.tolist()), {7, 8})

    def test_noise_model_validation(self):
        with self.assertRaises(InvalidArgument):
            SensorNoiseModel(position_sigma_m=-1.0)
        with self.assertRaises(InvalidArgument):
            SensorNoiseModel(marker_loss=1.0)


class FuseTests(SimpleTestCase):
    def test_zero_noise_equals_truth(self):
        for motion in ('walking', 'fast'):
            run = run_single(motion, SensorNoiseModel(), 2000, seed=1)
            self.assertEqual(len(run.track), 2000)
            self.assertLessEqual(run.errors_mm.max(), 1e-6)
            self.assertLessEqual(rotation_errors_deg(run.track, run.truth).max(), 1e-6)

    def test_snap_equals_fixes(self):
        noise = PROFILES['walking'].noise
        run = run_single('walking', noise, 900, seed=3)
        index = {int(t): k for k, t in enumerate(run.track.times)}
        for fix in (s for s in run.absolute if s.valid):
            k = index[fix.t]
            self.assertTrue(np.array_equal(run.track.positions[k], fix.pose.position.as_array()))
            self.assertTrue(np.array_equal(run.track.rotations[k], fix.pose.rotation.as_array()))

    def test_drift_without_fixes_grows_linearly(self):
        truth = ground_truth('walking', 900)
        absolute, relative = SensorNoiseModel(drift_m_per_s=0.005).simulate(truth, np.random.default_rng(4))
        track = fuse(absolute[:1], relative)
        expected = 5.0 * (track.times - track.times[0]) / 1e6
        np.testing.assert_allclose(position_errors(track, truth), expected, atol=1e-6)

    def test_drift_bound_over_ten_thousand_steps(self):
        noise = SensorNoiseModel(position_sigma_m=0.001, drift_m_per_s=0.005)
        run = run_single('walking', noise, 10_000, seed=5)
        fix_times = np.array([s.t for s in run.absolute])
        max_gap_s = np.diff(fix_times).max() / 1e6
        index = np.searchsorted(run.truth.times, fix_times)
        fix_noise = np.linalg.norm(
            np.array([s.pose.position.as_array() for s in run.absolute]) - run.truth.positions[index], axis=1
        ).max() * 1000.0
        self.assertLessEqual(run.errors_mm.max(), 5.0 * max_gap_s + fix_noise + 1e-6)
        self.assertLess(5.0 * max_gap_s, 0.45)

    def test_no_initial_fix(self):
        truth = ground_truth('static', 50)
        absolute, relative = SensorNoiseModel().simulate(truth)
        with self.assertRaises(FusionInitError):
            fuse([], relative)
        with self.assertRaises(FusionInitError):
            fuse([AbsoluteSample(s.t, s.pose, valid=False) for s in absolute], relative)
        late = AbsoluteSample(relative[-1].t + 1, absolute[0].pose)
        with self.assertRaises(FusionInitError):
            fuse([late], relative)

    def test_unordered_relative_stream(self):
        truth = ground_truth('static', 20)
        absolute, relative = SensorNoiseModel().simulate(truth)
        with self.assertRaises(InvalidArgument):
            fuse(absolute, relative[::-1])

    def test_fix_between_ticks(self):
        fine = ground_truth('walking', 401, rate_hz=180)
        truth = ground_truth('walking', 201)
        self.assertTrue(np.array_equal(fine.times[::2], truth.times))
        _, relative = SensorNoiseModel().simulate(truth)
        k = 40
        fix = AbsoluteSample(int(fine.times[2 * k - 1]), fine.pose(2 * k - 1))
        track = fuse([fix], relative)
        self.assertEqual(track.times[0], relative[k].t)
        rest = FusedTrack(truth.times[k:], truth.positions[k:], truth.rotations[k:])
        self.assertLess(position_errors(track, rest).max(), 0.5)

    def test_blend_is_continuous_and_settles(self):
        noise = SensorNoiseModel(position_sigma_m=0.003)
        snap = run_single('static', noise, 900, seed=6)
        blended = run_single('static', noise, 900, seed=6, policy=FusionPolicy(Correction.BLEND, 100.0)).track
        snap_steps = np.linalg.norm(np.diff(snap.track.positions, axis=0), axis=1)
        blend_steps = np.linalg.norm(np.diff(blended.positions, axis=0), axis=1)
        self.assertLess(blend_steps.max(), snap_steps.max())

        short = run_single('static', noise, 900, seed=6, policy=FusionPolicy(Correction.BLEND, 20.0)).track
        fix_times = np.array([s.t for s in snap.absolute])
        latest = fix_times[np.searchsorted(fix_times, short.times, side='right') - 1]
        settled = short.times - latest >= 20_000
        self.assertTrue(settled.any())
        np.testing.assert_allclose(short.positions[settled], snap.track.positions[settled], atol=1e-12)

    def test_blend_without_noise_is_exact(self):
        run = run_single('walking', SensorNoiseModel(), 900, seed=7, policy=FusionPolicy('blend'))
        self.assertLessEqual(run.errors_mm.max(), 1e-6)


class BarTests(SimpleTestCase):
    def test_walking_profile_reproduces_relative_accuracy(self):
        profile = PROFILES['walking']
        result = run_bar(profile.motion, profile.noise, samples=17500, seed=42)
        self.assertEqual(len(result.a.track), 17500)
        self.assertAlmostEqual(result.relative_accuracy_mm, 4.05, delta=4.05 * 0.15)

    def test_fast_motion_is_worse(self):
        walking = run_bar('walking', PROFILES['walking'].noise, samples=9000, seed=42)
        fast = run_bar('fast', PROFILES['fast'].noise, samples=9000, seed=42)
        self.assertGreater(fast.relative_accuracy_mm, walking.relative_accuracy_mm)
        self.assertTrue(7.0 < fast.relative_accuracy_mm < 30.0)

    def test_more_drift_never_helps(self):
        means = []
        for drift in (0.0, 0.02, 0.08):
            noise = SensorNoiseModel(position_sigma_m=0.002864, drift_m_per_s=drift)
            means.append(np.mean([run_bar('walking', noise, samples=1800, seed=s).relative_accuracy_mm
                                  for s in range(10)]))
        self.assertLessEqual(means[0], means[1])
        self.assertLessEqual(means[1], means[2])

    def test_static_profile_jitter(self):
        config = fusion_config_from_dict({'profile': 'static', 'experiment': 'static', 'samples': 2100}, PROFILES)
        result = run_fusion(config)
        self.assertAlmostEqual(result.jitter_mm, 0.96, delta=0.96 * 0.15)


class FusionConfigTests(SimpleTestCase):
    def test_profiles_file(self):
        self.assertEqual(set(PROFILES), {'static', 'walking', 'fast'})
        self.assertAlmostEqual(PROFILES['walking'].noise.position_sigma_m, 0.002864)
        self.assertEqual(PROFILES['fast'].noise.marker_loss, 0.3)

    def test_inline_noise(self):
        config = fusion_config_from_dict({
            'motion': 'fast', 'experiment': 'single', 'samples': 100,
            'noise': {'position_sigma_mm': 1.0, 'drift_mm_per_s': 2.0},
        })
        self.assertEqual(config.motion, 'fast')
        self.assertAlmostEqual(config.noise.drift_m_per_s, 0.002)
        self.assertIs(config.policy.correction, Correction.SNAP)

    def test_invalid_configs(self):
        for data in ({}, {'noise': {}, 'experiment': 'bar'}, {'profile': 'walking', 'absolute_hz': 120},
                     {'profile': 'walking', 'policy': 'kalman'}):
            with self.assertRaises(ConfigError):
                fusion_config_from_dict(data, PROFILES)

    def test_unknown_profile(self):
        with self.assertRaises(ConfigError) as ctx:
            fusion_config_from_dict({'profile': 'running'}, PROFILES)
        self.assertIn('walking', ctx.exception.errors['profile'])


class FuseCommandTests(SimpleTestCase):
    def test_csv_output_is_deterministic(self):
        with tempfile.TemporaryDirectory() as tmp:
            first, second = Path(tmp) / 'a.csv', Path(tmp) / 'b.csv'
            for path in (first, second):
                call_command('fuse', '--profile', 'walking', '--experiment', 'single', '--samples', '300',
                             '--seed', '9', '--out', str(path), stdout=StringIO())
            lines = first.read_text().splitlines()
            self.assertEqual(lines[0], ','.join(CSV_COLUMNS))
            self.assertEqual(len(lines), 301)
            self.assertEqual(first.read_bytes(), second.read_bytes())

    def test_bar_run_from_config_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            config = Path(tmp) / 'run.toml'
            config.write_text('profile = "walking"\nexperiment = "bar"\nsamples = 200\nseed = 3\n')
            out = StringIO()
            call_command('fuse', '--config', str(config), '--out', str(Path(tmp) / 'a.csv'),
                         '--out-b', str(Path(tmp) / 'b.csv'), stdout=out)
            self.assertIn('relative accuracy', out.getvalue())
            self.assertTrue((Path(tmp) / 'b.csv').exists())

    def test_bad_config_is_a_command_error(self):
        with tempfile.TemporaryDirectory() as tmp:
            config = Path(tmp) / 'run.toml'
            config.write_text('profile = "walking"\nsamples = 1\n')
            with self.assertRaises(CommandError):
                call_command('fuse', '--config', str(config), '--out', str(Path(tmp) / 'a.csv'), stdout=StringIO())
