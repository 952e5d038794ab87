"""Synthetic marker and inside-out sensors for desk-scale tracking runs.

Ground truth comes from a motion profile sampled on the relative
sensor's tick grid. The relative sensor reports exact body-frame steps
plus a constant drift: a world-frame velocity bias and a body-frame
angular rate, each along a seeded random direction. Marker fixes are
latched on ticks of the same grid, perturbed by Gaussian position and
rotation noise, and invalidated with the marker-loss probability. The
first fix of a stream is always valid.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from fusion.fuse import fuse
from fusion.metrics import (
    position_errors,
    relative_accuracy_rms,
    static_jitter_rms,
    static_rotation_jitter_deg,
)
from fusion.streams import AbsoluteSample, FusedTrack, RelativeSample
from skeleton.frames import US_PER_SECOND
from skeleton.geometry import Pose, Position, UnitQuaternion, quat_conjugate, quat_from_rotvec, quat_multiply, quat_rotate
from utils.exceptions import InvalidArgument

logger = logging.getLogger(__name__)

MOTIONS = ('static', 'walking', 'fast')
RELATIVE_HZ = 90.0
ABSOLUTE_HZ = 12.0
BAR_LENGTH_M = 0.5

_X = np.array([1.0, 0.0, 0.0])
_Y = np.array([0.0, 1.0, 0.0])
_Z = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class SensorNoiseModel:
    position_sigma_m: float = 0.0
    rotation_sigma_deg: float = 0.0
    drift_m_per_s: float = 0.0
    drift_deg_per_s: float = 0.0
    marker_loss: float = 0.0

    def __post_init__(self):
        values = (self.position_sigma_m, self.rotation_sigma_deg, self.drift_m_per_s, self.drift_deg_per_s)
        if not all(v >= 0 and math.isfinite(v) for v in values):
            raise InvalidArgument("noise and drift parameters must be finite and non-negative")
        if not 0 <= self.marker_loss < 1:
            raise InvalidArgument("marker loss must be in [0, 1)")

    def simulate(self, truth, rng=None, relative_hz=RELATIVE_HZ, absolute_hz=ABSOLUTE_HZ):
        """Absolute and relative sample streams observing ``truth``."""
        rng = rng if rng is not None else np.random.default_rng(0)
        times = truth.times
        p, q = truth.positions, truth.rotations
        bias = self.drift_m_per_s * _unit(rng.normal(size=3))
        spin = math.radians(self.drift_deg_per_s) * _unit(rng.normal(size=3))

        dt = np.diff(times)[:, None] / US_PER_SECOND
        back = quat_conjugate(q[:-1])
        steps_q = quat_multiply(quat_multiply(back, q[1:]), quat_from_rotvec(spin * dt))
        steps_p = quat_rotate(back, p[1:] - p[:-1] + bias * dt)
        steps_q = np.vstack(([1.0, 0.0, 0.0, 0.0], steps_q))
        steps_p = np.vstack((np.zeros(3), steps_p))

        latched = latch_indices(len(times), relative_hz, absolute_hz)
        noisy_p = p[latched] + rng.normal(0.0, self.position_sigma_m, (len(latched), 3))
        tilt = quat_from_rotvec(rng.normal(0.0, math.radians(self.rotation_sigma_deg), (len(latched), 3)))
        noisy_q = quat_multiply(tilt, q[latched])
        valid = rng.random(len(latched)) >= self.marker_loss
        valid[0] = True

        relative = tuple(
            RelativeSample(int(t), _pose(sp, sq)) for t, sp, sq in zip(times, steps_p, steps_q)
        )
        absolute = tuple(
            AbsoluteSample(int(times[k]), _pose(fix_p, fix_q), bool(ok))
            for k, fix_p, fix_q, ok in zip(latched, noisy_p, noisy_q, valid)
        )
        return absolute, relative


def _unit(vector):
    return vector / np.linalg.norm(vector)


def _pose(position, rotation):
    return Pose(Position.from_array(position), UnitQuaternion.from_array(rotation))


def tick_times(samples, rate_hz=RELATIVE_HZ):
    if samples < 1 or not rate_hz > 0:
        raise InvalidArgument("need a positive sample count and rate")
    return np.rint(np.arange(samples) * US_PER_SECOND / rate_hz).astype(np.int64)


def latch_indices(samples, relative_hz, absolute_hz):
    """Tick indices that carry a marker fix: 0, 7, 15, 22, ... for 12 Hz on 90 Hz."""
    if not 0 < absolute_hz <= relative_hz:
        raise InvalidArgument("absolute rate must be positive and at most the relative rate")
    count = math.ceil(samples * absolute_hz / relative_hz)
    indices = np.floor(np.arange(count) * relative_hz / absolute_hz + 1e-6).astype(np.int64)
    return np.unique(indices[indices < samples])


def _axis_angle(axis, radians):
    return quat_from_rotvec(radians[:, None] * axis)


def ground_truth(motion, samples, rate_hz=RELATIVE_HZ):
    """Pose track of the tracked body's centre for one motion profile."""
    times = tick_times(samples, rate_hz)
    t = times / US_PER_SECOND
    if motion == 'static':
        positions = np.tile([0.3, 1.2, -0.4], (samples, 1))
        rotations = np.tile(_axis_angle(_Y, np.array([0.35]))[0], (samples, 1))
    elif motion == 'walking':
        # 2 m circle at 1.2 m/s with head bob and sway
        heading = 0.6 * t
        positions = np.column_stack((
            2.0 * np.cos(heading),
            1.1 + 0.03 * np.sin(2 * np.pi * 1.8 * t),
            2.0 * np.sin(heading),
        ))
        yaw = -heading + np.radians(4.0) * np.sin(2 * np.pi * 0.9 * t)
        pitch = np.radians(2.0) * np.sin(2 * np.pi * 1.8 * t)
        rotations = quat_multiply(_axis_angle(_Y, yaw), _axis_angle(_X, pitch))
    elif motion == 'fast':
        # small circle while twisting +-80 degrees at 1 Hz
        heading = 2.0 * t
        positions = np.column_stack((
            0.4 * np.cos(heading),
            1.2 + 0.05 * np.sin(2 * np.pi * 2.0 * t),
            0.4 * np.sin(heading),
        ))
        yaw = np.radians(80.0) * np.sin(2 * np.pi * 1.0 * t)
        roll = np.radians(15.0) * np.sin(2 * np.pi * 0.7 * t)
        rotations = quat_multiply(_axis_angle(_Y, yaw), _axis_angle(_Z, roll))
    else:
        raise InvalidArgument(f"unknown motion {motion!r}, expected one of {', '.join(MOTIONS)}")
    return FusedTrack(times, positions, rotations)


def mounted(track, offset):
    """Track of a point rigidly attached at ``offset`` in the body frame."""
    offset = np.broadcast_to(np.asarray(offset, dtype=float), track.positions.shape)
    return FusedTrack(track.times, track.positions + quat_rotate(track.rotations, offset), track.rotations)


@dataclass(frozen=True)
class SensorRun:
    truth: FusedTrack
    track: FusedTrack
    absolute: tuple
    relative: tuple

    @property
    def errors_mm(self):
        return position_errors(self.track, self.truth)


@dataclass(frozen=True)
class StaticResult:
    run: SensorRun
    jitter_mm: float
    rotation_jitter_deg: float


@dataclass(frozen=True)
class BarResult:
    a: SensorRun
    b: SensorRun
    length_m: float
    relative_accuracy_mm: float


def track_sensor(truth, noise, policy=None, rng=None, relative_hz=RELATIVE_HZ, absolute_hz=ABSOLUTE_HZ):
    absolute, relative = noise.simulate(truth, rng, relative_hz, absolute_hz)
    return SensorRun(truth, fuse(absolute, relative, policy), absolute, relative)


def run_single(motion, noise, samples, seed=0, policy=None, relative_hz=RELATIVE_HZ, absolute_hz=ABSOLUTE_HZ):
    truth = ground_truth(motion, samples, relative_hz)
    return track_sensor(truth, noise, policy, np.random.default_rng(seed), relative_hz, absolute_hz)


def run_static(noise, samples=2100, seed=0, policy=None, relative_hz=RELATIVE_HZ, absolute_hz=ABSOLUTE_HZ):
    """A stationary sensor, scored by positional and rotational jitter."""
    run = run_single('static', noise, samples, seed, policy, relative_hz, absolute_hz)
    result = StaticResult(run, static_jitter_rms(run.track), static_rotation_jitter_deg(run.track))
    logger.info("static run of %d samples: jitter %.3f mm, %.4f deg", samples, result.jitter_mm,
                result.rotation_jitter_deg)
    return result


def run_bar(motion, noise, samples=17500, seed=0, policy=None, length_m=BAR_LENGTH_M,
            relative_hz=RELATIVE_HZ, absolute_hz=ABSOLUTE_HZ):
    """Two sensors at the ends of a rigid bar, scored by the spread of their distance."""
    if not length_m > 0:
        raise InvalidArgument("bar length must be positive")
    centre = ground_truth(motion, samples, relative_hz)
    rng_a, rng_b = (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2))
    a = track_sensor(mounted(centre, [-length_m / 2, 0.0, 0.0]), noise, policy, rng_a, relative_hz, absolute_hz)
    b = track_sensor(mounted(centre, [length_m / 2, 0.0, 0.0]), noise, policy, rng_b, relative_hz, absolute_hz)
    result = BarResult(a, b, length_m, relative_accuracy_rms(a.track, b.track))
    logger.info("%s bar run of %d samples: relative accuracy %.3f mm", motion, samples, result.relative_accuracy_mm)
    return result
