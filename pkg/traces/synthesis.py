"""Seeded synthetic movement traces.

Every degree of freedom follows two sinusoids plus smooth spline noise.
``dance`` sweeps head and hands quickly, ``walk`` is a moderate gait-like
sway and ``idle`` stays below the codec's change thresholds.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from skeleton.frames import SkeletonFrame
from skeleton.geometry import quat_from_rotvec, quat_multiply
from skeleton.layout import DEFAULT_LAYOUT
from traces.trace import Trace, step_us
from utils.exceptions import InvalidArgument

logger = logging.getLogger(__name__)

NOISE_KNOT_S = 0.25


@dataclass(frozen=True)
class MotionProfile:
    # amplitudes per joint group: (core, tracked, finger)
    rotation_rad: tuple
    position_m: tuple
    frequencies_hz: tuple
    noise: float


PROFILES = {
    'dance': MotionProfile((0.3, 0.6, 0.5), (0.05, 0.15, 0.15), (0.7, 1.9), 0.3),
    'walk': MotionProfile((0.08, 0.2, 0.1), (0.03, 0.08, 0.08), (0.9, 1.8), 0.2),
    'idle': MotionProfile(
        (math.radians(0.005),) * 3,
        (0.0001,) * 3,
        (0.2, 0.45),
        0.0,
    ),
}

TRACE_KINDS = tuple(PROFILES)

_REST = {
    'torso': (0.0, 1.0, 0.0),
    'neck': (0.0, 1.45, 0.0),
    'head': (0.0, 1.6, 0.05),
}


def joint_groups(layout):
    """0 core, 1 head and wrists, 2 other hand joints."""
    groups = np.zeros(layout.joint_count, dtype=np.int64)
    for j, name in enumerate(layout.names):
        if name == 'head' or name.endswith('_wrist'):
            groups[j] = 1
        elif name.startswith(('left_', 'right_')):
            groups[j] = 2
    return groups


def rest_positions(layout):
    positions = np.zeros((layout.joint_count, 3))
    finger = 0
    for j, name in enumerate(layout.names):
        if name in _REST:
            positions[j] = _REST[name]
        elif name.startswith(('left_', 'right_')):
            side = -1.0 if name.startswith('left_') else 1.0
            if name.endswith('_wrist'):
                positions[j] = (0.35 * side, 1.1, 0.3)
            else:
                finger += 1
                positions[j] = (0.35 * side + 0.02 * side * (finger % 5), 1.1, 0.36 + 0.01 * (finger % 3))
        else:
            positions[j] = (0.0, 0.2 + 0.1 * j, 0.0)
    return positions


def _signals(rng, times, amplitudes, profile):
    """(frames, dofs) smooth signals for per-dof amplitudes."""
    dofs = amplitudes.shape[0]
    f1, f2 = profile.frequencies_hz
    scale1 = rng.uniform(0.8, 1.2, size=dofs) * f1
    scale2 = rng.uniform(0.8, 1.2, size=dofs) * f2
    phase1 = rng.uniform(0.0, 2 * np.pi, size=dofs)
    phase2 = rng.uniform(0.0, 2 * np.pi, size=dofs)
    t = times[:, None]
    wave = 0.6 * np.sin(2 * np.pi * scale1 * t + phase1) + 0.4 * np.sin(2 * np.pi * scale2 * t + phase2)
    if profile.noise > 0 and len(times) > 1:
        knot_count = max(4, int(math.ceil(times[-1] / NOISE_KNOT_S)) + 2)
        knots = np.arange(knot_count) * NOISE_KNOT_S
        values = rng.normal(size=(knot_count, dofs))
        wave = wave + profile.noise * CubicSpline(knots, values, axis=0)(times)
    return wave * amplitudes


def generate_synthetic(kind, duration_s, rate_hz, seed, layout=DEFAULT_LAYOUT):
    if kind not in PROFILES:
        raise InvalidArgument(f"unknown trace kind {kind!r}; expected one of {', '.join(TRACE_KINDS)}")
    if not (duration_s > 0 and rate_hz > 0):
        raise InvalidArgument("duration and rate must be positive")
    profile = PROFILES[kind]
    count = max(1, int(round(duration_s * rate_hz)))
    step = step_us(rate_hz)
    stamps = np.arange(count, dtype=np.int64) * step
    times = stamps / 1e6

    rng = np.random.default_rng(seed)
    groups = joint_groups(layout)
    joints = layout.joint_count

    base = rng.normal(size=(joints, 4))
    base /= np.linalg.norm(base, axis=1, keepdims=True)
    rotation_amp = np.repeat(np.asarray(profile.rotation_rad)[groups], 3)
    position_amp = np.repeat(np.asarray(profile.position_m)[groups], 3)
    rotvecs = _signals(rng, times, rotation_amp, profile).reshape(count, joints, 3)
    offsets = _signals(rng, times, position_amp, profile).reshape(count, joints, 3)

    rotations = quat_multiply(base[None, :, :], quat_from_rotvec(rotvecs))
    rotations /= np.linalg.norm(rotations, axis=-1, keepdims=True)
    positions = rest_positions(layout)[None, :, :] + offsets

    frames = tuple(
        SkeletonFrame(0, k, int(stamps[k]), rotations[k], positions[k])
        for k in range(count)
    )
    logger.debug("synthesized %s trace: %d frames at %s Hz (seed %s)", kind, count, rate_hz, seed)
    return Trace(layout, frames, rate_hz, kind)
