import numpy as np
from scipy.spatial.transform import Rotation

from skeleton.geometry import angular_distances
from utils.exceptions import InvalidArgument

MM_PER_M = 1000.0


def _positions(track, minimum=2):
    positions = np.asarray(track.positions if hasattr(track, 'positions') else track, dtype=float)
    if positions.ndim != 2 or positions.shape[1] != 3 or len(positions) < minimum:
        raise InvalidArgument(f"need at least {minimum} positions, got {len(positions)}")
    return positions


def static_jitter_rms(track):
    """RMS distance (mm) of a stationary track's positions from their mean."""
    positions = _positions(track)
    # offsets from the first sample so a constant track yields exact zeros
    offsets = positions - positions[0]
    distances = np.linalg.norm(offsets - offsets.mean(axis=0), axis=1)
    return float(np.sqrt(np.mean(distances ** 2)) * MM_PER_M)


def relative_accuracy_rms(track_a, track_b):
    """RMS deviation (mm) of the distance between two rigidly mounted sensors from its mean."""
    a = _positions(track_a)
    b = _positions(track_b)
    if len(a) != len(b):
        raise InvalidArgument(f"tracks differ in length ({len(a)} and {len(b)})")
    times_a = getattr(track_a, 'times', None)
    times_b = getattr(track_b, 'times', None)
    if times_a is not None and times_b is not None and not np.array_equal(times_a, times_b):
        raise InvalidArgument("tracks are not time-aligned")
    distances = np.linalg.norm(a - b, axis=1)
    offsets = distances - distances[0]
    return float(np.sqrt(np.mean((offsets - offsets.mean()) ** 2)) * MM_PER_M)


def static_rotation_jitter_deg(track):
    """RMS geodesic angle (degrees) of a stationary track's orientations from their mean."""
    rotations = np.asarray(track.rotations, dtype=float)
    if len(rotations) < 2:
        raise InvalidArgument("need at least 2 orientations")
    mean = Rotation.from_quat(rotations[:, [1, 2, 3, 0]]).mean().as_quat()
    mean = mean[[3, 0, 1, 2]]
    angles = angular_distances(rotations, mean)
    return float(np.sqrt(np.mean(angles ** 2)))


def _aligned(track, truth):
    if len(track) != len(truth) or not np.array_equal(track.times, truth.times):
        raise InvalidArgument("track and ground truth are not time-aligned")


def position_errors(track, truth):
    """Per-sample position error (mm) against ground truth at the same times."""
    _aligned(track, truth)
    return np.linalg.norm(track.positions - truth.positions, axis=1) * MM_PER_M


def rotation_errors_deg(track, truth):
    _aligned(track, truth)
    return angular_distances(track.rotations, truth.rotations)
