"""Pose streams consumed and produced by the fusion code.

Times are integer microseconds, positions metres, quaternions (w, x, y, z).
"""
import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from skeleton.frames import US_PER_SECOND
from skeleton.geometry import Pose, Position, UnitQuaternion
from utils.exceptions import InvalidArgument

CSV_COLUMNS = ('t', 'x', 'y', 'z', 'qw', 'qx', 'qy', 'qz')


@dataclass(frozen=True)
class AbsoluteSample:
    """A drift-free fix from marker tracking. ``valid`` is False when the markers were not seen."""

    t: int
    pose: Pose
    valid: bool = True


@dataclass(frozen=True)
class RelativeSample:
    """Motion since the previous relative sample, in that sample's frame."""

    t: int
    delta: Pose


def _frozen(values, width, name):
    array = np.array(values, dtype=float)
    if array.ndim != 2 or array.shape[1] != width:
        raise InvalidArgument(f"{name} must have shape (n, {width})")
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class FusedTrack:
    """Timestamped poses of one tracked body, fused output or ground truth."""

    times: np.ndarray
    positions: np.ndarray
    rotations: np.ndarray

    def __post_init__(self):
        times = np.array(self.times, dtype=np.int64)
        times.setflags(write=False)
        positions = _frozen(self.positions, 3, 'positions')
        rotations = _frozen(self.rotations, 4, 'rotations')
        if not (times.ndim == 1 and len(times) == len(positions) == len(rotations)):
            raise InvalidArgument("times, positions and rotations must have the same length")
        if np.any(np.diff(times) <= 0):
            raise InvalidArgument("track times must be strictly increasing")
        object.__setattr__(self, 'times', times)
        object.__setattr__(self, 'positions', positions)
        object.__setattr__(self, 'rotations', rotations)

    def __len__(self):
        return len(self.times)

    def pose(self, index):
        return Pose(Position.from_array(self.positions[index]), UnitQuaternion.from_array(self.rotations[index]))

    def poses(self):
        return [(int(t), self.pose(k)) for k, t in enumerate(self.times)]

    def write_csv(self, handle):
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(CSV_COLUMNS)
        for t, p, q in zip(self.times, self.positions, self.rotations):
            writer.writerow(
                [f'{t / US_PER_SECOND:.6f}']
                + [f'{v:.9f}' for v in p]
                + [f'{v:.9f}' for v in q]
            )

    def save_csv(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open('w', newline='') as handle:
            self.write_csv(handle)
        return path


def sample_arrays(samples, attribute):
    """Stack the poses found under ``attribute`` into (times, positions, rotations)."""
    times = np.array([s.t for s in samples], dtype=np.int64)
    poses = [getattr(s, attribute) for s in samples]
    positions = np.array([p.position.as_array() for p in poses]).reshape(-1, 3)
    rotations = np.array([p.rotation.as_array() for p in poses]).reshape(-1, 4)
    return times, positions, rotations
