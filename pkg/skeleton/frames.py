"""Skeleton frames, timestamps and the change-detection rule shared by codec and relay."""
from dataclasses import dataclass, replace
from typing import NewType

import numpy as np

from skeleton.geometry import (
    UNIT_TOLERANCE,
    Pose,
    Position,
    UnitQuaternion,
    angular_distances,
)
from utils.exceptions import InvalidArgument

# Microseconds since the simulation epoch (0).
Timestamp = NewType('Timestamp', int)
UserId = NewType('UserId', int)
JointId = NewType('JointId', int)

US_PER_SECOND = 1_000_000
US_PER_MS = 1_000


def seconds_to_us(seconds):
    return int(round(seconds * US_PER_SECOND))


def ms_to_us(ms):
    return int(round(ms * US_PER_MS))


def us_to_ms(us):
    return us / US_PER_MS


def _frozen_array(values, width, what):
    array = np.asarray(values, dtype=float)
    if array.ndim != 2 or array.shape[1] != width:
        raise InvalidArgument(f"{what} must have shape (joints, {width}), got {array.shape}")
    if array.flags.writeable:
        array = array.copy()
        array.flags.writeable = False
    return array


@dataclass(frozen=True, eq=False)
class SkeletonFrame:
    """One user's joint poses at one instant. Arrays are read-only."""

    user: int
    seq: int
    t: int
    rotations: np.ndarray
    positions: np.ndarray

    def __post_init__(self):
        if self.user < 0 or self.seq < 0 or self.t < 0:
            raise InvalidArgument("user, seq and t must be non-negative")
        rotations = _frozen_array(self.rotations, 4, 'rotations')
        positions = _frozen_array(self.positions, 3, 'positions')
        if rotations.shape[0] != positions.shape[0] or rotations.shape[0] < 1:
            raise InvalidArgument("rotations and positions must list the same non-zero joint count")
        norms = np.linalg.norm(rotations, axis=1)
        if not np.all(np.abs(norms - 1.0) <= UNIT_TOLERANCE):
            raise InvalidArgument("joint rotations must be unit quaternions")
        if not np.all(np.isfinite(positions)):
            raise InvalidArgument("joint positions must be finite")
        object.__setattr__(self, 'rotations', rotations)
        object.__setattr__(self, 'positions', positions)

    @classmethod
    def from_poses(cls, user, seq, t, poses):
        poses = list(poses)
        return cls(
            user=user,
            seq=seq,
            t=t,
            rotations=np.array([p.rotation.as_array() for p in poses]),
            positions=np.array([p.position.as_array() for p in poses]),
        )

    @property
    def joint_count(self):
        return self.rotations.shape[0]

    @property
    def joints(self):
        return tuple(self.pose(j) for j in range(self.joint_count))

    def pose(self, joint):
        return Pose(
            Position.from_array(self.positions[joint]),
            UnitQuaternion.from_array(self.rotations[joint]),
        )

    def restamped(self, user=None, seq=None, t=None):
        """Same joint data under a new header; the arrays are shared."""
        return replace(
            self,
            user=self.user if user is None else user,
            seq=self.seq if seq is None else seq,
            t=self.t if t is None else t,
        )

    def __eq__(self, other):
        if not isinstance(other, SkeletonFrame):
            return NotImplemented
        return (
            self.user == other.user
            and self.seq == other.seq
            and self.t == other.t
            and np.array_equal(self.rotations, other.rotations)
            and np.array_equal(self.positions, other.positions)
        )

    __hash__ = None

    def __repr__(self):
        return f"SkeletonFrame(user={self.user}, seq={self.seq}, t={self.t}, joints={self.joint_count})"


@dataclass(frozen=True)
class DeltaThresholds:
    rotation_deg: float = 0.1
    position_m: float = 0.001

    def __post_init__(self):
        if not (self.rotation_deg > 0 and self.position_m > 0):
            raise InvalidArgument("delta thresholds must be strictly positive")


def changed_joint_mask(current, baseline, thresholds):
    """Boolean mask over joints that moved noticeably since ``baseline``."""
    if current.joint_count != baseline.joint_count:
        raise InvalidArgument(
            f"layout mismatch: {current.joint_count} joints against {baseline.joint_count}"
        )
    if current.user != baseline.user:
        raise InvalidArgument(f"frame of user {current.user} compared with baseline of user {baseline.user}")
    rotated = angular_distances(current.rotations, baseline.rotations) >= thresholds.rotation_deg
    moved = np.linalg.norm(current.positions - baseline.positions, axis=1) >= thresholds.position_m
    return rotated | moved


def frame_delta_joints(current, baseline, thresholds=None):
    """JointIds whose rotation or position changed by at least the thresholds."""
    thresholds = thresholds or DeltaThresholds()
    mask = changed_joint_mask(current, baseline, thresholds)
    return frozenset(int(j) for j in np.flatnonzero(mask))
