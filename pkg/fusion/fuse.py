import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np

from fusion.streams import FusedTrack, sample_arrays
from skeleton.frames import ms_to_us
from skeleton.geometry import quat_conjugate, quat_multiply, quat_power, quat_rotate
from utils.exceptions import FusionInitError, InvalidArgument

logger = logging.getLogger(__name__)

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])


class Correction(str, Enum):
    SNAP = 'snap'
    BLEND = 'blend'


@dataclass(frozen=True)
class FusionPolicy:
    correction: Correction = Correction.SNAP
    blend_window_ms: float = 100.0

    def __post_init__(self):
        object.__setattr__(self, 'correction', Correction(self.correction))
        if self.blend_window_ms < 0:
            raise InvalidArgument("blend window must be non-negative")

    @property
    def window_us(self):
        return ms_to_us(self.blend_window_ms) if self.correction is Correction.BLEND else 0


def _compose(p, q, dp, dq):
    return p + quat_rotate(q, dp), quat_multiply(q, dq)


def _remainder(dp, dq, fraction):
    """The part of a relative step left after ``fraction`` of it has happened."""
    head_q = quat_power(dq, fraction)
    head_inv = quat_conjugate(head_q)
    return quat_rotate(head_inv, dp - fraction * dp), quat_multiply(head_inv, dq)


def _increasing(times, name, strict):
    steps = np.diff(times)
    if np.any(steps <= 0 if strict else steps < 0):
        raise InvalidArgument(f"{name} samples are not time-ordered")


def fuse(absolute, relative, policy=None):
    """Dead-reckon the relative deltas between absolute fixes.

    The track starts at the first relative sample at or after the first
    valid fix and has one pose per relative sample from there on. A fix
    falling between two relative samples is carried forward by the part
    of the relative step that follows it. With ``snap`` the fused pose
    jumps to each fix; with ``blend`` the error present when the fix
    arrived fades out linearly over the blend window.
    """
    policy = policy or FusionPolicy()
    absolute = list(absolute)
    relative = list(relative)
    if not relative:
        raise InvalidArgument("relative stream is empty")
    rel_t, rel_p, rel_q = sample_arrays(relative, 'delta')
    _increasing(rel_t, 'relative', strict=True)
    _increasing(np.array([s.t for s in absolute], dtype=np.int64), 'absolute', strict=False)
    fixes = [s for s in absolute if s.valid]
    if not fixes:
        raise FusionInitError("no valid absolute sample to start from")
    fix_t, fix_p, fix_q = sample_arrays(fixes, 'pose')
    start = int(np.searchsorted(rel_t, fix_t[0], side='left'))
    if start == len(rel_t):
        raise FusionInitError(f"first absolute fix at {fix_t[0]} us comes after the relative stream ends")

    window = policy.window_us
    count = len(rel_t) - start
    out_p = np.empty((count, 3))
    out_q = np.empty((count, 4))
    target_p = target_q = None
    offset_p, offset_q, offset_t = np.zeros(3), IDENTITY, 0
    cursor = 0
    corrections = 0

    for row, k in enumerate(range(start, len(rel_t))):
        t = rel_t[k]
        latest = None
        while cursor < len(fix_t) and fix_t[cursor] <= t:
            latest = cursor
            cursor += 1

        if latest is None:
            target_p, target_q = _compose(target_p, target_q, rel_p[k], rel_q[k])
        else:
            corrections += 1
            fixed_at = fix_t[latest]
            previous = rel_t[k - 1] if k else None
            if window and target_p is not None:
                fraction = (fixed_at - previous) / (t - previous)
                p, q = _compose(target_p, target_q, rel_p[k] * fraction, quat_power(rel_q[k], fraction))
                p, q = _shown(p, q, offset_p, offset_q, _remaining(fixed_at - offset_t, window))
                offset_p = p - fix_p[latest]
                offset_q = quat_multiply(q, quat_conjugate(fix_q[latest]))
                offset_t = fixed_at
            if fixed_at == t or previous is None or fixed_at <= previous:
                target_p, target_q = fix_p[latest], fix_q[latest]
            else:
                dp, dq = _remainder(rel_p[k], rel_q[k], (fixed_at - previous) / (t - previous))
                target_p, target_q = _compose(fix_p[latest], fix_q[latest], dp, dq)

        out_p[row], out_q[row] = _shown(target_p, target_q, offset_p, offset_q,
                                        _remaining(t - offset_t, window))

    logger.debug("fused %d poses with %d corrections (%s)", count, corrections, policy.correction.value)
    return FusedTrack(rel_t[start:], out_p, out_q)


def _remaining(elapsed, window):
    if not window:
        return 0.0
    return max(0.0, 1.0 - elapsed / window)


def _shown(p, q, offset_p, offset_q, weight):
    if weight <= 0.0:
        return p, q
    return p + weight * offset_p, quat_multiply(quat_power(offset_q, weight), q)
