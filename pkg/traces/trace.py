import logging
from dataclasses import dataclass

from skeleton.frames import US_PER_SECOND
from utils.exceptions import InvalidArgument

logger = logging.getLogger(__name__)


def step_us(rate_hz):
    return int(round(US_PER_SECOND / rate_hz))


@dataclass(frozen=True, eq=False)
class Trace:
    """Frames of one recorded (or synthesized) movement at a fixed rate."""

    layout: object
    frames: tuple
    rate_hz: float
    kind: str = 'recorded'

    def __post_init__(self):
        if not self.rate_hz > 0:
            raise InvalidArgument("trace rate must be positive")
        frames = tuple(self.frames)
        object.__setattr__(self, 'frames', frames)
        step = self.step_us
        for k, frame in enumerate(frames):
            if frame.joint_count != self.layout.joint_count:
                raise InvalidArgument(f"frame {k} does not match the {self.layout.joint_count}-joint layout")
            if k and frame.t - frames[k - 1].t != step:
                raise InvalidArgument(f"frame {k} breaks the {step} us timestep")

    @property
    def step_us(self):
        return step_us(self.rate_hz)

    @property
    def duration_us(self):
        return len(self.frames) * self.step_us

    def __len__(self):
        return len(self.frames)

    def __iter__(self):
        return iter(self.frames)

    def __getitem__(self, index):
        return self.frames[index]

    def __eq__(self, other):
        if not isinstance(other, Trace):
            return NotImplemented
        return (
            self.layout == other.layout
            and self.rate_hz == other.rate_hz
            and self.kind == other.kind
            and self.frames == other.frames
        )

    __hash__ = None


class TracePlayer:
    """Plays a trace from ``start_us`` on; with ``loop`` it wraps around forever.

    Emitted frames are restamped with the playback time, the player's
    user id and a sequence number that keeps increasing across loops.
    """

    def __init__(self, trace, user=None, start_us=0, loop=False):
        if not len(trace):
            raise InvalidArgument("cannot play an empty trace")
        self.trace = trace
        self.user = user
        self.start_us = start_us
        self.loop = loop

    @property
    def end_us(self):
        return None if self.loop else self.start_us + self.trace.duration_us

    def _emit(self, index):
        frames = self.trace.frames
        frame = frames[index % len(frames)]
        return frame.restamped(
            user=self.user,
            seq=index,
            t=self.start_us + index * self.trace.step_us,
        )

    def frame_at(self, now):
        """The latest frame available at ``now``, or None before the start."""
        if now < self.start_us:
            return None
        index = (now - self.start_us) // self.trace.step_us
        if not self.loop:
            index = min(index, len(self.trace) - 1)
        return self._emit(index)

    def __iter__(self):
        index = 0
        while self.loop or index < len(self.trace):
            yield self._emit(index)
            index += 1

    def schedule(self, clock, callback, until_us=None):
        """Emit frames to ``callback`` on ``clock`` at their timestamps."""
        step = self.trace.step_us
        limit = until_us if until_us is not None else self.end_us
        if limit is None:
            raise InvalidArgument("a looping player needs an end time")

        def emit(index):
            callback(self._emit(index))
            next_t = self.start_us + (index + 1) * step
            if next_t < limit and (self.loop or index + 1 < len(self.trace)):
                clock.call_at(next_t, emit, index + 1)

        if self.start_us < limit:
            clock.call_at(self.start_us, emit, 0)
