import functools
import heapq
import itertools
import logging
from dataclasses import dataclass, field
from typing import Callable

from utils.exceptions import InvalidArgument

logger = logging.getLogger(__name__)


@dataclass(order=True)
class SimEvent:
    time: int
    order: int
    callback: Callable = field(compare=False)
    cancelled: bool = field(default=False, compare=False)

    def cancel(self):
        self.cancelled = True


class VirtualClock:
    """Discrete-event clock in integer microseconds.

    Events at the same time fire in the order they were scheduled.
    """

    def __init__(self, start=0):
        self._now = start
        self._queue = []
        self._counter = itertools.count()
        self.processed = 0

    @property
    def now(self):
        return self._now

    def call_at(self, when, callback, *args):
        when = int(when)
        if when < self._now:
            raise InvalidArgument(f"cannot schedule at {when}, clock is at {self._now}")
        if args:
            callback = functools.partial(callback, *args)
        event = SimEvent(when, next(self._counter), callback)
        heapq.heappush(self._queue, event)
        return event

    def call_later(self, delay, callback, *args):
        if delay < 0:
            raise InvalidArgument("delay must be non-negative")
        return self.call_at(self._now + int(delay), callback, *args)

    def next_event_time(self):
        while self._queue and self._queue[0].cancelled:
            heapq.heappop(self._queue)
        return self._queue[0].time if self._queue else None

    def pending(self):
        return sum(1 for event in self._queue if not event.cancelled)

    def run_until(self, t_end):
        """Fire every event with time <= ``t_end``; the clock then reads ``t_end``."""
        t_end = int(t_end)
        if t_end < self._now:
            raise InvalidArgument(f"run_until({t_end}) is in the past of {self._now}")
        count = 0
        while self._queue and self._queue[0].time <= t_end:
            event = heapq.heappop(self._queue)
            if event.cancelled:
                continue
            self._now = event.time
            event.callback()
            count += 1
        self._now = t_end
        self.processed += count
        logger.debug("clock advanced to %d after %d events", t_end, count)
        return count

    def run(self):
        """Drain the queue completely."""
        count = 0
        while True:
            when = self.next_event_time()
            if when is None:
                return count
            count += self.run_until(when)
