import logging
import math
from collections import deque
from dataclasses import dataclass
from enum import Enum

import numpy as np

from skeleton.frames import US_PER_SECOND, ms_to_us
from utils.exceptions import InvalidArgument

logger = logging.getLogger(__name__)


class DropPolicy(str, Enum):
    TAIL = 'tail'
    NONE = 'none'


@dataclass(frozen=True)
class LinkConfig:
    """One direction of a connection. ``throughput_cap`` is bytes/s and may be ``math.inf``."""

    latency_ms: float = 20.0
    jitter_ms: float = 5.0
    throughput_cap: float = 275_000.0
    queue_capacity: int = 64_000
    drop_policy: DropPolicy = DropPolicy.TAIL

    def __post_init__(self):
        if self.latency_ms < 0 or self.jitter_ms < 0:
            raise InvalidArgument("latency and jitter must be non-negative")
        if not self.throughput_cap > 0:
            raise InvalidArgument("throughput cap must be positive (math.inf for unlimited)")
        if self.queue_capacity <= 0:
            raise InvalidArgument("queue capacity must be positive")
        object.__setattr__(self, 'drop_policy', DropPolicy(self.drop_policy))

    def serialization_us(self, size):
        if math.isinf(self.throughput_cap):
            return 0
        return math.ceil(size * US_PER_SECOND / self.throughput_cap)


@dataclass(frozen=True)
class Packet:
    source: int
    destination: int
    payload: bytes
    enqueued_at: int
    reliable: bool = False

    def __post_init__(self):
        if not self.payload:
            raise InvalidArgument("packet payload must not be empty")

    @property
    def size(self):
        return len(self.payload)


@dataclass
class LinkStats:
    sent: int = 0
    delivered: int = 0
    dropped: int = 0
    bytes_sent: int = 0
    bytes_delivered: int = 0
    bytes_dropped: int = 0

    @property
    def in_flight(self):
        return self.sent - self.delivered - self.dropped

    def merge(self, other):
        return LinkStats(*(a + b for a, b in zip(self.astuple(), other.astuple())))

    def astuple(self):
        return (self.sent, self.delivered, self.dropped,
                self.bytes_sent, self.bytes_delivered, self.bytes_dropped)


class Link:
    """A serializing FIFO link with a byte-bounded send queue.

    A packet waits for the packets ahead of it, serializes at the cap,
    then travels for latency plus seeded jitter. Deliveries keep send
    order and stay at least one serialization time apart.
    """

    def __init__(self, name, config, clock, deliver, rng=None, record_throughput=False):
        self.name = name
        self.config = config
        self.clock = clock
        self.deliver = deliver
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.record_throughput = record_throughput
        self.stats = LinkStats()
        self.deliveries = []
        self._latency_us = ms_to_us(self.config.latency_ms)
        self._jitter_us = ms_to_us(self.config.jitter_ms)
        self._busy_until = 0
        self._last_delivery = 0
        self._backlog = deque()
        self._backlog_bytes = 0

    def occupancy(self):
        """Bytes waiting for or in serialization at the current time."""
        now = self.clock.now
        while self._backlog and self._backlog[0][0] <= now:
            _, size = self._backlog.popleft()
            self._backlog_bytes -= size
        return self._backlog_bytes

    def send(self, packet):
        """Queue ``packet``. Returns the delivery time, or None if it was dropped."""
        now = self.clock.now
        self.stats.sent += 1
        self.stats.bytes_sent += packet.size
        if (
            self.config.drop_policy is DropPolicy.TAIL
            and not packet.reliable
            and self.occupancy() + packet.size > self.config.queue_capacity
        ):
            self.stats.dropped += 1
            self.stats.bytes_dropped += packet.size
            logger.debug("%s: dropped %d bytes at %d", self.name, packet.size, now)
            return None

        tx_us = self.config.serialization_us(packet.size)
        finish = max(now, self._busy_until) + tx_us
        self._busy_until = finish
        self._backlog.append((finish, packet.size))
        self._backlog_bytes += packet.size

        jitter = int(self.rng.integers(0, self._jitter_us + 1)) if self._jitter_us else 0
        deliver_at = max(finish + self._latency_us + jitter, self._last_delivery + tx_us)
        self._last_delivery = deliver_at
        self.clock.call_at(deliver_at, self._on_delivery, packet)
        return deliver_at

    def _on_delivery(self, packet):
        self.stats.delivered += 1
        self.stats.bytes_delivered += packet.size
        if self.record_throughput:
            self.deliveries.append((self.clock.now, packet.size))
        self.deliver(packet)


def windowed_throughput(deliveries, window_us=US_PER_SECOND, step_us=None):
    """Max bytes/s delivered over sliding windows of ``window_us``.

    ``deliveries`` is a list of (time, size) as recorded by a link.
    """
    if not deliveries:
        return 0.0
    times = np.array([t for t, _ in deliveries], dtype=np.int64)
    sizes = np.array([s for _, s in deliveries], dtype=np.int64)
    cumulative = np.concatenate(([0], np.cumsum(sizes)))
    starts = times if step_us is None else np.arange(times[0], times[-1] + 1, step_us)
    lo = np.searchsorted(times, starts, side='left')
    hi = np.searchsorted(times, starts + window_us, side='left')
    best = int((cumulative[hi] - cumulative[lo]).max())
    return best * US_PER_SECOND / window_us
