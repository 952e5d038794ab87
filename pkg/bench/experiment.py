"""Experiment sweep description and per-run report rows.

Nothing here touches the app registry, so worker processes can unpickle
these types before Django is set up.
"""
import itertools
from dataclasses import astuple, dataclass, field, fields

import numpy as np

from netsim.link import LinkConfig
from utils.exceptions import ConfigError

PLAYER_TYPES = ('standard', 'spectator', 'administrator')


@dataclass(frozen=True)
class RunSpec:
    clients: int
    interval_ms: float
    compression: bool
    repetition: int
    seed: int


@dataclass(frozen=True)
class ExperimentConfig:
    clients: tuple = tuple(range(2, 11))
    intervals_ms: tuple = (10.0, 100.0)
    compression: tuple = (True, False)
    trace_kind: str = 'dance'
    trace_rate_hz: float = 100.0
    seed: int = 42
    duration_s: float = 10.0
    link: LinkConfig = field(default_factory=LinkConfig)
    repetitions: int = 1
    background_bytes_per_s: float = 0.0
    max_clients: int = 10
    roster: tuple = ()
    workers: int = 1

    def __post_init__(self):
        for name in ('clients', 'intervals_ms', 'compression'):
            values = tuple(getattr(self, name))
            if not values:
                raise ConfigError(f"{name} must not be empty", errors={name: "empty"})
            object.__setattr__(self, name, values)
        if not self.duration_s > 0:
            raise ConfigError("duration must be positive", errors={'duration_s': self.duration_s})
        if self.repetitions < 1:
            raise ConfigError("repetitions must be at least 1", errors={'repetitions': self.repetitions})
        if self.workers < 1:
            raise ConfigError("workers must be at least 1", errors={'workers': self.workers})
        if any(not 2 <= n <= self.max_clients for n in self.clients):
            raise ConfigError(f"client counts must lie in 2..{self.max_clients}", errors={'clients': self.clients})
        if any(not ms > 0 for ms in self.intervals_ms):
            raise ConfigError("send intervals must be positive", errors={'intervals_ms': self.intervals_ms})
        roster = tuple((int(user), str(kind)) for user, kind in self.roster)
        if any(kind not in PLAYER_TYPES for _, kind in roster):
            raise ConfigError("unknown player type in roster", errors={'roster': roster})
        object.__setattr__(self, 'roster', roster)

    def run_seed(self, clients, interval_ms, compression, repetition):
        """Seed of one run, fixed by the sweep seed and the run's key alone."""
        key = [self.seed, clients, int(round(interval_ms * 1000)), int(compression), repetition]
        return int(np.random.SeedSequence(key).generate_state(1)[0])

    def runs(self):
        product = itertools.product(self.clients, self.intervals_ms, self.compression, range(self.repetitions))
        return [
            RunSpec(clients, interval, compression, repetition,
                    self.run_seed(clients, interval, compression, repetition))
            for clients, interval, compression, repetition in product
        ]

    def roster_for(self, clients):
        """(user, player type) for a run; slots beyond the configured roster are standard players."""
        roster = list(self.roster[:clients])
        taken = {user for user, _ in roster}
        user = 1
        while len(roster) < clients:
            if user not in taken:
                roster.append((user, 'standard'))
            user += 1
        return roster


@dataclass(frozen=True)
class RunReport:
    clients: int
    interval_ms: float
    compression: bool
    repetition: int
    seed: int
    trace: str
    duration_s: float
    cap_kbps: float
    latency_ms: float
    jitter_ms: float
    queue_kb: float
    background_bps: float
    latency_mean_ms: float
    latency_median_ms: float
    latency_p95_ms: float
    frames_matched: int
    frames_unmatched: int
    up_bytes_per_s: float
    down_bytes_per_s: float
    serialized_bytes_per_s: float
    packets_sent: int
    packets_delivered: int
    packets_dropped: int
    drop_rate: float
    frames_discarded: int

    @property
    def key(self):
        return (self.clients, self.interval_ms, self.compression, self.repetition)

    def astuple(self):
        return astuple(self)


REPORT_COLUMNS = tuple(f.name for f in fields(RunReport))
