import logging
from dataclasses import dataclass

import numpy as np

from netsim.clock import VirtualClock
from netsim.link import Link, LinkStats
from players.models import default_roster
from relay.client import RelayClient
from relay.server import RelayServer
from skeleton.frames import seconds_to_us
from traces.trace import TracePlayer
from utils.exceptions import InvalidArgument

logger = logging.getLogger(__name__)

DRAIN_US = 2_000_000


@dataclass(frozen=True)
class SessionMetrics:
    duration_s: float
    clients: int
    up_bytes_per_s: float
    down_bytes_per_s: float
    server_egress_bytes_per_s: float
    packets: LinkStats
    frames_sent: int
    frames_received: int
    frames_discarded: int

    @property
    def serialized_bytes_per_s(self):
        return self.up_bytes_per_s + self.down_bytes_per_s

    @property
    def drop_rate(self):
        return self.packets.dropped / self.packets.sent if self.packets.sent else 0.0


class RelaySession:
    """Clock, links, server and clients for one roster, wired together.

    Each client's playback starts at a seeded offset within the first
    send interval and its ticks fall on the same grid, so every sent
    frame is fresh.
    """

    def __init__(self, config, trace, roster=None, seed=0, graph=None, prejoin=True, record_throughput=False):
        roster = list(roster) if roster is not None else default_roster(config.client_count)
        if len(roster) != config.client_count:
            raise InvalidArgument(f"roster has {len(roster)} players, session expects {config.client_count}")
        if trace.layout != config.layout:
            raise InvalidArgument("trace layout does not match the session layout")
        self.config = config
        self.clock = VirtualClock()
        self.server = RelayServer(config, self.clock, graph)
        self.clients = {}
        self.offsets = {}
        self.uplinks = {}
        self.downlinks = {}
        self.prejoin = prejoin

        sequence = np.random.SeedSequence(seed)
        offset_seed, *link_seeds = sequence.spawn(1 + 2 * len(roster))
        offset_rng = np.random.default_rng(offset_seed)
        for index, (user, player_type) in enumerate(roster):
            offset = int(offset_rng.integers(0, config.send_interval_us))
            client = RelayClient(user, player_type, config, self.clock,
                                 TracePlayer(trace, user=user, start_us=offset, loop=True))
            uplink = Link(f'up-{user}', config.uplink, self.clock, self.server.receive,
                          rng=np.random.default_rng(link_seeds[2 * index]), record_throughput=record_throughput)
            downlink = Link(f'down-{user}', config.downlink, self.clock, client.receive,
                            rng=np.random.default_rng(link_seeds[2 * index + 1]), record_throughput=record_throughput)
            client.attach(uplink)
            self.server.attach(user, downlink)
            self.clients[user] = client
            self.offsets[user] = offset
            self.uplinks[user] = uplink
            self.downlinks[user] = downlink
            if prejoin:
                client.accept(self.server.connect(user, player_type))
            else:
                self.clock.call_at(0, client.join)

    def _start_background(self, until_us):
        size = self.config.background_packet_bytes
        interval = self.config.send_interval_us

        def tick(at):
            self.server.send_background(size)
            if at + interval < until_us:
                self.clock.call_at(at + interval, tick, at + interval)

        if size:
            self.clock.call_at(self.clock.now, tick, self.clock.now)

    def run(self, duration_s, drain=True):
        if not duration_s > 0:
            raise InvalidArgument("duration must be positive")
        start = self.clock.now
        end = start + seconds_to_us(duration_s)
        for user, client in self.clients.items():
            client.start(start + self.offsets[user], end)
        self._start_background(end)
        self.clock.run_until(end)
        if drain:
            self.clock.run_until(end + DRAIN_US)
        metrics = self.metrics(duration_s)
        logger.info(
            "session of %d clients at %s ms: %.0f B/s serialized per client, drop rate %.3f",
            len(self.clients), self.config.send_interval_ms, metrics.serialized_bytes_per_s, metrics.drop_rate,
        )
        return metrics

    def metrics(self, duration_s):
        clients = list(self.clients.values())
        packets = LinkStats()
        for link in (*self.uplinks.values(), *self.downlinks.values()):
            packets = packets.merge(link.stats)
        egress = sum(link.stats.bytes_sent - link.stats.bytes_dropped for link in self.downlinks.values())
        return SessionMetrics(
            duration_s=duration_s,
            clients=len(clients),
            up_bytes_per_s=sum(c.stats.bytes_serialized for c in clients) / len(clients) / duration_s,
            down_bytes_per_s=sum(c.stats.bytes_deserialized for c in clients) / len(clients) / duration_s,
            server_egress_bytes_per_s=egress / duration_s,
            packets=packets,
            frames_sent=sum(c.stats.frames_sent for c in clients),
            frames_received=sum(c.stats.frames_received for c in clients),
            frames_discarded=sum(c.stats.frames_discarded for c in clients) + self.server.stats.frames_discarded,
        )
