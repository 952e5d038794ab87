import math

import numpy as np
from django.test import SimpleTestCase

from netsim.clock import VirtualClock
from netsim.link import DropPolicy, Link, LinkConfig, Packet, windowed_throughput
from utils.exceptions import InvalidArgument


class VirtualClockTests(SimpleTestCase):
    def test_empty_queue(self):
        clock = VirtualClock()
        self.assertEqual(clock.run_until(1_000), 0)
        self.assertEqual(clock.now, 1_000)

    def test_boundary_is_inclusive(self):
        clock = VirtualClock()
        fired = []
        clock.call_at(500, fired.append, 'edge')
        clock.call_at(501, fired.append, 'late')
        self.assertEqual(clock.run_until(500), 1)
        self.assertEqual(fired, ['edge'])

    def test_same_time_fires_in_insertion_order(self):
        clock = VirtualClock()
        fired = []
        for label in 'abcde':
            clock.call_at(100, fired.append, label)
        clock.run_until(100)
        self.assertEqual(fired, list('abcde'))

    def test_cannot_go_back(self):
        clock = VirtualClock(start=10)
        with self.assertRaises(InvalidArgument):
            clock.run_until(5)
        with self.assertRaises(InvalidArgument):
            clock.call_at(5, lambda: None)

    def test_cancelled_events_do_not_fire(self):
        clock = VirtualClock()
        fired = []
        event = clock.call_later(10, fired.append, 1)
        event.cancel()
        clock.run()
        self.assertEqual(fired, [])

    def test_events_can_schedule_events(self):
        clock = VirtualClock()
        fired = []

        def tick():
            fired.append(clock.now)
            if clock.now < 50:
                clock.call_later(10, tick)

        clock.call_at(0, tick)
        clock.run_until(100)
        self.assertEqual(fired, [0, 10, 20, 30, 40, 50])


class LinkConfigTests(SimpleTestCase):
    def test_infinite_cap_allowed(self):
        config = LinkConfig(throughput_cap=math.inf)
        self.assertEqual(config.serialization_us(10_000), 0)

    def test_rejects_negative_latency(self):
        with self.assertRaises(InvalidArgument):
            LinkConfig(latency_ms=-1)

    def test_policy_from_string(self):
        self.assertIs(LinkConfig(drop_policy='none').drop_policy, DropPolicy.NONE)

    def test_empty_packet(self):
        with self.assertRaises(InvalidArgument):
            Packet(1, 2, b'', 0)


class LinkTests(SimpleTestCase):
    def make_link(self, seed=0, **overrides):
        clock = VirtualClock()
        received = []
        link = Link('test', LinkConfig(**overrides), clock, received.append,
                    rng=np.random.default_rng(seed), record_throughput=True)
        return clock, link, received

    def test_uncapped_delivery_is_latency(self):
        clock, link, received = self.make_link(latency_ms=5, jitter_ms=0, throughput_cap=math.inf)
        self.assertEqual(link.send(Packet(1, 2, b'x' * 100, 0)), 5_000)
        clock.run_until(4_999)
        self.assertEqual(received, [])
        clock.run_until(5_000)
        self.assertEqual(len(received), 1)

    def test_same_instant_packets_keep_order(self):
        clock, link, received = self.make_link(jitter_ms=5)
        for k in range(20):
            link.send(Packet(1, 2, bytes([k]) * 50, 0))
        clock.run_until(1_000_000)
        self.assertEqual([p.payload[0] for p in received], list(range(20)))

    def test_fifo_under_jitter(self):
        clock, link, received = self.make_link(seed=3, jitter_ms=30, throughput_cap=math.inf)
        for k in range(200):
            clock.call_at(k * 1_000, link.send, Packet(1, 2, k.to_bytes(2, 'little'), k * 1_000))
        clock.run_until(2_000_000)
        order = [int.from_bytes(p.payload, 'little') for p in received]
        self.assertEqual(order, sorted(order))

    def test_serialization_delay(self):
        clock, link, _ = self.make_link(latency_ms=0, jitter_ms=0, throughput_cap=1_000)
        self.assertEqual(link.send(Packet(1, 2, b'x' * 100, 0)), 100_000)
        self.assertEqual(link.send(Packet(1, 2, b'x' * 100, 0)), 200_000)

    def test_overload_plateaus_at_cap(self):
        clock, link, _ = self.make_link()
        # 400 KB/s offered as 1000-byte packets every 2.5 ms for 10 s
        for k in range(4_000):
            clock.call_at(k * 2_500, link.send, Packet(1, 2, b'p' * 1_000, k * 2_500))
        clock.run_until(12_000_000)
        stats = link.stats
        self.assertGreater(stats.dropped, 0)
        self.assertEqual(stats.sent, stats.delivered + stats.dropped + stats.in_flight)
        delivered_rate = stats.bytes_delivered / 10.0
        self.assertAlmostEqual(delivered_rate, 275_000, delta=275_000 * 0.05)
        self.assertLessEqual(windowed_throughput(link.deliveries), 275_000 + 1_000)

    def test_reliable_packets_are_never_dropped(self):
        clock, link, _ = self.make_link(queue_capacity=1_000)
        results = [link.send(Packet(1, 2, b'c' * 600, 0, reliable=True)) for _ in range(5)]
        self.assertNotIn(None, results)
        self.assertIsNone(link.send(Packet(1, 2, b'u' * 600, 0)))

    def test_conservation_at_every_instant(self):
        clock, link, _ = self.make_link(queue_capacity=4_000)
        for k in range(500):
            clock.call_at(k * 1_000, link.send, Packet(1, 2, b'q' * 700, k * 1_000))
        for t in range(0, 700_000, 50_000):
            clock.run_until(t)
            stats = link.stats
            self.assertEqual(stats.sent, stats.delivered + stats.dropped + stats.in_flight)
            self.assertGreaterEqual(stats.in_flight, 0)

    def test_deterministic_for_a_seed(self):
        def run(seed):
            clock, link, received = self.make_link(seed=seed)
            for k in range(300):
                clock.call_at(k * 3_000, link.send, Packet(1, 2, b'z' * 900, k * 3_000))
            clock.run_until(3_000_000)
            return link.deliveries, link.stats.astuple()

        self.assertEqual(run(9), run(9))
        self.assertNotEqual(run(9)[0], run(10)[0])
