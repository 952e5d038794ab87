import math

import numpy as np
from django.test import SimpleTestCase

from codec.state import CodecState
from codec.wire import EncodedFrame, encode_frame
from experience.graph import load_graph
from experience.machine import SessionSnapshot
from experience.tests import DEMO
from netsim.link import Link, LinkConfig
from players.models import PlayerType
from relay.client import ClientState, RelayClient
from relay.config import SessionConfig
from relay.protocol import (
    Command,
    Join,
    JoinAck,
    JoinStatus,
    Pose,
    StateSync,
    Tag,
    decode_message,
    encode_message,
)
from relay.registry import PlayerRegistry
from relay.session import RelaySession
from traces.synthesis import generate_synthetic
from traces.trace import TracePlayer
from utils.exceptions import ConnectionRejected, DecodeError, InvalidArgument

IDEAL = LinkConfig(latency_ms=0, jitter_ms=0, throughput_cap=math.inf)
FAST = LinkConfig(latency_ms=5, jitter_ms=0, throughput_cap=math.inf)
DANCE = generate_synthetic('dance', 2, 100, seed=1)


def ideal_config(**overrides):
    values = {'uplink': IDEAL, 'downlink': IDEAL, 'client_count': 3}
    values.update(overrides)
    return SessionConfig(**values)


class SessionConfigTests(SimpleTestCase):
    def test_compression_flag_drives_codec(self):
        config = SessionConfig(compression=False)
        self.assertFalse(config.codec.compression_enabled)

    def test_client_bounds(self):
        with self.assertRaises(InvalidArgument):
            SessionConfig(client_count=1)
        with self.assertRaises(InvalidArgument):
            SessionConfig(client_count=11)

    def test_background_packet_size(self):
        self.assertEqual(SessionConfig(background_bytes_per_s=5_000).background_packet_bytes, 500)
        self.assertEqual(SessionConfig().background_packet_bytes, 0)


class ProtocolTests(SimpleTestCase):
    def test_control_messages(self):
        snapshot = SessionSnapshot('intro', 1_500, 4, ('forest', 'cave'))
        for message in (
            Join(3, PlayerType.SPECTATOR),
            JoinAck(3, JoinStatus.OK, snapshot),
            JoinAck(3, JoinStatus.FULL),
            Command(Tag.VOTE, 2, 'cave'),
            Command(Tag.RESET, 1),
            StateSync(snapshot),
        ):
            self.assertEqual(decode_message(encode_message(message)), message)

    def test_pose_carries_the_encoded_frame(self):
        payload = encode_frame(DANCE[0].restamped(user=4), CodecState(DANCE.layout))
        data = encode_message(Pose(payload))
        self.assertEqual(len(data), payload.size + 1)
        self.assertEqual(decode_message(data).frame, EncodedFrame.from_bytes(payload.data))

    def test_rejects_garbage(self):
        with self.assertRaises(DecodeError):
            decode_message(b'\x7f')
        with self.assertRaises(DecodeError):
            decode_message(encode_message(Command(Tag.VOTE, 2, 'cave'))[:-2])


class PlayerRegistryTests(SimpleTestCase):
    def test_capacity(self):
        registry = PlayerRegistry(max_clients=10)
        for user in range(1, 11):
            registry.connect(user, PlayerType.STANDARD, 0)
        with self.assertRaises(ConnectionRejected):
            registry.connect(11, PlayerType.STANDARD, 0)

    def test_duplicate_connect(self):
        registry = PlayerRegistry(max_clients=4)
        registry.connect(1, PlayerType.STANDARD, 0)
        with self.assertRaises(ConnectionRejected):
            registry.connect(1, PlayerType.STANDARD, 5)

    def test_reconnect_keeps_identity(self):
        registry = PlayerRegistry(max_clients=4)
        registry.connect(1, PlayerType.ADMINISTRATOR, 0)
        registry.disconnect(1)
        self.assertIsNone(registry.player_type(1))
        record, reconnected = registry.connect(1, PlayerType.STANDARD, 10)
        self.assertTrue(reconnected)
        self.assertEqual(record.player_type, PlayerType.ADMINISTRATOR)
        self.assertEqual(record.connections, 2)


class ClientTickTests(SimpleTestCase):
    def test_hundred_ms_interval(self):
        session = RelaySession(ideal_config(send_interval_ms=100), DANCE, seed=1)
        session.run(10)
        self.assertEqual([c.stats.frames_sent for c in session.clients.values()], [100, 100, 100])

    def test_ten_ms_interval(self):
        session = RelaySession(ideal_config(send_interval_ms=10, client_count=2), DANCE, seed=1)
        session.run(10)
        self.assertEqual([c.stats.frames_sent for c in session.clients.values()], [1000, 1000])

    def test_disconnected_client_does_not_send(self):
        session = RelaySession(ideal_config(), DANCE, seed=1)
        client = session.clients[2]
        client.leave()
        self.assertIsNone(client.client_tick(50_000))

    def test_sent_frames_are_fresh(self):
        session = RelaySession(ideal_config(send_interval_ms=100), DANCE, seed=3)
        session.run(1)
        for user, client in session.clients.items():
            offset = session.offsets[user]
            self.assertEqual(sorted(client.sent.values()), [offset + k * 100_000 for k in range(10)])


class RelayTests(SimpleTestCase):
    def test_fan_out(self):
        session = RelaySession(ideal_config(client_count=5, send_interval_ms=100), DANCE, seed=2)
        session.run(0.1)
        stats = session.server.stats
        self.assertEqual(stats.frames_decoded, 5)
        self.assertEqual(stats.pose_packets_out, stats.frames_decoded * 4)
        self.assertEqual(sum(len(c.received) for c in session.clients.values()), 20)

    def test_nobody_hears_themselves_and_order_holds(self):
        config = ideal_config(client_count=4, send_interval_ms=10, uplink=FAST, downlink=FAST)
        session = RelaySession(config, DANCE, seed=4)
        session.run(1)
        for user, client in session.clients.items():
            senders = {}
            for reception in client.received:
                self.assertNotEqual(reception.sender, user)
                senders.setdefault(reception.sender, []).append(reception.seq)
            for seqs in senders.values():
                self.assertEqual(seqs, sorted(set(seqs)))

    def test_replicas_match_sender_baselines(self):
        session = RelaySession(ideal_config(send_interval_ms=10), DANCE, seed=5)
        session.run(0.5)
        for client in session.clients.values():
            for sender, frame in client.replicas.items():
                original = session.clients[sender].encoder.baseline(sender)
                self.assertEqual(frame.seq, original.seq)
                self.assertTrue(np.allclose(frame.positions, original.positions, atol=1e-3))

    def test_saturation_drops(self):
        config = SessionConfig(client_count=10, send_interval_ms=10, compression=False)
        session = RelaySession(config, DANCE, seed=6)
        metrics = session.run(1)
        self.assertGreater(metrics.packets.dropped, 0)
        self.assertGreater(session.server.stats.pose_packets_dropped, 0)
        self.assertEqual(metrics.packets.in_flight, 0)

    def test_spectator_receives_but_never_sends(self):
        roster = [(1, PlayerType.STANDARD), (2, PlayerType.SPECTATOR), (3, PlayerType.STANDARD)]
        session = RelaySession(ideal_config(send_interval_ms=100), DANCE, roster=roster, seed=7)
        session.run(1)
        spectator = session.clients[2]
        self.assertEqual(spectator.stats.frames_sent, 0)
        self.assertEqual(spectator.stats.frames_received, 20)
        self.assertTrue(all(r.sender != 2 for c in session.clients.values() for r in c.received))

    def test_background_stream_adds_load(self):
        quiet = RelaySession(ideal_config(), DANCE, seed=8)
        busy = RelaySession(ideal_config(background_bytes_per_s=10_000), DANCE, seed=8)
        a = quiet.run(1)
        b = busy.run(1)
        self.assertGreater(b.packets.bytes_delivered, a.packets.bytes_delivered + 2 * 3 * 9_000)
        self.assertEqual(a.serialized_bytes_per_s, b.serialized_bytes_per_s)


class ConnectionTests(SimpleTestCase):
    def make_session(self, **overrides):
        roster = [(1, PlayerType.ADMINISTRATOR), (2, PlayerType.STANDARD), (3, PlayerType.STANDARD)]
        config = ideal_config(uplink=FAST, downlink=FAST, send_interval_ms=100, **overrides)
        return RelaySession(config, DANCE, roster=roster, seed=9)

    def test_join_over_the_wire(self):
        session = RelaySession(ideal_config(uplink=FAST, downlink=FAST), DANCE, seed=9, prejoin=False)
        session.clock.run_until(50_000)
        self.assertTrue(all(c.connected for c in session.clients.values()))
        self.assertEqual(session.server.registry.connected(), (1, 2, 3))

    def test_reconnect_gets_current_state_and_full_frames(self):
        session = self.make_session()
        session.run(0.5, drain=False)
        client = session.clients[2]
        client.leave()
        session.clients[1].request_advance('show')
        session.clock.run_until(session.clock.now + 50_000)
        self.assertEqual(session.server.machine.state, 'show')
        self.assertEqual(client.experience_state, 'lobby')

        captured = []
        link = session.downlinks[2]
        deliver = link.deliver

        def spy(packet):
            captured.append(decode_message(packet.payload))
            deliver(packet)

        link.deliver = spy
        client.join()
        session.run(0.5)
        self.assertTrue(client.connected)
        self.assertEqual(client.experience_state, 'show')
        self.assertEqual(session.server.registry.records[2].connections, 2)
        poses = [m for m in captured if isinstance(m, Pose)]
        self.assertTrue(poses)
        self.assertEqual(poses[0].frame.count, DANCE.layout.joint_count)

    def test_session_full_rejects_join(self):
        session = RelaySession(ideal_config(client_count=2, max_clients=2, uplink=FAST, downlink=FAST), DANCE, seed=1)
        config = session.config
        extra = RelayClient(3, PlayerType.STANDARD, config, session.clock, TracePlayer(DANCE, user=3, loop=True))
        extra.attach(Link('up-3', FAST, session.clock, session.server.receive))
        session.server.attach(3, Link('down-3', FAST, session.clock, extra.receive))
        extra.join()
        session.clock.run_until(100_000)
        self.assertIs(extra.state, ClientState.DISCONNECTED)
        self.assertEqual(extra.stats.join_rejections, 1)
        self.assertEqual(session.server.stats.joins_rejected, 1)

    def test_duplicate_connect_rejected(self):
        session = self.make_session()
        with self.assertRaises(ConnectionRejected):
            session.server.connect(2, PlayerType.STANDARD)

    def test_commands_from_non_admin_are_rejected(self):
        session = self.make_session()
        session.clients[2].request_advance('show')
        session.clock.run_until(50_000)
        self.assertEqual(session.server.machine.state, 'lobby')
        self.assertEqual(session.server.stats.commands_rejected, 1)


class QuiescentAgreementTests(SimpleTestCase):
    def test_random_schedule_keeps_clients_in_agreement(self):
        roster = [(1, PlayerType.ADMINISTRATOR)] + [(u, PlayerType.STANDARD) for u in range(2, 10)] + \
            [(10, PlayerType.SPECTATOR)]
        link = LinkConfig(latency_ms=20, jitter_ms=5)
        config = SessionConfig(client_count=10, uplink=link, downlink=link)
        session = RelaySession(config, DANCE, roster=roster, seed=11, graph=load_graph(DEMO))
        rng = np.random.default_rng(11)
        states = session.server.graph.states
        clients = list(session.clients.values())
        actions = ('presence', 'advance', 'open', 'vote', 'close', 'reset')
        for _ in range(1000):
            client = clients[int(rng.integers(len(clients)))]
            action = actions[int(rng.integers(len(actions)))]
            if action == 'presence' and client.connected:
                client.leave()
            elif action == 'presence':
                client.join()
            elif not client.connected:
                continue
            elif action == 'advance':
                client.request_advance(states[int(rng.integers(len(states)))])
            elif action == 'open':
                client.request_open_ballot()
            elif action == 'vote':
                client.vote(('forest', 'cave', 'swamp')[int(rng.integers(3))])
            elif action == 'close':
                client.request_close_ballot()
            else:
                client.request_reset()
            session.clock.run_until(session.clock.now + 200_000)
            truth = session.server.machine.snapshot()
            for other in clients:
                if other.connected:
                    self.assertEqual(other.snapshot.state, truth.state)
                    self.assertEqual(other.snapshot.ballot, truth.ballot)
