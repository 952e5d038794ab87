import logging
from dataclasses import dataclass

from codec.state import CodecState
from codec.wire import decode_frame, encode_frame
from experience.graph import DEFAULT_GRAPH, ExperienceGraph
from experience.machine import ExperienceStateMachine
from netsim.link import Packet
from players.models import PlayerType
from relay.protocol import (
    Background,
    Command,
    Join,
    JoinAck,
    JoinStatus,
    Leave,
    Pose,
    StateSync,
    Tag,
    decode_message,
    encode_message,
)
from relay.registry import PlayerRegistry
from utils.exceptions import ConnectionRejected, DecodeError, OrderingError, PoseDeckError

logger = logging.getLogger(__name__)

SERVER_ID = 0


@dataclass
class ServerStats:
    frames_in: int = 0
    frames_decoded: int = 0
    frames_discarded: int = 0
    decode_failures: int = 0
    pose_packets_out: int = 0
    pose_packets_dropped: int = 0
    bytes_serialized: int = 0
    commands_rejected: int = 0
    joins_rejected: int = 0


class RelayServer:
    """Decodes each incoming pose once and re-encodes it for every other client.

    Recipients whose baselines for a sender are the same object share one
    encode; a recipient whose packet is dropped is rolled back and splits
    off into its own group.
    """

    def __init__(self, config, clock, graph=None):
        self.config = config
        self.clock = clock
        self.registry = PlayerRegistry(config.max_clients)
        self.graph = graph or ExperienceGraph.from_dict(DEFAULT_GRAPH)
        self.machine = ExperienceStateMachine(self.graph, self.registry, clock)
        self.machine.listeners.append(self._broadcast_state)
        self.inbound = CodecState(config.layout, config.codec)
        self.outbound = {}
        self.downlinks = {}
        self.stats = ServerStats()

    def attach(self, user, downlink):
        self.downlinks[user] = downlink
        self.outbound.setdefault(user, CodecState(self.config.layout, self.config.codec))

    def _send(self, user, message, reliable=True):
        link = self.downlinks.get(user)
        if link is None:
            logger.warning("no downlink for user %s", user)
            return None
        return link.send(Packet(SERVER_ID, user, encode_message(message), self.clock.now, reliable))

    def connect(self, user, player_type):
        """Register a player directly (server-side player setup)."""
        record, reconnected = self.registry.connect(user, player_type, self.clock.now, self.machine.state)
        if reconnected:
            self.inbound.reset(user)
            self.outbound[user] = CodecState(self.config.layout, self.config.codec)
        return self.machine.join_state(user)

    def disconnect(self, user):
        if self.registry.disconnect(user):
            self.machine.withdraw_vote(user)

    def receive(self, packet):
        try:
            message = decode_message(packet.payload)
        except DecodeError as exc:
            self.stats.decode_failures += 1
            logger.warning("undecodable packet from %s: %s", packet.source, exc)
            return
        if isinstance(message, Pose):
            self.relay(packet.source, message.frame)
        elif isinstance(message, Join):
            self._on_join(packet.source, message)
        elif isinstance(message, Leave):
            self.disconnect(packet.source)
        elif isinstance(message, Command):
            self._on_command(packet.source, message)
        elif isinstance(message, Background):
            pass
        else:
            logger.warning("unexpected %s from %s", type(message).__name__, packet.source)

    def _on_join(self, source, message):
        if message.user != source:
            self.stats.joins_rejected += 1
            logger.warning("join for user %s arrived from %s", message.user, source)
            return
        try:
            snapshot = self.connect(source, message.player_type)
        except ConnectionRejected as exc:
            self.stats.joins_rejected += 1
            status = JoinStatus.DUPLICATE if self.registry.is_connected(source) else JoinStatus.FULL
            logger.warning("join of user %s rejected: %s", source, exc)
            self._send(source, JoinAck(source, status))
            return
        self._send(source, JoinAck(source, JoinStatus.OK, snapshot))

    def _on_command(self, source, command):
        if command.user != source:
            self.stats.commands_rejected += 1
            return
        handlers = {
            Tag.ADVANCE: lambda: self.machine.advance(source, command.argument),
            Tag.VOTE: lambda: self.machine.cast_vote(source, command.argument),
            Tag.BALLOT_OPEN: lambda: self.machine.open_ballot(source),
            Tag.BALLOT_CLOSE: lambda: self.machine.close_ballot(source),
            Tag.RESET: lambda: self.machine.reset(source),
        }
        try:
            handlers[command.tag]()
        except PoseDeckError as exc:
            self.stats.commands_rejected += 1
            logger.warning("%s from user %s rejected: %s", command.tag.name, source, exc)

    def _broadcast_state(self, snapshot):
        for user in self.registry.connected():
            self._send(user, StateSync(snapshot))

    def relay(self, sender, payload):
        """Decode a pose from ``sender`` and re-encode it for every other connected player."""
        self.stats.frames_in += 1
        if self.registry.player_type(sender) in (None, PlayerType.SPECTATOR) or payload.user != sender:
            self.stats.frames_discarded += 1
            return
        try:
            frame = decode_frame(payload, self.inbound)
        except OrderingError:
            self.stats.frames_discarded += 1
            return
        except DecodeError as exc:
            self.stats.frames_discarded += 1
            self.stats.decode_failures += 1
            logger.warning("discarded frame %s from user %s: %s", payload.seq, sender, exc)
            return
        self.stats.frames_decoded += 1
        self.registry.records[sender].last_seq = frame.seq

        groups = {}
        for user in self.registry.connected():
            if user != sender and user in self.downlinks:
                groups.setdefault(id(self.outbound[user].baseline(sender)), []).append(user)
        for members in groups.values():
            self._fan_out(sender, frame, members)

    def _fan_out(self, sender, frame, members):
        lead = self.outbound[members[0]]
        previous = lead.baseline(sender)
        encoded = encode_frame(frame, lead)
        current = lead.baseline(sender)
        data = encode_message(Pose(encoded))
        for user in members:
            state = self.outbound[user]
            state.commit(sender, current)
            self.stats.pose_packets_out += 1
            self.stats.bytes_serialized += encoded.size
            packet = Packet(SERVER_ID, user, data, self.clock.now)
            if self.downlinks[user].send(packet) is None:
                self.stats.pose_packets_dropped += 1
                state.rollback(sender, previous)

    def send_background(self, size):
        for user in self.registry.connected():
            self._send(user, Background(size), reliable=False)
