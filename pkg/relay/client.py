import logging
from dataclasses import dataclass
from enum import Enum

from codec.state import CodecState
from codec.wire import decode_frame, encode_frame
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
from relay.server import SERVER_ID
from utils.exceptions import DecodeError, OrderingError

logger = logging.getLogger(__name__)


class ClientState(str, Enum):
    DISCONNECTED = 'disconnected'
    JOINING = 'joining'
    CONNECTED = 'connected'


@dataclass
class ClientStats:
    frames_sent: int = 0
    frames_dropped: int = 0
    bytes_serialized: int = 0
    frames_received: int = 0
    bytes_deserialized: int = 0
    frames_discarded: int = 0
    join_rejections: int = 0


@dataclass(frozen=True)
class Reception:
    sender: int
    seq: int
    available_at: int
    received_at: int


class RelayClient:
    """One player's device: samples its playback, sends poses, applies relayed ones."""

    def __init__(self, user, player_type, config, clock, player):
        self.user = user
        self.player_type = PlayerType(player_type)
        self.config = config
        self.clock = clock
        self.player = player
        self.uplink = None
        self.state = ClientState.DISCONNECTED
        self.snapshot = None
        self.encoder = CodecState(config.layout, config.codec)
        self.decoder = CodecState(config.layout, config.codec)
        self.replicas = {}
        self.sent = {}
        self.received = []
        self.stats = ClientStats()
        self._last_seq = None
        self._tick_event = None

    def attach(self, uplink):
        self.uplink = uplink

    def _send(self, message, reliable=True):
        return self.uplink.send(Packet(self.user, SERVER_ID, encode_message(message), self.clock.now, reliable))

    # connection lifecycle

    def join(self):
        self.state = ClientState.JOINING
        self._send(Join(self.user, self.player_type))

    def leave(self):
        if self.state is ClientState.DISCONNECTED:
            return
        self._send(Leave(self.user))
        self.state = ClientState.DISCONNECTED

    def accept(self, snapshot):
        """Become connected with fresh codec baselines and the session's current state."""
        self.encoder.reset()
        self.decoder.reset()
        self.replicas.clear()
        self.snapshot = snapshot
        self.state = ClientState.CONNECTED

    @property
    def connected(self):
        return self.state is ClientState.CONNECTED

    @property
    def experience_state(self):
        return None if self.snapshot is None else self.snapshot.state

    # sending

    def client_tick(self, now=None):
        """Send the latest playback frame if there is a new one. Returns the payload or None."""
        now = self.clock.now if now is None else now
        if not self.connected or self.player_type is PlayerType.SPECTATOR:
            return None
        frame = self.player.frame_at(now)
        if frame is None or (self._last_seq is not None and frame.seq <= self._last_seq):
            return None
        previous = self.encoder.baseline(self.user)
        payload = encode_frame(frame, self.encoder)
        self._last_seq = frame.seq
        self.stats.frames_sent += 1
        self.stats.bytes_serialized += payload.size
        self.sent[frame.seq] = frame.t
        if self._send(Pose(payload), reliable=False) is None:
            self.stats.frames_dropped += 1
            self.encoder.rollback(self.user, previous)
        return payload

    def start(self, first_tick_us, until_us):
        """Tick every send interval from ``first_tick_us`` while before ``until_us``."""
        interval = self.config.send_interval_us
        background = self.config.background_packet_bytes

        def tick(at):
            self.client_tick(at)
            if background and self.connected:
                self._send(Background(background), reliable=False)
            if at + interval < until_us:
                self._tick_event = self.clock.call_at(at + interval, tick, at + interval)

        if first_tick_us < until_us:
            self._tick_event = self.clock.call_at(first_tick_us, tick, first_tick_us)

    # control requests

    def request(self, tag, argument=''):
        self._send(Command(Tag(tag), self.user, argument))

    def request_advance(self, target):
        self.request(Tag.ADVANCE, target)

    def vote(self, option):
        self.request(Tag.VOTE, option)

    def request_open_ballot(self):
        self.request(Tag.BALLOT_OPEN)

    def request_close_ballot(self):
        self.request(Tag.BALLOT_CLOSE)

    def request_reset(self):
        self.request(Tag.RESET)

    # receiving

    def receive(self, packet):
        try:
            message = decode_message(packet.payload)
        except DecodeError as exc:
            logger.warning("user %s got an undecodable packet: %s", self.user, exc)
            return
        if isinstance(message, Pose):
            self._apply_pose(message.frame)
        elif isinstance(message, JoinAck):
            self._on_join_ack(message)
        elif isinstance(message, StateSync):
            if self.connected and (self.snapshot is None or message.snapshot.epoch > self.snapshot.epoch):
                self.snapshot = message.snapshot
        elif not isinstance(message, Background):
            logger.warning("user %s got unexpected %s", self.user, type(message).__name__)

    def _on_join_ack(self, ack):
        if ack.status is JoinStatus.OK:
            self.accept(ack.snapshot)
            return
        self.stats.join_rejections += 1
        if self.state is ClientState.JOINING:
            self.state = ClientState.DISCONNECTED
        logger.warning("user %s: join rejected (%s)", self.user, ack.status.name)

    def _apply_pose(self, payload):
        if not self.connected:
            return
        try:
            frame = decode_frame(payload, self.decoder)
        except (OrderingError, DecodeError) as exc:
            # freshest wins: stale or unusable poses are superseded by newer ones
            self.stats.frames_discarded += 1
            logger.debug("user %s discarded frame %s of %s: %s", self.user, payload.seq, payload.user, exc)
            return
        self.replicas[frame.user] = frame
        self.stats.frames_received += 1
        self.stats.bytes_deserialized += payload.size
        self.received.append(Reception(frame.user, frame.seq, frame.t, self.clock.now))
