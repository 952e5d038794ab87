"""Session messages carried inside simulator packets.

Every message starts with a one-byte tag. Integers are little-endian,
strings are a u8 length followed by utf-8.

    POSE          0x01  encoded frame (see codec.wire)
    JOIN          0x10  user u16, player type u8
    JOIN_ACK      0x11  user u16, status u8, then a snapshot when status is OK
    LEAVE         0x12  user u16
    ADVANCE       0x20  user u16, target state
    VOTE          0x21  user u16, option
    BALLOT_CLOSE  0x22  user u16
    RESET         0x23  user u16
    STATE_SYNC    0x24  snapshot
    BALLOT_OPEN   0x25  user u16
    BACKGROUND    0x30  opaque filler

Snapshot: epoch u32, entered_at u64, state, option count u8, options.
"""
import struct
from dataclasses import dataclass
from enum import IntEnum

from codec.wire import EncodedFrame
from experience.machine import SessionSnapshot
from players.models import PlayerType
from utils.exceptions import DecodeError, InvalidArgument


class Tag(IntEnum):
    POSE = 0x01
    JOIN = 0x10
    JOIN_ACK = 0x11
    LEAVE = 0x12
    ADVANCE = 0x20
    VOTE = 0x21
    BALLOT_CLOSE = 0x22
    RESET = 0x23
    STATE_SYNC = 0x24
    BALLOT_OPEN = 0x25
    BACKGROUND = 0x30


class JoinStatus(IntEnum):
    OK = 0
    FULL = 1
    DUPLICATE = 2


PLAYER_TYPE_CODES = {
    PlayerType.STANDARD: 0,
    PlayerType.SPECTATOR: 1,
    PlayerType.ADMINISTRATOR: 2,
}
PLAYER_TYPES = {code: kind for kind, code in PLAYER_TYPE_CODES.items()}

_USER = struct.Struct('<H')
_JOIN = struct.Struct('<HB')
_SNAPSHOT = struct.Struct('<IQ')


@dataclass(frozen=True)
class Pose:
    frame: EncodedFrame


@dataclass(frozen=True)
class Join:
    user: int
    player_type: PlayerType


@dataclass(frozen=True)
class JoinAck:
    user: int
    status: JoinStatus
    snapshot: SessionSnapshot = None


@dataclass(frozen=True)
class Leave:
    user: int


@dataclass(frozen=True)
class Command:
    """ADVANCE, VOTE, BALLOT_OPEN, BALLOT_CLOSE and RESET requests."""

    tag: Tag
    user: int
    argument: str = ''


@dataclass(frozen=True)
class StateSync:
    snapshot: SessionSnapshot


@dataclass(frozen=True)
class Background:
    size: int


COMMAND_TAGS = frozenset({Tag.ADVANCE, Tag.VOTE, Tag.BALLOT_OPEN, Tag.BALLOT_CLOSE, Tag.RESET})
_ARGUMENT_TAGS = frozenset({Tag.ADVANCE, Tag.VOTE})


def _string(text):
    raw = text.encode('utf-8')
    if len(raw) > 255:
        raise InvalidArgument(f"{text[:20]!r}... is too long for a control message")
    return bytes((len(raw),)) + raw


def _encode_snapshot(snapshot):
    parts = [_SNAPSHOT.pack(snapshot.epoch, snapshot.entered_at), _string(snapshot.state),
             bytes((len(snapshot.ballot),))]
    parts.extend(_string(option) for option in snapshot.ballot)
    return b''.join(parts)


class _Cursor:
    def __init__(self, data, offset=1):
        self.data = data
        self.offset = offset

    def unpack(self, layout):
        if self.offset + layout.size > len(self.data):
            raise DecodeError("truncated control message")
        values = layout.unpack_from(self.data, self.offset)
        self.offset += layout.size
        return values

    def byte(self):
        if self.offset >= len(self.data):
            raise DecodeError("truncated control message")
        value = self.data[self.offset]
        self.offset += 1
        return value

    def string(self):
        length = self.byte()
        end = self.offset + length
        if end > len(self.data):
            raise DecodeError("truncated string in control message")
        try:
            text = self.data[self.offset:end].decode('utf-8')
        except UnicodeDecodeError as exc:
            raise DecodeError("control message string is not utf-8") from exc
        self.offset = end
        return text

    def snapshot(self):
        epoch, entered_at = self.unpack(_SNAPSHOT)
        state = self.string()
        ballot = tuple(self.string() for _ in range(self.byte()))
        return SessionSnapshot(state, entered_at, epoch, ballot)

    def done(self):
        if self.offset != len(self.data):
            raise DecodeError(f"{len(self.data) - self.offset} trailing bytes in control message")


def encode_message(message):
    if isinstance(message, Pose):
        return bytes((Tag.POSE,)) + message.frame.data
    if isinstance(message, Join):
        return bytes((Tag.JOIN,)) + _JOIN.pack(message.user, PLAYER_TYPE_CODES[message.player_type])
    if isinstance(message, JoinAck):
        body = _JOIN.pack(message.user, message.status)
        if message.status is JoinStatus.OK:
            body += _encode_snapshot(message.snapshot)
        return bytes((Tag.JOIN_ACK,)) + body
    if isinstance(message, Leave):
        return bytes((Tag.LEAVE,)) + _USER.pack(message.user)
    if isinstance(message, Command):
        body = _USER.pack(message.user)
        if message.tag in _ARGUMENT_TAGS:
            body += _string(message.argument)
        return bytes((message.tag,)) + body
    if isinstance(message, StateSync):
        return bytes((Tag.STATE_SYNC,)) + _encode_snapshot(message.snapshot)
    if isinstance(message, Background):
        return bytes((Tag.BACKGROUND,)) + bytes(max(0, message.size - 1))
    raise InvalidArgument(f"cannot encode {type(message).__name__}")


def decode_message(data):
    if not data:
        raise DecodeError("empty message")
    try:
        tag = Tag(data[0])
    except ValueError:
        raise DecodeError(f"unknown message tag 0x{data[0]:02x}") from None
    if tag is Tag.POSE:
        return Pose(EncodedFrame.from_bytes(data[1:]))
    if tag is Tag.BACKGROUND:
        return Background(len(data))
    cursor = _Cursor(data)
    if tag is Tag.JOIN:
        user, code = cursor.unpack(_JOIN)
        if code not in PLAYER_TYPES:
            raise DecodeError(f"unknown player type code {code}")
        message = Join(user, PLAYER_TYPES[code])
    elif tag is Tag.JOIN_ACK:
        user, status = cursor.unpack(_JOIN)
        try:
            status = JoinStatus(status)
        except ValueError:
            raise DecodeError(f"unknown join status {status}") from None
        snapshot = cursor.snapshot() if status is JoinStatus.OK else None
        message = JoinAck(user, status, snapshot)
    elif tag is Tag.LEAVE:
        (user,) = cursor.unpack(_USER)
        message = Leave(user)
    elif tag is Tag.STATE_SYNC:
        message = StateSync(cursor.snapshot())
    else:
        (user,) = cursor.unpack(_USER)
        argument = cursor.string() if tag in _ARGUMENT_TAGS else ''
        message = Command(tag, user, argument)
    cursor.done()
    return message
