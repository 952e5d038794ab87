import logging
from dataclasses import dataclass
from enum import Enum

from players.models import PlayerType
from utils.exceptions import ConnectionRejected

logger = logging.getLogger(__name__)


class ConnectionState(str, Enum):
    CONNECTED = 'connected'
    DISCONNECTED = 'disconnected'


@dataclass
class PlayerRecord:
    user: int
    player_type: PlayerType
    state: ConnectionState
    connected_at: int
    joined_state: str = None
    last_seq: int = None
    connections: int = 1


class PlayerRegistry:
    """Who is in the session. A user id keeps its player type across reconnects."""

    def __init__(self, max_clients):
        self.max_clients = max_clients
        self.records = {}

    def connected(self):
        return tuple(sorted(u for u, r in self.records.items() if r.state is ConnectionState.CONNECTED))

    def is_connected(self, user):
        record = self.records.get(user)
        return record is not None and record.state is ConnectionState.CONNECTED

    def player_type(self, user):
        """Type of a connected user, None otherwise."""
        return self.records[user].player_type if self.is_connected(user) else None

    def connect(self, user, player_type, now, joined_state=None):
        """Register ``user``. Returns (record, reconnected)."""
        record = self.records.get(user)
        if record is not None and record.state is ConnectionState.CONNECTED:
            raise ConnectionRejected(f"user {user} is already connected")
        if len(self.connected()) >= self.max_clients:
            raise ConnectionRejected(f"session is full ({self.max_clients} players)")
        if record is None:
            record = PlayerRecord(user, PlayerType(player_type), ConnectionState.CONNECTED, now, joined_state)
            self.records[user] = record
            logger.info("user %s connected as %s", user, record.player_type)
            return record, False
        record.state = ConnectionState.CONNECTED
        record.connected_at = now
        record.joined_state = joined_state
        record.last_seq = None
        record.connections += 1
        logger.info("user %s reconnected as %s", user, record.player_type)
        return record, True

    def disconnect(self, user):
        record = self.records.get(user)
        if record is None or record.state is ConnectionState.DISCONNECTED:
            return False
        record.state = ConnectionState.DISCONNECTED
        logger.info("user %s disconnected", user)
        return True
