from dataclasses import dataclass, field, replace

from codec.config import CodecConfig
from netsim.link import LinkConfig
from skeleton.frames import ms_to_us
from skeleton.layout import DEFAULT_LAYOUT
from utils.exceptions import InvalidArgument


@dataclass(frozen=True)
class SessionConfig:
    send_interval_ms: float = 100.0
    compression: bool = True
    client_count: int = 2
    max_clients: int = 10
    codec: CodecConfig = field(default_factory=CodecConfig)
    uplink: LinkConfig = field(default_factory=LinkConfig)
    downlink: LinkConfig = field(default_factory=LinkConfig)
    background_bytes_per_s: float = 0.0
    layout: object = DEFAULT_LAYOUT

    def __post_init__(self):
        if not self.send_interval_ms > 0:
            raise InvalidArgument("send interval must be positive")
        if not 2 <= self.client_count <= self.max_clients:
            raise InvalidArgument(f"client count must be within 2..{self.max_clients}, got {self.client_count}")
        if self.background_bytes_per_s < 0:
            raise InvalidArgument("background rate must be non-negative")
        if self.codec.compression_enabled != self.compression:
            object.__setattr__(self, 'codec', replace(self.codec, compression_enabled=self.compression))

    @property
    def send_interval_us(self):
        return ms_to_us(self.send_interval_ms)

    @property
    def background_packet_bytes(self):
        """Background bytes sent per interval, or 0 when the stream is off."""
        if not self.background_bytes_per_s:
            return 0
        return max(1, round(self.background_bytes_per_s * self.send_interval_ms / 1000))
