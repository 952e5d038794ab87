from dataclasses import dataclass

from codec.rotation import component_bits, rotation_field_bytes
from skeleton.frames import DeltaThresholds
from utils.exceptions import InvalidArgument


@dataclass(frozen=True)
class CodecConfig:
    rotation_threshold_deg: float = 0.1
    position_threshold_m: float = 0.001
    rotation_resolution_deg: float = 0.1
    position_resolution_m: float = 0.0005
    compression_enabled: bool = True

    def __post_init__(self):
        values = (
            self.rotation_threshold_deg,
            self.position_threshold_m,
            self.rotation_resolution_deg,
            self.position_resolution_m,
        )
        if not all(v > 0 for v in values):
            raise InvalidArgument("codec thresholds and resolutions must be strictly positive")
        if self.rotation_resolution_deg > self.rotation_threshold_deg:
            raise InvalidArgument("rotation resolution must not exceed the rotation threshold")
        if self.position_resolution_m > self.position_threshold_m:
            raise InvalidArgument("position resolution must not exceed the position threshold")

    @property
    def thresholds(self):
        return DeltaThresholds(self.rotation_threshold_deg, self.position_threshold_m)

    @property
    def rotation_bits(self):
        return component_bits(self.rotation_resolution_deg)

    @property
    def rotation_bytes(self):
        return rotation_field_bytes(self.rotation_bits)
