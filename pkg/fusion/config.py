"""Fusion run configuration: named noise profiles and run files (TOML)."""
import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass
from pathlib import Path

from rest_framework.exceptions import ValidationError

from fusion.fuse import FusionPolicy
from fusion.sensors import SensorNoiseModel, run_bar, run_single, run_static
from fusion.serializers import FusionConfigSerializer, ProfileSerializer
from utils.exceptions import ConfigError

logger = logging.getLogger(__name__)

PROFILES_PATH = Path(__file__).resolve().parent / 'profiles.toml'


@dataclass(frozen=True)
class FusionProfile:
    name: str
    motion: str
    noise: SensorNoiseModel


@dataclass(frozen=True)
class FusionConfig:
    experiment: str
    motion: str
    noise: SensorNoiseModel
    policy: FusionPolicy
    samples: int = 17500
    relative_hz: float = 90.0
    absolute_hz: float = 12.0
    bar_length_m: float = 0.5
    seed: int = 42


def noise_from_units(data):
    """Noise model from mm/deg fields as they appear in config files."""
    return SensorNoiseModel(
        position_sigma_m=data.get('position_sigma_mm', 0.0) / 1000.0,
        rotation_sigma_deg=data.get('rotation_sigma_deg', 0.0),
        drift_m_per_s=data.get('drift_mm_per_s', 0.0) / 1000.0,
        drift_deg_per_s=data.get('drift_deg_per_s', 0.0),
        marker_loss=data.get('marker_loss', 0.0),
    )


def read_toml(path):
    path = Path(path)
    try:
        with path.open('rb') as handle:
            return tomllib.load(handle)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc


def load_profiles(path=PROFILES_PATH):
    profiles = {}
    for name, data in read_toml(path).items():
        serializer = ProfileSerializer(data=data)
        if not serializer.is_valid():
            raise ConfigError(f"invalid fusion profile {name!r}", errors=serializer.errors)
        attrs = serializer.validated_data
        profiles[name] = FusionProfile(name, attrs['motion'], noise_from_units(attrs))
    return profiles


def fusion_config_from_dict(data, profiles=None):
    serializer = FusionConfigSerializer(data=data)
    try:
        serializer.is_valid(raise_exception=True)
    except ValidationError as exc:
        raise ConfigError("invalid fusion config", errors=exc.detail) from exc
    attrs = serializer.validated_data

    profile = None
    if 'profile' in attrs:
        profiles = profiles if profiles is not None else load_profiles()
        try:
            profile = profiles[attrs['profile']]
        except KeyError:
            raise ConfigError(f"unknown fusion profile {attrs['profile']!r}",
                              errors={'profile': sorted(profiles)}) from None
    noise = noise_from_units(attrs['noise']) if 'noise' in attrs else profile.noise
    motion = attrs.get('motion') or (profile.motion if profile else 'static')
    if attrs['experiment'] == 'static':
        motion = 'static'
    return FusionConfig(
        experiment=attrs['experiment'],
        motion=motion,
        noise=noise,
        policy=FusionPolicy(attrs['policy'], attrs['blend_window_ms']),
        samples=attrs['samples'],
        relative_hz=attrs['relative_hz'],
        absolute_hz=attrs['absolute_hz'],
        bar_length_m=attrs['bar_length_m'],
        seed=attrs['seed'],
    )


def load_fusion_config(path, profiles=None):
    return fusion_config_from_dict(read_toml(path), profiles)


def run_fusion(config):
    """Run the configured experiment; returns a SensorRun, StaticResult or BarResult."""
    rates = {'relative_hz': config.relative_hz, 'absolute_hz': config.absolute_hz}
    logger.info("fusion %s run: %s motion, %d samples, seed %d", config.experiment, config.motion,
                config.samples, config.seed)
    if config.experiment == 'static':
        return run_static(config.noise, config.samples, config.seed, config.policy, **rates)
    if config.experiment == 'bar':
        return run_bar(config.motion, config.noise, config.samples, config.seed, config.policy,
                       config.bar_length_m, **rates)
    return run_single(config.motion, config.noise, config.samples, config.seed, config.policy, **rates)
