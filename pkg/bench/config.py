"""Experiment configuration from TOML files, command flags and API posts."""
import logging
import math

from rest_framework.exceptions import ValidationError

from bench.experiment import ExperimentConfig
from bench.serializers import ExperimentConfigSerializer
from netsim.link import LinkConfig
from players.models import roster_for
from utils.exceptions import ConfigError

logger = logging.getLogger(__name__)


def harness_defaults(posedeck):
    """Serializer input defaults from the ``POSEDECK`` settings dict."""
    return {
        'trace': posedeck['TRACE_KIND'],
        'trace_rate_hz': posedeck['TRACE_RATE_HZ'],
        'seed': posedeck['SEED'],
        'duration_s': posedeck['DURATION_S'],
        'cap_kbps': posedeck['LINK_CAP_KBPS'],
        'latency_ms': posedeck['LINK_LATENCY_MS'],
        'jitter_ms': posedeck['LINK_JITTER_MS'],
        'queue_kb': posedeck['LINK_QUEUE_KB'],
        'max_clients': posedeck['MAX_CLIENTS'],
    }


def link_from_units(cap_kbps, latency_ms, jitter_ms, queue_kb):
    return LinkConfig(
        latency_ms=latency_ms,
        jitter_ms=jitter_ms,
        throughput_cap=math.inf if cap_kbps is None or math.isinf(cap_kbps) else cap_kbps * 1000,
        queue_capacity=int(round(queue_kb * 1000)),
    )


def resolve_roster(name, count):
    """(user, player type) pairs of a named server-side roster, at most ``count`` of them."""
    slots = roster_for(name, count)
    if not slots:
        raise ConfigError(f"roster {name!r} has no players", errors={'roster': name})
    logger.info("roster %s: %d players", name, len(slots))
    return tuple((user, kind.value) for user, kind in slots)


def experiment_config_from_dict(data, defaults=None):
    data = {**(defaults or {}), **data}
    cap = data.get('cap_kbps')
    if isinstance(cap, float) and math.isinf(cap):
        data['cap_kbps'] = None
    serializer = ExperimentConfigSerializer(data=data)
    try:
        serializer.is_valid(raise_exception=True)
    except ValidationError as exc:
        raise ConfigError("invalid experiment config", errors=exc.detail) from exc
    attrs = serializer.validated_data
    clients = tuple(sorted(attrs['clients']))
    roster = resolve_roster(attrs['roster'], max(clients)) if attrs.get('roster') else ()
    return ExperimentConfig(
        clients=clients,
        intervals_ms=attrs['interval_ms'],
        compression=attrs['compression'],
        trace_kind=attrs['trace'],
        trace_rate_hz=attrs['trace_rate_hz'],
        seed=attrs['seed'],
        duration_s=attrs['duration_s'],
        link=link_from_units(attrs['cap_kbps'], attrs['latency_ms'], attrs['jitter_ms'], attrs['queue_kb']),
        repetitions=attrs['repetitions'],
        background_bytes_per_s=attrs['background_bps'],
        max_clients=attrs['max_clients'],
        roster=roster,
        workers=attrs['workers'],
    )


def config_echo(config):
    """JSON-ready record of an experiment config, as stored with a saved run."""
    link = config.link
    return {
        'clients': list(config.clients),
        'interval_ms': list(config.intervals_ms),
        'compression': ['on' if value else 'off' for value in config.compression],
        'trace': config.trace_kind,
        'trace_rate_hz': config.trace_rate_hz,
        'seed': config.seed,
        'duration_s': config.duration_s,
        'cap_kbps': None if math.isinf(link.throughput_cap) else link.throughput_cap / 1000,
        'latency_ms': link.latency_ms,
        'jitter_ms': link.jitter_ms,
        'queue_kb': link.queue_capacity / 1000,
        'repetitions': config.repetitions,
        'background_bps': config.background_bytes_per_s,
        'max_clients': config.max_clients,
        'players': [list(slot) for slot in config.roster],
        'workers': config.workers,
    }
