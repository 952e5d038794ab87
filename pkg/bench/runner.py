import logging
import math
from concurrent.futures import ProcessPoolExecutor
from functools import lru_cache

from bench.experiment import RunReport
from bench.latency import session_latency
from bench.worker import run_spec, setup_worker
from players.models import PlayerType
from relay.config import SessionConfig
from relay.session import RelaySession
from traces.synthesis import generate_synthetic
from utils.exceptions import MeasurementError

logger = logging.getLogger(__name__)

# synthetic traces longer than this are looped
TRACE_LOOP_S = 10.0


@lru_cache(maxsize=8)
def experiment_trace(kind, seed, duration_s, rate_hz):
    return generate_synthetic(kind, min(duration_s, TRACE_LOOP_S), rate_hz, seed)


def _per_kb(value):
    return value / 1000 if math.isfinite(value) else value


def run_single(spec, config):
    """Run one sweep point and summarize it."""
    link = config.link
    session_config = SessionConfig(
        send_interval_ms=spec.interval_ms,
        compression=spec.compression,
        client_count=spec.clients,
        max_clients=config.max_clients,
        uplink=link,
        downlink=link,
        background_bytes_per_s=config.background_bytes_per_s,
    )
    trace = experiment_trace(config.trace_kind, config.seed, config.duration_s, config.trace_rate_hz)
    roster = [(user, PlayerType(kind)) for user, kind in config.roster_for(spec.clients)]
    session = RelaySession(session_config, trace, roster=roster, seed=spec.seed)
    metrics = session.run(config.duration_s)
    try:
        latency = session_latency(session)
        mean, median, p95 = latency.mean_ms, latency.median_ms, latency.p95_ms
        matched, unmatched = latency.matched, latency.unmatched
    except MeasurementError as exc:
        logger.warning("run %s: %s", spec, exc)
        mean = median = p95 = math.nan
        matched = 0
        unmatched = sum(len(c.sent) for c in session.clients.values()) * (spec.clients - 1)

    packets = metrics.packets
    report = RunReport(
        clients=spec.clients,
        interval_ms=spec.interval_ms,
        compression=spec.compression,
        repetition=spec.repetition,
        seed=spec.seed,
        trace=config.trace_kind,
        duration_s=config.duration_s,
        cap_kbps=_per_kb(link.throughput_cap),
        latency_ms=link.latency_ms,
        jitter_ms=link.jitter_ms,
        queue_kb=_per_kb(link.queue_capacity),
        background_bps=config.background_bytes_per_s,
        latency_mean_ms=mean,
        latency_median_ms=median,
        latency_p95_ms=p95,
        frames_matched=matched,
        frames_unmatched=unmatched,
        up_bytes_per_s=metrics.up_bytes_per_s,
        down_bytes_per_s=metrics.down_bytes_per_s,
        serialized_bytes_per_s=metrics.serialized_bytes_per_s,
        packets_sent=packets.sent,
        packets_delivered=packets.delivered,
        packets_dropped=packets.dropped,
        drop_rate=metrics.drop_rate,
        frames_discarded=metrics.frames_discarded,
    )
    logger.info(
        "%d clients, %g ms, compression %s: latency %.1f ms, %.0f B/s, drop rate %.3f",
        spec.clients, spec.interval_ms, 'on' if spec.compression else 'off',
        mean, report.serialized_bytes_per_s, report.drop_rate,
    )
    return report


def run_experiment(config, workers=None):
    """Run every sweep point; reports come back in sweep order whatever the worker count."""
    workers = config.workers if workers is None else workers
    specs = config.runs()
    logger.info("running %d sweep points with %d worker(s), seed %d", len(specs), workers, config.seed)
    if workers <= 1 or len(specs) == 1:
        return [run_single(spec, config) for spec in specs]
    with ProcessPoolExecutor(max_workers=workers, initializer=setup_worker) as pool:
        return list(pool.map(run_spec, specs, [config] * len(specs)))
