"""Pose latency: the delay between a pose being available on the client
that played it and the same pose (matched by seq) being available on a
remote client.
"""
import logging
from dataclasses import dataclass

import numpy as np

from skeleton.frames import US_PER_MS
from utils.exceptions import MeasurementError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LatencyStats:
    mean_ms: float
    median_ms: float
    p95_ms: float
    matched: int
    unmatched: int

    @classmethod
    def from_latencies(cls, latencies_us, unmatched):
        if not len(latencies_us):
            raise MeasurementError(f"no frames matched ({unmatched} unmatched)")
        ms = np.asarray(latencies_us, dtype=float) / US_PER_MS
        return cls(
            mean_ms=float(ms.mean()),
            median_ms=float(np.median(ms)),
            p95_ms=float(np.percentile(ms, 95)),
            matched=len(ms),
            unmatched=unmatched,
        )


def match_timelines(local, remote):
    """Latencies (us) of every local seq that shows up remotely, plus the unmatched count."""
    seqs = sorted(local)
    latencies = [remote[seq] - local[seq] for seq in seqs if seq in remote]
    return latencies, len(seqs) - len(latencies)


def measure_pose_latency(local, remote):
    """Latency statistics from two ``seq -> time (us)`` timelines.

    Frames missing remotely (dropped or superseded) are left out of the
    statistics and counted as unmatched.
    """
    latencies, unmatched = match_timelines(local, remote)
    if not latencies:
        logger.warning("latency measurement matched none of %d frames", unmatched)
    return LatencyStats.from_latencies(latencies, unmatched)


def session_latency(session):
    """Pooled pose latency over every (sender, receiver) pair of a finished session."""
    latencies = []
    unmatched = 0
    senders = {user: client for user, client in session.clients.items() if client.sent}
    for receiver, client in session.clients.items():
        arrivals = {}
        for reception in client.received:
            arrivals.setdefault(reception.sender, {})[reception.seq] = reception.received_at
        for sender, source in senders.items():
            if sender == receiver:
                continue
            pair, missing = match_timelines(source.sent, arrivals.get(sender, {}))
            latencies.extend(pair)
            unmatched += missing
    if not latencies:
        logger.warning("session produced no matched frames (%d unmatched)", unmatched)
    return LatencyStats.from_latencies(latencies, unmatched)
