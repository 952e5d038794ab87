"""CSV report of a sweep, one row per (clients, interval, compression, repetition).

Columns, in order:

    clients, interval_ms, compression (on|off), repetition, seed, trace,
    duration_s, cap_kbps, latency_ms, jitter_ms, queue_kb, background_bps,
    latency_mean_ms, latency_median_ms, latency_p95_ms,
    frames_matched, frames_unmatched,
    up_bytes_per_s, down_bytes_per_s, serialized_bytes_per_s,
    packets_sent, packets_delivered, packets_dropped, drop_rate,
    frames_discarded

Latencies use 3 decimals, byte rates 1, drop rate 6. Sweep parameters use
the shortest form that reads back exactly, without a trailing ``.0``. A
run without any matched frame leaves its latency cells empty; an uncapped
link shows ``inf``.
"""
import csv
import io
import logging
import math
from pathlib import Path

from bench.experiment import REPORT_COLUMNS
from utils.exceptions import ReportError

logger = logging.getLogger(__name__)

_DECIMALS = {
    'latency_mean_ms': 3,
    'latency_median_ms': 3,
    'latency_p95_ms': 3,
    'up_bytes_per_s': 1,
    'down_bytes_per_s': 1,
    'serialized_bytes_per_s': 1,
    'drop_rate': 6,
}


def _cell(column, value):
    if isinstance(value, bool):
        return 'on' if value else 'off'
    if isinstance(value, float):
        if math.isnan(value):
            return ''
        if math.isinf(value):
            return 'inf'
        if column in _DECIMALS:
            return f'{value:.{_DECIMALS[column]}f}'
        text = repr(value)
        return text[:-2] if text.endswith('.0') else text
    return str(value)


def format_row(report):
    return [_cell(column, value) for column, value in zip(REPORT_COLUMNS, report.astuple())]


def render_report(reports):
    reports = list(reports)
    if not reports:
        raise ReportError("no runs to report")
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(REPORT_COLUMNS)
    for report in sorted(reports, key=lambda r: r.key):
        writer.writerow(format_row(report))
    return buffer.getvalue()


def emit_report(reports, path):
    """Write the sweep CSV to ``path``; same reports give a byte-identical file."""
    text = render_report(reports)
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding='utf-8', newline='')
    except OSError as exc:
        raise ReportError(f"cannot write report to {path}: {exc}") from exc
    logger.info("report with %d rows written to %s", text.count('\n') - 1, path)
    return path
