import math

from django.db import models, transaction

from bench.experiment import RunReport


def _stored(value):
    return None if math.isnan(value) or math.isinf(value) else value


class ExperimentRun(models.Model):
    seed = models.BigIntegerField()
    trace_kind = models.CharField(max_length=16)
    duration_s = models.FloatField()
    config = models.JSONField(default=dict)
    report_path = models.CharField(max_length=512, blank=True)
    created_at = models.DateTimeField(auto_now_add=True)

    def __str__(self):
        return f"run {self.pk}: {self.trace_kind}, seed {self.seed}"

    def reports(self):
        return [result.as_report() for result in self.results.all()]

    class Meta:
        ordering = ('-created_at', '-id')


class RunResult(models.Model):
    """One report row. Uncapped links store a null cap; unmatched runs store null latencies."""

    run = models.ForeignKey(ExperimentRun, on_delete=models.CASCADE, related_name='results')
    clients = models.PositiveSmallIntegerField()
    interval_ms = models.FloatField()
    compression = models.BooleanField()
    repetition = models.PositiveIntegerField(default=0)
    seed = models.BigIntegerField()
    trace = models.CharField(max_length=16)
    duration_s = models.FloatField()
    cap_kbps = models.FloatField(null=True, blank=True)
    latency_ms = models.FloatField()
    jitter_ms = models.FloatField()
    queue_kb = models.FloatField()
    background_bps = models.FloatField(default=0.0)
    latency_mean_ms = models.FloatField(null=True, blank=True)
    latency_median_ms = models.FloatField(null=True, blank=True)
    latency_p95_ms = models.FloatField(null=True, blank=True)
    frames_matched = models.PositiveIntegerField()
    frames_unmatched = models.PositiveIntegerField()
    up_bytes_per_s = models.FloatField()
    down_bytes_per_s = models.FloatField()
    serialized_bytes_per_s = models.FloatField()
    packets_sent = models.PositiveIntegerField()
    packets_delivered = models.PositiveIntegerField()
    packets_dropped = models.PositiveIntegerField()
    drop_rate = models.FloatField()
    frames_discarded = models.PositiveIntegerField()

    @classmethod
    def from_report(cls, run, report):
        values = {
            name: _stored(value) if isinstance(value, float) else value
            for name, value in vars(report).items()
        }
        return cls(run=run, **values)

    def as_report(self):
        nan = math.nan
        return RunReport(
            clients=self.clients,
            interval_ms=self.interval_ms,
            compression=self.compression,
            repetition=self.repetition,
            seed=self.seed,
            trace=self.trace,
            duration_s=self.duration_s,
            cap_kbps=math.inf if self.cap_kbps is None else self.cap_kbps,
            latency_ms=self.latency_ms,
            jitter_ms=self.jitter_ms,
            queue_kb=self.queue_kb,
            background_bps=self.background_bps,
            latency_mean_ms=nan if self.latency_mean_ms is None else self.latency_mean_ms,
            latency_median_ms=nan if self.latency_median_ms is None else self.latency_median_ms,
            latency_p95_ms=nan if self.latency_p95_ms is None else self.latency_p95_ms,
            frames_matched=self.frames_matched,
            frames_unmatched=self.frames_unmatched,
            up_bytes_per_s=self.up_bytes_per_s,
            down_bytes_per_s=self.down_bytes_per_s,
            serialized_bytes_per_s=self.serialized_bytes_per_s,
            packets_sent=self.packets_sent,
            packets_delivered=self.packets_delivered,
            packets_dropped=self.packets_dropped,
            drop_rate=self.drop_rate,
            frames_discarded=self.frames_discarded,
        )

    def __str__(self):
        return (f"{self.clients} clients, {self.interval_ms:g} ms, "
                f"compression {'on' if self.compression else 'off'} (run {self.run_id})")

    class Meta:
        ordering = ('run', 'clients', 'interval_ms', 'compression', 'repetition')
        unique_together = ('run', 'clients', 'interval_ms', 'compression', 'repetition')


@transaction.atomic
def save_run(config, reports, echo, report_path=''):
    """Store a finished sweep and its report rows."""
    run = ExperimentRun.objects.create(
        seed=config.seed,
        trace_kind=config.trace_kind,
        duration_s=config.duration_s,
        config=echo,
        report_path=str(report_path or ''),
    )
    RunResult.objects.bulk_create([RunResult.from_report(run, report) for report in reports])
    return run
