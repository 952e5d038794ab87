# Generated by Django 5.1.1 on 2026-10-19 11:40

import django.db.models.deletion
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='ExperimentRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('seed', models.BigIntegerField()),
                ('trace_kind', models.CharField(max_length=16)),
                ('duration_s', models.FloatField()),
                ('config', models.JSONField(default=dict)),
                ('report_path', models.CharField(blank=True, max_length=512)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'ordering': ('-created_at', '-id'),
            },
        ),
        migrations.CreateModel(
            name='RunResult',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('clients', models.PositiveSmallIntegerField()),
                ('interval_ms', models.FloatField()),
                ('compression', models.BooleanField()),
                ('repetition', models.PositiveIntegerField(default=0)),
                ('seed', models.BigIntegerField()),
                ('trace', models.CharField(max_length=16)),
                ('duration_s', models.FloatField()),
                ('cap_kbps', models.FloatField(blank=True, null=True)),
                ('latency_ms', models.FloatField()),
                ('jitter_ms', models.FloatField()),
                ('queue_kb', models.FloatField()),
                ('background_bps', models.FloatField(default=0.0)),
                ('latency_mean_ms', models.FloatField(blank=True, null=True)),
                ('latency_median_ms', models.FloatField(blank=True, null=True)),
                ('latency_p95_ms', models.FloatField(blank=True, null=True)),
                ('frames_matched', models.PositiveIntegerField()),
                ('frames_unmatched', models.PositiveIntegerField()),
                ('up_bytes_per_s', models.FloatField()),
                ('down_bytes_per_s', models.FloatField()),
                ('serialized_bytes_per_s', models.FloatField()),
                ('packets_sent', models.PositiveIntegerField()),
                ('packets_delivered', models.PositiveIntegerField()),
                ('packets_dropped', models.PositiveIntegerField()),
                ('drop_rate', models.FloatField()),
                ('frames_discarded', models.PositiveIntegerField()),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='results', to='bench.experimentrun')),
            ],
            options={
                'ordering': ('run', 'clients', 'interval_ms', 'compression', 'repetition'),
                'unique_together': {('run', 'clients', 'interval_ms', 'compression', 'repetition')},
            },
        ),
    ]
