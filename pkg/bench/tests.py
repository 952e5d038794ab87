import math
import tempfile
from io import StringIO
from pathlib import Path

from django.contrib.auth import get_user_model
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase
from django.urls import reverse
from rest_framework import status
from rest_framework.test import APITestCase

from bench.config import config_echo, experiment_config_from_dict
from bench.experiment import REPORT_COLUMNS, ExperimentConfig, RunReport
from bench.latency import measure_pose_latency
from bench.models import ExperimentRun, RunResult, save_run
from bench.report import emit_report, render_report
from bench.runner import run_experiment, run_single
from bench.serializers import ExperimentConfigSerializer
from netsim.link import LinkConfig
from players.models import PlayerSlot, PlayerType
from utils.exceptions import ConfigError, MeasurementError, ReportError

IDEAL = LinkConfig(latency_ms=0, jitter_ms=0, throughput_cap=math.inf)


def sample_report(**overrides):
    values = dict(
        clients=2, interval_ms=100.0, compression=True, repetition=0, seed=7, trace='dance',
        duration_s=1.0, cap_kbps=275.0, latency_ms=20.0, jitter_ms=5.0, queue_kb=64.0,
        background_bps=0.0, latency_mean_ms=48.25, latency_median_ms=47.5, latency_p95_ms=60.125,
        frames_matched=18, frames_unmatched=2, up_bytes_per_s=2500.0, down_bytes_per_s=2480.5,
        serialized_bytes_per_s=4980.5, packets_sent=40, packets_delivered=40, packets_dropped=0,
        drop_rate=0.0, frames_discarded=0,
    )
    values.update(overrides)
    return RunReport(**values)


def sweep(**overrides):
    """Run a sweep on the default 275 KB/s links and index the reports by key."""
    config = ExperimentConfig(**overrides)
    return {(r.clients, r.interval_ms, r.compression): r for r in run_experiment(config)}


class MeasurePoseLatencyTests(SimpleTestCase):
    def test_constant_delay(self):
        local = {seq: seq * 10_000 for seq in range(100)}
        remote = {seq: t + 50_000 for seq, t in local.items()}
        stats = measure_pose_latency(local, remote)
        self.assertAlmostEqual(stats.mean_ms, 50.0)
        self.assertAlmostEqual(stats.median_ms, 50.0)
        self.assertAlmostEqual(stats.p95_ms, 50.0)
        self.assertEqual((stats.matched, stats.unmatched), (100, 0))

    def test_missing_frames_are_excluded(self):
        local = {seq: seq * 10_000 for seq in range(100)}
        remote = {seq: t + 20_000 + seq * 100 for seq, t in local.items() if seq % 10}
        stats = measure_pose_latency(local, remote)
        self.assertEqual((stats.matched, stats.unmatched), (90, 10))
        expected = sum(20 + seq / 10 for seq in range(100) if seq % 10) / 90
        self.assertAlmostEqual(stats.mean_ms, expected)

    def test_remote_only_frames_are_ignored(self):
        stats = measure_pose_latency({1: 0}, {1: 5_000, 2: 6_000})
        self.assertEqual((stats.matched, stats.unmatched), (1, 0))

    def test_no_matches(self):
        with self.assertRaises(MeasurementError):
            measure_pose_latency({1: 0, 2: 10_000}, {})


class ExperimentConfigTests(SimpleTestCase):
    def test_sweep_order_and_size(self):
        config = ExperimentConfig(clients=(2, 3), intervals_ms=(10.0, 100.0), compression=(True, False),
                                  repetitions=2)
        runs = config.runs()
        self.assertEqual(len(runs), 16)
        self.assertEqual((runs[0].clients, runs[0].interval_ms, runs[0].compression, runs[0].repetition),
                         (2, 10.0, True, 0))
        self.assertEqual(runs[1].repetition, 1)
        self.assertEqual(runs[-1].clients, 3)

    def test_run_seeds_depend_on_key_only(self):
        a = ExperimentConfig(clients=(2, 3))
        b = ExperimentConfig(clients=(3,))
        seeds = {(r.clients, r.interval_ms, r.compression): r.seed for r in a.runs()}
        for run in b.runs():
            self.assertEqual(seeds[(run.clients, run.interval_ms, run.compression)], run.seed)
        self.assertEqual(len({r.seed for r in a.runs()}), len(a.runs()))
        self.assertNotEqual(ExperimentConfig(seed=1).runs()[0].seed, ExperimentConfig(seed=2).runs()[0].seed)

    def test_validation(self):
        with self.assertRaises(ConfigError):
            ExperimentConfig(clients=(1, 2))
        with self.assertRaises(ConfigError):
            ExperimentConfig(clients=(11,))
        with self.assertRaises(ConfigError):
            ExperimentConfig(intervals_ms=())
        with self.assertRaises(ConfigError):
            ExperimentConfig(duration_s=0)
        with self.assertRaises(ConfigError):
            ExperimentConfig(roster=((1, 'referee'),))

    def test_roster_is_padded_with_standard_players(self):
        config = ExperimentConfig(roster=((3, 'administrator'), (1, 'spectator')))
        self.assertEqual(config.roster_for(4),
                         [(3, 'administrator'), (1, 'spectator'), (2, 'standard'), (4, 'standard')])
        self.assertEqual(config.roster_for(1), [(3, 'administrator')])


class ExperimentConfigSerializerTests(SimpleTestCase):
    def parse(self, **data):
        serializer = ExperimentConfigSerializer(data=data)
        self.assertTrue(serializer.is_valid(), serializer.errors)
        return serializer.validated_data

    def test_defaults(self):
        attrs = self.parse()
        self.assertEqual(attrs['clients'], tuple(range(2, 11)))
        self.assertEqual(attrs['interval_ms'], (10.0, 100.0))
        self.assertEqual(attrs['compression'], (True, False))
        self.assertEqual(attrs['cap_kbps'], 275.0)

    def test_flag_syntax(self):
        attrs = self.parse(clients='2..4,8', interval_ms='10,100', compression='on,off')
        self.assertEqual(attrs['clients'], (2, 3, 4, 8))
        self.assertEqual(attrs['interval_ms'], (10.0, 100.0))
        self.assertEqual(attrs['compression'], (True, False))

    def test_list_syntax(self):
        attrs = self.parse(clients=[3, 5], interval_ms=[50], compression=[False])
        self.assertEqual(attrs['clients'], (3, 5))
        self.assertEqual(attrs['compression'], (False,))

    def test_single_values(self):
        attrs = self.parse(clients=4, interval_ms=10, compression=True, cap_kbps=None)
        self.assertEqual(attrs['clients'], (4,))
        self.assertEqual(attrs['compression'], (True,))
        self.assertIsNone(attrs['cap_kbps'])

    def test_rejects_bad_values(self):
        for data in ({'clients': '5..2'}, {'clients': 'many'}, {'clients': '2..12'}, {'clients': '1'},
                     {'interval_ms': '0'}, {'compression': 'maybe'}, {'trace': 'ballet'},
                     {'clients': ''}, {'queue_kb': 0}):
            serializer = ExperimentConfigSerializer(data=data)
            self.assertFalse(serializer.is_valid(), data)


class ExperimentConfigFromDictTests(TestCase):
    def test_units(self):
        config = experiment_config_from_dict({'cap_kbps': 100, 'queue_kb': 32, 'latency_ms': 10})
        self.assertEqual(config.link.throughput_cap, 100_000)
        self.assertEqual(config.link.queue_capacity, 32_000)
        self.assertEqual(config.link.latency_ms, 10)

    def test_uncapped(self):
        self.assertTrue(math.isinf(experiment_config_from_dict({'cap_kbps': math.inf}).link.throughput_cap))
        self.assertTrue(math.isinf(experiment_config_from_dict({'cap_kbps': None}).link.throughput_cap))

    def test_values_override_defaults(self):
        config = experiment_config_from_dict({'seed': 9}, defaults={'seed': 1, 'duration_s': 3})
        self.assertEqual(config.seed, 9)
        self.assertEqual(config.duration_s, 3)

    def test_invalid_config_carries_field_errors(self):
        with self.assertRaises(ConfigError) as caught:
            experiment_config_from_dict({'clients': 'x'})
        self.assertIn('clients', caught.exception.errors)

    def test_named_roster(self):
        PlayerSlot.objects.create(roster='stage', user_id=5, player_type=PlayerType.ADMINISTRATOR)
        PlayerSlot.objects.create(roster='stage', user_id=6, player_type=PlayerType.SPECTATOR)
        config = experiment_config_from_dict({'clients': '2..3', 'roster': 'stage'})
        self.assertEqual(config.roster, ((5, 'administrator'), (6, 'spectator')))
        self.assertEqual(config.roster_for(3), [(5, 'administrator'), (6, 'spectator'), (1, 'standard')])

    def test_unknown_roster(self):
        with self.assertRaises(ConfigError):
            experiment_config_from_dict({'roster': 'nobody'})

    def test_echo(self):
        echo = config_echo(experiment_config_from_dict({'clients': '2..3', 'compression': 'off', 'cap_kbps': None}))
        self.assertEqual(echo['clients'], [2, 3])
        self.assertEqual(echo['compression'], ['off'])
        self.assertIsNone(echo['cap_kbps'])
        self.assertEqual(echo['queue_kb'], 64.0)


class RunSingleTests(SimpleTestCase):
    def test_ideal_links_deliver_within_one_interval(self):
        config = ExperimentConfig(clients=(2,), intervals_ms=(10.0,), compression=(True,),
                                  duration_s=1.0, link=IDEAL)
        report = run_single(config.runs()[0], config)
        self.assertLessEqual(report.latency_mean_ms, 10.0)
        self.assertEqual(report.packets_dropped, 0)
        self.assertEqual(report.frames_unmatched, 0)
        self.assertEqual(report.frames_matched, 2 * 100)
        self.assertTrue(math.isinf(report.cap_kbps))

    def test_report_echoes_the_run(self):
        config = ExperimentConfig(clients=(3,), intervals_ms=(100.0,), compression=(False,), duration_s=1.0,
                                  background_bytes_per_s=1000)
        spec = config.runs()[0]
        report = run_single(spec, config)
        self.assertEqual(report.key, (3, 100.0, False, 0))
        self.assertEqual(report.seed, spec.seed)
        self.assertEqual((report.cap_kbps, report.queue_kb), (275.0, 64.0))
        self.assertEqual(report.background_bps, 1000)
        self.assertAlmostEqual(report.serialized_bytes_per_s, report.up_bytes_per_s + report.down_bytes_per_s)

    def test_compression_lowers_serialized_data(self):
        for trace in ('dance', 'walk'):
            config = ExperimentConfig(clients=(3,), intervals_ms=(10.0, 100.0), compression=(True, False),
                                      trace_kind=trace, duration_s=1.0, link=IDEAL)
            reports = {(r.interval_ms, r.compression): r for r in run_experiment(config)}
            for interval in (10.0, 100.0):
                self.assertGreater(reports[(interval, False)].serialized_bytes_per_s,
                                   reports[(interval, True)].serialized_bytes_per_s)

    def test_spectators_shrink_the_matched_set(self):
        config = ExperimentConfig(clients=(3,), intervals_ms=(100.0,), compression=(True,), duration_s=1.0,
                                  link=IDEAL, roster=((1, 'spectator'),))
        report = run_single(config.runs()[0], config)
        # two senders, each heard by two receivers
        self.assertEqual(report.frames_matched, 2 * 2 * 10)


class SaturationTests(SimpleTestCase):
    def test_uncompressed_sessions_saturate_beyond_five_clients(self):
        reports = sweep(clients=(2, 5, 7, 10), intervals_ms=(10.0,), compression=(False,))
        for clients in (2, 5):
            self.assertLess(reports[(clients, 10.0, False)].latency_mean_ms, 100.0)
            self.assertEqual(reports[(clients, 10.0, False)].packets_dropped, 0)
        for clients in (7, 10):
            report = reports[(clients, 10.0, False)]
            self.assertTrue(report.latency_mean_ms > 500.0 or report.drop_rate > 0.2,
                            f"{clients} clients: {report.latency_mean_ms:.1f} ms, drop rate {report.drop_rate:.3f}")

    def test_compressed_sessions_stay_fast(self):
        reports = sweep(clients=(3, 10), intervals_ms=(10.0,), compression=(True,), duration_s=5.0)
        three = reports[(3, 10.0, True)].latency_mean_ms
        ten = reports[(10, 10.0, True)].latency_mean_ms
        self.assertLess(ten, 150.0)
        self.assertLess(ten, 2 * three)

    def test_slow_interval_is_flat_and_linear(self):
        reports = sweep(intervals_ms=(100.0,), compression=(True,))
        latencies = [reports[(n, 100.0, True)].latency_mean_ms for n in range(2, 11)]
        self.assertLess(max(latencies) / min(latencies), 1.2)
        per_client = [reports[(n, 100.0, True)].serialized_bytes_per_s / n for n in range(2, 11)]
        mean = sum(per_client) / len(per_client)
        for value in per_client:
            self.assertLess(abs(value - mean) / mean, 0.1)


class ReportTests(SimpleTestCase):
    def test_header_and_rows(self):
        text = render_report([sample_report(clients=3), sample_report()])
        lines = text.splitlines()
        self.assertEqual(lines[0], ','.join(REPORT_COLUMNS))
        self.assertEqual(len(lines), 3)
        self.assertTrue(lines[1].startswith('2,100,on,0,7,dance,1,275,20,5,64,0,48.250,47.500,60.125,18,2,'))
        self.assertTrue(lines[2].startswith('3,'))

    def test_sweep_parameters_read_back_exactly(self):
        interval = 1000 / 60
        row = render_report([sample_report(interval_ms=interval, jitter_ms=0.1 + 0.2)]).splitlines()[1]
        cells = row.split(',')
        self.assertEqual(float(cells[REPORT_COLUMNS.index('interval_ms')]), interval)
        self.assertEqual(float(cells[REPORT_COLUMNS.index('jitter_ms')]), 0.1 + 0.2)
        self.assertEqual(cells[REPORT_COLUMNS.index('clients')], '2')

    def test_missing_latency_and_uncapped_link(self):
        row = render_report([sample_report(cap_kbps=math.inf, latency_mean_ms=math.nan,
                                           latency_median_ms=math.nan, latency_p95_ms=math.nan)]).splitlines()[1]
        cells = row.split(',')
        self.assertEqual(cells[REPORT_COLUMNS.index('cap_kbps')], 'inf')
        self.assertEqual(cells[REPORT_COLUMNS.index('latency_mean_ms')], '')

    def test_empty(self):
        with self.assertRaises(ReportError):
            render_report([])

    def test_emit_creates_directories(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = emit_report([sample_report()], Path(tmp) / 'nested' / 'report.csv')
            self.assertEqual(path.read_text(), render_report([sample_report()]))

    def test_unwritable_path(self):
        with tempfile.TemporaryDirectory() as tmp:
            blocker = Path(tmp) / 'file'
            blocker.write_text('x')
            with self.assertRaises(ReportError):
                emit_report([sample_report()], blocker / 'report.csv')


class DeterminismTests(SimpleTestCase):
    ARGS = ('--clients', '2..3', '--interval-ms', '100', '--compression', 'on,off', '--duration-s', '1')

    def test_rerun_is_byte_identical(self):
        with tempfile.TemporaryDirectory() as tmp:
            first, second = Path(tmp) / 'a.csv', Path(tmp) / 'b.csv'
            call_command('bench', *self.ARGS, '--out', str(first), stdout=StringIO())
            call_command('bench', *self.ARGS, '--out', str(second), stdout=StringIO())
            self.assertEqual(first.read_bytes(), second.read_bytes())
            self.assertEqual(len(first.read_text().splitlines()), 5)

    def test_worker_processes_give_the_same_report(self):
        config = ExperimentConfig(clients=(2, 3), intervals_ms=(100.0,), compression=(True, False), duration_s=1.0)
        sequential = render_report(run_experiment(config, workers=1))
        parallel = render_report(run_experiment(config, workers=2))
        self.assertEqual(sequential, parallel)


class BenchCommandTests(TestCase):
    def test_config_file_and_save(self):
        with tempfile.TemporaryDirectory() as tmp:
            config = Path(tmp) / 'experiment.toml'
            config.write_text('clients = "2"\ninterval_ms = [100]\ncompression = "on"\nduration_s = 1\n'
                              'trace = "idle"\n')
            out = StringIO()
            call_command('bench', '--config', str(config), '--seed', '3', '--out', str(Path(tmp) / 'r.csv'),
                         '--save', stdout=out)
            self.assertIn('1 runs written', out.getvalue())
        run = ExperimentRun.objects.get()
        self.assertEqual((run.seed, run.trace_kind), (3, 'idle'))
        self.assertEqual(run.results.count(), 1)
        self.assertTrue(run.report_path.endswith('r.csv'))

    def test_bad_flags(self):
        with self.assertRaises(CommandError):
            call_command('bench', '--clients', '1', '--duration-s', '1', stdout=StringIO())
        with self.assertRaises(CommandError):
            call_command('bench', '--config', '/nonexistent/experiment.toml', stdout=StringIO())


class RunStorageTests(TestCase):
    def test_reports_survive_storage(self):
        config = ExperimentConfig(clients=(2, 3), intervals_ms=(100.0,), compression=(True,))
        reports = [sample_report(), sample_report(clients=3, cap_kbps=math.inf, latency_mean_ms=math.nan,
                                                  latency_median_ms=math.nan, latency_p95_ms=math.nan)]
        run = save_run(config, reports, config_echo(config))
        self.assertEqual(RunResult.objects.filter(run=run).count(), 2)
        stored = RunResult.objects.get(run=run, clients=3)
        self.assertIsNone(stored.cap_kbps)
        self.assertIsNone(stored.latency_mean_ms)
        self.assertEqual(ExperimentRun.objects.get(pk=run.pk).reports()[0], reports[0])
        self.assertEqual(render_report(run.reports()), render_report(reports))


class BenchApiTests(APITestCase):
    def setUp(self):
        users = get_user_model()
        self.staff = users.objects.create_user('operator', password='pw', is_staff=True)
        self.viewer = users.objects.create_user('viewer', password='pw')
        config = ExperimentConfig(clients=(2, 3), intervals_ms=(100.0,), compression=(True, False))
        self.run = save_run(config, [sample_report(), sample_report(clients=3),
                                     sample_report(compression=False)], config_echo(config))

    def test_requires_login(self):
        response = self.client.get(reverse('run-list'))
        self.assertIn(response.status_code, (status.HTTP_401_UNAUTHORIZED, status.HTTP_403_FORBIDDEN))

    def test_list_and_retrieve(self):
        self.client.force_authenticate(self.viewer)
        response = self.client.get(reverse('run-list'))
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        response = self.client.get(reverse('run-detail', args=[self.run.pk]))
        self.assertEqual(response.data['result_count'], 3)
        self.assertEqual(response.data['config']['clients'], [2, 3])

    def test_filter_results(self):
        self.client.force_authenticate(self.viewer)
        response = self.client.get(reverse('result-list'), {'compression': 'false'})
        self.assertEqual(len(response.data), 1)
        response = self.client.get(reverse('result-list'), {'clients': 3, 'run': self.run.pk})
        self.assertEqual([row['clients'] for row in response.data], [3])

    def test_report_download(self):
        self.client.force_authenticate(self.viewer)
        response = self.client.get(reverse('run-report', args=[self.run.pk]))
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual(response['Content-Type'], 'text/csv')
        self.assertEqual(response.content.decode(), render_report(self.run.reports()))

    def test_viewer_cannot_start_runs(self):
        self.client.force_authenticate(self.viewer)
        response = self.client.post(reverse('run-list'), {'clients': '2'}, format='json')
        self.assertEqual(response.status_code, status.HTTP_403_FORBIDDEN)

    def test_staff_starts_a_run(self):
        self.client.force_authenticate(self.staff)
        response = self.client.post(reverse('run-list'), {
            'clients': '2', 'interval_ms': [100], 'compression': 'on', 'duration_s': 0.5, 'trace': 'idle',
        }, format='json')
        self.assertEqual(response.status_code, status.HTTP_201_CREATED, response.data)
        self.assertEqual(response.data['result_count'], 1)
        self.assertEqual(response.data['trace_kind'], 'idle')

    def test_invalid_config(self):
        self.client.force_authenticate(self.staff)
        response = self.client.post(reverse('run-list'), {'clients': '1..20'}, format='json')
        self.assertEqual(response.status_code, status.HTTP_400_BAD_REQUEST)
        self.assertEqual(response.data['status'], 'error')
        self.assertIn('clients', response.data['errors'])
