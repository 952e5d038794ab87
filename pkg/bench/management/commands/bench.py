from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from bench.config import config_echo, experiment_config_from_dict, harness_defaults
from bench.models import save_run
from bench.report import emit_report
from bench.runner import run_experiment
from fusion.config import read_toml
from traces.synthesis import TRACE_KINDS
from utils.exceptions import ConfigError, PoseDeckError

# flag destinations that map one to one onto experiment config keys
CONFIG_FLAGS = (
    'clients', 'interval_ms', 'compression', 'trace', 'seed', 'duration_s', 'cap_kbps',
    'latency_ms', 'jitter_ms', 'queue_kb', 'repetitions', 'background_bps', 'workers', 'roster',
)


class Command(BaseCommand):
    help = "Sweep client count, send interval and compression over simulated links and write a CSV report"

    def add_arguments(self, parser):
        parser.add_argument('--config', help="TOML experiment file; flags below override its values")
        parser.add_argument('--clients', help="client counts, a range like 2..10 or a list like 2,4,8")
        parser.add_argument('--interval-ms', help="send intervals in ms, comma separated")
        parser.add_argument('--compression', help="on, off or on,off")
        parser.add_argument('--trace', choices=TRACE_KINDS)
        parser.add_argument('--seed', type=int)
        parser.add_argument('--duration-s', type=float)
        parser.add_argument('--cap-kbps', type=float, help="per link direction, KB = 1000 bytes, inf to uncap")
        parser.add_argument('--latency-ms', type=float)
        parser.add_argument('--jitter-ms', type=float)
        parser.add_argument('--queue-kb', type=float)
        parser.add_argument('--repetitions', type=int)
        parser.add_argument('--background-bps', type=float, help="background stream per client, bytes/s")
        parser.add_argument('--workers', type=int)
        parser.add_argument('--roster', help="server-side roster name for player types")
        parser.add_argument('--out', help="report CSV path (default: OUTPUT_DIR/report.csv)")
        parser.add_argument('--save', action='store_true', help="store the run and its results")

    def handle(self, *args, **options):
        try:
            data = read_toml(options['config']) if options['config'] else {}
            out = options['out'] or data.pop('out', None) or settings.POSEDECK['OUTPUT_DIR'] / 'report.csv'
            save = options['save'] or bool(data.pop('save', False))
            data.update({key: options[key] for key in CONFIG_FLAGS if options[key] is not None})
            config = experiment_config_from_dict(data, harness_defaults(settings.POSEDECK))
            reports = run_experiment(config)
            path = emit_report(reports, out)
            run = save_run(config, reports, config_echo(config), path) if save else None
        except ConfigError as exc:
            raise CommandError(f"{exc}: {exc.errors}" if exc.errors else str(exc)) from exc
        except (PoseDeckError, OSError) as exc:
            raise CommandError(str(exc)) from exc

        for report in reports:
            self.stdout.write(
                f"{report.clients:>2} clients {report.interval_ms:>6g} ms "
                f"compression {'on ' if report.compression else 'off'} "
                f"latency {report.latency_mean_ms:8.1f} ms  {report.serialized_bytes_per_s:10.0f} B/s  "
                f"drop {report.drop_rate:.3f}"
            )
        message = f"{len(reports)} runs written to {path}"
        if run is not None:
            message += f"; stored as run {run.pk}"
        self.stdout.write(self.style.SUCCESS(message))
