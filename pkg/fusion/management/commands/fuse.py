from pathlib import Path

import numpy as np
from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from fusion.config import fusion_config_from_dict, load_profiles, read_toml, run_fusion
from fusion.fuse import Correction
from fusion.sensors import BarResult, StaticResult
from fusion.serializers import EXPERIMENTS
from utils.exceptions import PoseDeckError


class Command(BaseCommand):
    help = "Fuse simulated marker and inside-out tracking streams and export the fused track as CSV"

    def add_arguments(self, parser):
        parser.add_argument('--config', help="TOML run file; flags below override its values")
        parser.add_argument('--out', required=True, help="CSV path for the fused track")
        parser.add_argument('--out-b', help="CSV path for the second sensor of a bar run")
        parser.add_argument('--profile', help="noise profile name (default: walking)")
        parser.add_argument('--experiment', choices=EXPERIMENTS)
        parser.add_argument('--samples', type=int)
        parser.add_argument('--seed', type=int)
        parser.add_argument('--policy', choices=[c.value for c in Correction])
        parser.add_argument('--blend-window-ms', type=float)

    def handle(self, *args, **options):
        try:
            data = read_toml(options['config']) if options['config'] else {}
            for key in ('profile', 'experiment', 'samples', 'seed', 'policy', 'blend_window_ms'):
                if options[key] is not None:
                    data[key] = options[key]
            if 'profile' not in data and 'noise' not in data:
                data['profile'] = 'walking'
            data.setdefault('seed', settings.POSEDECK['SEED'])
            profiles = load_profiles(settings.POSEDECK['FUSION_PROFILES'])
            config = fusion_config_from_dict(data, profiles)
            result = run_fusion(config)
            self._write(result, options)
        except (PoseDeckError, OSError) as exc:
            raise CommandError(str(exc)) from exc

    def _write(self, result, options):
        if isinstance(result, BarResult):
            path = result.a.track.save_csv(options['out'])
            if options['out_b']:
                result.b.track.save_csv(options['out_b'])
            summary = f"relative accuracy {result.relative_accuracy_mm:.3f} mm over {len(result.a.track)} samples"
        elif isinstance(result, StaticResult):
            path = result.run.track.save_csv(options['out'])
            summary = f"static jitter {result.jitter_mm:.3f} mm, {result.rotation_jitter_deg:.4f} deg"
        else:
            path = result.track.save_csv(options['out'])
            errors = result.errors_mm
            summary = f"position error mean {errors.mean():.3f} mm, max {np.max(errors):.3f} mm"
        self.stdout.write(self.style.SUCCESS(f"{summary}; track written to {Path(path)}"))
