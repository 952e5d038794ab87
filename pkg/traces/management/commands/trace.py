from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from codec.config import CodecConfig
from codec.state import CodecState
from codec.wire import encode_frame, uncompressed_size
from skeleton.frames import us_to_ms
from traces.storage import load_trace, save_trace
from traces.synthesis import TRACE_KINDS, generate_synthetic
from utils.exceptions import PoseDeckError


def compression_summary(trace, config=None):
    """(uncompressed bytes, compressed bytes, header-only frames) over a trace."""
    state = CodecState(trace.layout, config or CodecConfig())
    compressed = 0
    header_only = 0
    for frame in trace:
        payload = encode_frame(frame, state)
        compressed += payload.size
        header_only += payload.header_only
    return uncompressed_size(trace.layout) * len(trace), compressed, header_only


class Command(BaseCommand):
    help = "Generate, inspect and dump skeleton movement traces"

    def add_arguments(self, parser):
        sub = parser.add_subparsers(dest='action', required=True)
        defaults = settings.POSEDECK

        gen = sub.add_parser('gen', help="synthesize a trace file")
        gen.add_argument('--kind', choices=TRACE_KINDS, default=defaults['TRACE_KIND'])
        gen.add_argument('--duration-s', type=float, default=defaults['DURATION_S'])
        gen.add_argument('--rate-hz', type=float, default=defaults['TRACE_RATE_HZ'])
        gen.add_argument('--seed', type=int, default=defaults['SEED'])
        gen.add_argument('--out', required=True)

        info = sub.add_parser('info', help="summarize a trace file")
        info.add_argument('path')

        dump = sub.add_parser('dump', help="print frames of a trace file")
        dump.add_argument('path')
        dump.add_argument('--limit', type=int, default=10)
        dump.add_argument('--joint', default='head')

    def handle(self, *args, **options):
        try:
            getattr(self, f"handle_{options['action']}")(options)
        except (PoseDeckError, OSError) as exc:
            raise CommandError(str(exc)) from exc

    def handle_gen(self, options):
        trace = generate_synthetic(options['kind'], options['duration_s'], options['rate_hz'], options['seed'])
        path = save_trace(trace, options['out'])
        self.stdout.write(self.style.SUCCESS(f"{len(trace)} {trace.kind} frames written to {path}"))

    def handle_info(self, options):
        trace = load_trace(options['path'])
        raw, compressed, header_only = compression_summary(trace)
        lines = [
            f"kind: {trace.kind}",
            f"rate: {trace.rate_hz:g} Hz",
            f"frames: {len(trace)}",
            f"duration: {trace.duration_us / 1e6:.3f} s",
            f"joints: {trace.layout.joint_count}",
            f"uncompressed bytes: {raw}",
            f"compressed bytes: {compressed}",
            f"compression factor: {raw / compressed:.3f}" if compressed else "compression factor: n/a",
            f"header-only frames: {header_only}",
        ]
        self.stdout.write("\n".join(lines))

    def handle_dump(self, options):
        trace = load_trace(options['path'])
        joint = trace.layout.index(options['joint'])
        for frame in trace.frames[:max(0, options['limit'])]:
            w, x, y, z = frame.rotations[joint]
            px, py, pz = frame.positions[joint]
            self.stdout.write(
                f"{frame.seq:6d} {us_to_ms(frame.t):10.3f} ms  "
                f"q=({w:+.5f} {x:+.5f} {y:+.5f} {z:+.5f})  p=({px:+.4f} {py:+.4f} {pz:+.4f})"
            )
