import struct
import tempfile
from io import StringIO
from pathlib import Path

import numpy as np
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from netsim.clock import VirtualClock
from skeleton.geometry import angular_distances
from skeleton.layout import DEFAULT_LAYOUT
from traces.management.commands.trace import compression_summary
from traces.storage import MAGIC, dumps_trace, load_trace, loads_trace, save_trace
from traces.synthesis import generate_synthetic
from traces.trace import Trace, TracePlayer
from utils.exceptions import InvalidArgument, TraceFormatError, TraceVersionError


class GenerateSyntheticTests(SimpleTestCase):
    def test_deterministic(self):
        a = generate_synthetic('dance', 2, 100, seed=1)
        b = generate_synthetic('dance', 2, 100, seed=1)
        self.assertEqual(a, b)
        self.assertNotEqual(a, generate_synthetic('dance', 2, 100, seed=2))

    def test_shape_and_timing(self):
        trace = generate_synthetic('walk', 1.5, 100, seed=3)
        self.assertEqual(len(trace), 150)
        self.assertEqual(trace.step_us, 10_000)
        self.assertEqual(trace[-1].t, 149 * 10_000)
        self.assertEqual(trace.layout, DEFAULT_LAYOUT)

    def test_unknown_kind(self):
        with self.assertRaises(InvalidArgument):
            generate_synthetic('breakdance', 1, 100, seed=1)

    def test_rejects_non_positive_duration(self):
        with self.assertRaises(InvalidArgument):
            generate_synthetic('idle', 0, 100, seed=1)

    def test_idle_compresses_to_headers(self):
        trace = generate_synthetic('idle', 10, 100, seed=1)
        _, _, header_only = compression_summary(trace)
        self.assertGreater(header_only / len(trace), 0.95)

    def test_dance_compression_factor(self):
        trace = generate_synthetic('dance', 10, 100, seed=1)
        raw, compressed, _ = compression_summary(trace)
        self.assertGreaterEqual(raw / compressed, 2.0)
        self.assertLessEqual(raw / compressed, 2.6)

    def test_dance_moves_head_and_hands_quickly(self):
        trace = generate_synthetic('dance', 10, 100, seed=1)
        tracked = list(DEFAULT_LAYOUT.head_and_hands())
        rotations = np.stack([frame.rotations[tracked] for frame in trace])
        steps = angular_distances(rotations[1:], rotations[:-1])
        self.assertGreaterEqual(float((steps >= 0.1).mean()), 0.8)


class TraceStorageTests(SimpleTestCase):
    def setUp(self):
        self.trace = generate_synthetic('walk', 10, 100, seed=4)

    def test_round_trip_is_exact(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = save_trace(self.trace, Path(tmp) / 'walk.trace')
            self.assertEqual(len(self.trace), 1000)
            self.assertEqual(load_trace(path), self.trace)

    def test_truncated_file(self):
        data = dumps_trace(self.trace)
        with self.assertRaises(TraceFormatError):
            loads_trace(data[:-5])
        with self.assertRaises(TraceFormatError):
            loads_trace(data[:3])

    def test_invalid_rate(self):
        offset = len(MAGIC) + 2 + len(self.trace.kind.encode())
        for rate in (0.0, -100.0, float('nan'), float('inf')):
            data = bytearray(dumps_trace(self.trace))
            data[offset:offset + 8] = struct.pack('<d', rate)
            with self.assertRaises(TraceFormatError):
                loads_trace(bytes(data))

    def test_unknown_version(self):
        data = bytearray(dumps_trace(self.trace))
        data[len(MAGIC)] = 9
        with self.assertRaises(TraceVersionError):
            loads_trace(bytes(data))

    def test_bad_magic(self):
        with self.assertRaises(TraceFormatError):
            loads_trace(b'NOPE' + dumps_trace(self.trace)[4:])

    def test_trailing_bytes(self):
        with self.assertRaises(TraceFormatError):
            loads_trace(dumps_trace(self.trace) + b'\0')


class TracePlayerTests(SimpleTestCase):
    def setUp(self):
        self.trace = generate_synthetic('idle', 10, 100, seed=5)

    def test_plays_every_frame_once(self):
        clock = VirtualClock()
        emitted = []
        TracePlayer(self.trace).schedule(clock, emitted.append)
        clock.run_until(20_000_000)
        self.assertEqual(len(emitted), 1000)
        self.assertEqual(emitted[-1].t, 9_990_000)

    def test_looped_playback(self):
        clock = VirtualClock()
        emitted = []
        TracePlayer(self.trace, user=7, loop=True).schedule(clock, emitted.append, until_us=25_000_000)
        clock.run_until(30_000_000)
        self.assertEqual(len(emitted), 2500)
        seqs = [frame.seq for frame in emitted]
        self.assertEqual(seqs, list(range(2500)))
        self.assertTrue(all(frame.user == 7 for frame in emitted))
        self.assertTrue(np.array_equal(emitted[1000].positions, self.trace[0].positions))

    def test_empty_trace(self):
        with self.assertRaises(InvalidArgument):
            TracePlayer(Trace(DEFAULT_LAYOUT, (), 100))

    def test_frame_at(self):
        player = TracePlayer(self.trace, user=2, start_us=3_000)
        self.assertIsNone(player.frame_at(2_999))
        self.assertEqual(player.frame_at(3_000).seq, 0)
        self.assertEqual(player.frame_at(27_999).seq, 2)
        self.assertEqual(player.frame_at(10**9).seq, 999)

    def test_looping_player_needs_an_end(self):
        with self.assertRaises(InvalidArgument):
            TracePlayer(self.trace, loop=True).schedule(VirtualClock(), lambda frame: None)


class TraceCommandTests(SimpleTestCase):
    def test_gen_then_info(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = str(Path(tmp) / 'idle.trace')
            out = StringIO()
            call_command('trace', 'gen', '--kind', 'idle', '--duration-s', '1', '--out', path, stdout=out)
            self.assertIn('100 idle frames', out.getvalue())
            out = StringIO()
            call_command('trace', 'info', path, stdout=out)
            self.assertIn('frames: 100', out.getvalue())
            out = StringIO()
            call_command('trace', 'dump', path, '--limit', '3', stdout=out)
            self.assertEqual(len(out.getvalue().strip().splitlines()), 3)

    def test_missing_file(self):
        with self.assertRaises(CommandError):
            call_command('trace', 'info', '/nonexistent/file.trace', stdout=StringIO())

    def test_info_rejects_zero_rate(self):
        trace = generate_synthetic('idle', 1, 10, seed=1)
        data = bytearray(dumps_trace(trace))
        offset = len(MAGIC) + 2 + len(trace.kind.encode())
        data[offset:offset + 8] = struct.pack('<d', 0.0)
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'broken.trace'
            path.write_bytes(bytes(data))
            with self.assertRaises(CommandError):
                call_command('trace', 'info', str(path), stdout=StringIO())
