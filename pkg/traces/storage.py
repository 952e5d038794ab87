"""Binary ``.trace`` files.

Layout (little-endian):
    magic        b'PDTR'
    version      u8 (currently 1)
    kind         u8 length + utf-8
    rate_hz      f64
    joints       u16, then per joint: u8 length + utf-8 name
    user         u16
    first_t      u64
    frame count  u32
    frames       count x joints x 7 f64 (w, x, y, z, px, py, pz)

Frame k has seq k and timestamp first_t + k * round(1e6 / rate_hz).
"""
import logging
import math
import struct
from pathlib import Path

import numpy as np

from skeleton.frames import SkeletonFrame
from skeleton.layout import SkeletonLayout
from traces.trace import Trace, step_us
from utils.exceptions import InvalidArgument, TraceFormatError, TraceVersionError

logger = logging.getLogger(__name__)

MAGIC = b'PDTR'
VERSION = 1

_PREFIX = struct.Struct('<4sB')
_RATE = struct.Struct('<d')
_U8 = struct.Struct('<B')
_U16 = struct.Struct('<H')
_FRAMES = struct.Struct('<HQI')
_FRAME_DTYPE = np.dtype('<f8')


def _short_string(text):
    raw = text.encode('utf-8')
    if len(raw) > 255:
        raise InvalidArgument(f"{text[:20]!r}... is too long for a trace file")
    return _U8.pack(len(raw)) + raw


def dumps_trace(trace):
    parts = [_PREFIX.pack(MAGIC, VERSION), _short_string(trace.kind), _RATE.pack(trace.rate_hz)]
    parts.append(_U16.pack(trace.layout.joint_count))
    parts.extend(_short_string(name) for name in trace.layout.names)
    first = trace.frames[0] if len(trace) else None
    user = first.user if first else 0
    first_t = first.t if first else 0
    if any(frame.user != user or frame.seq != k for k, frame in enumerate(trace.frames)):
        raise InvalidArgument("only single-user traces numbered from seq 0 can be saved")
    parts.append(_FRAMES.pack(user, first_t, len(trace)))
    if len(trace):
        block = np.concatenate(
            (
                np.stack([f.rotations for f in trace.frames]),
                np.stack([f.positions for f in trace.frames]),
            ),
            axis=2,
        )
        parts.append(block.astype(_FRAME_DTYPE).tobytes())
    return b''.join(parts)


class _Reader:
    def __init__(self, data):
        self.data = data
        self.offset = 0

    def take(self, size):
        if self.offset + size > len(self.data):
            raise TraceFormatError(f"trace file truncated at byte {self.offset}")
        chunk = self.data[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def unpack(self, layout):
        return layout.unpack(self.take(layout.size))

    def string(self):
        (length,) = self.unpack(_U8)
        try:
            return self.take(length).decode('utf-8')
        except UnicodeDecodeError as exc:
            raise TraceFormatError("trace file holds an invalid name") from exc


def loads_trace(data):
    reader = _Reader(data)
    magic, version = reader.unpack(_PREFIX)
    if magic != MAGIC:
        raise TraceFormatError("not a trace file")
    if version != VERSION:
        raise TraceVersionError(f"trace format version {version} is not supported (expected {VERSION})")
    kind = reader.string()
    (rate_hz,) = reader.unpack(_RATE)
    if not math.isfinite(rate_hz) or rate_hz <= 0:
        raise TraceFormatError(f"trace file holds an invalid frame rate {rate_hz!r}")
    (joint_count,) = reader.unpack(_U16)
    names = tuple(reader.string() for _ in range(joint_count))
    user, first_t, count = reader.unpack(_FRAMES)
    block = np.frombuffer(reader.take(count * joint_count * 7 * 8), dtype=_FRAME_DTYPE)
    if reader.offset != len(data):
        raise TraceFormatError(f"{len(data) - reader.offset} trailing bytes in trace file")
    try:
        layout = SkeletonLayout(names)
        block = block.reshape(count, joint_count, 7)
        step = step_us(rate_hz)
        frames = tuple(
            SkeletonFrame(user, k, first_t + k * step, block[k, :, :4], block[k, :, 4:])
            for k in range(count)
        )
        return Trace(layout, frames, rate_hz, kind)
    except InvalidArgument as exc:
        raise TraceFormatError(f"trace file content is invalid: {exc}") from exc


def save_trace(trace, path):
    path = Path(path)
    data = dumps_trace(trace)
    path.write_bytes(data)
    logger.info("wrote %d frames (%d bytes) to %s", len(trace), len(data), path)
    return path


def load_trace(path):
    return loads_trace(Path(path).read_bytes())
