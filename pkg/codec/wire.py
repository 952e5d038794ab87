"""Pose frame wire format.

All integers are little-endian.

Header (15 bytes): user u16, seq u32, t u64 (microseconds), count u8.

Compressed joint record (12 bytes with the default 0.1 degree resolution):
    joint id u8
    rotation field, 40 bits: [omitted index:2][c0:12][c1:12][c2:12][position mode:2]
    position: mode 0 -> 3 x i16 offsets from the baseline in resolution steps
              mode 1 -> 3 x i32 absolute position in resolution steps (18 byte record)

Uncompressed joint record (29 bytes): joint id u8, rotation 4 x f32 (w, x, y, z),
position 3 x f32.

Joint records appear in ascending joint id order.
"""
import struct
from dataclasses import dataclass

import numpy as np

from codec.rotation import decode_rotations, encode_rotations
from skeleton.frames import SkeletonFrame, changed_joint_mask
from utils.exceptions import DecodeError, InvalidArgument, OrderingError

HEADER = struct.Struct('<HIQB')
HEADER_SIZE = HEADER.size

MAX_USER = 0xFFFF
MAX_SEQ = 0xFFFFFFFF
MAX_TIMESTAMP = 0xFFFFFFFFFFFFFFFF

POSITION_DELTA = 0
POSITION_ABSOLUTE = 1

FULL_JOINT = np.dtype([('joint', 'u1'), ('rotation', '<f4', (4,)), ('position', '<f4', (3,))])
FULL_JOINT_SIZE = FULL_JOINT.itemsize

_DELTA_POSITION = struct.Struct('<3h')
_ABSOLUTE_POSITION = struct.Struct('<3i')
_I16 = np.iinfo(np.int16)
_I32 = np.iinfo(np.int32)


def compressed_joint_dtype(rotation_bytes):
    return np.dtype([('joint', 'u1'), ('rotation', 'u1', (rotation_bytes,)), ('position', '<i2', (3,))])


def compressed_joint_size(config):
    """Bytes per changed joint when its position fits the 16-bit offsets."""
    return compressed_joint_dtype(config.rotation_bytes).itemsize


@dataclass(frozen=True)
class EncodedFrame:
    user: int
    seq: int
    t: int
    count: int
    data: bytes

    @classmethod
    def from_bytes(cls, data):
        data = bytes(data)
        if len(data) < HEADER_SIZE:
            raise DecodeError(f"payload of {len(data)} bytes is shorter than the header")
        user, seq, t, count = HEADER.unpack_from(data)
        return cls(user, seq, t, count, data)

    @property
    def size(self):
        return len(self.data)

    @property
    def header_only(self):
        return self.count == 0

    def __bytes__(self):
        return self.data


def serialized_size(payload):
    if isinstance(payload, EncodedFrame):
        return payload.size
    return len(payload)


def uncompressed_size(layout):
    return HEADER_SIZE + layout.joint_count * FULL_JOINT_SIZE


def _field_shifts(bits):
    return (
        np.uint64(3 * bits + 2),
        np.uint64(2 * bits + 2),
        np.uint64(bits + 2),
        np.uint64(2),
    )


def _pack_fields(index, codes, modes, bits, nbytes):
    index_shift, c0_shift, c1_shift, c2_shift = _field_shifts(bits)
    codes = codes.astype(np.uint64)
    field = (
        (index.astype(np.uint64) << index_shift)
        | (codes[:, 0] << c0_shift)
        | (codes[:, 1] << c1_shift)
        | (codes[:, 2] << c2_shift)
        | modes.astype(np.uint64)
    )
    shifts = np.arange(nbytes, dtype=np.uint64) * np.uint64(8)
    return ((field[:, None] >> shifts) & np.uint64(0xFF)).astype(np.uint8)


def _unpack_fields(fields, bits):
    nbytes = fields.shape[1]
    shifts = np.arange(nbytes, dtype=np.uint64) * np.uint64(8)
    field = np.bitwise_or.reduce(fields.astype(np.uint64) << shifts, axis=1) if nbytes else np.zeros(0, np.uint64)
    index_shift, c0_shift, c1_shift, c2_shift = _field_shifts(bits)
    mask = np.uint64((1 << bits) - 1)
    index = ((field >> index_shift) & np.uint64(3)).astype(np.int64)
    codes = np.stack((
        (field >> c0_shift) & mask,
        (field >> c1_shift) & mask,
        (field >> c2_shift) & mask,
    ), axis=1).astype(np.int64)
    modes = (field & np.uint64(3)).astype(np.int64)
    return index, codes, modes


def _full_resolution(records):
    """Rotations and positions as the decoder sees a float32 record block."""
    rotations = records['rotation'].astype(float)
    w, x, y, z = rotations[:, 0], rotations[:, 1], rotations[:, 2], rotations[:, 3]
    norms = np.sqrt(w * w + x * x + y * y + z * z)
    if not np.all(np.isfinite(norms) & (norms > 0.0)):
        raise DecodeError("rotation record is not a usable quaternion")
    positions = records['position'].astype(float)
    if not np.all(np.isfinite(positions)):
        raise DecodeError("position record is not finite")
    return rotations / norms[:, None], positions


def _check_header(frame):
    if frame.user > MAX_USER or frame.seq > MAX_SEQ or frame.t > MAX_TIMESTAMP:
        raise InvalidArgument(f"{frame!r} does not fit the frame header")


def _encode_full(frame):
    records = np.zeros(frame.joint_count, dtype=FULL_JOINT)
    records['joint'] = np.arange(frame.joint_count)
    records['rotation'] = frame.rotations
    records['position'] = frame.positions
    rotations, positions = _full_resolution(records)
    return records.tobytes(), frame.joint_count, rotations, positions


def _encode_compressed(frame, baseline, cfg):
    bits = cfg.rotation_bits
    resolution = cfg.position_resolution_m
    if baseline is None:
        joints = np.arange(frame.joint_count)
        rotations = np.empty((frame.joint_count, 4))
        positions = np.zeros((frame.joint_count, 3))
    else:
        joints = np.flatnonzero(changed_joint_mask(frame, baseline, cfg.thresholds))
        rotations = baseline.rotations.copy()
        positions = baseline.positions.copy()

    index, codes = encode_rotations(frame.rotations[joints], bits)
    origin = positions[joints]
    target = frame.positions[joints]
    offsets = np.rint((target - origin) / resolution).astype(np.int64)
    escape = np.any((offsets < _I16.min) | (offsets > _I16.max), axis=1)
    absolute = np.rint(target / resolution).astype(np.int64)
    if np.any(escape[:, None] & ((absolute < _I32.min) | (absolute > _I32.max))):
        raise InvalidArgument("joint position is outside the encodable range")
    modes = np.where(escape, POSITION_ABSOLUTE, POSITION_DELTA)
    fields = _pack_fields(index, codes, modes, bits, cfg.rotation_bytes)

    if not escape.any():
        records = np.zeros(len(joints), dtype=compressed_joint_dtype(cfg.rotation_bytes))
        records['joint'] = joints
        records['rotation'] = fields
        records['position'] = offsets
        body = records.tobytes()
    else:
        parts = []
        for k, joint in enumerate(joints):
            if escape[k]:
                position = _ABSOLUTE_POSITION.pack(*(int(v) for v in absolute[k]))
            else:
                position = _DELTA_POSITION.pack(*(int(v) for v in offsets[k]))
            parts.append(bytes((int(joint),)) + fields[k].tobytes() + position)
        body = b''.join(parts)

    rotations[joints] = decode_rotations(index, codes, bits)
    positions[joints] = np.where(escape[:, None], absolute * resolution, origin + offsets * resolution)
    return body, len(joints), rotations, positions


def encode_frame(frame, state, cfg=None):
    """Encode ``frame`` against the user's baseline and advance the baseline.

    The new baseline holds the quantized values the decoder will
    reconstruct, not the raw input. ``cfg`` defaults to the state's
    config and must match the decoder's.
    """
    cfg = cfg or state.config
    if frame.joint_count != state.layout.joint_count:
        raise InvalidArgument(
            f"frame has {frame.joint_count} joints, layout has {state.layout.joint_count}"
        )
    _check_header(frame)
    baseline = state.baseline(frame.user)
    if baseline is not None and frame.seq <= baseline.seq:
        raise OrderingError(f"user {frame.user}: seq {frame.seq} not after {baseline.seq}")

    if cfg.compression_enabled:
        body, count, rotations, positions = _encode_compressed(frame, baseline, cfg)
    else:
        body, count, rotations, positions = _encode_full(frame)

    data = HEADER.pack(frame.user, frame.seq, frame.t, count) + body
    state.commit(frame.user, SkeletonFrame(frame.user, frame.seq, frame.t, rotations, positions))
    return EncodedFrame(frame.user, frame.seq, frame.t, count, data)


def _parse_compressed(body, count, cfg):
    nbytes = cfg.rotation_bytes
    record = compressed_joint_dtype(nbytes)
    if count == 0:
        if body:
            raise DecodeError("header-only payload carries trailing bytes")
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty, np.zeros((0, 3), np.int64), empty, np.zeros((0, 3), np.int64)

    if len(body) == count * record.itemsize:
        records = np.frombuffer(body, dtype=record)
        index, codes, modes = _unpack_fields(records['rotation'], cfg.rotation_bits)
        if np.any(modes != POSITION_DELTA):
            raise DecodeError("absolute position in a body sized for offsets only")
        return (
            records['joint'].astype(np.int64),
            index,
            codes,
            modes,
            records['position'].astype(np.int64),
        )

    joints, fields, values = [], [], []
    offset = 0
    for _ in range(count):
        if offset + 1 + nbytes > len(body):
            raise DecodeError("truncated joint record")
        joints.append(body[offset])
        field = body[offset + 1:offset + 1 + nbytes]
        fields.append(field)
        offset += 1 + nbytes
        mode = field[0] & 0b11
        if mode == POSITION_DELTA:
            layout = _DELTA_POSITION
        elif mode == POSITION_ABSOLUTE:
            layout = _ABSOLUTE_POSITION
        else:
            raise DecodeError(f"unknown position mode {mode}")
        if offset + layout.size > len(body):
            raise DecodeError("truncated joint position")
        values.append(layout.unpack_from(body, offset))
        offset += layout.size
    if offset != len(body):
        raise DecodeError(f"{len(body) - offset} trailing bytes after {count} joint records")
    raw = np.frombuffer(b''.join(fields), dtype=np.uint8).reshape(count, nbytes)
    index, codes, modes = _unpack_fields(raw, cfg.rotation_bits)
    return np.array(joints, dtype=np.int64), index, codes, modes, np.array(values, dtype=np.int64)


def _check_joints(joints, joint_count, baseline):
    if joints.size and int(joints.max()) >= joint_count:
        raise DecodeError(f"joint id {int(joints.max())} outside a {joint_count}-joint layout")
    if np.any(np.diff(joints) <= 0):
        raise DecodeError("joint ids must be unique and ascending")
    if baseline is None and joints.size != joint_count:
        raise DecodeError("partial frame without a baseline")


def decode_frame(payload, state):
    """Rebuild the sender's frame from ``payload`` and advance the baseline."""
    if not isinstance(payload, EncodedFrame):
        payload = EncodedFrame.from_bytes(payload)
    cfg = state.config
    joint_count = state.layout.joint_count
    baseline = state.baseline(payload.user)
    if baseline is not None and payload.seq <= baseline.seq:
        raise OrderingError(f"user {payload.user}: seq {payload.seq} not after {baseline.seq}")
    if baseline is not None and baseline.joint_count != joint_count:
        raise DecodeError("baseline does not match the layout")
    body = payload.data[HEADER_SIZE:]

    if baseline is None:
        rotations = np.empty((joint_count, 4))
        positions = np.zeros((joint_count, 3))
    else:
        rotations = baseline.rotations.copy()
        positions = baseline.positions.copy()

    if cfg.compression_enabled:
        joints, index, codes, modes, values = _parse_compressed(body, payload.count, cfg)
        _check_joints(joints, joint_count, baseline)
        resolution = cfg.position_resolution_m
        origin = positions[joints]
        escape = modes == POSITION_ABSOLUTE
        rotations[joints] = decode_rotations(index, codes, cfg.rotation_bits)
        positions[joints] = np.where(escape[:, None], values * resolution, origin + values * resolution)
    else:
        if len(body) != payload.count * FULL_JOINT_SIZE:
            raise DecodeError(f"body of {len(body)} bytes does not hold {payload.count} full joint records")
        records = np.frombuffer(body, dtype=FULL_JOINT)
        joints = records['joint'].astype(np.int64)
        _check_joints(joints, joint_count, baseline)
        rotations[joints], positions[joints] = _full_resolution(records)

    try:
        frame = SkeletonFrame(payload.user, payload.seq, payload.t, rotations, positions)
    except InvalidArgument as exc:
        raise DecodeError(str(exc)) from exc
    state.commit(payload.user, frame)
    return frame
