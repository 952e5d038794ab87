"""Smallest-three quaternion quantization.

A unit quaternion is sent as the index of one omitted component plus the
other three, each quantized to ``bits`` over [-1/sqrt(2), 1/sqrt(2)].
The omitted component is rebuilt from the unit norm and is always
non-negative, so q and -q quantize identically.

The encoder tries all four omitted components and keeps the closest
reconstruction, normally the one omitting the largest component.
"""
import math
from functools import lru_cache

import numpy as np

from skeleton.geometry import UnitQuaternion, angular_distances
from utils.exceptions import InvalidArgument

SQRT1_2 = math.sqrt(0.5)
MIN_BITS = 4
MAX_BITS = 16
POSITION_MODE_BITS = 2
SETTLE_ROUNDS = 4

_KEPT_COLUMNS = ((1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2))


def _half_range(bits):
    # codes run 0..2*half so that code == half is exactly zero
    return (1 << (bits - 1)) - 1


def _step(bits):
    return SQRT1_2 / _half_range(bits)


def worst_case_error_deg(bits):
    """Upper bound on the rotation error of ``bits``-wide components.

    Three components off by half a step each, plus the recomputed one,
    bound the quaternion chord by sqrt(3) * step.
    """
    chord = math.sqrt(3.0) * _step(bits)
    return math.degrees(4.0 * math.asin(min(1.0, chord / 2.0)))


@lru_cache(maxsize=None)
def component_bits(resolution_deg):
    for bits in range(MIN_BITS, MAX_BITS + 1):
        if worst_case_error_deg(bits) <= resolution_deg:
            return bits
    raise InvalidArgument(f"no component width up to {MAX_BITS} bits reaches {resolution_deg} degrees")


def rotation_field_bytes(bits):
    """Bytes for index + three components + the position-mode bits."""
    return (2 + 3 * bits + POSITION_MODE_BITS + 7) // 8


def random_rotations(count, rng):
    q = rng.normal(size=(count, 4))
    return q / np.linalg.norm(q, axis=1, keepdims=True)


def search_component_bits(resolution_deg, samples=1000, seed=0):
    """Smallest width whose sampled round-trip error stays within the resolution."""
    rotations = random_rotations(samples, np.random.default_rng(seed))
    for bits in range(MIN_BITS, MAX_BITS + 1):
        errors = angular_distances(rotations, quantize_rotations(rotations, bits))
        if float(errors.max()) <= resolution_deg:
            return bits
    raise InvalidArgument(f"no component width up to {MAX_BITS} bits reaches {resolution_deg} degrees")


def _assemble(omitted, codes, half, step):
    kept = (codes - half) * step
    k0, k1, k2 = kept[:, 0], kept[:, 1], kept[:, 2]
    total = k0 * k0 + k1 * k1 + k2 * k2
    missing = np.sqrt(np.maximum(0.0, 1.0 - total))
    # rounding can push the kept three past unit length; scale 1.0 otherwise
    scale = np.sqrt(np.maximum(1.0, total))
    out = np.empty((codes.shape[0], 4))
    out[:, omitted] = missing
    out[:, _KEPT_COLUMNS[omitted]] = kept / scale[:, None]
    return out


def _nearest_codes(q, half, step):
    best_err = np.full(q.shape[0], np.inf)
    best_index = np.zeros(q.shape[0], dtype=np.int64)
    best_codes = np.zeros((q.shape[0], 3), dtype=np.int64)
    for omitted, columns in enumerate(_KEPT_COLUMNS):
        signs = np.where(q[:, omitted] < 0.0, -1.0, 1.0)
        kept = q[:, columns] * signs[:, None]
        codes = np.rint(np.clip(kept, -SQRT1_2, SQRT1_2) / step).astype(np.int64) + half
        np.clip(codes, 0, 2 * half, out=codes)
        candidate = _assemble(omitted, codes, half, step)
        err = 1.0 - np.abs(np.sum(q * candidate, axis=1))
        better = err < best_err
        best_err = np.where(better, err, best_err)
        best_index = np.where(better, omitted, best_index)
        best_codes = np.where(better[:, None], codes, best_codes)
    return best_index, best_codes


def _code_key(index, codes, half):
    width = 2 * half + 1
    return ((index * width + codes[:, 0]) * width + codes[:, 1]) * width + codes[:, 2]


def encode_rotations(rotations, bits):
    """Quantize ``(n, 4)`` quaternions. Returns (omitted index, (n, 3) codes).

    A decoded rotation can re-encode under another omitted component with a
    reconstruction that differs in the last bit. The encoder repeats
    decode/encode until the codes repeat and returns the fixed point, or the
    smaller code of a pair that decode into each other, so re-encoding a
    decoded rotation reproduces its codes.
    """
    q = np.asarray(rotations, dtype=float)
    half = _half_range(bits)
    step = _step(bits)
    index, codes = _nearest_codes(q, half, step)
    key = _code_key(index, codes, half)
    out_index, out_codes = index, codes
    earlier = np.full_like(key, -1)
    settled = np.zeros(key.shape[0], dtype=bool)
    for _ in range(SETTLE_ROUNDS):
        if settled.all():
            break
        next_index, next_codes = _nearest_codes(decode_rotations(index, codes, bits), half, step)
        next_key = _code_key(next_index, next_codes, half)
        active = ~settled
        fixed = active & (next_key == key)
        paired = active & ~fixed & (next_key == earlier)
        moved = active & ~fixed & ~(paired & (key < next_key))
        out_index = np.where(moved, next_index, out_index)
        out_codes = np.where(moved[:, None], next_codes, out_codes)
        settled |= fixed | paired
        earlier, key, index, codes = key, next_key, next_index, next_codes
    return out_index, out_codes


def decode_rotations(index, codes, bits):
    index = np.asarray(index, dtype=np.int64)
    codes = np.asarray(codes, dtype=np.int64)
    half = _half_range(bits)
    step = _step(bits)
    out = np.empty((index.shape[0], 4))
    for omitted in range(4):
        rows = index == omitted
        if rows.any():
            out[rows] = _assemble(omitted, codes[rows], half, step)
    return out


def quantize_rotations(rotations, bits):
    index, codes = encode_rotations(rotations, bits)
    return decode_rotations(index, codes, bits)


def quantize_rotation(q, resolution_deg):
    """The wire-representable rotation closest to ``q`` at ``resolution_deg``."""
    if resolution_deg <= 0:
        raise InvalidArgument("resolution must be positive")
    array = q.as_array() if isinstance(q, UnitQuaternion) else np.asarray(q, dtype=float)
    quantized = quantize_rotations(array.reshape(1, 4), component_bits(resolution_deg))[0]
    return UnitQuaternion.from_array(quantized)
