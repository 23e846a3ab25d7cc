"""Bit-exact binary model files.

Layout (all integers little-endian), 64-byte header followed by the payload::

    offset size  field
    0      4     magic b"MHD1"
    4      2     format version (1)
    6      1     encoder kind (0 id-level, 1 projection)
    7      1     reserved (0)
    8      4     f   features
    12     4     d   dimensionality
    16     4     l   levels (0 for projection)
    20     1     q   bitwidth
    21     3     padding (0)
    24     4     c   classes
    28     8     seed
    36     8     level discretization low bound (float64)
    44     8     level discretization high bound (float64)
    52     8     payload length in bits
    60     4     CRC-32 of header (with this field zeroed) + payload

The payload is one contiguous bitstream, least significant bit first, with
no per-vector padding; only the final byte is zero padded:

    id-level    f*d ID bits, l*d level bits, c*d class elements of q bits
    projection  d*f matrix elements of q bits (row-major), c*d class elements

Bipolar bits store +1 as 1 and -1 as 0; q-bit elements are two's complement,
except at q = 1 where the bit follows the bipolar convention.  The payload is
therefore exactly ``cost.memory_bits(config)`` bits long.
"""

from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

from microhd.cost import memory_bits
from microhd.encoders import IdLevelCodebook, ProjectionMatrix, flip_count
from microhd.hv import pack_bits, unpack_bits
from microhd.model import ID_LEVEL, PROJECTION, HdcConfig, TrainedModel

MAGIC = b"MHD1"
VERSION = 1
HEADER = struct.Struct("<4sHBBIIIB3xIQddQI")
HEADER_SIZE = HEADER.size
_KIND_CODES = {ID_LEVEL: 0, PROJECTION: 1}
_CHUNK = 1 << 20


class ModelFileError(ValueError):
    """Unreadable or inconsistent model file."""


class ChecksumError(ModelFileError):
    pass


class VersionError(ModelFileError):
    pass


def _int_bits(values: np.ndarray, q: int) -> np.ndarray:
    flat = np.asarray(values, dtype=np.int64).ravel()
    if q == 1:
        if np.any(flat == 0):
            raise ModelFileError("1-bit elements must be +/-1; an all-zero class vector cannot be stored at q=1")
        return (flat > 0).astype(np.uint8)
    out = np.empty(flat.size * q, dtype=np.uint8)
    shifts = np.arange(q, dtype=np.int64)
    mask = (1 << q) - 1
    for start in range(0, flat.size, _CHUNK):
        u = flat[start : start + _CHUNK] & mask
        out[start * q : (start + u.size) * q] = ((u[:, None] >> shifts) & 1).ravel()
    return out


def _bits_to_ints(bits: np.ndarray, count: int, q: int) -> np.ndarray:
    if q == 1:
        return np.where(bits[:count] > 0, 1, -1).astype(np.int64)
    out = np.empty(count, dtype=np.int64)
    weights = np.left_shift(np.int64(1), np.arange(q, dtype=np.int64))
    for start in range(0, count, _CHUNK):
        stop = min(start + _CHUNK, count)
        chunk = bits[start * q : stop * q].reshape(-1, q).astype(np.int64)
        u = chunk @ weights
        out[start:stop] = np.where(u >= 1 << (q - 1), u - (1 << q), u)
    return out


def payload_bits(model: TrainedModel) -> np.ndarray:
    """The model's payload as a flat 0/1 uint8 array (one entry per stored bit)."""
    cfg = model.config
    parts = []
    if cfg.encoder == ID_LEVEL:
        cb = model.encoder
        parts.append(unpack_bits(cb.id_words, cfg.d).ravel())
        parts.append(unpack_bits(cb.level_words, cfg.d).ravel())
    else:
        parts.append(_int_bits(model.encoder.values, cfg.q))
    parts.append(_int_bits(model.class_hvs, cfg.q))
    return np.concatenate(parts)


def to_bytes(model: TrainedModel) -> bytes:
    cfg = model.config
    _check_consistent(model)
    bits = payload_bits(model)
    payload = np.packbits(bits, bitorder="little").tobytes()
    low, high = (model.encoder.low, model.encoder.high) if cfg.encoder == ID_LEVEL else (0.0, 0.0)
    fields = [MAGIC, VERSION, _KIND_CODES[cfg.encoder], 0, cfg.f, cfg.d, cfg.l, cfg.q, cfg.c, model.seed,
              low, high, bits.size]
    crc = zlib.crc32(payload, zlib.crc32(HEADER.pack(*fields, 0)))
    return HEADER.pack(*fields, crc) + payload


def from_bytes(raw: bytes) -> TrainedModel:
    if len(raw) < HEADER_SIZE:
        raise ModelFileError("file shorter than the model header")
    (magic, version, kind, _reserved, f, d, l, q, c, seed, low, high, nbits, crc) = HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ModelFileError(f"bad magic {magic!r}")
    if version != VERSION:
        raise VersionError(f"unsupported model file version {version} (expected {VERSION})")
    payload = raw[HEADER_SIZE:]
    if len(payload) != (nbits + 7) // 8:
        raise ModelFileError(f"payload is {len(payload)} bytes, header declares {nbits} bits")
    header = HEADER.pack(magic, version, kind, _reserved, f, d, l, q, c, seed, low, high, nbits, 0)
    if zlib.crc32(payload, zlib.crc32(header)) != crc:
        raise ChecksumError("model file checksum mismatch")
    kinds = {v: k for k, v in _KIND_CODES.items()}
    if kind not in kinds:
        raise ModelFileError(f"unknown encoder code {kind}")
    try:
        config = HdcConfig(kinds[kind], d=d, q=q, f=f, c=c, l=l)
    except ValueError as exc:
        raise ModelFileError(f"invalid configuration in header: {exc}") from None
    bits = np.unpackbits(np.frombuffer(payload, dtype=np.uint8), bitorder="little")[:nbits]
    expected = memory_bits(config)
    if nbits != expected:
        raise ModelFileError(f"payload length {nbits} bits does not match configuration ({expected})")
    if config.encoder == ID_LEVEL:
        id_bits = bits[: f * d].reshape(f, d)
        lv_bits = bits[f * d : (f + l) * d].reshape(l, d)
        encoder = IdLevelCodebook(d, pack_bits(id_bits), pack_bits(lv_bits), flip_count(d, l), low, high)
        rest = bits[(f + l) * d :]
    else:
        encoder = ProjectionMatrix(_bits_to_ints(bits, d * f, q).reshape(d, f), q)
        rest = bits[d * f * q :]
    class_hvs = _bits_to_ints(rest, c * d, q).reshape(c, d)
    return TrainedModel(config, class_hvs, encoder, seed)


def _check_consistent(model: TrainedModel) -> None:
    cfg = model.config
    enc = model.encoder
    if cfg.encoder == ID_LEVEL:
        ok = isinstance(enc, IdLevelCodebook) and (enc.n_features, enc.dims, enc.n_levels) == (cfg.f, cfg.d, cfg.l)
    else:
        ok = isinstance(enc, ProjectionMatrix) and (enc.rows, enc.cols, enc.bitwidth) == (cfg.d, cfg.f, cfg.q)
    if not ok:
        raise ModelFileError("encoder does not match the model configuration")


def save_model(model: TrainedModel, path) -> int:
    """Write ``model`` to ``path``; returns the file size in bytes."""
    raw = to_bytes(model)
    Path(path).write_bytes(raw)
    return len(raw)


def load_model(path) -> TrainedModel:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"model file not found: {path}")
    return from_bytes(path.read_bytes())
