"""Hypervector types and the bind / bundle / permute primitives.

Bipolar hypervectors are stored one bit per element (+1 -> 1, -1 -> 0),
little-endian inside 64-bit words, with the unused tail of the last word
kept at zero.  Integer hypervectors carry signed elements at a declared
bitwidth.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from microhd import _backend
from microhd.rng import Rng

WORD_BITS = 64
ACC_MIN = -(2**31)
ACC_MAX = 2**31 - 1


class DimensionError(ValueError):
    """Invalid or mismatched hypervector dimensionality."""


class ZeroNormError(ValueError):
    """Similarity requested against an all-zero vector."""


def n_words(dims: int) -> int:
    return (dims + WORD_BITS - 1) // WORD_BITS


def tail_mask(dims: int) -> np.uint64:
    """Mask of the valid bits in the last word."""
    rem = dims % WORD_BITS
    return np.uint64(0xFFFFFFFFFFFFFFFF) if rem == 0 else np.uint64((1 << rem) - 1)


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """Pack a (..., d) array of 0/1 into (..., ceil(d/64)) uint64 words."""
    bits = np.asarray(bits)
    dims = bits.shape[-1]
    packed = np.packbits(bits.astype(bool), axis=-1, bitorder="little")
    pad = n_words(dims) * 8 - packed.shape[-1]
    if pad:
        widths = [(0, 0)] * (packed.ndim - 1) + [(0, pad)]
        packed = np.pad(packed, widths)
    return np.ascontiguousarray(packed).view("<u8").astype(np.uint64)


def unpack_bits(words: np.ndarray, dims: int) -> np.ndarray:
    """Inverse of :func:`pack_bits`; returns uint8 0/1 of shape (..., dims)."""
    as_bytes = np.ascontiguousarray(words, dtype="<u8").view(np.uint8)
    return np.unpackbits(as_bytes, axis=-1, bitorder="little")[..., :dims]


def pack_signs(values: np.ndarray) -> np.ndarray:
    """Pack bipolar (or signed, sign(0) -> +1) values into words."""
    return pack_bits(np.asarray(values) >= 0)


def unpack_signs(words: np.ndarray, dims: int) -> np.ndarray:
    return (unpack_bits(words, dims).astype(np.int8) << 1) - 1


@dataclass(frozen=True, eq=False)
class BipolarHV:
    dims: int
    words: np.ndarray

    def __post_init__(self):
        if self.dims < 1:
            raise DimensionError(f"dims must be >= 1, got {self.dims}")
        words = np.ascontiguousarray(self.words, dtype=np.uint64)
        if words.shape != (n_words(self.dims),):
            raise DimensionError(f"expected {n_words(self.dims)} words for dims={self.dims}, got shape {words.shape}")
        if words[-1] & ~tail_mask(self.dims):
            raise ValueError("storage bits beyond dims must be zero")
        words.setflags(write=False)
        object.__setattr__(self, "words", words)

    @classmethod
    def from_elements(cls, values) -> BipolarHV:
        values = np.asarray(values)
        if values.ndim != 1:
            raise DimensionError("expected a 1-D array of +/-1")
        if not np.all((values == 1) | (values == -1)):
            raise ValueError("bipolar elements must be -1 or +1")
        return cls(values.shape[0], pack_bits(values > 0))

    def elements(self) -> np.ndarray:
        return unpack_signs(self.words, self.dims)

    def __len__(self) -> int:
        return self.dims

    def __neg__(self) -> BipolarHV:
        return BipolarHV(self.dims, ~self.words & _full_mask(self.dims))

    def __eq__(self, other) -> bool:
        if not isinstance(other, BipolarHV):
            return NotImplemented
        return self.dims == other.dims and np.array_equal(self.words, other.words)

    def __hash__(self) -> int:
        return hash((self.dims, self.words.tobytes()))

    def __repr__(self) -> str:
        return f"BipolarHV(dims={self.dims})"


def _full_mask(dims: int) -> np.ndarray:
    mask = np.full(n_words(dims), 0xFFFFFFFFFFFFFFFF, dtype=np.uint64)
    mask[-1] = tail_mask(dims)
    return mask


def int_range(bitwidth: int) -> tuple[int, int]:
    """Inclusive element range at ``bitwidth``; q=1 holds bipolar values."""
    if bitwidth == 1:
        return -1, 1
    return -(2 ** (bitwidth - 1)), 2 ** (bitwidth - 1) - 1


@dataclass(frozen=True, eq=False)
class IntegerHV:
    dims: int
    bitwidth: int
    values: np.ndarray

    def __post_init__(self):
        if not 1 <= self.bitwidth <= 32:
            raise ValueError(f"bitwidth must be in [1, 32], got {self.bitwidth}")
        values = np.array(self.values, dtype=np.int64)
        if values.shape != (self.dims,) or self.dims < 1:
            raise DimensionError(f"expected {self.dims} elements, got shape {values.shape}")
        lo, hi = int_range(self.bitwidth)
        if values.size and (values.min() < lo or values.max() > hi):
            raise ValueError(f"elements exceed the {self.bitwidth}-bit range [{lo}, {hi}]")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_bipolar(cls, hv: BipolarHV) -> IntegerHV:
        return cls(hv.dims, 1, hv.elements())

    def to_bipolar(self) -> BipolarHV:
        if self.bitwidth != 1:
            raise ValueError("only 1-bit integer hypervectors convert to bipolar")
        return BipolarHV.from_elements(self.values)

    def __len__(self) -> int:
        return self.dims

    def __eq__(self, other) -> bool:
        if not isinstance(other, IntegerHV):
            return NotImplemented
        return (self.dims, self.bitwidth) == (other.dims, other.bitwidth) and np.array_equal(
            self.values, other.values
        )

    def __hash__(self) -> int:
        return hash((self.dims, self.bitwidth, self.values.tobytes()))


def random_bipolar(dims: int, rng: Rng) -> BipolarHV:
    """I.i.d. uniform +/-1 elements."""
    if dims < 1:
        raise DimensionError(f"dims must be >= 1, got {dims}")
    words = rng.words(n_words(dims))
    words[-1] &= tail_mask(dims)
    return BipolarHV(dims, words)


def random_bipolar_words(count: int, dims: int, rng: Rng) -> np.ndarray:
    """``count`` random bipolar vectors as a (count, words) array."""
    if dims < 1:
        raise DimensionError(f"dims must be >= 1, got {dims}")
    words = rng.words(count * n_words(dims)).reshape(count, n_words(dims))
    words[:, -1] &= tail_mask(dims)
    return words


def _check_dims(a, b) -> None:
    if a.dims != b.dims:
        raise DimensionError(f"dimension mismatch: {a.dims} vs {b.dims}")


def bind(a: BipolarHV, b: BipolarHV) -> BipolarHV:
    """Elementwise product; XNOR on the packed bits."""
    _check_dims(a, b)
    return BipolarHV(a.dims, ~(a.words ^ b.words) & _full_mask(a.dims))


def bundle_accumulate(acc: np.ndarray, hv: BipolarHV) -> np.ndarray:
    """Return ``acc + hv`` as int32; raises OverflowError instead of wrapping."""
    acc = np.asarray(acc)
    if acc.shape != (hv.dims,):
        raise DimensionError(f"accumulator length {acc.shape} does not match dims {hv.dims}")
    out = acc.astype(np.int64) + hv.elements()
    if out.size and (out.min() < ACC_MIN or out.max() > ACC_MAX):
        raise OverflowError("bundle accumulator overflowed 32 bits")
    return out.astype(np.int32)


def permute(hv: BipolarHV, k: int) -> BipolarHV:
    """Cyclic shift: out[(i + k) mod d] = hv[i]."""
    bits = unpack_bits(hv.words, hv.dims)
    return BipolarHV(hv.dims, pack_bits(np.roll(bits, k % hv.dims)))


def hamming(a: BipolarHV, b: BipolarHV) -> int:
    _check_dims(a, b)
    return int(np.bitwise_count(a.words ^ b.words).sum())


def _as_values(x) -> np.ndarray:
    if isinstance(x, BipolarHV):
        return x.elements().astype(np.int64)
    return x.values


def dot_similarity(a: BipolarHV | IntegerHV, b: BipolarHV | IntegerHV) -> int:
    _check_dims(a, b)
    if isinstance(a, BipolarHV) and isinstance(b, BipolarHV):
        return a.dims - 2 * hamming(a, b)
    return int(np.dot(_as_values(a), _as_values(b)))


def cosine_similarity(a: BipolarHV | IntegerHV, b: BipolarHV | IntegerHV) -> float:
    _check_dims(a, b)
    va = _as_values(a).astype(np.float64)
    vb = _as_values(b).astype(np.float64)
    na, nb = np.linalg.norm(va), np.linalg.norm(vb)
    if na == 0 or nb == 0:
        raise ZeroNormError("cosine similarity is undefined for an all-zero vector")
    return float(np.clip(dot_similarity(a, b) / (na * nb), -1.0, 1.0))


def hamming_matrix(a_words: np.ndarray, b_words: np.ndarray, backend: str | None = None) -> np.ndarray:
    """Pairwise Hamming distances between stacks of packed vectors."""
    a = np.ascontiguousarray(a_words, dtype=np.uint64)
    b = np.ascontiguousarray(b_words, dtype=np.uint64)
    return _backend.get(backend).hamming_matrix(a, b)


def dot_matrix(a_words: np.ndarray, b_words: np.ndarray, dims: int, backend: str | None = None) -> np.ndarray:
    """Pairwise bipolar dot products via popcount."""
    return dims - 2 * hamming_matrix(a_words, b_words, backend)
