"""ID-level and non-linear projection encoders.

Both encoders map f real features to a bipolar hypervector of d elements.
Batch encoders return dense int8 (N, d) arrays of +/-1, which is what the
training code multiplies against class hypervectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from microhd import _backend
from microhd.hv import (
    BipolarHV,
    DimensionError,
    int_range,
    n_words,
    pack_bits,
    random_bipolar_words,
    unpack_bits,
    unpack_signs,
)
from microhd.rng import Rng

NONLINEARITIES = ("sign",)


def flip_count(dims: int, levels: int) -> int:
    """Bits flipped between consecutive level hypervectors."""
    return max(1, dims // (2 * (levels - 1)))


@dataclass(frozen=True, eq=False)
class IdLevelCodebook:
    """f random ID hypervectors plus a chain of l correlated level hypervectors.

    Features are discretized between the global bounds ``low`` and ``high``;
    inputs are expected to be min-max normalized per feature beforehand, so
    the defaults (0, 1) correspond to per-feature training-split bounds.
    """

    dims: int
    id_words: np.ndarray
    level_words: np.ndarray
    flip_count: int
    low: float = 0.0
    high: float = 1.0

    def __post_init__(self):
        for name in ("id_words", "level_words"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.uint64)
            if arr.ndim != 2 or arr.shape[1] != n_words(self.dims):
                raise DimensionError(f"{name} must have shape (n, {n_words(self.dims)})")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_features(self) -> int:
        return self.id_words.shape[0]

    @property
    def n_levels(self) -> int:
        return self.level_words.shape[0]

    def id_hv(self, i: int) -> BipolarHV:
        return BipolarHV(self.dims, self.id_words[i])

    def level_hv(self, k: int) -> BipolarHV:
        return BipolarHV(self.dims, self.level_words[k])

    def __eq__(self, other) -> bool:
        if not isinstance(other, IdLevelCodebook):
            return NotImplemented
        return (
            self.dims == other.dims
            and self.flip_count == other.flip_count
            and self.low == other.low
            and self.high == other.high
            and np.array_equal(self.id_words, other.id_words)
            and np.array_equal(self.level_words, other.level_words)
        )


@dataclass(frozen=True, eq=False)
class ProjectionMatrix:
    """d x f signed integer matrix at bitwidth q, row-major."""

    values: np.ndarray
    bitwidth: int

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.int32)
        if values.ndim != 2 or 0 in values.shape:
            raise DimensionError("projection matrix must be a non-empty 2-D array")
        lo, hi = int_range(self.bitwidth)
        if values.min() < lo or values.max() > hi:
            raise ValueError(f"projection elements exceed the {self.bitwidth}-bit range")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    dims = rows
    n_features = cols

    def __eq__(self, other) -> bool:
        if not isinstance(other, ProjectionMatrix):
            return NotImplemented
        return self.bitwidth == other.bitwidth and np.array_equal(self.values, other.values)


@dataclass(frozen=True, eq=False)
class EncodedSample:
    hv: BipolarHV
    acc: np.ndarray | None = None


def make_id_level_codebook(f: int, d: int, l: int, rng: Rng, low: float = 0.0, high: float = 1.0) -> IdLevelCodebook:
    """Random ID vectors and a level chain built by successive bit flips.

    Each step flips ``m = floor(d / (2(l-1)))`` positions.  Positions are
    taken from a single random permutation of the d dimensions, so no
    position is flipped twice while the permutation lasts; level 0 and
    level k then differ in exactly k*m positions.
    """
    if f < 1 or d < 1:
        raise DimensionError(f"f and d must be >= 1 (got f={f}, d={d})")
    if l < 2:
        raise ValueError(f"at least two levels are required, got l={l}")
    m = flip_count(d, l)
    id_words = random_bipolar_words(f, d, rng.child("id"))
    level_rng = rng.child("level")
    bits = unpack_bits(random_bipolar_words(1, d, level_rng)[0], d).copy()
    levels = np.empty((l, d), dtype=np.uint8)
    levels[0] = bits
    order = level_rng.generator.permutation(d)
    cursor = 0
    for k in range(1, l):
        if cursor + m > d:
            # only reachable when m = 1 and l - 1 > d
            order = level_rng.generator.permutation(d)
            cursor = 0
        bits[order[cursor : cursor + m]] ^= 1
        cursor += m
        levels[k] = bits
    return IdLevelCodebook(d, id_words, pack_bits(levels), m, float(low), float(high))


def discretize_feature(x: float, lo: float, hi: float, l: int) -> int:
    if hi <= lo:
        return 0
    idx = math.floor((x - lo) / (hi - lo) * l)
    return min(max(idx, 0), l - 1)


def discretize(samples: np.ndarray, lo: float, hi: float, l: int) -> np.ndarray:
    """Vectorized :func:`discretize_feature`; returns int32 level indices."""
    samples = np.asarray(samples, dtype=np.float64)
    if hi <= lo:
        return np.zeros(samples.shape, dtype=np.int32)
    idx = np.floor((samples - lo) / (hi - lo) * l)
    return np.clip(idx, 0, l - 1).astype(np.int32)


def _check_features(samples: np.ndarray, f: int) -> np.ndarray:
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim == 1:
        samples = samples[None, :]
    if samples.ndim != 2 or samples.shape[1] != f:
        raise DimensionError(f"expected samples with {f} features, got shape {samples.shape}")
    return samples


def id_level_accumulate(samples: np.ndarray, cb: IdLevelCodebook, backend: str | None = None) -> np.ndarray:
    """Pre-sign bundles sum_i bind(ID_i, L[level(x_i)]) as int32 (N, d)."""
    samples = _check_features(samples, cb.n_features)
    idx = np.ascontiguousarray(discretize(samples, cb.low, cb.high, cb.n_levels))
    return _backend.get(backend).id_level_accumulate(cb.id_words, cb.level_words, idx, cb.dims)


def encode_id_level_batch(samples: np.ndarray, cb: IdLevelCodebook, backend: str | None = None) -> np.ndarray:
    acc = id_level_accumulate(samples, cb, backend)
    return np.where(acc >= 0, 1, -1).astype(np.int8)


def encode_id_level(sample, cb: IdLevelCodebook, keep_acc: bool = False) -> EncodedSample:
    acc = id_level_accumulate(np.asarray(sample, dtype=np.float64).reshape(1, -1), cb)[0]
    return EncodedSample(BipolarHV(cb.dims, pack_bits(acc >= 0)), acc if keep_acc else None)


def make_projection(f: int, d: int, q: int, rng: Rng) -> ProjectionMatrix:
    """Discretized standard-Gaussian projection at bitwidth q.

    Draws are scaled by (2^(q-1) - 1) / 3, rounded half-to-even and clamped.
    At q = 1 the matrix is bipolar: the sign of each draw, with 0 -> +1.
    """
    if f < 1 or d < 1:
        raise DimensionError(f"f and d must be >= 1 (got f={f}, d={d})")
    if not 1 <= q <= 16:
        raise ValueError(f"projection bitwidth must be in [1, 16], got {q}")
    g = rng.child("projection").generator.standard_normal((d, f))
    if q == 1:
        return ProjectionMatrix(np.where(g >= 0, 1, -1), 1)
    lo, hi = int_range(q)
    scale = (2 ** (q - 1) - 1) / 3.0
    return ProjectionMatrix(np.clip(np.rint(g * scale), lo, hi), q)


def projection_accumulate(samples: np.ndarray, pm: ProjectionMatrix) -> np.ndarray:
    """P @ x for every sample, in float64; shape (N, d)."""
    samples = _check_features(samples, pm.cols)
    return samples @ pm.values.T.astype(np.float64)


def encode_projection_batch(samples: np.ndarray, pm: ProjectionMatrix, nonlinearity: str = "sign") -> np.ndarray:
    if nonlinearity not in NONLINEARITIES:
        raise ValueError(f"unsupported nonlinearity {nonlinearity!r}; available: {NONLINEARITIES}")
    acc = projection_accumulate(samples, pm)
    return np.where(acc >= 0, 1, -1).astype(np.int8)


def encode_projection(sample, pm: ProjectionMatrix, keep_acc: bool = False) -> EncodedSample:
    acc = projection_accumulate(np.asarray(sample, dtype=np.float64).reshape(1, -1), pm)[0]
    return EncodedSample(BipolarHV(pm.rows, pack_bits(acc >= 0)), acc if keep_acc else None)


Encoder = IdLevelCodebook | ProjectionMatrix


def encode_batch(samples: np.ndarray, encoder: Encoder, backend: str | None = None) -> np.ndarray:
    """Dense +/-1 int8 encodings of every sample."""
    if isinstance(encoder, IdLevelCodebook):
        return encode_id_level_batch(samples, encoder, backend)
    return encode_projection_batch(samples, encoder)


def encoder_dims(encoder: Encoder) -> int:
    return encoder.dims


def level_similarity_profile(cb: IdLevelCodebook) -> np.ndarray:
    """Normalized dot of level 0 against every level."""
    levels = unpack_signs(cb.level_words, cb.dims).astype(np.int64)
    return levels @ levels[0] / cb.dims
