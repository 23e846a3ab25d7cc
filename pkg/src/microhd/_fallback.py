"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``."""

from __future__ import annotations

import numpy as np

# keeps the (chunk, f, d) int8 temporaries around 16 MiB
_CHUNK_ELEMENTS = 1 << 24


def _unpack_signs(words: np.ndarray, dims: int) -> np.ndarray:
    as_bytes = np.ascontiguousarray(words, dtype="<u8").view(np.uint8)
    bits = np.unpackbits(as_bytes, axis=-1, bitorder="little")[..., :dims]
    return (bits.astype(np.int8) << 1) - 1


def id_level_accumulate(
    id_words: np.ndarray, level_words: np.ndarray, level_idx: np.ndarray, dims: int
) -> np.ndarray:
    ids = _unpack_signs(id_words, dims)
    levels = _unpack_signs(level_words, dims)
    n_samples, n_features = level_idx.shape
    out = np.empty((n_samples, dims), dtype=np.int32)
    chunk = max(1, _CHUNK_ELEMENTS // max(1, n_features * dims))
    for start in range(0, n_samples, chunk):
        stop = min(start + chunk, n_samples)
        bound = levels[level_idx[start:stop]]
        bound *= ids
        out[start:stop] = bound.sum(axis=1, dtype=np.int32)
    return out


def hamming_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape[1] != b.shape[1]:
        raise ValueError("word count mismatch")
    out = np.empty((a.shape[0], b.shape[0]), dtype=np.int64)
    chunk = max(1, _CHUNK_ELEMENTS // max(1, b.size))
    for start in range(0, a.shape[0], chunk):
        x = a[start : start + chunk, None, :] ^ b[None, :, :]
        out[start : start + chunk] = np.bitwise_count(x).sum(axis=-1, dtype=np.int64)
    return out
