# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops over bit-packed bipolar hypervectors.

Word layout: element ``i`` of a hypervector is bit ``i % 64`` of word
``i // 64``; bit 1 encodes +1 and bit 0 encodes -1.
"""
import numpy as np

from libc.stdint cimport int32_t, int64_t, uint64_t
from libc.string cimport memset

cdef extern from *:
    int popcount64 "__builtin_popcountll"(unsigned long long) nogil


def id_level_accumulate(const uint64_t[:, ::1] id_words,
                        const uint64_t[:, ::1] level_words,
                        const int32_t[:, ::1] level_idx,
                        Py_ssize_t dims):
    """Sum of bind(id[i], level[idx[n, i]]) over features, per sample.

    Bits are counted with bit-sliced ripple counters: plane p of word w holds
    bit p of the running count for each of the 64 lanes of that word.
    """
    cdef Py_ssize_t n_samples = level_idx.shape[0]
    cdef Py_ssize_t n_features = level_idx.shape[1]
    cdef Py_ssize_t n_words = id_words.shape[1]
    cdef Py_ssize_t n_planes = 1
    while (1 << n_planes) <= n_features:
        n_planes += 1
    cdef Py_ssize_t n, i, w, b, p, j
    cdef uint64_t x, carry, t
    cdef int32_t cnt
    cdef const uint64_t* id_row
    cdef const uint64_t* lv_row
    cdef uint64_t* planes_w

    out = np.empty((n_samples, dims), dtype=np.int32)
    planes_arr = np.zeros(n_words * n_planes, dtype=np.uint64)
    cdef int32_t[:, ::1] res = out
    cdef uint64_t[::1] planes = planes_arr
    cdef int32_t nf = <int32_t>n_features

    with nogil:
        for n in range(n_samples):
            memset(&planes[0], 0, n_words * n_planes * sizeof(uint64_t))
            for i in range(n_features):
                id_row = &id_words[i, 0]
                lv_row = &level_words[level_idx[n, i], 0]
                for w in range(n_words):
                    # XNOR: equal signs multiply to +1
                    carry = ~(id_row[w] ^ lv_row[w])
                    planes_w = &planes[w * n_planes]
                    p = 0
                    while carry:
                        t = planes_w[p] & carry
                        planes_w[p] ^= carry
                        carry = t
                        p += 1
            for w in range(n_words):
                planes_w = &planes[w * n_planes]
                for b in range(64):
                    j = w * 64 + b
                    if j >= dims:
                        break
                    cnt = 0
                    for p in range(n_planes):
                        cnt |= <int32_t>((planes_w[p] >> b) & 1) << p
                    res[n, j] = 2 * cnt - nf
    return out


def hamming_matrix(const uint64_t[:, ::1] a, const uint64_t[:, ::1] b):
    """Pairwise Hamming distances between two stacks of packed vectors."""
    cdef Py_ssize_t n_a = a.shape[0], n_b = b.shape[0], n_words = a.shape[1]
    cdef Py_ssize_t i, j, w
    cdef int64_t acc
    if b.shape[1] != n_words:
        raise ValueError("word count mismatch")
    out = np.empty((n_a, n_b), dtype=np.int64)
    cdef int64_t[:, ::1] res = out
    with nogil:
        for i in range(n_a):
            for j in range(n_b):
                acc = 0
                for w in range(n_words):
                    acc += popcount64(a[i, w] ^ b[j, w])
                res[i, j] = acc
    return out
