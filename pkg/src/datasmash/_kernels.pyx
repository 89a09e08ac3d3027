# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the kernels in ``_fallback``.

Signatures and outputs match the fallback exactly; see that module for the
contracts.
"""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport int64_t, uint8_t, uint64_t

cnp.import_array()

DENSE_TABLE_LIMIT = 1 << 20


def sample_path(const double[:, ::1] cum_morph, const int64_t[:, ::1] delta, Py_ssize_t start,
                const double[::1] uniforms):
    cdef Py_ssize_t n = uniforms.shape[0]
    cdef Py_ssize_t k = cum_morph.shape[1]
    out = np.empty(n, dtype=np.uint8)
    cdef uint8_t[::1] o = out
    cdef Py_ssize_t i, j
    cdef Py_ssize_t q = start
    cdef double u
    with nogil:
        for i in range(n):
            u = uniforms[i]
            j = 0
            while j < k - 1 and u >= cum_morph[q, j]:
                j += 1
            o[i] = <uint8_t>j
            q = delta[q, j]
    return out


def match_filter(const uint8_t[::1] a, const uint8_t[::1] b):
    cdef Py_ssize_t m = min(a.shape[0], b.shape[0])
    out = np.empty(m, dtype=np.uint8)
    cdef uint8_t[::1] o = out
    cdef Py_ssize_t i, w = 0
    with nogil:
        for i in range(m):
            if a[i] == b[i]:
                o[w] = a[i]
                w += 1
    return out[:w].copy()


def invert_lockstep(copies, int k):
    if len(copies) != k - 1:
        raise ValueError(f"expected {k - 1} copies, got {len(copies)}")
    cdef Py_ssize_t m = min(arr.shape[0] for arr in copies)
    if m <= 0:
        return np.empty(0, dtype=np.uint8)
    stack = np.ascontiguousarray(np.vstack([arr[:m] for arr in copies]), dtype=np.uint8)
    cdef const uint8_t[:, ::1] st = stack
    out = np.empty(m, dtype=np.uint8)
    cdef uint8_t[::1] o = out
    cdef Py_ssize_t r = k - 1
    cdef Py_ssize_t i, c, w = 0
    cdef uint64_t seen, bit, full = ((<uint64_t>1) << k) - 1
    cdef int missing
    cdef bint ok
    with nogil:
        for i in range(m):
            seen = 0
            ok = True
            for c in range(r):
                bit = (<uint64_t>1) << st[c, i]
                if seen & bit:
                    ok = False
                    break
                seen |= bit
            if ok:
                seen = full & ~seen
                missing = 0
                while not (seen & 1):
                    seen >>= 1
                    missing += 1
                o[w] = <uint8_t>missing
                w += 1
    return out[:w].copy()


def window_codes(const uint8_t[::1] symbols, int64_t k, Py_ssize_t depth):
    cdef Py_ssize_t n = symbols.shape[0] - depth + 1
    if n <= 0:
        return np.empty(0, dtype=np.int64)
    out = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] o = out
    cdef int64_t code = 0, top = 1
    cdef Py_ssize_t i, j
    for j in range(depth - 1):
        top *= k
    with nogil:
        for j in range(depth):
            code = code * k + symbols[j]
        o[0] = code
        for i in range(1, n):
            code = (code - symbols[i - 1] * top) * k + symbols[i + depth - 1]
            o[i] = code
    return out


def ngram_table(const uint8_t[::1] symbols, int64_t k, Py_ssize_t depth):
    cdef Py_ssize_t n = symbols.shape[0] - depth + 1
    if n <= 0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    size = int(k) ** int(depth)
    codes = window_codes(symbols, k, depth)
    if size > DENSE_TABLE_LIMIT:
        keys, counts = np.unique(codes, return_counts=True)
        return keys.astype(np.int64), counts.astype(np.int64)
    dense = np.zeros(size, dtype=np.int64)
    cdef int64_t[::1] d = dense
    cdef const int64_t[::1] cv = codes
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            d[cv[i]] += 1
    keys = np.flatnonzero(dense)
    return keys.astype(np.int64), dense[keys]
