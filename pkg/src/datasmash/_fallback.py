"""Pure-Python/numpy implementations of the hot kernels.

Every function here has a twin in ``_kernels.pyx`` with the same signature
and bit-identical output for identical inputs.  All randomness is drawn by
the caller, so the kernels themselves are deterministic.
"""

import numpy as np

# Dense counting tables are used below this many cells; sort-based above.
DENSE_TABLE_LIMIT = 1 << 20


def sample_path(cum_morph, delta, start, uniforms):
    """Walk a PFSA, consuming one uniform draw per emitted symbol.

    ``cum_morph`` holds per-state cumulative morph rows whose last column
    is exactly 1.0.  The symbol emitted from state ``q`` for draw ``u`` is
    the first ``j`` with ``u < cum_morph[q, j]``.
    """
    n = uniforms.shape[0]
    out = np.empty(n, dtype=np.uint8)
    if n == 0:
        return out
    if cum_morph.shape[0] == 1:
        # one state: no sequential dependence
        row = cum_morph[0]
        return np.searchsorted(row, uniforms, side="right").astype(np.uint8)
    k = cum_morph.shape[1]
    cum = cum_morph.tolist()
    nxt = delta.tolist()
    q = int(start)
    for i, u in enumerate(uniforms.tolist()):
        row = cum[q]
        j = 0
        while j < k - 1 and u >= row[j]:
            j += 1
        out[i] = j
        q = nxt[q][j]
    return out


def match_filter(a, b):
    """Lockstep scan of two streams, keeping ``a``'s symbol where they agree."""
    m = min(a.shape[0], b.shape[0])
    a = a[:m]
    return a[a == b[:m]].astype(np.uint8, copy=False)


def invert_lockstep(copies, k):
    """Emit the missing symbol wherever ``k - 1`` lockstep copies are pairwise distinct."""
    if len(copies) != k - 1:
        raise ValueError(f"expected {k - 1} copies, got {len(copies)}")
    m = min(c.shape[0] for c in copies)
    if m == 0:
        return np.empty(0, dtype=np.uint8)
    if k == 2:
        return (1 - copies[0][:m]).astype(np.uint8)
    stack = np.vstack([c[:m] for c in copies]).astype(np.int64)
    stack.sort(axis=0)
    distinct = np.all(np.diff(stack, axis=0) != 0, axis=0)
    missing = k * (k - 1) // 2 - stack.sum(axis=0)
    return missing[distinct].astype(np.uint8)


def window_codes(symbols, k, depth):
    """Base-``k`` packed code of every length-``depth`` window, most significant first."""
    n = symbols.shape[0] - depth + 1
    if n <= 0:
        return np.empty(0, dtype=np.int64)
    codes = symbols[:n].astype(np.int64)
    for j in range(1, depth):
        codes *= k
        codes += symbols[j:j + n]
    return codes


def ngram_table(symbols, k, depth):
    """Sorted distinct window codes of length ``depth`` and their overlapping counts."""
    codes = window_codes(symbols, k, depth)
    if codes.shape[0] == 0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    size = k ** depth
    if size <= DENSE_TABLE_LIMIT:
        dense = np.bincount(codes, minlength=size)
        keys = np.flatnonzero(dense)
        return keys.astype(np.int64), dense[keys].astype(np.int64)
    keys, counts = np.unique(codes, return_counts=True)
    return keys.astype(np.int64), counts.astype(np.int64)
