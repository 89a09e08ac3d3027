"""Selective-erasure stream operations: copy, inversion, summation, and FWN.

None of these look at a model.  Randomness comes from numpy's PCG64 bit
generator seeded through :class:`numpy.random.SeedSequence`; an integer
seed, a ``SeedSequence`` or a ``Generator`` is accepted wherever a seed is.
"""

from __future__ import annotations

import numpy as np

from ._backend import kernels
from .symbolic import SymbolStream, as_alphabet


def seed_sequence(seed, *lane: int) -> np.random.SeedSequence:
    """A seed sequence for ``seed`` on the substream keyed by ``lane``.

    Distinct lanes of one seed give statistically independent streams.
    """
    if isinstance(seed, np.random.SeedSequence):
        if not lane:
            return seed
        return np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + lane)
    if seed is None:
        raise ValueError("a seed is required")
    return np.random.SeedSequence(int(seed), spawn_key=lane)


def make_rng(seed, *lane: int) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        if lane:
            raise TypeError("lanes need an integer seed or SeedSequence, not a Generator")
        return seed
    return np.random.Generator(np.random.PCG64(seed_sequence(seed, *lane)))


def _lanes(seed, n: int) -> list[np.random.Generator]:
    if isinstance(seed, np.random.Generator):
        return seed.spawn(n)
    return [make_rng(seed, i) for i in range(n)]


def fwn_stream(alphabet, length: int, seed) -> SymbolStream:
    """I.i.d. uniform symbols."""
    a = as_alphabet(alphabet)
    if length < 0:
        raise ValueError(f"length must be >= 0, got {length}")
    syms = make_rng(seed).integers(0, a.size, size=length, dtype=np.uint8)
    return SymbolStream(a, syms, validate=False)


def independent_copy(s: SymbolStream, seed) -> SymbolStream:
    """Keep each symbol of ``s`` where a fresh FWN stream agrees with it.

    Both read positions advance on every step, so about ``1/k`` of the input
    survives.
    """
    noise = fwn_stream(s.alphabet, len(s), seed)
    return SymbolStream(s.alphabet, kernels.match_filter(s.symbols, noise.symbols), validate=False)


def invert_stream(s: SymbolStream, seed) -> SymbolStream:
    """Anti-stream of ``s``: sample path of the inverse of its hidden source.

    Makes ``k - 1`` independent copies on disjoint random lanes and, in
    lockstep, emits the one symbol absent from them whenever they are
    pairwise distinct.
    """
    k = s.k
    copies = [independent_copy(s, rng).symbols for rng in _lanes(seed, k - 1)]
    return SymbolStream(s.alphabet, kernels.invert_lockstep(copies, k), validate=False)


def sum_streams(s1: SymbolStream, s2: SymbolStream) -> SymbolStream:
    """Lockstep scan to the shorter length, emitting the symbol wherever both agree."""
    if s1.alphabet != s2.alphabet:
        raise ValueError(f"alphabet mismatch: {s1.k} vs {s2.k}")
    return SymbolStream(s1.alphabet, kernels.match_filter(s1.symbols, s2.symbols), validate=False)


def self_annihilate(s: SymbolStream, seed) -> SymbolStream:
    """Residue of summing an independent copy of ``s`` with an anti-stream of ``s``."""
    copy_rng, inv_rng = _lanes(seed, 2)
    return sum_streams(independent_copy(s, copy_rng), invert_stream(s, inv_rng))
