"""Deviation from flat white noise, the annihilation circuit, and distance matrices."""

from __future__ import annotations

import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .pfsa import MAX_THETA_DEPTH
from .stream_ops import invert_stream, make_rng, seed_sequence, self_annihilate, sum_streams, fwn_stream
from .symbolic import SymbolStream, as_alphabet, count_ngrams, derivative_table

MIN_DEPTH = 1


class InsufficientData(ValueError):
    """Raised when a stream is too short to estimate anything."""


def depth_for_epsilon(epsilon: float, alphabet) -> int:
    """History depth ``ceil(ln(1/eps) / ln k)``, clamped to ``[1, 12]``."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    k = as_alphabet(alphabet).size
    raw = math.log(1.0 / epsilon) / math.log(k)
    # absorb rounding in exact powers, e.g. ln(100)/ln(10)
    depth = math.ceil(raw - 1e-9)
    return min(max(depth, MIN_DEPTH), MAX_THETA_DEPTH)


def zeta_hat(s: SymbolStream, depth: int) -> float:
    """Weighted sum of sup-norm deviations of symbolic derivatives from uniform.

    Sums over every substring ``x`` with ``|x| <= depth``; substrings never
    followed by a symbol contribute nothing.
    """
    if depth < 0:
        raise ValueError(f"depth must be >= 0, got {depth}")
    if len(s) == 0:
        raise InsufficientData("insufficient data: empty stream")
    k = s.k
    counts = count_ngrams(s, depth + 1)
    total = 0.0
    for d in range(depth + 1):
        _, probs = derivative_table(counts, d)
        if probs.shape[0] == 0:
            break
        total += np.abs(probs - 1.0 / k).max(axis=1).sum() / float(k) ** (2 * d)
    return (k - 1) / k * total


def annihilation_efficiency(p) -> float:
    """Expected residue-to-input length ratio ``(k-1)! * prod(p)`` of self-annihilation."""
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.shape[0] < 2:
        raise ValueError("need a probability vector over at least two symbols")
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError("not a probability vector")
    return math.factorial(p.shape[0] - 1) * float(np.prod(p))


def efficiency_bounds(eta: float, k: int) -> tuple[float, float]:
    """Lower and upper bounds on the efficiency given the rarest-symbol probability ``eta``."""
    lower = math.factorial(k - 1) * eta ** k * (1.0 / eta + 1 - k)
    upper = math.factorial(k - 1) / k ** k
    return lower, upper


@dataclass(frozen=True)
class SmashConfig:
    epsilon: float = 0.05
    seed: int = 0
    depth: int | None = None
    min_output_symbols: int = 100

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.min_output_symbols < 1:
            raise ValueError("min_output_symbols must be >= 1")
        if self.depth is not None and not MIN_DEPTH <= self.depth <= MAX_THETA_DEPTH:
            raise ValueError(f"depth must lie in {MIN_DEPTH}..{MAX_THETA_DEPTH}")

    def depth_for(self, alphabet) -> int:
        return self.depth if self.depth is not None else depth_for_epsilon(self.epsilon, alphabet)


@dataclass(frozen=True)
class SmashResult:
    eps11: float
    eps22: float
    eps12: float
    sufficient1: bool
    sufficient2: bool
    same_source: bool
    output_lengths: tuple[int, int, int]
    short_outputs: tuple[str, ...] = ()
    depth: int = 0

    @property
    def enough_output(self) -> bool:
        return not self.short_outputs

    def record(self) -> str:
        """Single-line ``key=value`` form."""
        fields = {
            "eps11": f"{self.eps11:.6g}",
            "eps22": f"{self.eps22:.6g}",
            "eps12": f"{self.eps12:.6g}",
            "sufficient1": int(self.sufficient1),
            "sufficient2": int(self.sufficient2),
            "same_source": int(self.same_source),
            "len11": self.output_lengths[0],
            "len22": self.output_lengths[1],
            "len12": self.output_lengths[2],
            "depth": self.depth,
            "short": ",".join(self.short_outputs) or "-",
        }
        return " ".join(f"{k}={v}" for k, v in fields.items())


def _residue_error(residue: SymbolStream, depth: int) -> float:
    # an empty residue carries no evidence of annihilation; report the bound
    return zeta_hat(residue, depth) if len(residue) else 1.0


def self_annihilation_error(s: SymbolStream, depth: int, seed) -> tuple[float, int]:
    """Error and residue length of annihilating ``s`` against its own anti-stream."""
    residue = self_annihilate(s, seed)
    return _residue_error(residue, depth), len(residue)


def cross_error(s1: SymbolStream, s2: SymbolStream, depth: int, seed) -> tuple[float, int]:
    """Error and residue length of summing ``s1`` with an anti-stream of ``s2``."""
    if s1.alphabet != s2.alphabet:
        raise ValueError(f"alphabet mismatch: {s1.k} vs {s2.k}")
    residue = sum_streams(s1, invert_stream(s2, seed))
    return _residue_error(residue, depth), len(residue)


def _check_pair(s1: SymbolStream, s2: SymbolStream):
    if s1.alphabet != s2.alphabet:
        raise ValueError(f"alphabet mismatch: {s1.k} vs {s2.k}")
    if len(s1) == 0 or len(s2) == 0:
        raise InsufficientData("insufficient data: empty input stream")


def smash(s1: SymbolStream, s2: SymbolStream, cfg: SmashConfig) -> SmashResult:
    """Run the annihilation circuit on one pair of streams."""
    _check_pair(s1, s2)
    depth = cfg.depth_for(s1.alphabet)
    e11, n11 = self_annihilation_error(s1, depth, seed_sequence(cfg.seed, 1))
    e22, n22 = self_annihilation_error(s2, depth, seed_sequence(cfg.seed, 2))
    e12, n12 = cross_error(s1, s2, depth, seed_sequence(cfg.seed, 0))
    lengths = (n11, n22, n12)
    short = tuple(name for name, n in zip(("eps11", "eps22", "eps12"), lengths)
                  if n < cfg.min_output_symbols)
    ok1 = e11 <= cfg.epsilon and "eps11" not in short
    ok2 = e22 <= cfg.epsilon and "eps22" not in short
    same = ok1 and ok2 and e12 <= cfg.epsilon and "eps12" not in short
    return SmashResult(e11, e22, e12, ok1, ok2, same, lengths, short, depth)


@dataclass
class DistanceMatrices:
    """``E`` holds self errors on the diagonal and cross errors off it;
    ``H`` is ``E`` symmetrized with a zero diagonal.  ``mask[i, j]`` is True
    where the cell's residue reached ``min_output_symbols``."""

    E: np.ndarray
    H: np.ndarray
    mask: np.ndarray
    lengths: np.ndarray = field(repr=False)

    @property
    def all_sufficient(self) -> bool:
        return bool(self.mask.all())


def _content_key(s: SymbolStream) -> int:
    digest = hashlib.blake2b(s.symbols.tobytes(), digest_size=8, person=b"datasmash").digest()
    return int.from_bytes(digest, "little") ^ s.k


def distance_matrix(streams: Sequence[SymbolStream], cfg: SmashConfig, threads: int = 1,
                    order_invariant: bool = False) -> DistanceMatrices:
    """Pairwise annihilation errors for a list of streams.

    Cell seeds derive from ``cfg.seed`` and the pair of stream positions, or
    of stream contents when ``order_invariant`` is set, so reordering the
    input permutes the result bit-for-bit.
    """
    streams = list(streams)
    t = len(streams)
    if t < 2:
        raise ValueError("need at least two streams")
    alphabet = streams[0].alphabet
    for i, s in enumerate(streams):
        if s.alphabet != alphabet:
            raise ValueError(f"alphabet mismatch: stream {i} has {s.k} symbols, stream 0 has {alphabet.size}")
        if len(s) == 0:
            raise InsufficientData(f"insufficient data: stream {i} is empty")
    depth = cfg.depth_for(alphabet)
    keys = [_content_key(s) for s in streams] if order_invariant else list(range(t))

    def cell(ij):
        i, j = ij
        ss = seed_sequence(cfg.seed, keys[i] % 2**63, keys[j] % 2**63)
        if i == j:
            return self_annihilation_error(streams[i], depth, ss)
        return cross_error(streams[i], streams[j], depth, ss)

    cells = [(i, j) for i in range(t) for j in range(t)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(cell, cells))
    else:
        results = [cell(c) for c in cells]
    e = np.empty((t, t))
    lengths = np.empty((t, t), dtype=np.int64)
    for (i, j), (err, n) in zip(cells, results):
        e[i, j] = err
        lengths[i, j] = n
    h = (e + e.T) / 2.0
    np.fill_diagonal(h, 0.0)
    mask = lengths >= cfg.min_output_symbols
    return DistanceMatrices(e, h, mask, lengths)


def calibrate(alphabet, lengths: Sequence[int], depth: int, seed, trials: int = 1000,
              percentiles: Sequence[float] = (50, 90, 99)) -> list[dict]:
    """Percentiles of the FWN deviation estimate over ``trials`` seeded FWN streams per length."""
    if trials < 100:
        raise ValueError(f"trials must be >= 100, got {trials}")
    a = as_alphabet(alphabet)
    rows = []
    for li, n in enumerate(lengths):
        vals = np.array([zeta_hat(fwn_stream(a, n, make_rng(seed, li, t)), depth) for t in range(trials)])
        row = {"length": int(n), "depth": depth}
        for q in percentiles:
            row[f"p{q:g}"] = float(np.percentile(vals, q, method="inverted_cdf"))
        rows.append(row)
    return rows


def noise_bound(calibration: Sequence[dict], length: int, column: str = "p99") -> float | None:
    """Calibrated FWN bound for the largest calibrated length not exceeding ``length``."""
    usable = [r for r in calibration if r["length"] <= length]
    if not usable:
        return None
    return float(max(usable, key=lambda r: r["length"])[column])
