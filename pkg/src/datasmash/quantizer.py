"""Maximum-entropy quantization of numeric series and alphabet-size selection."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .annihilation import SmashConfig, distance_matrix
from .symbolic import Alphabet, SymbolStream, as_alphabet

DEFAULT_FLOOR = 0.01


def as_series(values) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    if v.ndim != 1:
        raise ValueError("numeric series must be one-dimensional")
    bad = ~np.isfinite(v)
    if bad.any():
        raise ValueError(f"non-finite value at index {int(np.flatnonzero(bad)[0])}")
    return v


def difference_series(values, mode: str = "absolute") -> np.ndarray:
    """Consecutive differences; ``relative`` divides by the magnitude of the predecessor."""
    v = as_series(values)
    if v.shape[0] < 2:
        return np.empty(0)
    d = np.diff(v)
    if mode == "absolute":
        return d
    if mode == "relative":
        prev = v[:-1]
        zero = np.flatnonzero(prev == 0)
        if zero.size:
            raise ValueError(f"relative differencing: zero predecessor at index {int(zero[0])}")
        return d / np.abs(prev)
    raise ValueError(f"unknown differencing mode {mode!r}")


@dataclass(frozen=True)
class Partition:
    """Cut points splitting the real line into ``k`` cells ``(c[i-1], c[i]]``."""

    alphabet: Alphabet
    cuts: tuple[float, ...]

    def __post_init__(self):
        alphabet = as_alphabet(self.alphabet)
        cuts = tuple(float(c) for c in self.cuts)
        if len(cuts) != alphabet.size - 1:
            raise ValueError(f"{alphabet.size} symbols need {alphabet.size - 1} cuts, got {len(cuts)}")
        if not all(math.isfinite(c) for c in cuts):
            raise ValueError("cuts must be finite")
        if any(b <= a for a, b in zip(cuts, cuts[1:])):
            raise ValueError("cuts must be strictly increasing")
        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "cuts", cuts)

    @property
    def k(self) -> int:
        return self.alphabet.size

    def to_text(self) -> str:
        return f"alphabet {self.k}\n" + "".join(f"{c!r}\n" for c in self.cuts)

    @classmethod
    def from_text(cls, text: str) -> "Partition":
        lines = [(n, ln.split("#", 1)[0].strip()) for n, ln in enumerate(text.splitlines(), 1)]
        lines = [(n, ln) for n, ln in lines if ln]
        if not lines:
            raise ValueError("empty partition file")
        n0, head = lines[0]
        parts = head.split()
        if len(parts) != 2 or parts[0] != "alphabet":
            raise ValueError(f"line {n0}: expected 'alphabet <k>'")
        try:
            k = int(parts[1])
        except ValueError:
            raise ValueError(f"line {n0}: bad alphabet size {parts[1]!r}") from None
        cuts = []
        for n, ln in lines[1:]:
            try:
                cuts.append(float(ln))
            except ValueError:
                raise ValueError(f"line {n}: bad cut value {ln!r}") from None
        return cls(Alphabet(k), tuple(cuts))


def fit_max_entropy_partition(corpus: Sequence, k: int) -> Partition:
    """Cuts at the empirical ``i/k`` quantiles of the pooled corpus (type-1, order statistics)."""
    alphabet = as_alphabet(k)
    k = alphabet.size
    pooled = np.sort(np.concatenate([as_series(v) for v in corpus])) if len(corpus) else np.empty(0)
    distinct = np.unique(pooled)
    if distinct.shape[0] < k:
        raise ValueError(f"pooled corpus has {distinct.shape[0]} distinct values, need at least {k}")
    n = pooled.shape[0]
    cuts = []
    for i in range(1, k):
        c = pooled[math.ceil(n * i / k) - 1]
        if cuts and c <= cuts[-1]:
            # ties collapsed this cut onto the previous one
            later = distinct[distinct > cuts[-1]]
            c = later[0]
        cuts.append(float(c))
    if cuts[-1] >= distinct[-1]:
        raise ValueError("ties leave no values above the last cut; use a smaller alphabet")
    return Partition(alphabet, tuple(cuts))


def quantize(values, p: Partition) -> SymbolStream:
    """Map each value to its cell index; a value equal to a cut goes to the lower cell."""
    v = as_series(values)
    syms = np.searchsorted(np.asarray(p.cuts), v, side="left")
    return SymbolStream(p.alphabet, syms.astype(np.uint8), validate=False)


@dataclass(frozen=True)
class SchemeScore:
    k: int
    mean_self_error: float
    mean_discrimination: float
    ratio: float
    min_symbol_freq: float


def evaluate_scheme(corpus: Sequence[SymbolStream], epsilon: float, seed,
                    min_output_symbols: int = 1) -> SchemeScore:
    """Mean self-annihilation error, mean cross error, and their ratio over a symbolic corpus."""
    corpus = list(corpus)
    t = len(corpus)
    if t < 2:
        raise ValueError("need at least two streams to score a scheme")
    cfg = SmashConfig(epsilon=epsilon, seed=seed, min_output_symbols=min_output_symbols)
    dm = distance_matrix(corpus, cfg)
    self_err = float(np.mean(np.diag(dm.E)))
    off = ~np.eye(t, dtype=bool)
    disc = float(dm.E[off].mean())
    ratio = self_err / disc if disc > 0 else math.inf
    pooled = np.bincount(np.concatenate([s.symbols for s in corpus]), minlength=corpus[0].k)
    min_freq = float(pooled.min() / pooled.sum())
    return SchemeScore(corpus[0].k, self_err, disc, ratio, min_freq)


class NoAdmissibleScheme(ValueError):
    def __init__(self, scores):
        self.scores = scores
        detail = "; ".join(f"k={s.k}: min_symbol_freq={s.min_symbol_freq:.4g}" for s in scores.values())
        super().__init__(f"every candidate alphabet violates the frequency floor ({detail})")


def select_alphabet_size(numeric_corpus: Sequence, candidate_sizes: Sequence[int], epsilon: float,
                         seed, floor: float = DEFAULT_FLOOR, mode: str | None = None):
    """Fit, quantize and score each candidate size; return the best partition and all scores.

    The winner minimizes the self-error to discrimination ratio among
    candidates whose rarest pooled symbol frequency is at least ``floor``.
    Ties go to the smaller alphabet.
    """
    series = [as_series(v) for v in numeric_corpus]
    if mode is not None:
        series = [difference_series(v, mode) for v in series]
    scores = {}
    partitions = {}
    for k in sorted(set(int(c) for c in candidate_sizes)):
        part = fit_max_entropy_partition(series, k)
        streams = [quantize(v, part) for v in series]
        partitions[k] = part
        scores[k] = evaluate_scheme(streams, epsilon, seed)
    admissible = [k for k, s in scores.items() if s.min_symbol_freq >= floor]
    if not admissible:
        raise NoAdmissibleScheme(scores)
    best = min(admissible, key=lambda k: (scores[k].ratio, k))
    return partitions[best], scores
