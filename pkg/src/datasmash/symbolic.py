"""Alphabets, symbol streams, overlapping n-gram counts and symbolic derivatives."""

from __future__ import annotations

import string
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ._backend import kernels

#: Text characters for symbols 0, 1, ..., 35.
SYMBOL_CHARS = string.digits + string.ascii_lowercase
MAX_ALPHABET = len(SYMBOL_CHARS)

_CHAR_TO_SYMBOL = {c: i for i, c in enumerate(SYMBOL_CHARS)}


@dataclass(frozen=True)
class Alphabet:
    """Symbols are the integers ``0 .. size - 1``."""

    size: int

    def __post_init__(self):
        if not isinstance(self.size, (int, np.integer)) or isinstance(self.size, bool):
            raise TypeError(f"alphabet size must be an integer, got {self.size!r}")
        if self.size < 2:
            raise ValueError(f"alphabet size must be >= 2, got {self.size}")
        if self.size > MAX_ALPHABET:
            raise ValueError(f"alphabet size must be <= {MAX_ALPHABET}, got {self.size}")
        object.__setattr__(self, "size", int(self.size))

    def __len__(self):
        return self.size


def as_alphabet(a) -> Alphabet:
    return a if isinstance(a, Alphabet) else Alphabet(a)


class SymbolStream:
    """An immutable sequence of symbols over a fixed alphabet.

    Backed by a read-only ``uint8`` array, available as ``.symbols``.
    """

    __slots__ = ("alphabet", "symbols")

    def __init__(self, alphabet, symbols, *, validate: bool = True):
        alphabet = as_alphabet(alphabet)
        arr = np.asarray(symbols)
        if arr.ndim != 1:
            raise ValueError("symbol stream must be one-dimensional")
        if arr.size and validate:
            if not np.issubdtype(arr.dtype, np.integer):
                raise TypeError(f"symbols must be integers, got dtype {arr.dtype}")
            lo, hi = int(arr.min()), int(arr.max())
            if lo < 0 or hi >= alphabet.size:
                raise ValueError(
                    f"symbols must lie in 0..{alphabet.size - 1}, found range {lo}..{hi}"
                )
        if arr.dtype != np.uint8 or arr.flags.writeable:
            arr = arr.astype(np.uint8)  # private copy
        arr.flags.writeable = False
        self.alphabet = alphabet
        self.symbols = arr

    @classmethod
    def from_text(cls, text: str, alphabet=None) -> "SymbolStream":
        """Parse a string of symbol characters (``'0'..'9'``, then ``'a'..``)."""
        try:
            syms = [_CHAR_TO_SYMBOL[c] for c in text]
        except KeyError as exc:
            raise ValueError(f"invalid symbol character {exc.args[0]!r}") from None
        if alphabet is None:
            alphabet = max(max(syms, default=0) + 1, 2)
        return cls(alphabet, np.array(syms, dtype=np.uint8))

    @property
    def k(self) -> int:
        return self.alphabet.size

    def to_text(self) -> str:
        table = np.frombuffer(SYMBOL_CHARS.encode("ascii"), dtype=np.uint8)
        return table[self.symbols].tobytes().decode("ascii")

    def frequencies(self) -> np.ndarray:
        """Empirical symbol frequencies (all zeros for the empty stream)."""
        counts = np.bincount(self.symbols, minlength=self.k).astype(float)
        n = len(self)
        return counts / n if n else counts

    def __len__(self):
        return int(self.symbols.shape[0])

    def __iter__(self):
        return iter(self.symbols.tolist())

    def __getitem__(self, item):
        if isinstance(item, slice):
            return SymbolStream(self.alphabet, self.symbols[item], validate=False)
        return int(self.symbols[item])

    def __eq__(self, other):
        if not isinstance(other, SymbolStream):
            return NotImplemented
        return self.alphabet == other.alphabet and np.array_equal(self.symbols, other.symbols)

    def __hash__(self):
        return hash((self.alphabet.size, self.symbols.tobytes()))

    def __repr__(self):
        head = self.to_text()[:24]
        more = "..." if len(self) > 24 else ""
        return f"SymbolStream(k={self.k}, n={len(self)}, {head!r}{more})"


def _encode(x, k: int) -> tuple[int, int]:
    """Pack a substring into ``(length, code)``."""
    if isinstance(x, str):
        syms = [_CHAR_TO_SYMBOL[c] for c in x]
    else:
        syms = [int(v) for v in x]
    code = 0
    for v in syms:
        if not 0 <= v < k:
            raise ValueError(f"symbol {v} outside alphabet of size {k}")
        code = code * k + v
    return len(syms), code


def decode(code: int, length: int, k: int) -> tuple[int, ...]:
    """Inverse of the packed substring encoding."""
    out = []
    for _ in range(length):
        code, r = divmod(code, k)
        out.append(r)
    return tuple(reversed(out))


class NGramCounts:
    """Overlapping substring counts of one stream, for lengths ``1 .. max_depth``.

    Per length, substrings are stored as sorted base-``k`` packed codes with
    their counts; ``count()`` looks them up by binary search.  The empty
    substring counts ``len(stream)``.
    """

    def __init__(self, alphabet: Alphabet, max_depth: int, length: int, tables):
        self.alphabet = alphabet
        self.max_depth = max_depth
        self.length = length
        self._tables = tables

    @property
    def k(self) -> int:
        return self.alphabet.size

    def table(self, depth: int) -> tuple[np.ndarray, np.ndarray]:
        """``(codes, counts)`` for all substrings of exactly ``depth`` symbols."""
        if not 1 <= depth <= self.max_depth:
            raise ValueError(f"depth {depth} outside 1..{self.max_depth}")
        return self._tables[depth - 1]

    def count(self, x) -> int:
        length, code = _encode(x, self.k)
        if length == 0:
            return self.length
        codes, counts = self.table(length)
        i = int(np.searchsorted(codes, code))
        if i < codes.shape[0] and codes[i] == code:
            return int(counts[i])
        return 0

    __getitem__ = count

    def items(self, depth: int) -> Iterable[tuple[tuple[int, ...], int]]:
        codes, counts = self.table(depth)
        for c, n in zip(codes.tolist(), counts.tolist()):
            yield decode(c, depth, self.k), n

    def as_dict(self, depth: int) -> dict[tuple[int, ...], int]:
        return dict(self.items(depth))


def count_ngrams(s: SymbolStream, max_depth: int) -> NGramCounts:
    """Count every substring of ``s`` of length 1..max_depth, overlaps included."""
    if max_depth < 1:
        raise ValueError(f"max_depth must be >= 1, got {max_depth}")
    k = s.k
    if float(k) ** max_depth >= 2.0 ** 62:
        raise ValueError(f"depth {max_depth} too large to pack for alphabet size {k}")
    tables = [kernels.ngram_table(s.symbols, k, d) for d in range(1, max_depth + 1)]
    return NGramCounts(s.alphabet, max_depth, len(s), tables)


def uniform_vector(a) -> np.ndarray:
    k = as_alphabet(a).size
    return np.full(k, 1.0 / k)


def symbolic_derivative(c: NGramCounts, x) -> np.ndarray | None:
    """Empirical next-symbol distribution after substring ``x``.

    Returns None when ``x`` is never followed by a symbol in the stream.
    """
    length, code = _encode(x, c.k)
    if length + 1 > c.max_depth:
        raise ValueError(f"|x| + 1 = {length + 1} exceeds counted depth {c.max_depth}")
    codes, counts = c.table(length + 1)
    wanted = code * c.k + np.arange(c.k)
    idx = np.searchsorted(codes, wanted)
    hit = idx < codes.shape[0]
    hit[hit] = codes[idx[hit]] == wanted[hit]
    follow = np.zeros(c.k)
    follow[hit] = counts[idx[hit]]
    total = follow.sum()
    if total == 0:
        return None
    return follow / total


def derivative_table(c: NGramCounts, depth: int) -> tuple[np.ndarray, np.ndarray]:
    """All present symbolic derivatives at substrings of length ``depth``.

    Returns ``(prefix_codes, probs)`` where ``probs[i]`` is the derivative at
    the substring packed as ``prefix_codes[i]``.  Substrings never followed
    by a symbol are omitted.
    """
    k = c.k
    codes, counts = c.table(depth + 1)
    if codes.shape[0] == 0:
        return np.empty(0, dtype=np.int64), np.empty((0, k))
    prefixes = codes // k
    syms = codes % k
    uniq, inv = np.unique(prefixes, return_inverse=True)
    mat = np.zeros((uniq.shape[0], k))
    np.add.at(mat, (inv, syms), counts)
    mat /= mat.sum(axis=1, keepdims=True)
    return uniq, mat


def read_streams(lines: Iterable[str], alphabet=None) -> tuple[list[SymbolStream], list[str]]:
    """Parse the stream text format: one stream per line, ``#`` comments.

    A comment of the form ``# label: NAME`` names the following stream;
    unnamed streams are labelled ``s0, s1, ...`` by position.  When
    ``alphabet`` is None it is inferred from the largest symbol present.
    """
    raw: list[tuple[int, str]] = []
    labels: list[str | None] = []
    pending = None
    for lineno, line in enumerate(lines, start=1):
        text = line.strip()
        if not text:
            continue
        if text.startswith("#"):
            body = text[1:].strip()
            if body.lower().startswith("label:"):
                pending = body[6:].strip()
            continue
        for col, ch in enumerate(text, start=1):
            if ch not in _CHAR_TO_SYMBOL:
                raise ValueError(f"line {lineno}, column {col}: invalid symbol character {ch!r}")
        raw.append((lineno, text))
        labels.append(pending)
        pending = None
    if alphabet is None:
        top = max((max(_CHAR_TO_SYMBOL[ch] for ch in t) for _, t in raw if t), default=0)
        alphabet = max(top + 1, 2)
    alphabet = as_alphabet(alphabet)
    streams = []
    for lineno, text in raw:
        for col, ch in enumerate(text, start=1):
            if _CHAR_TO_SYMBOL[ch] >= alphabet.size:
                raise ValueError(f"line {lineno}, column {col}: symbol {ch!r} outside a "
                                 f"{alphabet.size}-symbol alphabet")
        streams.append(SymbolStream.from_text(text, alphabet))
    names = [lab if lab else f"s{i}" for i, lab in enumerate(labels)]
    return streams, names


def write_streams(streams: Sequence[SymbolStream], labels: Sequence[str] | None = None) -> str:
    out = []
    for i, s in enumerate(streams):
        if labels is not None:
            out.append(f"# label: {labels[i]}")
        out.append(s.to_text())
    return "".join(line + "\n" for line in out)
