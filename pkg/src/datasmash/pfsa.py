"""Probabilistic finite state automata and their Abelian group algebra.

Machines carry no initial state.  Sampling starts from the stationary
distribution by default; all machines are assumed to live in the strictly
positive, strongly connected class, where every operation here is defined.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from ._backend import kernels
from .symbolic import Alphabet, SymbolStream, as_alphabet

MAX_THETA_DEPTH = 12
ROW_SUM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Pfsa:
    """A PFSA over ``alphabet`` with ``delta[q, s]`` the next state and
    ``morph[q, s]`` the probability of emitting ``s`` from ``q``.

    Construction checks shapes and state indices only; use :func:`validate`
    for the probabilistic invariants.
    """

    alphabet: Alphabet
    delta: np.ndarray
    morph: np.ndarray

    def __post_init__(self):
        alphabet = as_alphabet(self.alphabet)
        delta = np.array(self.delta, dtype=np.int64)
        morph = np.array(self.morph, dtype=float)
        k = alphabet.size
        if delta.ndim != 2 or delta.shape[1] != k or delta.shape[0] < 1:
            raise ValueError(f"delta must have shape (n_states, {k}), got {delta.shape}")
        if morph.shape != delta.shape:
            raise ValueError(f"morph shape {morph.shape} does not match delta {delta.shape}")
        if delta.min() < 0 or delta.max() >= delta.shape[0]:
            raise ValueError("delta refers to a state outside 0..n_states-1")
        if not np.all(np.isfinite(morph)):
            raise ValueError("morph entries must be finite")
        delta.flags.writeable = False
        morph.flags.writeable = False
        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "morph", morph)

    @property
    def k(self) -> int:
        return self.alphabet.size

    @property
    def n_states(self) -> int:
        return int(self.delta.shape[0])

    def transition_matrix(self) -> np.ndarray:
        """State-to-state matrix ``M[i, j]`` summing morph mass from ``i`` into ``j``."""
        n = self.n_states
        m = np.zeros((n, n))
        rows = np.repeat(np.arange(n), self.k)
        np.add.at(m, (rows, self.delta.ravel()), self.morph.ravel())
        return m

    def __repr__(self):
        return f"Pfsa(k={self.k}, n_states={self.n_states}, morph={self.morph.round(4).tolist()})"


def validate(p: Pfsa) -> list[str]:
    """Names of violated invariants; an empty list means the machine is valid."""
    violations = []
    if not np.all(p.morph > 0):
        violations.append("positivity")
    if not np.allclose(p.morph.sum(axis=1), 1.0, rtol=0, atol=ROW_SUM_TOL):
        violations.append("row sums")
    if not is_strongly_connected(p.delta):
        violations.append("strong connectivity")
    return violations


def check(p: Pfsa) -> Pfsa:
    bad = validate(p)
    if bad:
        raise ValueError(f"invalid PFSA: violates {', '.join(bad)}")
    return p


def _reachable(adj: list[list[int]], start: int) -> set[int]:
    seen = {start}
    todo = [start]
    while todo:
        q = todo.pop()
        for r in adj[q]:
            if r not in seen:
                seen.add(r)
                todo.append(r)
    return seen


def is_strongly_connected(delta: np.ndarray) -> bool:
    n = delta.shape[0]
    fwd = [sorted(set(row)) for row in delta.tolist()]
    back: list[list[int]] = [[] for _ in range(n)]
    for q, targets in enumerate(fwd):
        for r in targets:
            back[r].append(q)
    return len(_reachable(fwd, 0)) == n and len(_reachable(back, 0)) == n


def transformation_matrices(p: Pfsa) -> np.ndarray:
    """Array ``G`` of shape ``(k, n, n)`` with ``G[s, i, delta[i, s]] = morph[i, s]``."""
    n, k = p.n_states, p.k
    g = np.zeros((k, n, n))
    rows = np.arange(n)
    for s in range(k):
        g[s, rows, p.delta[:, s]] = p.morph[:, s]
    return g


def stationary_distribution(p: Pfsa) -> np.ndarray:
    """The unique left fixed vector ``w M = w`` of the transition matrix, summing to one."""
    m = p.transition_matrix()
    n = m.shape[0]
    if n == 1:
        return np.ones(1)
    a = m.T - np.eye(n)
    a[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    w = np.linalg.solve(a, b)
    w = np.clip(w, 0.0, None)
    return w / w.sum()


def zero_model(a) -> Pfsa:
    """The one-state flat white noise machine, identity of the group."""
    k = as_alphabet(a).size
    return Pfsa(Alphabet(k), np.zeros((1, k), dtype=np.int64), np.full((1, k), 1.0 / k))


def _same_alphabet(g1: Pfsa, g2: Pfsa):
    if g1.k != g2.k:
        raise ValueError(f"alphabet mismatch: {g1.k} vs {g2.k}")


def _product_states(d1: np.ndarray, d2: np.ndarray) -> tuple[list[tuple[int, int]], np.ndarray]:
    """Breadth-first product states reachable from ``(0, 0)`` and the product delta."""
    k = d1.shape[1]
    index = {(0, 0): 0}
    order = [(0, 0)]
    rows = []
    queue = deque([(0, 0)])
    while queue:
        i, j = queue.popleft()
        row = []
        for s in range(k):
            nxt = (int(d1[i, s]), int(d2[j, s]))
            if nxt not in index:
                index[nxt] = len(order)
                order.append(nxt)
                queue.append(nxt)
            row.append(index[nxt])
        rows.append(row)
    return order, np.array(rows, dtype=np.int64)


def synchronous_compose(g1: Pfsa, g2: Pfsa) -> Pfsa:
    """Product machine on reachable state pairs, emitting with ``g1``'s morph.

    Encodes the same measure as ``g1`` while carrying ``g2``'s structure.
    """
    _same_alphabet(g1, g2)
    order, delta = _product_states(g1.delta, g2.delta)
    morph = g1.morph[[i for i, _ in order]]
    return Pfsa(g1.alphabet, delta, morph)


def _normalized_product(m1: np.ndarray, m2: np.ndarray) -> np.ndarray:
    prod = m1 * m2
    return prod / prod.sum(axis=1, keepdims=True)


def add(g1: Pfsa, g2: Pfsa) -> Pfsa:
    """Group sum: common structure via synchronous composition, then
    row-normalized elementwise product of the morph matrices."""
    _same_alphabet(g1, g2)
    if np.array_equal(g1.delta, g2.delta):
        return Pfsa(g1.alphabet, g1.delta, _normalized_product(g1.morph, g2.morph))
    order, delta = _product_states(g1.delta, g2.delta)
    left = g1.morph[[i for i, _ in order]]
    # g2 (x) g1 visits the swapped pairs; aligning by pair gives g2's rows
    right = g2.morph[[j for _, j in order]]
    return Pfsa(g1.alphabet, delta, _normalized_product(left, right))


def invert(g: Pfsa) -> Pfsa:
    """Group inverse: reciprocal morph entries, row-normalized, same structure."""
    if not np.all(g.morph > 0):
        raise ValueError("inverse requires strictly positive morph entries")
    recip = 1.0 / g.morph
    return Pfsa(g.alphabet, g.delta, recip / recip.sum(axis=1, keepdims=True))


def subtract(g1: Pfsa, g2: Pfsa) -> Pfsa:
    return add(g1, invert(g2))


def pseudo_copy(g: Pfsa, gamma: float) -> np.ndarray:
    """State-to-state matrix ``gamma (I - (1 - gamma) M)^-1 M`` of the copied source.

    Returned as a row-stochastic array, not a labeled machine.
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    m = g.transition_matrix()
    n = m.shape[0]
    out = gamma * np.linalg.solve(np.eye(n) - (1.0 - gamma) * m, m)
    return out


def _next_symbol_levels(g: Pfsa, depth: int) -> Iterable[np.ndarray]:
    """Per length ``d = 0..depth``, the next-symbol distributions after every
    string of length ``d`` (rows in packed-code order)."""
    gammas = transformation_matrices(g)
    states = stationary_distribution(g)[None, :]
    for d in range(depth + 1):
        yield states @ g.morph
        if d == depth:
            break
        # row x*k + s holds the normalized state distribution after x then s
        nxt = np.einsum("ri,sij->rsj", states, gammas).reshape(-1, g.n_states)
        nxt /= nxt.sum(axis=1, keepdims=True)
        states = nxt


def next_symbol_table(g: Pfsa, depth: int) -> np.ndarray:
    """Exact next-symbol distributions after every string of length ``depth``.

    Row ``r`` belongs to the string whose base-k packed code is ``r``.
    """
    if depth < 0:
        raise ValueError(f"depth must be >= 0, got {depth}")
    for d, probs in enumerate(_next_symbol_levels(g, depth)):
        if d == depth:
            return probs
    raise AssertionError("unreachable")


def theta_distance(g1: Pfsa, g2: Pfsa, depth: int) -> float:
    """Truncated model-space distance over all histories of length ``<= depth``.

    Exact for the given depth (no sampling); the omitted tail is at most
    ``k ** -depth``.
    """
    _same_alphabet(g1, g2)
    if not 0 <= depth <= MAX_THETA_DEPTH:
        raise ValueError(f"depth must lie in 0..{MAX_THETA_DEPTH}, got {depth}")
    k = g1.k
    if k ** depth * max(g1.n_states, g2.n_states) > 50_000_000:
        raise ValueError(f"depth {depth} enumerates too many histories for alphabet size {k}")
    total = 0.0
    for d, (p1, p2) in enumerate(zip(_next_symbol_levels(g1, depth), _next_symbol_levels(g2, depth))):
        total += np.abs(p1 - p2).max(axis=1).sum() / float(k) ** (2 * d)
    return (k - 1) / k * total


def sample(p: Pfsa, length: int, seed=None, start="stationary") -> SymbolStream:
    """Draw a sample path of ``length`` symbols.

    ``start`` is ``"stationary"`` or a state index.  Deterministic in ``seed``.
    """
    if length < 0:
        raise ValueError(f"length must be >= 0, got {length}")
    rng = np.random.default_rng(seed)
    if isinstance(start, str):
        if start != "stationary":
            raise ValueError(f"unknown start {start!r}")
        w = stationary_distribution(p)
        q0 = int(min(np.searchsorted(np.cumsum(w), rng.random(), side="right"), p.n_states - 1))
    else:
        q0 = int(start)
        if not 0 <= q0 < p.n_states:
            raise ValueError(f"start state {q0} outside 0..{p.n_states - 1}")
    cum = np.cumsum(p.morph, axis=1)
    cum[:, -1] = 1.0
    uniforms = rng.random(length)
    syms = kernels.sample_path(np.ascontiguousarray(cum), np.ascontiguousarray(p.delta), q0, uniforms)
    return SymbolStream(p.alphabet, syms, validate=False)


def random_pfsa(k: int, n_states: int, seed=None, min_prob: float = 0.05) -> Pfsa:
    """A random strongly connected machine with morph entries ``>= min_prob``.

    Structures are drawn uniformly and rejected until strongly connected;
    morph rows are flat-Dirichlet draws rejected below ``min_prob``.
    """
    if min_prob * k >= 1.0:
        raise ValueError("min_prob too large for the alphabet size")
    rng = np.random.default_rng(seed)
    while True:
        delta = rng.integers(0, n_states, size=(n_states, k))
        if is_strongly_connected(delta):
            break
    rows = []
    while len(rows) < n_states:
        row = rng.dirichlet(np.ones(k))
        if row.min() >= min_prob:
            rows.append(row)
    return Pfsa(Alphabet(k), delta, np.array(rows))


def one_state(probs) -> Pfsa:
    """The i.i.d. source emitting symbol ``s`` with probability ``probs[s]``."""
    probs = np.asarray(probs, dtype=float)
    return Pfsa(Alphabet(len(probs)), np.zeros((1, len(probs)), dtype=np.int64), probs[None, :])


def isomorphic(g1: Pfsa, g2: Pfsa, atol: float = 1e-12) -> bool:
    """Structure and morph equality up to relabeling states, anchored at state 0 of each.

    Valid for strongly connected machines, where every state is reachable
    from state 0.
    """
    if g1.k != g2.k or g1.n_states != g2.n_states:
        return False
    n = g1.n_states
    for anchor in range(n):
        mapping = {0: anchor}
        queue = deque([0])
        ok = True
        while queue and ok:
            q = queue.popleft()
            r = mapping[q]
            if not np.allclose(g1.morph[q], g2.morph[r], rtol=0, atol=atol):
                ok = False
                break
            for s in range(g1.k):
                a, b = int(g1.delta[q, s]), int(g2.delta[r, s])
                if a in mapping:
                    if mapping[a] != b:
                        ok = False
                        break
                else:
                    mapping[a] = b
                    queue.append(a)
        if ok and len(mapping) == n and len(set(mapping.values())) == n:
            return True
    return False


# ---------------------------------------------------------------- text format


def format_pfsa(p: Pfsa) -> str:
    lines = [f"alphabet {p.k}", f"states {p.n_states}"]
    for q in range(p.n_states):
        for s in range(p.k):
            lines.append(f"{q} {s} {int(p.delta[q, s])} {float(p.morph[q, s])!r}")
    return "\n".join(lines) + "\n"


def parse_pfsa(text: str) -> Pfsa:
    """Parse the ``alphabet k`` / ``states n`` / ``from sym to prob`` format."""
    k = n = None
    delta = morph = None
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if k is None:
            if len(parts) != 2 or parts[0] != "alphabet":
                raise ValueError(f"line {lineno}: expected 'alphabet <k>'")
            k = _parse_int(parts[1], lineno, 2)
            continue
        if n is None:
            if len(parts) != 2 or parts[0] != "states":
                raise ValueError(f"line {lineno}: expected 'states <n>'")
            n = _parse_int(parts[1], lineno, 2)
            delta = np.full((n, k), -1, dtype=np.int64)
            morph = np.zeros((n, k))
            continue
        if len(parts) != 4:
            raise ValueError(f"line {lineno}: expected 'from sym to prob', got {len(parts)} fields")
        q = _parse_int(parts[0], lineno, 1)
        s = _parse_int(parts[1], lineno, 2)
        r = _parse_int(parts[2], lineno, 3)
        try:
            prob = float(parts[3])
        except ValueError:
            raise ValueError(f"line {lineno}, field 4: bad probability {parts[3]!r}") from None
        if not (0 <= q < n and 0 <= r < n):
            raise ValueError(f"line {lineno}: state index outside 0..{n - 1}")
        if not 0 <= s < k:
            raise ValueError(f"line {lineno}: symbol outside 0..{k - 1}")
        if (q, s) in seen:
            raise ValueError(f"line {lineno}: duplicate transition for state {q}, symbol {s}")
        seen.add((q, s))
        delta[q, s] = r
        morph[q, s] = prob
    if k is None or n is None:
        raise ValueError("missing 'alphabet' or 'states' header")
    missing = [(q, s) for q in range(n) for s in range(k) if (q, s) not in seen]
    if missing:
        q, s = missing[0]
        raise ValueError(f"transition map is not total: no entry for state {q}, symbol {s}")
    return Pfsa(Alphabet(k), delta, morph)


def _parse_int(tok: str, lineno: int, field: int) -> int:
    try:
        return int(tok)
    except ValueError:
        raise ValueError(f"line {lineno}, field {field}: expected an integer, got {tok!r}") from None


def load_pfsa(path) -> Pfsa:
    with open(path) as fh:
        return parse_pfsa(fh.read())


def save_pfsa(p: Pfsa, path):
    with open(path, "w") as fh:
        fh.write(format_pfsa(p))


__all__ = [
    "Pfsa", "validate", "check", "stationary_distribution", "transformation_matrices",
    "zero_model", "synchronous_compose", "add", "invert", "subtract", "pseudo_copy",
    "theta_distance", "sample", "random_pfsa", "one_state", "isomorphic",
    "format_pfsa", "parse_pfsa", "load_pfsa", "save_pfsa", "is_strongly_connected",
]

