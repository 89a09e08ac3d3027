import itertools

import numpy as np
import pytest

from datasmash.pfsa import Pfsa, one_state


@pytest.fixture
def model_a():
    return one_state([0.7, 0.3])


@pytest.fixture
def model_b():
    return one_state([0.9, 0.1])


@pytest.fixture
def fig_g():
    """Two-state machine: q0 -0|.3-> q0, q0 -1|.7-> q1, q1 -1|.9-> q1, q1 -0|.1-> q0."""
    return Pfsa(2, [[0, 1], [0, 1]], [[0.3, 0.7], [0.1, 0.9]])


@pytest.fixture
def three_state():
    """Three-state machine over two symbols with a rotating structure."""
    return Pfsa(2, [[2, 1], [0, 2], [1, 0]], [[0.8, 0.2], [0.7, 0.3], [0.6, 0.4]])


def brute_counts(symbols, depth):
    """Overlapping substring counts by explicit window enumeration."""
    out = {}
    s = list(symbols)
    for d in range(1, depth + 1):
        for i in range(len(s) - d + 1):
            key = tuple(s[i:i + d])
            out[key] = out.get(key, 0) + 1
    return out


def brute_zeta(symbols, k, depth):
    """Deviation estimate by enumerating every string up to ``depth``."""
    counts = brute_counts(symbols, depth + 1)
    total = 0.0
    for d in range(depth + 1):
        for x in itertools.product(range(k), repeat=d):
            follow = [counts.get(x + (c,), 0) for c in range(k)]
            n = sum(follow)
            if n == 0:
                continue
            dev = max(abs(f / n - 1.0 / k) for f in follow)
            total += dev / k ** (2 * d)
    return (k - 1) / k * total
