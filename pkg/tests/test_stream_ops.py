import numpy as np
import pytest

from datasmash.annihilation import zeta_hat
from datasmash.pfsa import one_state, sample
from datasmash.stream_ops import (
    fwn_stream,
    independent_copy,
    invert_stream,
    make_rng,
    seed_sequence,
    self_annihilate,
    sum_streams,
)
from datasmash.symbolic import SymbolStream


def reference_copy(s, rng):
    noise = rng.integers(0, s.k, size=len(s), dtype=np.uint8)
    return [int(a) for a, b in zip(s.symbols, noise) if a == b]


def reference_invert(s, seed):
    """General lockstep algorithm with explicit sets, for any alphabet size."""
    k = s.k
    copies = [reference_copy(s, make_rng(seed, i)) for i in range(k - 1)]
    out = []
    for column in zip(*copies):
        if len(set(column)) == k - 1:
            (missing,) = set(range(k)) - set(column)
            out.append(missing)
    return out


def test_fwn_empty_and_frequencies():
    assert len(fwn_stream(2, 0, 1)) == 0
    s = fwn_stream(2, 10**5, 1)
    assert abs(s.frequencies()[0] - 0.5) <= 0.01


def test_fwn_deviation_small():
    assert zeta_hat(fwn_stream(2, 10**5, 4), 4) <= 0.02


def test_seed_is_required():
    with pytest.raises(ValueError):
        fwn_stream(2, 10, None)


def test_lanes_are_distinct_and_reproducible():
    a = make_rng(3, 0).integers(0, 2**32, 8)
    b = make_rng(3, 1).integers(0, 2**32, 8)
    assert not np.array_equal(a, b)
    assert np.array_equal(a, make_rng(seed_sequence(3), 0).integers(0, 2**32, 8))


def test_copy_empty():
    assert len(independent_copy(SymbolStream(2, []), 0)) == 0


def test_copy_matches_reference_loop():
    s = sample(one_state([0.2, 0.5, 0.3]), 5000, seed=1)
    assert independent_copy(s, 8).symbols.tolist() == reference_copy(s, make_rng(8))


def test_copy_length_concentrates():
    n = 10**5
    out = independent_copy(fwn_stream(2, n, 2), 3)
    assert abs(len(out) - n / 2) <= 3 * np.sqrt(n * 0.25)


def test_copy_preserves_one_state_law(model_a):
    s = sample(model_a, 4 * 10**4, seed=12)
    out = independent_copy(s, 13)
    assert len(out) >= 10**4
    assert abs(out.frequencies()[0] - 0.7) <= 0.02


def test_copy_length_over_many_seeds():
    s = sample(one_state([0.2, 0.3, 0.5]), 3000, seed=0)
    lengths = np.array([len(independent_copy(s, i)) for i in range(300)])
    expected, sd = 1000.0, np.sqrt(3000 * (1 / 3) * (2 / 3) / 300)
    assert abs(lengths.mean() - expected) <= 3 * sd


@pytest.mark.parametrize("k", [2, 3, 4, 5])
def test_invert_matches_general_set_algorithm(k):
    s = sample(one_state(np.full(k, 1.0 / k)), 4000, seed=k)
    assert invert_stream(s, 21).symbols.tolist() == reference_invert(s, 21)


def test_invert_binary_is_complemented_copy():
    s = fwn_stream(2, 2000, 6)
    copy = independent_copy(s, make_rng(30, 0))
    assert invert_stream(s, 30).symbols.tolist() == (1 - copy.symbols).tolist()


def test_invert_one_state_law(model_a):
    s = sample(model_a, 5 * 10**4, seed=4)
    out = invert_stream(s, 5)
    assert len(out) >= 10**4
    assert abs(out.frequencies()[0] - 0.3) <= 0.02


def test_invert_ternary_one_state_law():
    p = np.array([0.5, 0.3, 0.2])
    s = sample(one_state(p), 4 * 10**5, seed=4)
    out = invert_stream(s, 5)
    inv = (1 / p) / (1 / p).sum()
    assert len(out) >= 10**4
    np.testing.assert_allclose(out.frequencies(), inv, atol=0.02)


def test_invert_fwn_stays_fwn():
    out = invert_stream(fwn_stream(2, 4 * 10**4, 8), 9)
    assert len(out) >= 10**4
    assert zeta_hat(out, 4) <= 0.03


def test_sum_identical_streams():
    s = fwn_stream(3, 100, 0)
    assert sum_streams(s, s[:60]) == s[:60]


def test_sum_hand_trace():
    a, b = SymbolStream.from_text("0101", 2), SymbolStream.from_text("0011", 2)
    assert sum_streams(a, b).to_text() == "01"


def test_sum_alphabet_mismatch():
    with pytest.raises(ValueError, match="2 vs 3"):
        sum_streams(SymbolStream(2, [0]), SymbolStream(3, [0]))


def test_sum_length_matches_collision_rate():
    p, q = np.array([0.7, 0.3]), np.array([0.4, 0.6])
    n, reps = 2000, 200
    lengths = [len(sum_streams(sample(one_state(p), n, seed=2 * i), sample(one_state(q), n, seed=2 * i + 1)))
               for i in range(reps)]
    r = float(p @ q)
    assert abs(np.mean(lengths) - r * n) <= 3 * np.sqrt(n * r * (1 - r) / reps)


def test_annihilating_two_state_source(fig_g):
    n = 10**6
    s1 = sample(fig_g, n, seed=41)
    s2 = sample(fig_g, n, seed=42)
    residue = sum_streams(s1, invert_stream(s2, 43))
    assert zeta_hat(residue, 7) <= 0.05


def test_distinct_models_stay_distinct(model_a, model_b):
    a1, a2 = sample(model_a, 10**4, seed=1), sample(model_a, 10**4, seed=2)
    b = sample(model_b, 10**4, seed=3)
    same = zeta_hat(sum_streams(a1, invert_stream(a2, 4)), 5)
    cross = zeta_hat(sum_streams(a1, invert_stream(b, 4)), 5)
    assert cross >= 5 * same


def test_operations_are_deterministic(fig_g):
    s = sample(fig_g, 5000, seed=1)
    assert independent_copy(s, 2) == independent_copy(s, 2)
    assert invert_stream(s, 2) == invert_stream(s, 2)
    assert self_annihilate(s, 2) == self_annihilate(s, 2)
    assert self_annihilate(s, 2) != self_annihilate(s, 3)
