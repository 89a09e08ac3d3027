import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from datasmash.annihilation import (
    InsufficientData,
    SmashConfig,
    annihilation_efficiency,
    calibrate,
    depth_for_epsilon,
    distance_matrix,
    efficiency_bounds,
    noise_bound,
    self_annihilation_error,
    smash,
    zeta_hat,
)
from datasmash.pfsa import one_state, random_pfsa, sample
from datasmash.stream_ops import fwn_stream, self_annihilate
from datasmash.symbolic import SymbolStream

from conftest import brute_zeta


def test_zeta_alternating():
    assert abs(zeta_hat(SymbolStream.from_text("0101010101", 2), 1) - 0.125) <= 1e-12


def test_zeta_all_zeros():
    s = SymbolStream(2, np.zeros(50, dtype=np.uint8))
    assert abs(zeta_hat(s, 2) - 0.328125) <= 1e-12
    for depth in range(6):
        exact = 0.5 * sum(0.5 / 4**d for d in range(depth + 1))
        assert zeta_hat(s, depth) == pytest.approx(exact, abs=1e-15)


def test_zeta_empty_stream():
    with pytest.raises(InsufficientData, match="insufficient data"):
        zeta_hat(SymbolStream(2, []), 3)


def test_zeta_fwn_small():
    assert zeta_hat(fwn_stream(2, 10**5, 0), 4) <= 0.02


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 4).flatmap(
    lambda k: st.tuples(st.just(k), st.lists(st.integers(0, k - 1), min_size=1, max_size=80))),
    st.integers(0, 4))
def test_zeta_matches_enumeration(data, depth):
    k, syms = data
    z = zeta_hat(SymbolStream(k, syms), depth)
    assert z == pytest.approx(brute_zeta(syms, k, depth), abs=1e-12)
    assert 0.0 <= z <= 1.0


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 4).flatmap(
    lambda k: st.tuples(st.just(k), st.lists(st.integers(0, k - 1), min_size=1, max_size=300))),
    st.integers(0, 6))
def test_zeta_truncation_tail(data, depth):
    k, syms = data
    s = SymbolStream(k, syms)
    assert abs(zeta_hat(s, depth + 2) - zeta_hat(s, depth)) <= k ** -depth


@pytest.mark.parametrize("eps,k,expected", [(0.01, 2, 7), (0.01, 3, 5), (0.5, 2, 1),
                                            (0.05, 2, 5), (0.01, 10, 2), (1e-9, 2, 12)])
def test_depth_for_epsilon(eps, k, expected):
    assert depth_for_epsilon(eps, k) == expected


def test_depth_for_epsilon_rejects():
    with pytest.raises(ValueError):
        depth_for_epsilon(1.0, 2)


@pytest.mark.parametrize("k,expected", [(2, 0.25), (3, 0.074), (4, 0.023)])
def test_efficiency_uniform(k, expected):
    assert round(annihilation_efficiency(np.full(k, 1 / k)), 3) == expected


def test_efficiency_exact_values():
    assert annihilation_efficiency([0.5, 0.5]) == 0.25
    assert annihilation_efficiency(np.full(4, 0.25)) == pytest.approx(6 / 256, abs=1e-15)
    assert annihilation_efficiency([0.7, 0.3]) == pytest.approx(0.21, abs=1e-15)


def test_efficiency_bounds_bracket_value():
    rng = np.random.default_rng(0)
    for _ in range(100):
        k = int(rng.integers(2, 6))
        p = rng.dirichlet(np.ones(k))
        lo, hi = efficiency_bounds(p.min(), k)
        b = annihilation_efficiency(p)
        assert lo - 1e-12 <= b <= hi + 1e-12


@pytest.mark.parametrize("k", [2, 3])
def test_shrinkage_matches_efficiency(k):
    n = 10**6
    out = self_annihilate(fwn_stream(k, n, 10 + k), 20 + k)
    beta = annihilation_efficiency(np.full(k, 1 / k))
    assert abs(len(out) / n - beta) <= 0.1 * beta


def test_shrinkage_skewed_source():
    p = [0.6, 0.3, 0.1]
    n = 10**6
    out = self_annihilate(sample(one_state(p), n, seed=1), 2)
    beta = annihilation_efficiency(p)
    assert abs(len(out) / n - beta) <= 0.1 * beta


def test_smash_same_model(model_a):
    cfg = SmashConfig(epsilon=0.05, seed=1)
    r = smash(sample(model_a, 10**4, seed=1), sample(model_a, 10**4, seed=2), cfg)
    assert r.eps12 < 0.05
    assert r.sufficient1 and r.sufficient2 and r.same_source
    assert r.depth == 5


def test_smash_different_models(model_a, model_b):
    cfg = SmashConfig(epsilon=0.05, seed=1)
    r = smash(sample(model_a, 10**4, seed=1), sample(model_b, 10**4, seed=2), cfg)
    assert abs(r.eps12 - 0.25) <= 0.06
    assert not r.same_source


def test_smash_same_fwn_stream():
    s = fwn_stream(2, 10**5, 3)
    cfg = SmashConfig(epsilon=0.05, seed=4, depth=4)
    r = smash(s, s, cfg)
    bound = noise_bound(calibrate(2, [2 * 10**4], 4, seed=0, trials=200), r.output_lengths[2])
    assert r.eps12 <= bound
    assert r.same_source


def test_smash_flags_short_outputs(model_a):
    cfg = SmashConfig(seed=0, min_output_symbols=100)
    r = smash(sample(model_a, 150, seed=1), sample(model_a, 150, seed=2), cfg)
    assert set(r.short_outputs) == {"eps11", "eps22", "eps12"}
    assert not r.same_source and not r.enough_output
    assert "short=eps11,eps22,eps12" in r.record()


def test_smash_invariants(fig_g):
    r = smash(sample(fig_g, 3000, seed=1), sample(fig_g, 3000, seed=2), SmashConfig(seed=5))
    assert all(0.0 <= e <= 1.0 for e in (r.eps11, r.eps22, r.eps12))
    assert not r.same_source or (r.sufficient1 and r.sufficient2)
    assert r == smash(sample(fig_g, 3000, seed=1), sample(fig_g, 3000, seed=2), SmashConfig(seed=5))


def test_smash_errors():
    with pytest.raises(ValueError, match="2 vs 3"):
        smash(SymbolStream(2, [0, 1]), SymbolStream(3, [0, 1]), SmashConfig())
    with pytest.raises(InsufficientData):
        smash(SymbolStream(2, []), SymbolStream(2, [0, 1]), SmashConfig())


def test_record_is_single_line(model_a):
    r = smash(sample(model_a, 2000, seed=1), sample(model_a, 2000, seed=2), SmashConfig())
    rec = r.record()
    assert "\n" not in rec
    fields = dict(kv.split("=") for kv in rec.split())
    assert float(fields["eps12"]) == pytest.approx(r.eps12, rel=1e-5)


def ab_streams(model_a, model_b, n=10**4):
    return [sample(model_a, n, seed=1), sample(model_a, n, seed=2),
            sample(model_b, n, seed=3), sample(model_b, n, seed=4)]


def test_distance_matrix_blocks(model_a, model_b):
    dm = distance_matrix(ab_streams(model_a, model_b), SmashConfig(seed=1))
    same = [(0, 1), (1, 0), (2, 3), (3, 2)] + [(i, i) for i in range(4)]
    cross = [(i, j) for i in (0, 1) for j in (2, 3)] + [(j, i) for i in (0, 1) for j in (2, 3)]
    assert all(dm.E[c] < 0.05 for c in same)
    assert all(dm.E[c] > 0.15 for c in cross)
    assert np.array_equal(dm.H, dm.H.T)
    assert np.all(np.diag(dm.H) == 0.0)
    assert dm.all_sufficient


def test_distance_matrix_identical_streams():
    s = fwn_stream(2, 2 * 10**4, 5)
    dm = distance_matrix([s, s, s], SmashConfig(seed=2, depth=4))
    bound = noise_bound(calibrate(2, [4000], 4, seed=0, trials=200), int(dm.lengths.min()))
    assert dm.H.max() <= bound


def test_distance_matrix_threads_match_serial(model_a, model_b):
    streams = ab_streams(model_a, model_b, 3000)
    a = distance_matrix(streams, SmashConfig(seed=3))
    b = distance_matrix(streams, SmashConfig(seed=3), threads=4)
    assert np.array_equal(a.E, b.E) and np.array_equal(a.mask, b.mask)


def test_order_invariant_permutation(model_a, model_b):
    streams = ab_streams(model_a, model_b, 3000)
    perm = [2, 0, 3, 1]
    cfg = SmashConfig(seed=7)
    a = distance_matrix(streams, cfg, order_invariant=True)
    b = distance_matrix([streams[i] for i in perm], cfg, order_invariant=True)
    assert np.array_equal(b.E, a.E[np.ix_(perm, perm)])
    assert np.array_equal(b.H, a.H[np.ix_(perm, perm)])
    c = distance_matrix([streams[i] for i in perm], cfg)
    assert np.all(np.abs(c.H - a.H[np.ix_(perm, perm)]) < 0.05)


def test_distance_matrix_mask(model_a):
    streams = [sample(model_a, 10**4, seed=1), sample(model_a, 120, seed=2)]
    dm = distance_matrix(streams, SmashConfig(seed=1))
    assert dm.mask[0, 0] and not dm.mask[1, 1] and not dm.mask[0, 1]
    assert not dm.all_sufficient


def test_distance_matrix_errors():
    with pytest.raises(ValueError):
        distance_matrix([SymbolStream(2, [0, 1])], SmashConfig())
    with pytest.raises(ValueError, match="3 symbols"):
        distance_matrix([SymbolStream(2, [0, 1]), SymbolStream(3, [0, 1])], SmashConfig())


def test_self_error_decays_for_one_state(model_a):
    small = np.mean([self_annihilation_error(sample(model_a, 10**4, seed=i), 5, i)[0] for i in range(5)])
    large = np.mean([self_annihilation_error(sample(model_a, 10**6, seed=i), 5, i)[0] for i in range(5)])
    assert large < small / 4


@pytest.mark.xfail(strict=True, reason="multi-state sources plateau under the stream-level copy; "
                   "see the decisions ledger")
def test_self_error_exponent_shared_across_state_counts():
    def slope(g):
        ns = [10**4, 10**5, 10**6]
        errs = [np.mean([self_annihilation_error(sample(g, n, seed=t), 5, 100 + t)[0] for t in range(3)])
                for n in ns]
        return np.polyfit(np.log(ns), np.log(errs), 1)[0]

    two = random_pfsa(2, 2, seed=11)
    four = random_pfsa(2, 4, seed=12)
    assert -0.6 <= slope(two) <= -0.4
    assert -0.6 <= slope(four) <= -0.4


def test_calibrate_table():
    rows = calibrate(2, [10**4, 2 * 10**4], 4, seed=0, trials=200)
    assert [r["length"] for r in rows] == [10**4, 2 * 10**4]
    for r in rows:
        assert r["p50"] <= r["p90"] <= r["p99"]
    ratio = rows[0]["p50"] / rows[1]["p50"]
    assert abs(ratio - math.sqrt(2)) <= 0.25


def test_calibrate_large_fwn_bound():
    rows = calibrate(2, [10**5], 4, seed=0, trials=1000)
    assert rows[0]["p99"] <= 0.02


def test_calibrate_depth_zero_is_lambda_term():
    rows = calibrate(2, [500], 0, seed=3, trials=100, percentiles=(0, 50, 100))
    stats = sorted(zeta_hat(fwn_stream(2, 500, np.random.Generator(np.random.PCG64(
        np.random.SeedSequence(3, spawn_key=(0, t))))), 0) for t in range(100))
    assert rows[0]["p0"] == stats[0] and rows[0]["p100"] == stats[-1]
    assert rows[0]["p50"] == stats[49]


def test_calibrate_rejects_few_trials():
    with pytest.raises(ValueError):
        calibrate(2, [100], 3, seed=0, trials=99)


def test_noise_bound_lookup():
    table = [{"length": 100, "p99": 0.3}, {"length": 1000, "p99": 0.1}]
    assert noise_bound(table, 50) is None
    assert noise_bound(table, 500) == 0.3
    assert noise_bound(table, 10**6) == 0.1
