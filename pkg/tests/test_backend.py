"""The compiled kernels must reproduce the numpy fallback exactly."""

import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from datasmash import _fallback
from datasmash._backend import BACKEND, compiled_kernels

compiled = compiled_kernels()
needs_compiled = pytest.mark.skipif(compiled is None, reason="compiled kernels not built")

symbol_arrays = st.integers(2, 6).flatmap(
    lambda k: st.tuples(st.just(k), st.lists(st.integers(0, k - 1), max_size=300).map(
        lambda xs: np.array(xs, dtype=np.uint8))))


def test_env_var_forces_fallback():
    env = dict(os.environ, DATASMASH_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import datasmash; print(datasmash.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_backend_reports_compiled_when_built():
    if os.environ.get("DATASMASH_PURE_PYTHON"):
        pytest.skip("fallback forced")
    assert BACKEND == ("cython" if compiled is not None else "python")


@needs_compiled
@settings(max_examples=60, deadline=None)
@given(st.integers(2, 5), st.integers(1, 4), st.integers(0, 400), st.integers(0, 2**32 - 1))
def test_sample_path_parity(k, n, length, seed):
    rng = np.random.default_rng(seed)
    morph = rng.dirichlet(np.ones(k), size=n)
    cum = np.cumsum(morph, axis=1)
    cum[:, -1] = 1.0
    delta = rng.integers(0, n, size=(n, k)).astype(np.int64)
    u = rng.random(length)
    start = int(rng.integers(0, n))
    a = _fallback.sample_path(cum, delta, start, u)
    b = compiled.sample_path(cum, delta, start, u)
    assert a.dtype == b.dtype == np.uint8
    assert np.array_equal(a, b)


@needs_compiled
@settings(max_examples=60, deadline=None)
@given(symbol_arrays, symbol_arrays)
def test_match_filter_parity(x, y):
    a, b = x[1], y[1]
    assert np.array_equal(_fallback.match_filter(a, b), compiled.match_filter(a, b))


@needs_compiled
@settings(max_examples=60, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2**32 - 1), st.integers(0, 300))
def test_invert_lockstep_parity(k, seed, n):
    rng = np.random.default_rng(seed)
    copies = [rng.integers(0, k, size=n + int(rng.integers(0, 20)), dtype=np.uint8) for _ in range(k - 1)]
    assert np.array_equal(_fallback.invert_lockstep(copies, k), compiled.invert_lockstep(copies, k))


@needs_compiled
@settings(max_examples=60, deadline=None)
@given(symbol_arrays, st.integers(1, 6))
def test_ngram_table_parity(data, depth):
    k, syms = data
    for mod in (_fallback, compiled):
        assert np.array_equal(mod.window_codes(syms, k, depth), _fallback.window_codes(syms, k, depth))
    ca, na = _fallback.ngram_table(syms, k, depth)
    cb, nb = compiled.ngram_table(syms, k, depth)
    assert np.array_equal(ca, cb) and np.array_equal(na, nb)


@pytest.mark.parametrize("mod", ["fallback", "compiled"])
def test_sparse_table_path(mod):
    m = _fallback if mod == "fallback" else compiled
    if m is None:
        pytest.skip("compiled kernels not built")
    syms = np.random.default_rng(0).integers(0, 36, size=5000).astype(np.uint8)
    codes, counts = m.ngram_table(syms, 36, 5)  # 36**5 exceeds the dense limit
    assert counts.sum() == 4996
    assert np.all(np.diff(codes) > 0)


@pytest.mark.parametrize("mod", ["fallback", "compiled"])
def test_binary_shortcut_equals_general_rule(mod):
    m = _fallback if mod == "fallback" else compiled
    if m is None:
        pytest.skip("compiled kernels not built")
    c = np.random.default_rng(1).integers(0, 2, size=1000).astype(np.uint8)
    assert np.array_equal(m.invert_lockstep([c], 2), 1 - c)
