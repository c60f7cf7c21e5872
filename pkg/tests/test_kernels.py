"""Cython and numpy backends must agree bit for bit."""
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from qformat import _pykernels
from qformat import codebook as C
from qformat.quant import DEFAULT_CLIP_GRID

ck = pytest.importorskip("qformat._ckernels")

BOOKS = [C.builtin(n) for n in ("int4", "e2m1", "e3m0", "sf4-nu5", "apot4-sp", "int5")]
GRID = np.array(DEFAULT_CLIP_GRID)


def run_both(x, block, cb, ratios):
    a = ck.quantize_blocks(x, block, cb.values, ratios, cb.zero_index)
    b = _pykernels.quantize_blocks(x, block, cb.values, ratios, cb.zero_index)
    return a, b


@settings(max_examples=80, deadline=None)
@given(
    x=arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(1, 50)),
             elements=st.floats(-1e4, 1e4, allow_nan=False, width=32)),
    k=st.integers(0, len(BOOKS) - 1),
    block=st.integers(2, 20),
    clip=st.booleans(),
)
def test_backends_identical(x, k, block, clip):
    cb = BOOKS[k]
    ratios = GRID if clip else np.array([1.0])
    a, b = run_both(np.ascontiguousarray(x), block, cb, ratios)
    for u, v in zip(a, b):
        assert np.array_equal(u, v)


def test_backends_identical_large(rng):
    x = rng.standard_t(5, size=(64, 1000))
    for cb in BOOKS:
        a, b = run_both(x, 128, cb, GRID)
        for u, v in zip(a, b):
            assert np.array_equal(u, v)


def test_encode_identical(rng):
    q = np.concatenate([rng.uniform(-1.2, 1.2, 10000), np.linspace(-1, 1, 4097)])
    for cb in BOOKS:
        assert np.array_equal(ck.encode(q, cb.values), _pykernels.encode(q, cb.values))


def test_env_forces_fallback():
    env = dict(os.environ, QFORMAT_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import qformat.quant as q; print(q.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_default_backend_is_compiled():
    env = {k: v for k, v in os.environ.items() if k != "QFORMAT_PURE_PYTHON"}
    out = subprocess.run([sys.executable, "-c", "import qformat.quant as q; print(q.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "cython"


def test_benchmark_smoke():
    bench = os.path.join(os.path.dirname(__file__), "..", "benchmarks", "bench_kernels.py")
    out = subprocess.run([sys.executable, bench, "--rows", "16", "--cols", "256", "--repeat", "1"],
                         capture_output=True, text=True, check=True)
    assert "speedup" in out.stdout and "sf4-nu5" in out.stdout
