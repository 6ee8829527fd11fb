import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fnls import _pykernels, kernels
from fnls.quadrature import cell_tensor

ROOT = Path(__file__).resolve().parents[1]
compiled = pytest.mark.skipif("compiled" not in kernels.BACKENDS, reason="extension not built")


def rand_c(rng, shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def test_default_backend_prefers_compiled():
    assert kernels.BACKEND == ("compiled" if "compiled" in kernels.BACKENDS else "python")


def test_quad_rhs_direct_sum():
    rng = np.random.default_rng(0)
    c = rand_c(rng, (3, 5))
    w = rng.uniform(size=(3, 5))
    out = kernels.quad_rhs(c, w, backend="python")
    ref = np.zeros_like(c)
    for j in range(3):
        for m in range(5):
            for j1 in range(j + 1):
                for m1 in range(m + 1):
                    ref[j, m] += c[j1, m1] * w[j - j1, m - m1] * c[j - j1, m - m1]
    assert np.allclose(out, ref, rtol=1e-13, atol=1e-13)


def test_cell_convolve_shape_and_constant():
    p = 6
    W = cell_tensor(p)
    f = np.ones((1, 3, p), complex)
    out = kernels.cell_convolve(f, f, W, backend="python")
    assert out.shape == (1, 6, p)


@compiled
@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 4), st.integers(1, 20))
def test_backends_agree_lawson(seed, J, M):
    rng = np.random.default_rng(seed)
    c = 0.3 * rand_c(rng, (J, M))
    lin = -1j * rng.uniform(0, 5, size=(J, M))
    w = rng.uniform(size=(J, M))
    keep = (rng.uniform(size=(J, M)) > 0.2).astype(np.uint8)
    a = kernels.lawson_rk4(c, lin, w, 1e-2, 5, keep, backend="python")
    b = kernels.lawson_rk4(c, lin, w, 1e-2, 5, keep, backend="compiled")
    assert np.allclose(a, b, rtol=1e-12, atol=1e-13)


@compiled
@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 3), st.integers(1, 6), st.integers(2, 8))
def test_backends_agree_cell_convolve(seed, nt, ncells, p):
    rng = np.random.default_rng(seed)
    f = rand_c(rng, (nt, ncells, p))
    g = rand_c(rng, (nt, ncells + 1, p))
    W = cell_tensor(p)
    a = kernels.cell_convolve(f, g, W, backend="python")
    b = kernels.cell_convolve(f, g, W, backend="compiled")
    assert np.allclose(a, b, rtol=1e-12, atol=1e-12)


@compiled
def test_compiled_rejects_wide_lattice():
    c = np.zeros((65, 2), complex)
    with pytest.raises(ValueError):
        kernels.quad_rhs(c, np.zeros((65, 2)), backend="compiled")


def test_pure_python_fallback_subprocess():
    env = dict(os.environ, FNLS_PURE_PYTHON="1")
    code = "from fnls import kernels; print(kernels.BACKEND, sorted(kernels.BACKENDS))"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                         check=True).stdout.strip()
    assert out == "python ['python']"


def test_benchmark_quick_runs():
    out = subprocess.run([sys.executable, str(ROOT / "benchmarks" / "bench_kernels.py"), "--quick"],
                         capture_output=True, text=True, timeout=300)
    assert out.returncode == 0, out.stderr
    assert "cell_convolve" in out.stdout and "lawson_rk4" in out.stdout
