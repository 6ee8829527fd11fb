import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from fnls.quadrature import (adaptive_gl, cell_tensor, cumulative_weights, gl_integrate, gl_unit,
                             interp_matrix)


@pytest.mark.parametrize("n", [1, 4, 10, 32])
def test_gl_exact_for_degree_2n_minus_1(n):
    x, w = gl_unit(n)
    assert w.sum() == pytest.approx(1.0, abs=1e-15)
    deg = 2 * n - 1
    assert float(np.dot(w, x**deg)) == pytest.approx(1.0 / (deg + 1), rel=1e-13)


def test_gl_integrate_interval():
    assert gl_integrate(np.sin, 0.0, math.pi) == pytest.approx(2.0, rel=1e-14)


def test_adaptive_gl_peaked_integrand():
    f = lambda x: 1.0 / (1e-4 + x * x)
    ref = 2 * math.atan(1 / 1e-2) / 1e-2
    assert adaptive_gl(f, -1.0, 1.0) == pytest.approx(ref, rel=1e-9)
    assert adaptive_gl(f, 1.0, 1.0) == 0.0


@given(st.integers(2, 12), st.integers(0, 2**31 - 1))
def test_interp_reproduces_polynomials(p, seed):
    rng = np.random.default_rng(seed)
    c = rng.normal(size=p)
    x, _ = gl_unit(p)
    y = rng.uniform(0, 1, size=9)
    got = interp_matrix(p, y) @ np.polynomial.polynomial.polyval(x, c)
    assert np.allclose(got, np.polynomial.polynomial.polyval(y, c), atol=1e-10)


def test_cell_tensor_tent():
    p = 6
    x, _ = gl_unit(p)
    W = cell_tensor(p)
    ones = np.ones(p)
    assert np.allclose(W[0] @ ones @ ones, x, atol=1e-14)
    assert np.allclose(W[1] @ ones @ ones, 1 - x, atol=1e-14)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_cell_tensor_against_quad(seed):
    p = 5
    rng = np.random.default_rng(seed)
    cf, cg = rng.normal(size=p), rng.normal(size=p)
    f = lambda y: np.polynomial.polynomial.polyval(y, cf) if 0 <= y <= 1 else 0.0
    g = lambda y: np.polynomial.polynomial.polyval(y, cg) if 0 <= y <= 1 else 0.0
    x, _ = gl_unit(p)
    fv = np.polynomial.polynomial.polyval(x, cf)
    gv = np.polynomial.polynomial.polyval(x, cg)
    W = cell_tensor(p)
    for d in (0, 1):
        got = np.einsum("iab,a,b->i", W[d], fv, gv)
        for i, xi in enumerate(x):
            z = d + xi
            ref, _ = quad(lambda y: f(z - y) * g(y), max(0, z - 1), min(1, z), epsabs=1e-14)
            assert got[i] == pytest.approx(ref, abs=1e-12)


def test_cumulative_weights_exact_on_cubics():
    t = np.linspace(0, 0.7, 9)
    Q = cumulative_weights(t)
    g = 1 - 2 * t + 3 * t**2 - t**3
    ref = t - t**2 + t**3 - t**4 / 4
    assert np.allclose((Q @ g).real, ref, atol=1e-14)


@pytest.mark.parametrize("omega", [3.0, 150.0])
def test_cumulative_weights_oscillatory_carrier(omega):
    t = np.linspace(0, 0.5, 12)
    Q = cumulative_weights(t, omega)
    g = 0.5 + t - t**3
    got = Q @ g
    for n in (3, 7, 11):
        re, _ = quad(lambda s: math.cos(omega * s) * (0.5 + s - s**3), 0, t[n], limit=400)
        im, _ = quad(lambda s: math.sin(omega * s) * (0.5 + s - s**3), 0, t[n], limit=400)
        assert got[n] == pytest.approx(complex(re, im), abs=1e-11)


def test_cumulative_weights_fourth_order():
    errs = []
    for nt in (65, 129, 257):
        t = np.linspace(0, 1, nt)
        got = (cumulative_weights(t) @ np.exp(t))[-1].real
        errs.append(abs(got - (math.e - 1)))
    assert errs[0] / errs[1] > 14 and errs[1] / errs[2] > 15


def test_cumulative_weights_needs_four_nodes():
    with pytest.raises(ValueError):
        cumulative_weights([0.0, 0.1, 0.2])
