import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from fnls.errors import DomainError
from fnls.piecewise import (DELTA, PiecewisePoly, band_restrict, conv_power, convolve, indicator,
                            weighted_L2_norm)


def quad_convolve(f, g, x):
    """Independent oracle: adaptive quadrature of ``int f(y) g(x - y) dy``."""
    fa, fb = f.support
    ga, gb = g.support
    lo, hi = max(fa, x - gb), min(fb, x - ga)
    if hi <= lo:
        return 0.0
    pts = [p for p in list(f.breakpoints) + [x - b for b in g.breakpoints] if lo < p < hi]
    val, _ = quad(lambda y: float(f(y)) * float(g(x - y)), lo, hi, points=pts or None,
                  epsabs=1e-13, epsrel=1e-13, limit=200)
    return val


def test_indicator_values():
    f = indicator(0, 1)
    assert f(0.5) == 1.0 and f(2.0) == 0.0
    assert indicator(1, 2).integral() == 1.0
    with pytest.raises(DomainError):
        indicator(1, 1)


def test_tent_peak():
    t = convolve(indicator(0, 1), indicator(0, 1))
    assert t(1.0) == pytest.approx(1.0, abs=1e-15)


def test_shifted_tent():
    t = convolve(indicator(1, 2), indicator(4, 5))
    assert t.support == (5.0, 7.0)
    assert t(6.0) == pytest.approx(1.0, abs=1e-14)
    xs = np.linspace(4.5, 7.5, 31)
    ref = [quad_convolve(indicator(1, 2), indicator(4, 5), x) for x in xs]
    assert np.max(np.abs(t(xs) - ref)) < 1e-12


def test_fubini_integral():
    assert convolve(indicator(0, 2), indicator(0, 3)).integral() == pytest.approx(6.0, rel=1e-14)


def test_delta_unit():
    f = indicator(0.3, 0.9)
    assert conv_power(0, 1, 0) is DELTA
    assert convolve(DELTA, f) == f and convolve(f, DELTA) == f


def test_conv_power_values():
    assert conv_power(0, 1, 2) == convolve(indicator(0, 1), indicator(0, 1))
    assert conv_power(0, 1, 3)(1.5) == pytest.approx(0.75, abs=1e-15)


def test_conv_power_support_scaled():
    N, th = 8, 1.5
    h = N ** -th
    for k in range(1, 6):
        assert conv_power(h, 2 * h, k).support == pytest.approx((k * h, 2 * k * h), rel=1e-15)


@pytest.mark.parametrize("k", [2, 3, 4, 5])
def test_conv_power_matches_quadrature_oracle(k):
    a, b = 0.25, 0.75
    prev = conv_power(a, b, k - 1)
    got = conv_power(a, b, k)
    xs = np.linspace(k * a - 0.1, k * b + 0.1, 1000)
    ref = np.array([quad_convolve(prev, indicator(a, b), x) for x in xs])
    assert np.max(np.abs(got(xs) - ref)) < 1e-8


def test_chained_convolution_equals_bspline():
    f = indicator(0.1, 0.4)
    chain = f
    for _ in range(4):
        chain = convolve(chain, f)
    xs = np.linspace(0.4, 2.1, 200)
    assert np.max(np.abs(chain(xs) - conv_power(0.1, 0.4, 5)(xs))) < 1e-13


@pytest.mark.parametrize("f,s,expected", [
    (indicator(0, 1), 0.0, 1.0),
    (conv_power(0, 1, 2), 0.0, math.sqrt(2 / 3)),
    (indicator(0, 1), 1.0, math.sqrt(4 / 3)),
])
def test_weighted_norms(f, s, expected):
    assert weighted_L2_norm(f, s) == pytest.approx(expected, rel=1e-12)


def test_weighted_norm_fractional_s_against_quad():
    f = conv_power(0.5, 1.5, 3)
    s = -0.7
    pts = list(f.breakpoints)
    ref, _ = quad(lambda x: (1 + x * x) ** s * float(f(x)) ** 2, pts[0], pts[-1],
                  points=pts[1:-1], epsrel=1e-13)
    assert weighted_L2_norm(f, s) == pytest.approx(math.sqrt(ref), rel=1e-10)


def test_band_restrict():
    t = conv_power(0, 1, 2)
    left = band_restrict(t, 0, 1)
    assert left.support == (0.0, 1.0)
    assert left.integral() == pytest.approx(0.5, abs=1e-15)
    assert band_restrict(t, 5, 6).is_zero


def test_json_round_trip_bit_exact():
    f = conv_power(1 / 3, 2 / 3, 4)
    g = PiecewisePoly.from_json(f.to_json())
    assert g == f
    assert np.array_equal(g.breakpoints, f.breakpoints)


def test_indicator_jumps_and_continuity_of_convolution():
    assert np.max(np.abs(indicator(0, 1).jumps())) == 1.0
    assert np.max(np.abs(conv_power(0, 1, 2).jumps())) < 1e-15


intervals = st.tuples(st.floats(-3, 3), st.floats(0.05, 2)).map(lambda t: (t[0], t[0] + t[1]))


@given(st.floats(-2, 2), st.floats(0.05, 2), st.integers(1, 7))
def test_conv_power_mass_and_symmetry(a, w, k):
    b = a + w
    f = conv_power(a, b, k)
    assert f.integral() == pytest.approx(w**k, rel=1e-12)
    c = k * (a + b) / 2
    d = np.linspace(0, 0.999 * k * w / 2, 17)
    assert np.allclose(f(c - d), f(c + d), rtol=1e-9, atol=1e-12 * w ** (k - 1))


@given(intervals, intervals, intervals)
def test_convolve_commutative_associative(i1, i2, i3):
    f, g, h = indicator(*i1), conv_power(i2[0], i2[1], 2), indicator(*i3)
    fg, gf = convolve(f, g), convolve(g, f)
    lo = i1[0] + i2[0] * 2 + i3[0] - 0.1
    hi = i1[1] + i2[1] * 2 + i3[1] + 0.1
    xs = np.linspace(lo, hi, 101)
    scale = max(1.0, float(np.max(np.abs(convolve(fg, h)(xs)))))
    assert np.max(np.abs(fg(xs) - gf(xs))) < 1e-12 * scale
    assert np.max(np.abs(convolve(fg, h)(xs) - convolve(f, convolve(g, h))(xs))) < 1e-12 * scale


@given(intervals, intervals)
def test_convolution_support_and_nonnegativity(i1, i2):
    f = convolve(indicator(*i1), indicator(*i2))
    assert f.support == pytest.approx((i1[0] + i2[0], i1[1] + i2[1]), abs=1e-12)
    xs = np.linspace(f.support[0] - 0.5, f.support[1] + 0.5, 200)
    assert np.all(f(xs) >= -1e-13)
    assert f.degree <= 1


@given(intervals, st.floats(-4, 4), st.floats(0.01, 3))
def test_band_restrict_monotone(i1, lo, w):
    f = conv_power(i1[0], i1[1], 3)
    assert band_restrict(f, lo, lo + w).integral() <= f.integral() * (1 + 1e-12) + 1e-15
