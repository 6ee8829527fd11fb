"""Gauss-Legendre rules, cell-convolution tensors and cumulative time weights."""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre as L


@lru_cache(maxsize=None)
def gl_unit(n: int) -> tuple[np.ndarray, np.ndarray]:
    """``n``-point Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = L.leggauss(n)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gl_integrate(f, a: float, b: float, n: int = 32) -> float:
    x, w = gl_unit(n)
    return (b - a) * float(np.dot(w, f(a + (b - a) * x)))


def adaptive_gl(f, a: float, b: float, n: int = 32, rtol: float = 1e-10,
                max_depth: int = 12) -> float:
    """Integrate ``f`` over [a, b]; bisect while the two resolutions disagree."""
    if b <= a:
        return 0.0
    whole = gl_integrate(f, a, b, n)
    mid = 0.5 * (a + b)
    halves = gl_integrate(f, a, mid, n) + gl_integrate(f, mid, b, n)
    if abs(halves - whole) <= rtol * max(abs(halves), 1e-300) or max_depth == 0:
        return halves
    return (adaptive_gl(f, a, mid, n, rtol, max_depth - 1)
            + adaptive_gl(f, mid, b, n, rtol, max_depth - 1))


@lru_cache(maxsize=None)
def interp_matrix_cached(p: int, y: tuple) -> np.ndarray:
    return interp_matrix(p, np.asarray(y))


def interp_matrix(p: int, y: np.ndarray) -> np.ndarray:
    """Rows evaluate the degree ``p-1`` interpolant through the ``p`` unit GL nodes at ``y``."""
    x, _ = gl_unit(p)
    V = L.legvander(2.0 * x - 1.0, p - 1)
    Vy = L.legvander(2.0 * np.asarray(y, dtype=float) - 1.0, p - 1)
    return np.linalg.solve(V.T, Vy.T).T


@lru_cache(maxsize=None)
def cell_tensor(p: int) -> np.ndarray:
    """Exact convolution tensor for polynomials sampled at ``p`` GL nodes per unit cell.

    For cells ``A = [a, a+1]`` and ``B = [b, b+1]`` and an output point
    ``a + b + d + x_i``,

        (f * g)(a + b + d + x_i) = sum_{p,q} W[d, i, p, q] f_p g_q

    where ``f_p``, ``g_q`` are nodal values.  ``d = 0`` integrates over
    ``y in [0, x_i]``, ``d = 1`` over ``y in [x_i, 1]``.
    """
    x, _ = gl_unit(p)
    qn = p + 2
    W = np.zeros((2, p, p, p))
    for i, xi in enumerate(x):
        for d, (lo, hi) in enumerate(((0.0, xi), (xi, 1.0))):
            yq, wq = gl_unit(qn)
            y = lo + (hi - lo) * yq
            wy = (hi - lo) * wq
            Lg = interp_matrix(p, y)                 # g at y
            Lf = interp_matrix(p, d + xi - y)        # f at (d + x_i - y)
            W[d, i] = np.einsum("k,kp,kq->pq", wy, Lf, Lg)
    W.setflags(write=False)
    return W


def _interval_weights(times: np.ndarray, n: int, omega: float, nq: int):
    """Weights on stencil nodes for int_{t_n}^{t_{n+1}} e^{i omega t} g(t) dt."""
    nt = len(times)
    lo = min(max(n - 1, 0), nt - 4)
    stencil = np.arange(lo, lo + 4)
    ts = times[stencil]
    a, b = times[n], times[n + 1]
    yq, wq = gl_unit(nq)
    tq = a + (b - a) * yq
    # Lagrange basis on the 4-point stencil
    basis = np.ones((4, nq))
    for m in range(4):
        for r in range(4):
            if r != m:
                basis[m] *= (tq - ts[r]) / (ts[m] - ts[r])
    w = (b - a) * (basis * (wq * np.exp(1j * omega * tq))).sum(axis=1)
    return stencil, w


@lru_cache(maxsize=256)
def _cumulative_cached(times_key: tuple, omega: float, nq: int) -> np.ndarray:
    times = np.asarray(times_key)
    nt = len(times)
    Wt = np.zeros((nt, nt), dtype=np.complex128)
    for n in range(nt - 1):
        stencil, w = _interval_weights(times, n, omega, nq)
        Wt[n + 1] = Wt[n]
        Wt[n + 1, stencil] += w
    Wt.setflags(write=False)
    return Wt


def cumulative_weights(times, omega: float = 0.0) -> np.ndarray:
    """Matrix ``Q`` with ``(Q @ g)[n] ~ int_0^{t_n} e^{i omega t} g(t) dt``.

    ``g`` is interpolated by cubics on four-node stencils and the product
    with the exponential is integrated exactly up to Gauss-Legendre error,
    so fast carriers ``omega`` cost nothing extra.  Fourth order in the step
    for smooth ``g``.
    """
    times = np.asarray(times, dtype=float)
    if len(times) < 4:
        raise ValueError("need at least 4 time nodes")
    span = float(abs(omega)) * float(times[-1] - times[0]) / (len(times) - 1)
    nq = 16 if span < 4.0 else int(16 + 4 * span)
    return _cumulative_cached(tuple(times.tolist()), float(omega), nq)
