# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops. Semantics match ``_pykernels`` exactly."""

import numpy as np

ctypedef double complex cplx


def cell_convolve(const cplx[:, :, ::1] f, const cplx[:, :, ::1] g,
                  const double[:, :, :, ::1] W):
    cdef Py_ssize_t nt = f.shape[0]
    cdef Py_ssize_t nf = f.shape[1]
    cdef Py_ssize_t ng = g.shape[1]
    cdef Py_ssize_t p = f.shape[2]
    out = np.zeros((nt, nf + ng, p), dtype=np.complex128)
    cdef cplx[:, :, ::1] o = out
    tmp_arr = np.empty((2, p, p), dtype=np.complex128)
    cdef cplx[:, :, ::1] tmp = tmp_arr
    cdef Py_ssize_t t, m1, m2, d, i, a, b
    cdef cplx acc
    cdef bint empty
    for t in range(nt):
        for m2 in range(ng):
            empty = True
            for b in range(p):
                if g[t, m2, b] != 0:
                    empty = False
                    break
            if empty:
                continue
            for d in range(2):
                for i in range(p):
                    for a in range(p):
                        acc = 0
                        for b in range(p):
                            acc = acc + W[d, i, a, b] * g[t, m2, b]
                        tmp[d, i, a] = acc
            for m1 in range(nf):
                for d in range(2):
                    for i in range(p):
                        acc = 0
                        for a in range(p):
                            acc = acc + f[t, m1, a] * tmp[d, i, a]
                        o[t, m1 + m2 + d, i] = o[t, m1 + m2 + d, i] + acc
    return out


cdef void _quad_rhs(const cplx[:, ::1] c, const double[:, ::1] w,
                    cplx[:, ::1] wc, cplx[:, ::1] out) noexcept nogil:
    # per-row nonzero ranges [lo, hi] of c and w*c bound the inner loop
    cdef Py_ssize_t J = c.shape[0]
    cdef Py_ssize_t M = c.shape[1]
    cdef Py_ssize_t j, m, j1, m1, a, b
    cdef Py_ssize_t clo[64]
    cdef Py_ssize_t chi[64]
    cdef Py_ssize_t wlo[64]
    cdef Py_ssize_t whi[64]
    cdef double ar0, ai0, ar1, ai1, xr, xi, yr, yi
    cdef const double* cp
    cdef const double* wp
    for j in range(J):
        clo[j] = M
        chi[j] = -1
        wlo[j] = M
        whi[j] = -1
        for m in range(M):
            wc[j, m] = w[j, m] * c[j, m]
            if c[j, m] != 0:
                if clo[j] == M:
                    clo[j] = m
                chi[j] = m
            if wc[j, m] != 0:
                if wlo[j] == M:
                    wlo[j] = m
                whi[j] = m
    for j in range(J):
        for m in range(M):
            # two interleaved accumulators break the add dependency chain
            ar0 = 0.0
            ai0 = 0.0
            ar1 = 0.0
            ai1 = 0.0
            for j1 in range(j + 1):
                a = clo[j1]
                if m - whi[j - j1] > a:
                    a = m - whi[j - j1]
                b = chi[j1]
                if m - wlo[j - j1] < b:
                    b = m - wlo[j - j1]
                if b < a:
                    continue
                cp = <const double*> &c[j1, 0]
                wp = <const double*> &wc[j - j1, 0]
                m1 = a
                while m1 + 1 <= b:
                    xr = cp[2 * m1]
                    xi = cp[2 * m1 + 1]
                    yr = wp[2 * (m - m1)]
                    yi = wp[2 * (m - m1) + 1]
                    ar0 += xr * yr - xi * yi
                    ai0 += xr * yi + xi * yr
                    xr = cp[2 * m1 + 2]
                    xi = cp[2 * m1 + 3]
                    yr = wp[2 * (m - m1) - 2]
                    yi = wp[2 * (m - m1) - 1]
                    ar1 += xr * yr - xi * yi
                    ai1 += xr * yi + xi * yr
                    m1 += 2
                if m1 == b:
                    xr = cp[2 * m1]
                    xi = cp[2 * m1 + 1]
                    yr = wp[2 * (m - m1)]
                    yi = wp[2 * (m - m1) + 1]
                    ar0 += xr * yr - xi * yi
                    ai0 += xr * yi + xi * yr
            out[j, m].real = ar0 + ar1
            out[j, m].imag = ai0 + ai1


def quad_rhs(const cplx[:, ::1] c, const double[:, ::1] w):
    if c.shape[0] > 64:
        raise ValueError("at most 64 bands")
    out = np.empty((c.shape[0], c.shape[1]), dtype=np.complex128)
    wc = np.empty_like(out)
    _quad_rhs(c, w, wc, out)
    return out


def lawson_rk4(const cplx[:, ::1] c0, const cplx[:, ::1] lin,
               const double[:, ::1] w, double h, Py_ssize_t nsteps,
               const unsigned char[:, ::1] keep):
    cdef Py_ssize_t J = c0.shape[0]
    cdef Py_ssize_t M = c0.shape[1]
    cdef Py_ssize_t n, j, m
    c_arr = np.array(c0, dtype=np.complex128, copy=True)
    cdef cplx[:, ::1] c = c_arr
    E_arr = np.exp(np.asarray(lin) * (h / 2.0))
    cdef cplx[:, ::1] E = E_arr
    cdef cplx[:, ::1] A = np.empty((J, M), dtype=np.complex128)
    cdef cplx[:, ::1] B = np.empty((J, M), dtype=np.complex128)
    cdef cplx[:, ::1] C = np.empty((J, M), dtype=np.complex128)
    cdef cplx[:, ::1] D = np.empty((J, M), dtype=np.complex128)
    cdef cplx[:, ::1] s = np.empty((J, M), dtype=np.complex128)
    cdef cplx[:, ::1] wc = np.empty((J, M), dtype=np.complex128)
    cdef cplx e, e2
    if J > 64:
        raise ValueError("at most 64 bands")
    with nogil:
        for n in range(nsteps):
            _quad_rhs(c, w, wc, A)
            for j in range(J):
                for m in range(M):
                    s[j, m] = E[j, m] * (c[j, m] + 0.5 * h * A[j, m])
            _quad_rhs(s, w, wc, B)
            for j in range(J):
                for m in range(M):
                    s[j, m] = E[j, m] * c[j, m] + 0.5 * h * B[j, m]
            _quad_rhs(s, w, wc, C)
            for j in range(J):
                for m in range(M):
                    e = E[j, m]
                    s[j, m] = e * e * c[j, m] + h * e * C[j, m]
            _quad_rhs(s, w, wc, D)
            for j in range(J):
                for m in range(M):
                    e = E[j, m]
                    e2 = e * e
                    if keep[j, m]:
                        c[j, m] = e2 * c[j, m] + (h / 6.0) * (
                            e2 * A[j, m] + 2.0 * e * (B[j, m] + C[j, m]) + D[j, m])
                    else:
                        c[j, m] = 0
    return c_arr
