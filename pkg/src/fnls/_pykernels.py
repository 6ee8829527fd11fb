"""Pure numpy versions of the hot loops in ``_ckernels.pyx``."""
import numpy as np


def cell_convolve(f, g, W):
    """Cellwise convolution of two cell-sampled profiles.

    ``f`` and ``g`` have shape ``(nt, ncells, p)``; ``W`` has shape
    ``(2, p, p, p)``.  Output cell ``m1 + m2 + d`` receives
    ``sum_{a,b} W[d, i, a, b] f[t, m1, a] g[t, m2, b]``.
    """
    nt, nf, p = f.shape
    ng = g.shape[1]
    out = np.zeros((nt, nf + ng, p), dtype=np.complex128)
    for d in range(2):
        # (t, m1, m2, i)
        pair = np.einsum("iab,tma,tnb->tmni", W[d], f, g, optimize=True)
        for m1 in range(nf):
            out[:, m1 + d:m1 + d + ng, :] += pair[:, m1, :, :]
    return out


def quad_rhs(c, w):
    """Lower-triangular 2D convolution ``out[j, m] = sum c[j1, m1] w[j2, m2] c[j2, m2]``."""
    J, M = c.shape
    wc = w * c
    out = np.zeros((J, M), dtype=np.complex128)
    for j1 in range(J):
        for j2 in range(J - j1):
            out[j1 + j2] += np.convolve(c[j1], wc[j2])[:M]
    return out


def lawson_rk4(c0, lin, w, h, nsteps, keep):
    """Integrating-factor RK4 for ``c' = lin * c + quad_rhs(c, w)``."""
    c = np.array(c0, dtype=np.complex128, copy=True)
    E = np.exp(np.asarray(lin) * (h / 2.0))
    E2 = E * E
    mask = np.asarray(keep).astype(bool)
    for _ in range(int(nsteps)):
        A = quad_rhs(c, w)
        B = quad_rhs(E * (c + 0.5 * h * A), w)
        C = quad_rhs(E * c + 0.5 * h * B, w)
        D = quad_rhs(E2 * c + h * E * C, w)
        c = E2 * c + (h / 6.0) * (E2 * A + 2.0 * E * (B + C) + D)
        c[~mask] = 0
    return c
