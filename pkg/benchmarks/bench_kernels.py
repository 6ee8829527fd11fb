"""Timing of the compiled kernels against the numpy fallback.

Run ``python3 benchmarks/bench_kernels.py``; add ``--quick`` for a smoke run.
"""
import argparse
import sys
import timeit

import numpy as np

from fnls import kernels
from fnls.quadrature import cell_tensor


def cases(quick=False):
    rng = np.random.default_rng(0)
    p = 10
    nt, nc = (8, 6) if quick else (32, 16)
    f = rng.normal(size=(nt, nc, p)) + 1j * rng.normal(size=(nt, nc, p))
    g = rng.normal(size=(nt, nc, p)) + 1j * rng.normal(size=(nt, nc, p))
    W = cell_tensor(p)
    yield "cell_convolve", (lambda b: kernels.cell_convolve(f, g, W, backend=b))

    J, M = (2, 32) if quick else (2, 193)
    c = np.zeros((J, M), complex)
    c[0, 4:8] = 0.3
    c[1, :4] = 0.1
    xi = np.arange(J)[:, None] * 8.0 + np.arange(M)[None, :] * 0.01
    w = xi * 0.01
    lin = -1j * xi**2
    steps = 4 if quick else 32
    yield "lawson_rk4", (lambda b: kernels.lawson_rk4(c, lin, w, 1e-3, steps, backend=b))

    K = 16 if quick else 64
    c1 = rng.normal(size=(K, 1)) * 1e-2 + 0j
    w1 = np.arange(K, dtype=float)[:, None]
    yield "lawson_rk4_torus", (lambda b: kernels.lawson_rk4(c1, -1j * w1**2, w1, 1e-3, 4 * steps,
                                                             backend=b))


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--quick", action="store_true")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    backends = sorted(kernels.BACKENDS)
    print(f"backends: {', '.join(backends)} (default {kernels.BACKEND})")
    print(f"{'kernel':<18}" + "".join(f"{b:>14}" for b in backends) + f"{'speedup':>10}  max|diff|")
    for name, fn in cases(args.quick):
        times, outs = {}, {}
        for b in backends:
            outs[b] = fn(b)
            times[b] = min(timeit.repeat(lambda: fn(b), number=1, repeat=args.repeat))
        diff = max(float(np.max(np.abs(outs[b] - outs[backends[0]]))) for b in backends)
        speed = times["python"] / times["compiled"] if "compiled" in times else float("nan")
        print(f"{name:<18}" + "".join(f"{times[b] * 1e3:>12.2f}ms" for b in backends)
              + f"{speed:>9.1f}x  {diff:.1e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
