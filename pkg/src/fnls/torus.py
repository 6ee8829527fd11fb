"""Mode cascade on the torus for data on the modes ``0`` and ``N``.

With ``u = c_0 + v`` and ``c_0`` constant, the coefficient of mode ``m N``
obeys ``c_m' = -i (mN)^alpha c_m + sum_{m1+m2=m} c_{m1} (m2 N)^beta c_{m2}``,
a lower-triangular system: mode ``m`` is fed only by modes below it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np

from . import kernels
from .errors import DomainError, RegimeError, ResourceError
from .params import ExperimentParams, choose_time_torus

_DPS = 50


@dataclass
class ModeCascade:
    """Coefficients ``coeffs[n, m] = u_hat(t_n, m N)`` for ``m = 0..K``."""

    N: int
    times: np.ndarray
    coeffs: np.ndarray
    phi0: complex

    @property
    def K(self) -> int:
        return self.coeffs.shape[1] - 1

    def rows(self):
        """``(t, m, re, im)`` trajectory rows."""
        for n, t in enumerate(self.times):
            for m in range(self.K + 1):
                z = self.coeffs[n, m]
                yield (float(t), m, float(z.real), float(z.imag))


def _check_torus(params: ExperimentParams):
    if params.N < 3:
        raise DomainError("torus data needs N >= 3")


def build_phi_torus(params: ExperimentParams, K: int = 1, phi0: complex | None = None) -> ModeCascade:
    """``c_0 = 1/log N``, ``c_1 = <N>^{-s}/log N``, higher modes zero."""
    _check_torus(params)
    N = params.N
    L = math.log(N)
    c = np.zeros((1, max(K, 1) + 1), dtype=np.complex128)
    c[0, 0] = 1.0 / L if phi0 is None else phi0
    c[0, 1] = (1.0 + float(N) ** 2) ** (-params.s / 2.0) / L
    return ModeCascade(int(N), np.zeros(1), c, complex(c[0, 0]))


def phi_norm_torus(params: ExperimentParams) -> float:
    c = build_phi_torus(params).coeffs[0]
    N = params.N
    w = np.array([1.0, (1.0 + float(N) ** 2) ** params.s])
    return float(np.sqrt(np.sum(w * np.abs(c[:2]) ** 2)))


def cascade_closed_form_first_mode(params: ExperimentParams, t, phi0: complex | None = None):
    """``exp(-i t N^alpha + t phi0 N^beta) phi_hat(N)``."""
    phi = build_phi_torus(params, phi0=phi0)
    c0, c1 = phi.coeffs[0, 0], phi.coeffs[0, 1]
    N = float(params.N)
    t = np.asarray(t, dtype=float)
    return np.exp(-1j * t * N**params.alpha + t * c0 * N**params.beta) * c1


# exact iterates -------------------------------------------------------------

def _integrate_terms(terms, L):
    """``int_0^t e^{L (t-t')} sum a t'^n e^{mu t'} dt'`` as exponential-polynomial terms.

    ``terms`` maps ``(n, mu) -> a``; results use the same representation.
    """
    out: dict = {}

    def add(key, val):
        out[key] = out.get(key, 0) + val

    for (n, mu), a in terms.items():
        d = mu - L
        scale = max(abs(mu), abs(L), mpmath.mpf(1))
        if abs(d) <= scale * mpmath.mpf(10) ** (-(_DPS - 10)):
            # resonant: e^{L t} t^{n+1} / (n+1)
            add((n + 1, L), a / (n + 1))
            continue
        # int_0^t t'^n e^{d t'} = e^{d t} sum_j (-1)^j n!/(n-j)! t^{n-j} / d^{j+1} - (-1)^n n!/d^{n+1}
        fn = mpmath.factorial(n)
        for j in range(n + 1):
            coef = (-1) ** j * fn / mpmath.factorial(n - j) / d ** (j + 1)
            add((n - j, mu), a * coef)
        add((0, L), -a * (-1) ** n * fn / d ** (n + 1))
    return out


def _eval_terms(terms, t):
    t = mpmath.mpf(t)
    return sum((a * t**n * mpmath.exp(mu * t) for (n, mu), a in terms.items()), mpmath.mpc(0))


def cascade_iterates(params: ExperimentParams, Kdepth: int, times, phi0: complex | None = None):
    """Exact iterates ``v^(k)(t)`` on their single mode ``k N``.

    Each iterate is a finite sum of terms ``a t^n exp(mu t)``; the Duhamel
    integrals are done in closed form in extended precision.  Returns an
    array of shape ``(len(times), Kdepth)`` with column ``k-1`` holding the
    coefficient of mode ``k N``.
    """
    if Kdepth < 1:
        raise DomainError("Kdepth must be at least 1")
    _check_torus(params)
    with mpmath.workdps(_DPS):
        N = mpmath.mpf(params.N)
        a, b = mpmath.mpf(params.alpha), mpmath.mpf(params.beta)
        phi = build_phi_torus(params, phi0=phi0)
        c0 = mpmath.mpc(phi.coeffs[0, 0]) if phi0 is not None else 1 / mpmath.log(N)
        c1 = (1 + N**2) ** (-mpmath.mpf(params.s) / 2) / mpmath.log(N)

        def Lk(k):
            return -1j * (k * N) ** a + c0 * (k * N) ** b

        its = {1: {(0, Lk(1)): mpmath.mpc(c1)}}
        for k in range(2, Kdepth + 1):
            prod: dict = {}
            for k1 in range(1, k):
                k2 = k - k1
                w = (k2 * N) ** b
                for (n1, m1), a1 in its[k1].items():
                    for (n2, m2), a2 in its[k2].items():
                        key = (n1 + n2, m1 + m2)
                        prod[key] = prod.get(key, 0) + a1 * a2 * w
            its[k] = _integrate_terms(prod, Lk(k))
        out = np.zeros((len(times), Kdepth), dtype=np.complex128)
        for i, t in enumerate(times):
            for k in range(1, Kdepth + 1):
                out[i, k - 1] = complex(_eval_terms(its[k], t))
    return out


# ODE oracle -----------------------------------------------------------------

def _torus_weights(N, beta, K):
    m = np.arange(K + 1, dtype=float)
    w = (m * N) ** beta
    if beta > 0:
        w[0] = 0.0
    return w


def ode_oracle(params: ExperimentParams, Kmodes: int = 8, t_end: float = 0.1,
               phi0: complex | None = None, rtol: float = 1e-10, n0: int = 64,
               max_steps: int = 1 << 22, c_init=None, monitor=(1,),
               backend=None) -> ModeCascade:
    """Integrating-factor RK4 on the truncated coefficient system.

    The step count doubles until every monitored mode (``c_1`` by default)
    changes by less than ``rtol`` relative.  Returns the converged state at
    ``t = 0`` and ``t_end``.
    """
    if Kmodes < 2:
        raise DomainError("Kmodes must be at least 2")
    _check_torus(params)
    N = float(params.N)
    if c_init is None:
        c = np.zeros(Kmodes + 1, dtype=np.complex128)
        phi = build_phi_torus(params, phi0=phi0)
        c[:2] = phi.coeffs[0, :2]
    else:
        c = np.asarray(c_init, dtype=np.complex128).copy()
        if c.size != Kmodes + 1:
            raise DomainError("c_init must have Kmodes + 1 entries")
    w = _torus_weights(N, params.beta, Kmodes)[:, None]
    lin = (-1j * (np.arange(Kmodes + 1) * N) ** params.alpha)[:, None]
    c2d = c[:, None]
    prev, n, err = None, n0, math.inf
    while True:
        with np.errstate(over="ignore", invalid="ignore"):
            out = kernels.lawson_rk4(c2d, lin, w, t_end / n, n, backend=backend)
        if not np.all(np.isfinite(out)):
            raise ResourceError(
                f"non-finite coefficients with {n} steps; lower Kmodes or t_end")
        if prev is not None:
            idx = list(monitor)
            err = float(np.max(np.abs(out[idx, 0] - prev[idx, 0])
                               / np.maximum(np.abs(out[idx, 0]), 1e-300)))
            if err < rtol:
                break
        if 2 * n > max_steps:
            raise ResourceError(f"step budget exhausted; achieved relative change {err:.3g}")
        prev, n = out, 2 * n
    coeffs = np.vstack([c, out[:, 0]])
    return ModeCascade(int(N), np.array([0.0, t_end]), coeffs, complex(c[0]))


# experiment -----------------------------------------------------------------

@dataclass
class TorusReport:
    N: int
    T: float
    phi_norm: float
    growth: float
    n_over_log: float
    flags: dict
    identity_error: float     # |e^{T Re c0 N^beta} - N^{|sigma-s|+1}| relative

    @property
    def ok(self) -> bool:
        return all(self.flags.values())

    def row(self):
        f = self.flags
        return (self.N, self.T, self.phi_norm, self.growth, self.n_over_log,
                int(f["phi_small"]), int(f["time_small"]), int(f["growth_large"]))


TORUS_COLUMNS = ("N", "T", "phi_norm", "growth", "n_over_log",
                 "phi_small", "time_small", "growth_large")


def _mp_quantities(N: int, s, sigma, beta, eps):
    with mpmath.workdps(_DPS):
        Nm = mpmath.mpf(N)
        L = mpmath.log(Nm)
        jb = mpmath.sqrt(1 + Nm**2)
        gap = abs(mpmath.mpf(sigma) - mpmath.mpf(s))
        T = (gap + 1) * L**2 / Nm ** mpmath.mpf(beta)
        c0 = 1 / L
        c1 = jb ** (-mpmath.mpf(s)) / L
        phi = mpmath.sqrt(c0**2 + jb ** (2 * mpmath.mpf(s)) * c1**2)
        amp = mpmath.exp(T * c0 * Nm ** mpmath.mpf(beta))
        growth = jb ** mpmath.mpf(sigma) * amp * c1
        nlog = Nm / L
        e = mpmath.mpf(eps)
        flags = {
            "phi_small": bool(phi <= 2 / L and 2 / L < e),
            "time_small": bool(T < e),
            "growth_large": bool(nlog > 1 / e),
        }
        if sigma >= s:
            # growth >= N / log N holds exactly when sigma >= s
            flags["growth_large"] &= bool(growth >= nlog * (1 - mpmath.mpf(10) ** (-(_DPS - 5))))
        ident = abs(amp - Nm ** (gap + 1)) / Nm ** (gap + 1)
        return T, phi, growth, nlog, flags, ident


def torus_report(params: ExperimentParams, N: int | None = None, eps: float | None = None) -> TorusReport:
    N = int(params.N if N is None else N)
    eps = params.eps if eps is None else eps
    if not params.beta > 0:
        raise RegimeError("torus inflation needs beta > 0")
    if N < 3:
        raise DomainError("N must be at least 3")
    T, phi, growth, nlog, flags, ident = _mp_quantities(N, params.s, params.sigma, params.beta, eps)
    return TorusReport(N, float(T), float(phi), float(growth), float(nlog), flags, float(ident))


def smallest_qualifying_N(params: ExperimentParams, eps: float | None = None) -> int:
    """Smallest integer ``N >= 3`` meeting all three threshold inequalities."""
    eps = params.eps if eps is None else eps
    s, sigma, beta = params.s, params.sigma, params.beta
    if not (0 < eps and beta > 0):
        raise DomainError("need eps > 0 and beta > 0")

    def ok(N):
        return torus_report(params, N=N, eps=eps).ok

    def first_true(pred, lo):
        # smallest N >= lo with pred, pred monotone from lo on
        if pred(lo):
            return lo
        hi = max(lo * 2, lo + 1)
        while not pred(hi):
            hi *= 2
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if pred(mid):
                hi = mid
            else:
                lo = mid
        return hi

    with mpmath.workdps(_DPS):
        def phi_ok(N):
            return bool(2 / mpmath.log(N) < eps)

        def nlog_ok(N):
            return bool(mpmath.mpf(N) / mpmath.log(N) > 1 / mpmath.mpf(eps))

        def time_ok(N):
            gap = abs(sigma - s)
            return bool((gap + 1) * mpmath.log(N) ** 2 / mpmath.mpf(N) ** beta < eps)

        n = first_true(phi_ok, 3)
        n = first_true(nlog_ok, n)
        if not time_ok(n):
            # time bound rises up to N = e^{2/beta}, then decreases
            peak = int(mpmath.ceil(mpmath.exp(2 / mpmath.mpf(beta))))
            n = first_true(time_ok, max(n, peak))
    if not ok(n):
        raise RuntimeError(f"threshold search ended at N={n} without meeting all inequalities")
    return n


def inflation_experiment_torus(params: ExperimentParams, search: bool = True):
    """Report at ``params.N`` and, with ``search``, at the smallest qualifying ``N``."""
    p = params.with_(regime_tag="inflation-torus")
    at_N = torus_report(p)
    best = torus_report(p, N=smallest_qualifying_N(p)) if search else None
    return at_N, best


def torus_time(params: ExperimentParams) -> float:
    return choose_time_torus(params.N, params.s, params.sigma, params.beta)
