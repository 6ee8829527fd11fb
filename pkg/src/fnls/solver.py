"""Spectral time stepper on half-line frequency lattices and the phase-diagram sweep.

The lattice is two-dimensional: ``xi[j, m] = j N + m delta`` for
``0 <= j <= J`` and ``0 <= m <= Mb``.  ``Mb = 0`` gives the torus lattice
``{0, N, 2N, ...}``; ``J = 0`` gives the uniform lattice
``{0, delta, 2 delta, ...}`` of a large periodic box.  Only nonnegative
frequencies exist, and the quadratic term is lower triangular in both
indices, so every retained mode is computed exactly from the modes below it.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .errors import DomainError, TruncationError
from .params import ExperimentParams, choose_theta, inflation_threshold

TAIL_TOL = 1e-8
WP_CAVEAT = ("periodic-box model: local smoothing is absent, so bounded growth "
             "in well-posed cells is evidence only, not a proof")


@dataclass
class SpectralState:
    """Coefficients on the lattice ``j N + m delta``.

    ``kind='line'`` stores density samples, and the convolution sum is
    weighted by ``delta``.  ``kind='torus'`` stores Fourier coefficients.
    """

    modes: np.ndarray
    N: float
    delta: float
    alpha: float
    beta: float
    t: float = 0.0
    kind: str = "line"
    tail_tol: float = TAIL_TOL
    dealias: bool = True

    def __post_init__(self):
        self.modes = np.ascontiguousarray(np.atleast_2d(self.modes), dtype=np.complex128)
        if self.kind not in ("line", "torus"):
            raise DomainError(f"unknown lattice kind {self.kind!r}")

    @property
    def shape(self):
        return self.modes.shape

    def frequencies(self) -> np.ndarray:
        J, M = self.modes.shape
        return np.arange(J)[:, None] * self.N + np.arange(M)[None, :] * self.delta

    def measure(self) -> float:
        return self.delta if self.kind == "line" else 1.0

    def weights(self) -> np.ndarray:
        xi = self.frequencies()
        w = np.where(xi > 0, xi ** self.beta, 0.0 if self.beta > 0 else 1.0)
        return w * self.measure()

    def linear(self) -> np.ndarray:
        return -1j * self.frequencies() ** self.alpha

    def keep_mask(self) -> np.ndarray:
        J, M = self.modes.shape
        keep = np.ones((J, M), dtype=np.uint8)
        if self.dealias and M > 3:
            keep[:, int(2 * (M - 1) // 3) + 1:] = 0
        return keep

    def hs_norm(self, s: float) -> float:
        xi = self.frequencies()
        return math.sqrt(float(np.sum(self.measure() * (1 + xi * xi) ** s
                                      * np.abs(self.modes) ** 2)))

    def tail_ratio(self) -> float:
        """Largest magnitude near the truncation edge relative to the largest overall."""
        a = np.abs(self.modes)
        top = float(a.max())
        if top == 0:
            return 0.0
        J, M = a.shape
        if M > 3:
            edge = int(2 * (M - 1) // 3) if self.dealias else M - 1
            band = a[:, max(edge - max(M // 10, 1) + 1, 0): edge + 1]
        else:
            band = a[-1:, :]
        return float(band.max()) / top

    def copy(self) -> SpectralState:
        return replace(self, modes=self.modes.copy())


def step(state: SpectralState, dt: float, nsteps: int = 1, backend=None) -> SpectralState:
    """Integrating-factor RK4 for ``c' = -i |xi|^alpha c + conv(c, |xi|^beta c)``."""
    if not dt > 0:
        raise DomainError("dt must be positive")
    if state.tail_ratio() > state.tail_tol:
        raise TruncationError(
            f"mass at the truncation edge ({state.tail_ratio():.3g} of max) at t={state.t:g}",
            time=state.t)
    out = kernels.lawson_rk4(state.modes, state.linear(), state.weights(), dt, nsteps,
                             state.keep_mask(), backend=backend)
    if not np.all(np.isfinite(out)):
        raise TruncationError(f"non-finite coefficients at t={state.t:g}", time=state.t)
    return replace(state, modes=out, t=state.t + dt * nsteps)


def evolve(state: SpectralState, T: float, nsteps: int, chunks: int = 16,
           backend=None) -> SpectralState:
    """Advance to ``state.t + T``; the tail monitor runs between chunks."""
    if T == 0:
        return state.copy()
    dt = T / nsteps
    done = 0
    per = max(nsteps // chunks, 1)
    while done < nsteps:
        n = min(per, nsteps - done)
        state = step(state, dt, n, backend=backend)
        done += n
    if state.tail_ratio() > state.tail_tol:
        raise TruncationError(f"mass at the truncation edge at t={state.t:g}", time=state.t)
    return state


def torus_state(N: int, alpha: float, beta: float, c0: complex, c1: complex, J: int = 8) -> SpectralState:
    modes = np.zeros((J + 1, 1), dtype=np.complex128)
    modes[0, 0], modes[1, 0] = c0, c1
    return SpectralState(modes, float(N), 1.0, alpha, beta, kind="torus", dealias=False)


# growth ratio ---------------------------------------------------------------

def probe_theta(alpha: float, beta: float) -> float:
    """Window exponent of the probe datum.

    Inflation cells use the midpoint window exponent; elsewhere the lower
    end ``alpha - 1`` of that window (no admissible window exists there).
    """
    if beta > inflation_threshold(alpha):
        return choose_theta(alpha, beta)
    return max(alpha - 1.0, 0.0)


@dataclass
class GrowthResult:
    ratio: float
    phi_norm: float
    final_norm: float
    nsteps: int
    tail: float
    flags: list = field(default_factory=list)


def probe_state(params: ExperimentParams, Mb: int = 192, sub: int = 4) -> SpectralState:
    """Two-band datum: ``eps N^{theta/2}`` on ``[h, 2h)`` and ``eps N^{-s+theta/2}`` on ``[N, N+h)``."""
    p = params
    theta = p.theta if p.theta is not None else probe_theta(p.alpha, p.beta)
    N = float(p.N)
    h = N ** (-theta)
    delta = h / sub
    if 3 * sub * h >= N:
        raise DomainError("bands overlap at this N")
    modes = np.zeros((2, Mb + 1), dtype=np.complex128)
    modes[0, sub:2 * sub] = p.eps * N ** (theta / 2.0)
    modes[1, 0:sub] = p.eps * N ** (-p.s + theta / 2.0)
    return SpectralState(modes, N, delta, p.alpha, p.beta, kind="line")


def growth_ratio(params: ExperimentParams, T_obs: float, nsteps: int = 256,
                 Mb: int = 192, check: bool = True, backend=None) -> GrowthResult:
    """``||u(T_obs)||_{H^s} / ||phi||_{H^s}`` for the two-band probe datum.

    With ``check`` the run is repeated with twice the steps and a flag is
    raised when the two ratios differ by more than ``1e-6`` relative.
    """
    st = probe_state(params, Mb=Mb)
    n0 = st.hs_norm(params.s)
    if T_obs == 0:
        return GrowthResult(1.0, n0, n0, 0, 0.0)
    end = evolve(st, T_obs, nsteps, backend=backend)
    n1 = end.hs_norm(params.s)
    flags = []
    if check:
        fine = evolve(st, T_obs, 2 * nsteps, backend=backend).hs_norm(params.s)
        if abs(fine - n1) > 1e-6 * abs(fine):
            flags.append("time-unresolved")
        n1 = fine
    return GrowthResult(n1 / n0, n0, n1, nsteps, end.tail_ratio(), flags)


# sweep ----------------------------------------------------------------------

SWEEP_COLUMNS = ("alpha", "beta", "N", "T_obs", "ratio", "growth_exponent", "flags")


def classify(alpha: float, beta: float, tol: float = 1e-12) -> str:
    b0 = inflation_threshold(alpha)
    if abs(beta - b0) <= tol:
        return "boundary"
    if beta > b0:
        return "inflation"
    if alpha > 1 and 0 <= beta:
        return "wellposed"
    return "unclassified"


SWEEP_TEMPLATE = ExperimentParams(alpha=2.0, beta=1.0, s=2.0, sigma=2.0, eps=0.5, N=8,
                                  regime_tag="none")
SWEEP_NS = (8, 16, 32)
SWEEP_T_OBS = 2.0


def _cell(args):
    alpha, beta, template, Ns, T_obs, nsteps, Mb = args
    rows, ratios, flags = [], [], []
    regime = classify(alpha, beta)
    for N in Ns:
        p = template.with_(alpha=alpha, beta=beta, N=N, theta=None)
        try:
            r = growth_ratio(p, T_obs, nsteps=nsteps, Mb=Mb)
            ratios.append(r.ratio)
            rows.append([alpha, beta, N, T_obs, r.ratio, None, [regime] + r.flags])
        except (TruncationError, DomainError) as exc:
            tag = "truncation" if isinstance(exc, TruncationError) else "domain"
            rows.append([alpha, beta, N, T_obs, float("nan"), None, [regime, tag]])
            flags.append(tag)
    if len(ratios) == len(Ns) and len(Ns) >= 2:
        slope = float(np.polyfit(np.log(Ns), np.log(ratios), 1)[0])
    else:
        slope = float("nan")
    for r in rows:
        r[5] = slope
        r[6] = ";".join(r[6])
    return rows, not flags


@dataclass
class SweepResult:
    rows: list
    completed: int
    cells: int

    def cell_rows(self) -> list:
        """One row per cell: largest ``N``, its ratio, the fitted exponent and flags."""
        out, seen = [], {}
        for r in self.rows:
            key = (r[0], r[1])
            if key not in seen:
                seen[key] = len(out)
                out.append(list(r))
            else:
                cur = out[seen[key]]
                flags = cur[6].split(";") + [f for f in r[6].split(";") if f not in cur[6].split(";")]
                out[seen[key]] = list(r[:6]) + [";".join(flags)]
        return out

    def exponent(self, alpha, beta) -> float:
        for r in self.rows:
            if r[0] == alpha and r[1] == beta:
                return r[5]
        raise KeyError((alpha, beta))


def phase_diagram_sweep(cells, template: ExperimentParams = SWEEP_TEMPLATE, Ns=SWEEP_NS,
                        T_obs: float = SWEEP_T_OBS, nsteps: int = 128, Mb: int = 192,
                        jobs: int = 1) -> SweepResult:
    """Growth exponent ``d log(ratio) / d log N`` per ``(alpha, beta)`` cell."""
    cells = [(float(a), float(b)) for a, b in cells]
    if not cells:
        raise DomainError("empty sweep grid")
    args = [(a, b, template, tuple(Ns), T_obs, nsteps, Mb) for a, b in cells]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_cell, args))
    else:
        results = [_cell(a) for a in args]
    rows = [r for rs, _ in results for r in rs]
    done = sum(1 for _, ok in results if ok)
    return SweepResult(rows, done, len(cells))
