"""Picard iterates on the real line over a banded cell lattice in frequency.

Frequencies live in bands ``j N + [m h, (m+1) h)`` with ``h = N**-theta``.
Every cell carries ``p`` Gauss-Legendre nodes, so cellwise polynomial
profiles (indicator powers times smooth phases) are represented to high
order, and cell boundaries coincide with every breakpoint the iterates can
have.  The convolution of two cell-sampled profiles uses the exact
cell-pair tensor from :mod:`fnls.quadrature`.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DomainError, RegimeError, ResourceError
from .params import ExperimentParams, validate_regime
from .piecewise import DELTA, conv_power, convolve, indicator, weighted_L2_norm
from .quadrature import cell_tensor, cumulative_weights, gl_unit
from .recurrence import tail_sum_bound

MAX_K = 5
MAX_NODES = 4096
MIN_BAND_NODES = 8


@dataclass(frozen=True)
class FreqGrid:
    """Banded cell lattice.

    ``bands[j] = (m_lo, m_hi)`` lists the cells ``m_lo <= m < m_hi`` kept in
    band ``j``; the cell ``m`` of band ``j`` is ``[j N + m h, j N + (m+1) h]``.
    """

    N: int
    h: float
    p: int
    bands: dict

    def __post_init__(self):
        js = sorted(self.bands)
        for j in js:
            lo, hi = self.bands[j]
            if hi <= lo:
                raise DomainError(f"band {j} has no cells")
            if (hi - lo) * self.p < MIN_BAND_NODES:
                raise DomainError(f"band {j} has fewer than {MIN_BAND_NODES} nodes")
            if j * self.N + lo * self.h < 0:
                raise DomainError("grid reaches negative frequencies")
        for a, b in zip(js, js[1:]):
            top = a * self.N + self.bands[a][1] * self.h
            bottom = b * self.N + self.bands[b][0] * self.h
            if not top < bottom:
                raise DomainError(f"bands {a} and {b} overlap; increase N or lower theta")

    @property
    def n_nodes(self) -> int:
        return sum((hi - lo) * self.p for lo, hi in self.bands.values())

    def offsets(self, j) -> np.ndarray:
        """Node positions relative to ``j N``, shape ``(ncells, p)``."""
        lo, hi = self.bands[j]
        x, _ = gl_unit(self.p)
        return (np.arange(lo, hi)[:, None] + x[None, :]) * self.h

    def nodes(self, j) -> np.ndarray:
        return j * self.N + self.offsets(j)

    def weights(self, j) -> np.ndarray:
        lo, hi = self.bands[j]
        _, w = gl_unit(self.p)
        return np.broadcast_to(w * self.h, (hi - lo, self.p))

    def cell_slice(self, j, m_from, m_to) -> slice:
        lo, _ = self.bands[j]
        return slice(m_from - lo, m_to - lo)


@dataclass
class GridProfile:
    """Samples ``u(t_n, xi)`` per band: ``values[j]`` has shape ``(nt, ncells, p)``."""

    grid: FreqGrid
    times: np.ndarray
    values: dict
    spill: float = 0.0      # largest magnitude cropped off the lattice

    def at(self, n: int = -1) -> dict:
        return {j: v[n] for j, v in self.values.items()}

    def max_abs(self) -> float:
        return max((float(np.max(np.abs(v))) for v in self.values.values()), default=0.0)

    def band_norm(self, j, m_from, m_to, sigma=0.0, n=-1) -> float:
        """``(int <xi>^{2 sigma} |u(t_n, xi)|^2)^{1/2}`` over cells ``[m_from, m_to)`` of band ``j``."""
        if j not in self.values:
            return 0.0
        sl = self.grid.cell_slice(j, m_from, m_to)
        xi = self.grid.nodes(j)[sl]
        w = self.grid.weights(j)[sl]
        u = self.values[j][n][sl]
        return math.sqrt(float(np.sum(w * (1.0 + xi * xi) ** sigma * np.abs(u) ** 2)))

    def __add__(self, other: GridProfile) -> GridProfile:
        vals = {j: v.copy() for j, v in self.values.items()}
        for j, v in other.values.items():
            vals[j] = vals[j] + v if j in vals else v.copy()
        return GridProfile(self.grid, self.times, vals, max(self.spill, other.spill))


@dataclass
class IterateFamily:
    kind: str
    params: ExperimentParams
    grid: FreqGrid
    times: np.ndarray
    profiles: dict = field(default_factory=dict)

    def __getitem__(self, l) -> GridProfile:
        return self.profiles[l]

    @property
    def K(self) -> int:
        return max(self.profiles)


def _require_line(params: ExperimentParams) -> ExperimentParams:
    p = params.resolved()
    rep = validate_regime(p, "inflation-line")
    if not rep:
        raise RegimeError(f"inflation-line regime violated: {', '.join(rep.violations)}")
    return p


def support_uk(k: int, params: ExperimentParams) -> list[tuple[float, float]]:
    """Closed intervals ``[j2 N + j1 h, j2 N + (k + j1) h]``, ``j1 + j2 = k``, merged."""
    if k < 1:
        raise DomainError("k must be at least 1")
    p = params.resolved()
    N, h = float(p.N), p.h
    ivs = sorted((j2 * N + (k - j2) * h, j2 * N + (2 * k - j2) * h) for j2 in range(k + 1))
    merged = [list(ivs[0])]
    for a, b in ivs[1:]:
        if a <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    return [tuple(iv) for iv in merged]


def band_decomposition_indices(k: int, params: ExperimentParams, xi: float):
    """Iterate indices that can reach ``xi`` in ``[N + (k-1) h, N + k h)``.

    Returns ``(range(floor(k/2), k+1), range(lo, hi+1))``, the second being
    the low-band iterates whose support can reach the band.
    """
    p = params.resolved()
    N, h, th = float(p.N), p.h, p.theta
    if not (N + (k - 1) * h <= xi < N + k * h):
        raise DomainError(f"xi={xi} is outside the measurement band")
    M = N ** (th + 1.0)
    full = range(max(k // 2, 1), k + 1)
    low = range(int(math.floor((k - 1 + M) / 2.0)), int(math.ceil(k + M)) + 1)
    return full, low


def make_grid(params: ExperimentParams, K: int, max_band: int | None = None,
              p: int = 10, margin: int = 2, low_only: bool = False) -> FreqGrid:
    """Lattice covering the supports of iterates ``1..K`` plus ``margin`` empty cells."""
    pr = params.resolved()
    top = 0 if low_only else (K if max_band is None else min(max_band, K))
    bands = {}
    for j in range(top + 1):
        if low_only:
            lo, hi = 1, 2 * K
        else:
            lo, hi = (1 if j == 0 else 0), 2 * K - j
        lo = max(0, lo - margin) if j == 0 else lo - margin
        bands[j] = (lo, hi + margin)
    grid = FreqGrid(int(pr.N), pr.h, p, bands)
    return grid


def _check_budget(K, grid):
    if K > MAX_K:
        raise ResourceError(f"K={K} exceeds the desk-scale cap {MAX_K}; lower k or theta")
    if grid.n_nodes > MAX_NODES:
        raise ResourceError(
            f"{grid.n_nodes} frequency nodes exceed {MAX_NODES}; "
            "lower p, K or the number of bands"
        )


def build_phi(params: ExperimentParams, grid: FreqGrid | None = None, low_only: bool = False):
    """Initial datum sampled on the lattice: ``{band: (ncells, p)}``.

    ``eps N^{theta/2}`` on ``[h, 2h]`` and ``eps N^{-s+theta/2}`` on ``[N, N+h]``.
    """
    p = _require_line(params)
    if grid is None:
        grid = make_grid(p, 1, low_only=low_only)
    out = {}
    for j, (lo, hi) in grid.bands.items():
        v = np.zeros((hi - lo, grid.p), dtype=np.complex128)
        if j == 0 and lo <= 1 < hi:
            v[1 - lo] = p.eps * p.N ** (p.theta / 2.0)
        if j == 1 and not low_only and lo <= 0 < hi:
            v[0 - lo] = p.eps * p.N ** (-p.s + p.theta / 2.0)
        out[j] = v
    return out


def phi_piecewise(params: ExperimentParams):
    """The two pieces of the datum as exact piecewise polynomials."""
    p = _require_line(params)
    h, N = p.h, float(p.N)
    phi1 = indicator(h, 2 * h).scale(p.eps * N ** (p.theta / 2.0))
    phi2 = indicator(N, N + h).scale(p.eps * N ** (-p.s + p.theta / 2.0))
    return phi1, phi2


def phi_norm(params: ExperimentParams) -> float:
    p = params.resolved()
    phi1, phi2 = phi_piecewise(p)
    return math.hypot(weighted_L2_norm(phi1, p.s), weighted_L2_norm(phi2, p.s))


def _iterate(params, K, grid, times, low_only, backend=None) -> IterateFamily:
    p = _require_line(params)
    _check_budget(K, grid)
    times = np.asarray(times, dtype=float)
    nt = times.size
    W = cell_tensor(grid.p) * grid.h
    alpha, beta, N = p.alpha, p.beta, float(p.N)
    xi = {j: grid.nodes(j) for j in grid.bands}
    # |eta|^beta on the differentiated factor; |0|^beta = 0 for beta > 0
    dweight = {j: np.where(x > 0, np.abs(x) ** beta, 0.0 if beta > 0 else 1.0)
               for j, x in xi.items()}
    phase = {j: np.exp(-1j * times[:, None, None] * np.abs(x)[None] ** alpha)
             for j, x in xi.items()}

    phi = build_phi(p, grid, low_only=low_only)
    fam = IterateFamily("low-band" if low_only else "full", p, grid, times)
    fam.profiles[1] = GridProfile(
        grid, times, {j: phase[j] * phi[j][None] for j in grid.bands})

    for l in range(2, K + 1):
        spill = 0.0
        out = {j: np.zeros((nt,) + xi[j].shape, dtype=np.complex128) for j in grid.bands}
        # group the k1 + k2 = l pairs by band channel (j1, j2)
        chan: dict = {}
        for k1 in range(1, l):
            k2 = l - k1
            a, b = fam.profiles[k1], fam.profiles[k2]
            for j1, f in a.values.items():
                if not np.any(f):
                    continue
                for j2, g in b.values.items():
                    if not np.any(g):
                        continue
                    j = j1 + j2
                    conv = kernels.cell_convolve(f, g * dweight[j2][None], W, backend=backend)
                    lo1, lo2 = grid.bands[j1][0], grid.bands[j2][0]
                    base = lo1 + lo2
                    if j not in grid.bands:
                        spill = max(spill, float(np.max(np.abs(conv))))
                        continue
                    lo, hi = grid.bands[j]
                    a0, a1 = max(lo, base), min(hi, base + conv.shape[1])
                    acc = chan.setdefault((j1, j2), np.zeros_like(out[j]))
                    acc[:, a0 - lo:a1 - lo] += conv[:, a0 - base:a1 - base]
                    keep = np.zeros(conv.shape[1], bool)
                    keep[a0 - base:a1 - base] = True
                    if np.any(~keep):
                        spill = max(spill, float(np.max(np.abs(conv[:, ~keep]))))
        for (j1, j2), C in chan.items():
            j = j1 + j2
            omega = (j * N) ** alpha - (j1 * N) ** alpha - (j2 * N) ** alpha
            if j <= 1:
                omega = 0.0
            carrier = np.exp(-1j * omega * times)[:, None, None]
            g = carrier * np.conj(phase[j]) * C
            Q = cumulative_weights(times, omega)
            out[j] += phase[j] * np.tensordot(Q, g, axes=(1, 0))
        prof = GridProfile(grid, times, out, spill)
        fam.profiles[l] = prof
        if not all(np.all(np.isfinite(v)) for v in out.values()):
            raise ResourceError(f"non-finite values in iterate {l}")
    return fam


def time_nodes(T: float, nt: int = 64) -> np.ndarray:
    if not T > 0:
        raise DomainError("T must be positive")
    return np.linspace(0.0, T, int(nt))


def iterate_low(params: ExperimentParams, K: int, nt: int = 64, p: int = 10,
                T: float | None = None, backend=None) -> IterateFamily:
    """Iterates built from the low-frequency piece of the datum only."""
    pr = _require_line(params)
    grid = make_grid(pr, K, p=p, low_only=True)
    return _iterate(pr, K, grid, time_nodes(T or pr.T, nt), True, backend)


def iterate_full(params: ExperimentParams, K: int, nt: int = 64, p: int = 10,
                 T: float | None = None, max_band: int | None = None,
                 backend=None) -> IterateFamily:
    """Iterates of the full datum.

    ``max_band=1`` keeps only bands 0 and 1, which form a closed subsystem
    (a band ``j`` output only draws on bands ``<= j``).
    """
    pr = _require_line(params)
    grid = make_grid(pr, K, max_band=max_band, p=p)
    return _iterate(pr, K, grid, time_nodes(T or pr.T, nt), False, backend)


def leading_term(k: int, t: float, params: ExperimentParams, offsets) -> np.ndarray:
    """Explicit profile of the ``k``-th iterate on band 1 at time ``t``.

    ``offsets`` are positions relative to ``N``; the convolution factor is
    an exact piecewise polynomial evaluated there.
    """
    p = params.resolved()
    if k < 1:
        raise DomainError("k must be at least 1")
    h, N = p.h, float(p.N)
    base = conv_power(h, 2 * h, k - 1)
    prof = convolve(base, indicator(0.0, h)) if base is not DELTA else indicator(0.0, h)
    x = np.asarray(offsets, dtype=float)
    amp = (p.eps**k * t ** (k - 1) / math.factorial(k - 1)
           * N ** (-p.s + (p.theta / 2.0 + p.beta) * k - p.beta))
    return np.exp(-1j * t * (N + x) ** p.alpha) * amp * prof(x)


# audits ---------------------------------------------------------------------

@dataclass
class SupportAudit:
    ok: bool
    worst_ratio: float
    rows: list     # (l, band, max_inside, max_outside)


def check_support(fam: IterateFamily, rel_tol: float = 1e-14) -> SupportAudit:
    """Every iterate vanishes outside its predicted support, at all stored times."""
    grid = fam.grid
    rows, worst = [], 0.0
    for l, prof in fam.profiles.items():
        inside_max, outside_max = 0.0, prof.spill
        ivs = support_uk(l, fam.params) if fam.kind == "full" else [
            (l * grid.h, 2 * l * grid.h)]
        for j, v in prof.values.items():
            xi = grid.nodes(j)
            inside = np.zeros(xi.shape, bool)
            for a, b in ivs:
                inside |= (xi >= a) & (xi <= b)
            mag = np.abs(v)
            if np.any(inside):
                inside_max = max(inside_max, float(mag[:, inside].max()))
            if np.any(~inside):
                outside_max = max(outside_max, float(mag[:, ~inside].max()))
            rows.append((l, j, float(mag[:, inside].max()) if np.any(inside) else 0.0,
                         float(mag[:, ~inside].max()) if np.any(~inside) else 0.0))
        ratio = outside_max / inside_max if inside_max > 0 else (0.0 if outside_max == 0 else np.inf)
        worst = max(worst, ratio)
    return SupportAudit(worst < rel_tol, worst, rows)


def low_band_majorant(params: ExperimentParams, k: int, t, xi) -> np.ndarray:
    """Pointwise bound on the ``k``-th low-band iterate."""
    p = params.resolved()
    h, N, beta, eps = p.h, float(p.N), p.beta, p.eps
    t = np.asarray(t, dtype=float)
    fact = math.factorial(k - 1) ** max(0.0, beta - 1.0)
    amp = (eps * (math.pi**2 * 2.0**beta * eps * t) ** (k - 1) * fact
           * N ** (p.theta * beta + p.theta * (-beta + 0.5) * k))
    shape = conv_power(h, 2 * h, k)(xi)
    return amp[..., None, None] * shape[None] if t.ndim else amp * shape


@dataclass
class BoundAudit:
    ok: bool
    violations: int
    max_ratio: float
    per_k: dict


def check_low_bound(fam: IterateFamily) -> BoundAudit:
    if fam.kind != "low-band":
        raise DomainError("bound applies to the low-band family")
    xi = fam.grid.nodes(0)
    viol, worst, per_k = 0, 0.0, {}
    for k, prof in fam.profiles.items():
        u = np.abs(prof.values[0])
        bound = low_band_majorant(fam.params, k, fam.times, xi)
        bad = u > bound * (1 + 1e-12)
        nv = int(np.count_nonzero(bad))
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(bound > 0, u / bound, np.where(u > 0, np.inf, 0.0))
        per_k[k] = (nv, float(np.max(r)))
        viol += nv
        worst = max(worst, float(np.max(r)))
    return BoundAudit(viol == 0, viol, worst, per_k)


def leading_deviation(params: ExperimentParams, k: int, t: float = 1e-7, nt: int = 8,
                      p: int = 10, backend=None) -> float:
    """Relative L2 deviation of the computed ``k``-th iterate from its explicit profile.

    Measured on ``[N + (k-1) h, N + (2k-1) h]`` at time ``t``.
    """
    pr = _require_line(params)
    fam = iterate_full(pr, k, nt=nt, p=p, T=t, max_band=1, backend=backend)
    grid = fam.grid
    sl = grid.cell_slice(1, k - 1, 2 * k - 1)
    off = grid.offsets(1)[sl]
    w = grid.weights(1)[sl]
    u = fam[k].values[1][-1][sl]
    L = leading_term(k, fam.times[-1], pr, off)
    return math.sqrt(float(np.sum(w * np.abs(u - L) ** 2)) / float(np.sum(w * np.abs(L) ** 2)))


@dataclass
class InflationReport:
    N: int
    k: int
    T: float
    phi_norm: float
    band_norm: float
    prediction: float
    tail: float
    ratio: float
    inflated: bool

    def row(self):
        return (self.N, self.k, self.T, self.phi_norm, self.band_norm,
                self.prediction, self.tail, self.ratio)


INFLATION_COLUMNS = ("N", "k", "T", "phi_norm", "band_norm", "prediction", "tail", "ratio")


def inflation_experiment_line(params: ExperimentParams, nt: int = 64, p: int = 10,
                              backend=None) -> InflationReport:
    """Band-restricted ``H^sigma`` norm of the low-order iterates at the line time.

    The measurement band is ``[N + (k-1) h, N + k h)``; the iterates
    ``floor(k/2)..k`` are summed there, the high-order tail is bounded by
    :func:`fnls.recurrence.tail_sum_bound`.
    """
    pr = _require_line(params)
    k, T, N = pr.k, pr.T, pr.N
    if k > MAX_K:
        raise ResourceError(f"k={k} exceeds the desk-scale cap {MAX_K}")
    fam = iterate_full(pr, k, nt=nt, p=p, max_band=1, backend=backend)
    total = None
    for l in range(max(k // 2, 1), k + 1):
        total = fam[l] if total is None else total + fam[l]
    band = total.band_norm(1, k - 1, k, sigma=pr.sigma)
    pred = (pr.eps**k * math.log(N) ** (-(k - 1))
            * float(N) ** (pr.sigma - pr.s + (-pr.theta / 2.0 + pr.beta) * (k - 1)))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        tail = tail_sum_bound(pr).value
    return InflationReport(int(N), int(k), float(T), phi_norm(pr), band, pred, tail,
                           band / pred, band - tail > 1.0 / pr.eps)


def fit_slope(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    return float(np.polyfit(lx, ly, 1)[0])


def iterate_dump_rows(fam: IterateFamily):
    """Rows ``(l, t, xi, re, im)`` for every stored sample."""
    for l, prof in fam.profiles.items():
        for j, v in prof.values.items():
            xi = fam.grid.nodes(j).ravel()
            for n, t in enumerate(fam.times):
                vals = v[n].ravel()
                for x, z in zip(xi, vals):
                    yield (l, float(t), float(x), float(z.real), float(z.imag))
