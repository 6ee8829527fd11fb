"""Half-line measures, total-variation gauges and their audits.

A :class:`HalfLineMeasure` is a finite list of atoms plus a density on
``[0, inf)``.  For this class the supremum defining the windowed functional
``rho0(F, t)`` is the total variation of ``F`` on ``[0, t)``, so no test
functions are ever built.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DomainError
from .piecewise import PiecewisePoly, convolve, weighted_L2_norm
from .quadrature import gl_unit, interp_matrix

_GL = 32
DYADIC_PER_UNIT = 256
INF_SENTINEL = math.inf


# gauges ---------------------------------------------------------------------

@dataclass(frozen=True)
class Gauge:
    """Continuous nondecreasing function on ``[0, inf)``.

    ``func`` must accept numpy arrays.
    """

    func: object
    tag: str = "custom"
    s: float | None = None

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.asarray(self.func(t), dtype=float)
        return out if out.ndim else float(out)

    def __mul__(self, other: Gauge) -> Gauge:
        return Gauge(lambda t: self.func(t) * other.func(t), "custom")


def _nu0_eval(t, s):
    t = np.asarray(t, dtype=float)
    flat = np.atleast_1d(t).ravel()
    if np.any(flat < 0):
        raise DomainError("gauges live on [0, inf)")
    x, w = gl_unit(_GL)
    top = int(math.ceil(flat.max())) if flat.size else 0
    # unit-interval integrals of <xi>^{-2s}, then a partial last interval
    k = np.arange(top + 1)[:, None] + x[None, :]
    unit = np.sum(w * (1.0 + k * k) ** (-s), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(unit)])
    fl = np.floor(flat)
    frac = flat - fl
    xs = fl[:, None] + frac[:, None] * x[None, :]
    part = frac * np.sum(w * (1.0 + xs * xs) ** (-s), axis=1)
    val = np.sqrt(cum[fl.astype(int)] + part)
    return val.reshape(t.shape) if t.ndim else float(val[0])


def nu0(s: float) -> Gauge:
    """``t -> (int_0^t <xi>^{-2s} dxi)^{1/2}``."""
    return Gauge(lambda t: _nu0_eval(t, s), "nu0", float(s))


def nu0_closed_form(t: float, s: float) -> float:
    """Hypergeometric form of :func:`nu0`; an independent oracle."""
    import mpmath

    return float(mpmath.sqrt(t * mpmath.hyp2f1(0.5, s, 1.5, -(t * t))))


def _nu0_tilde_eval(t, s):
    t = np.asarray(t, dtype=float)
    flat = np.atleast_1d(t).ravel()
    if np.any(flat < 0):
        raise DomainError("gauges live on [0, inf)")
    fl = np.floor(flat)
    top = int(fl.max()) if flat.size else 0
    n = np.arange(1, top + 1, dtype=float)
    cum = np.concatenate([[0.0], np.cumsum((1.0 + n * n) ** abs(s))])
    head = (1.0 + (fl + 1.0) ** 2) ** abs(s) * (flat - fl)
    val = np.sqrt(head + cum[fl.astype(int)])
    return val.reshape(t.shape) if t.ndim else float(val[0])


def nu0_tilde(s: float) -> Gauge:
    """``t -> (<floor t + 1>^{2|s|} (t - floor t) + sum_{n<=floor t} <n>^{2|s|})^{1/2}``."""
    return Gauge(lambda t: _nu0_tilde_eval(t, s), "nu0-tilde", float(s))


def kappa(beta: float) -> Gauge:
    return Gauge(lambda t: 1.0 / (1.0 + np.asarray(t, float) ** beta), "kappa", None)


def is_nondecreasing(g: Gauge, grid) -> bool:
    v = np.asarray(g(np.asarray(grid, float)))
    return bool(np.all(np.diff(v) >= -1e-15 * np.maximum(1.0, np.abs(v[1:]))))


def level_sup(nu: Gauge, level: float = 1.0, t_max: float = 1e12) -> float:
    """``sup nu^{-1}([0, level])`` by bracketing and bisection.

    Returns ``inf`` when ``nu`` stays at or below ``level`` up to ``t_max``
    (a bounded gauge never leaves the level set).
    """
    if float(nu(0.0)) > level:
        raise DomainError("gauge exceeds the level at t = 0")
    lo, hi = 0.0, 1.0
    while float(nu(hi)) <= level:
        lo, hi = hi, 2.0 * hi
        if hi > t_max:
            return INF_SENTINEL
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if float(nu(mid)) <= level:
            lo = mid
        else:
            hi = mid
    return lo


def growth_gauge(phi0: complex, beta: float, s: float, nu: Gauge | None = None):
    """``l -> <Re phi0> max(l_*, l)^beta`` with ``l_* = sup nu^{-1}([0, 1])``.

    ``nu`` defaults to :func:`nu0_tilde`.  Returns ``(L, l_star)``; when
    ``l_star`` is infinite, ``L`` is infinite everywhere.
    """
    nu = nu0_tilde(s) if nu is None else nu
    ls = level_sup(nu, 1.0)
    c = math.sqrt(1.0 + complex(phi0).real ** 2)

    def L(l):
        l = np.asarray(l, float)
        out = c * np.maximum(ls, l) ** beta
        return out if out.ndim else float(out)

    return L, ls


# densities ------------------------------------------------------------------

@dataclass(frozen=True)
class CellDensity:
    """Complex density sampled at ``p`` Gauss-Legendre nodes per cell.

    ``edges`` has length ``ncells + 1``; ``values`` has shape ``(ncells, p)``.
    """

    edges: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.edges, float)
        v = np.asarray(self.values, np.complex128)
        if v.ndim != 2 or v.shape[0] != e.size - 1:
            raise DomainError("values must have shape (len(edges)-1, p)")
        if not np.all(np.diff(e) > 0):
            raise DomainError("edges must be increasing")
        object.__setattr__(self, "edges", e)
        object.__setattr__(self, "values", v)

    @property
    def p(self) -> int:
        return self.values.shape[1]

    @property
    def breakpoints(self) -> np.ndarray:
        return self.edges

    def __call__(self, x):
        x = np.atleast_1d(np.asarray(x, float))
        out = np.zeros(x.shape, np.complex128)
        idx = np.searchsorted(self.edges, x, side="right") - 1
        idx = np.where(x == self.edges[-1], self.edges.size - 2, idx)
        ok = (idx >= 0) & (idx < self.edges.size - 1)
        for i in np.unique(idx[ok]):
            sel = ok & (idx == i)
            a, b = self.edges[i], self.edges[i + 1]
            out[sel] = interp_matrix(self.p, (x[sel] - a) / (b - a)) @ self.values[i]
        return out


def _density_pieces(d):
    """Yield ``(lo, hi, evaluator)`` with ``|evaluator|`` smooth on ``[lo, hi]``."""
    if isinstance(d, PiecewisePoly):
        P = np.polynomial.Polynomial
        for i, c in enumerate(d.pieces):
            b0, b1 = d.breakpoints[i], d.breakpoints[i + 1]
            if not np.any(c):
                continue
            cuts = [0.0, b1 - b0]
            if len(c) > 1:
                r = P(c).roots()
                r = r[np.abs(r.imag) <= 1e-12 * max(1.0, b1 - b0)].real
                cuts += [x for x in r if 0 < x < b1 - b0]
            cuts = np.sort(cuts)
            for a, b in zip(cuts[:-1], cuts[1:]):
                if b > a:
                    yield b0 + a, b0 + b, (lambda x, c=c, b0=b0:
                                           np.polynomial.polynomial.polyval(x - b0, c))
    elif isinstance(d, CellDensity):
        for i in range(d.edges.size - 1):
            a, b = d.edges[i], d.edges[i + 1]
            v = d.values[i]
            if not np.any(v):
                continue
            yield a, b, (lambda x, a=a, b=b, v=v:
                         interp_matrix(d.p, (np.asarray(x) - a) / (b - a)) @ v)
    elif d is not None:
        raise DomainError(f"unsupported density {type(d).__name__}")


@dataclass(frozen=True)
class HalfLineMeasure:
    """Atoms ``(location, weight)`` plus an optional density, both on ``[0, inf)``.

    ``multipliers`` holds ``(alpha, t)`` pairs; each multiplies the measure
    by ``exp(i t |xi|^alpha)``.
    """

    atoms: tuple = ()
    density: object = None
    multipliers: tuple = ()
    _pieces: list = field(default=None, init=False, compare=False, repr=False)

    def __post_init__(self):
        atoms = tuple(sorted((float(x), complex(c)) for x, c in self.atoms))
        if any(x < 0 for x, _ in atoms):
            raise DomainError("atoms must sit in [0, inf)")
        d = self.density
        if d is not None:
            bp = d.breakpoints
            if bp.size and bp[0] < 0:
                raise DomainError("density must vanish on (-inf, 0)")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "_pieces", list(_density_pieces(d)))

    @property
    def support_end(self) -> float:
        ends = [x for x, c in self.atoms if c != 0]
        if self._pieces:
            ends.append(self._pieces[-1][1])
        return max(ends, default=0.0)

    def _phase(self, x):
        ph = np.ones_like(np.asarray(x, float), dtype=np.complex128)
        for a, t in self.multipliers:
            ph = ph * np.exp(1j * t * np.abs(x) ** a)
        return ph

    def density_values(self, x):
        x = np.asarray(x, float)
        out = np.zeros(x.shape, np.complex128)
        for lo, hi, f in self._pieces:
            sel = (x >= lo) & (x < hi)
            if np.any(sel):
                out[sel] = f(x[sel])
        return out * self._phase(x)

    def atom_weights(self) -> np.ndarray:
        if not self.atoms:
            return np.zeros(0, np.complex128)
        x = np.array([a for a, _ in self.atoms])
        c = np.array([c for _, c in self.atoms])
        return c * self._phase(x)

    def atom_moduli(self) -> np.ndarray:
        """``|c|`` per atom; the multipliers are unimodular and leave these unchanged."""
        return np.array([abs(c) for _, c in self.atoms], float)

    def scale(self, c: float) -> HalfLineMeasure:
        d = self.density
        if isinstance(d, PiecewisePoly):
            d = d.scale(c)
        elif isinstance(d, CellDensity):
            d = CellDensity(d.edges, d.values * c)
        return HalfLineMeasure(tuple((x, w * c) for x, w in self.atoms), d, self.multipliers)

    def multiply(self, alpha: float, t: float) -> HalfLineMeasure:
        return HalfLineMeasure(self.atoms, self.density, self.multipliers + ((alpha, t),))

    # serialization
    def to_dict(self) -> dict:
        d = self.density
        if isinstance(d, PiecewisePoly):
            dens = {"type": "piecewise", **d.to_dict()}
        elif isinstance(d, CellDensity):
            dens = {"type": "cells", "edges": d.edges.tolist(),
                    "re": d.values.real.tolist(), "im": d.values.imag.tolist()}
        else:
            dens = None
        return {"atoms": [[x, c.real, c.imag] for x, c in self.atoms],
                "density": dens, "multipliers": [list(m) for m in self.multipliers]}

    @classmethod
    def from_dict(cls, d: dict) -> HalfLineMeasure:
        dens = d.get("density")
        if dens is None:
            den = None
        elif dens["type"] == "piecewise":
            den = PiecewisePoly.from_dict(dens)
        elif dens["type"] == "cells":
            den = CellDensity(np.array(dens["edges"]),
                              np.array(dens["re"]) + 1j * np.array(dens["im"]))
        else:
            raise DomainError(f"unknown density type {dens['type']!r}")
        atoms = tuple((x, complex(re, im)) for x, re, im in d.get("atoms", []))
        return cls(atoms, den, tuple(tuple(m) for m in d.get("multipliers", [])))


# total variation ------------------------------------------------------------

def _abs_density_integral(F: HalfLineMeasure, lo: float, hi: float) -> float:
    x, w = gl_unit(_GL)
    total = 0.0
    for a, b, f in F._pieces:
        a2, b2 = max(a, lo), min(b, hi)
        if not b2 > a2:
            continue
        xs = a2 + (b2 - a2) * x
        v = np.abs(f(xs) * F._phase(xs))
        total += (b2 - a2) * float(np.dot(w, v))
    return total


def rho0(F: HalfLineMeasure, t: float) -> float:
    """Total variation of ``F`` on ``[0, t)``; an atom exactly at ``t`` is excluded."""
    if not t > 0:
        raise DomainError("t must be positive")
    tv = sum(c for (x, _), c in zip(F.atoms, F.atom_moduli()) if x < t)
    return float(tv) + _abs_density_integral(F, 0.0, t)


def _rho0_many(F: HalfLineMeasure, ts: np.ndarray) -> np.ndarray:
    """``rho0`` at sorted ``ts`` using cumulative piece integrals."""
    ts = np.asarray(ts, float)
    order = np.argsort(ts)
    out = np.empty(ts.size)
    pieces = F._pieces
    # cumulative integral up to each piece start
    piece_int = [_abs_density_integral(F, a, b) for a, b, _ in pieces]
    starts = np.array([a for a, _, _ in pieces]) if pieces else np.zeros(0)
    cum = np.concatenate([[0.0], np.cumsum(piece_int)])
    ax = np.array([x for x, _ in F.atoms]) if F.atoms else np.zeros(0)
    aw = F.atom_moduli()
    acum = np.concatenate([[0.0], np.cumsum(aw)])
    for i in order:
        t = ts[i]
        k = int(np.searchsorted(starts, t, side="left"))   # pieces starting below t
        val = 0.0
        if k > 0:
            val = cum[k - 1]
            a, b, _ = pieces[k - 1]
            val += _abs_density_integral(F, a, min(b, t))
        na = int(np.searchsorted(ax, t, side="left"))      # atoms strictly below t
        out[i] = val + acum[na]
    return out


@dataclass
class GaugeValue:
    value: float
    argmax: float | None


def _candidate_grid(F: HalfLineMeasure, l: float) -> np.ndarray:
    pts = [l]
    pts += [x for x, _ in F.atoms if 0 < x <= l]
    for a, b, _ in F._pieces:
        for e in np.linspace(a, b, 9):
            if 0 < e <= l:
                pts.append(e)
    n = max(int(math.ceil(l * DYADIC_PER_UNIT)), 16)
    pts += list(np.linspace(0, l, n + 1)[1:])
    # dyadic approach to zero
    pts += [l * 2.0**-j for j in range(1, 60)]
    g = np.unique(np.asarray(pts, float))
    return g[g > 0]


def _ratio(num, den):
    num, den = np.asarray(num, float), np.asarray(den, float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(den > 0, num / np.where(den > 0, den, 1.0),
                        np.where(num > 0, np.inf, 0.0))


def rho_gauge(F: HalfLineMeasure, nu: Gauge, l: float, closed: bool = False) -> GaugeValue:
    """``sup_{0 < t <= l} rho0(F, t) / nu(t)``.

    Atoms at ``x < l`` (``x <= l`` with ``closed``) also contribute their
    right limit ``(rho0(F, x) + |c|) / nu(x)``, which is the value just
    above the atom.  Mass at the origin, or anywhere ``nu`` vanishes, gives
    ``inf``.
    """
    if not l > 0:
        raise DomainError("l must be positive")
    wts = F.atom_moduli()
    for (x, _), c in zip(F.atoms, wts):
        if x == 0.0 and c > 0:
            return GaugeValue(INF_SENTINEL, 0.0)
    grid = _candidate_grid(F, l)
    vals = _ratio(_rho0_many(F, grid), nu(grid))
    best_i = int(np.argmax(vals))
    best, arg = float(vals[best_i]), float(grid[best_i])
    for (x, _), c in zip(F.atoms, wts):
        if c > 0 and (x < l or (closed and x <= l)):
            r = float(_ratio(rho0(F, x) + c if x > 0 else c, nu(x)))
            if r > best:
                best, arg = r, x
    if math.isfinite(best) and 0 < best_i:
        lo = grid[best_i - 1]
        hi = grid[best_i + 1] if best_i + 1 < grid.size else grid[best_i]
        if hi > lo:
            res = minimize_scalar(lambda t: -float(_ratio(rho0(F, t), nu(t))),
                                  bounds=(lo, hi), method="bounded",
                                  options={"xatol": 1e-12 * max(hi, 1.0)})
            if res.success and -res.fun > best:
                best, arg = float(-res.fun), float(res.x)
    return GaugeValue(best, arg)


def rho_gauge_global(F: HalfLineMeasure, nu: Gauge) -> GaugeValue:
    """Supremum over every window; beyond the support ``rho0`` is flat and ``nu`` grows."""
    end = F.support_end
    if end <= 0:
        wts = F.atom_moduli()
        if wts.size and wts.max() > 0:
            return GaugeValue(INF_SENTINEL, 0.0)
        return GaugeValue(0.0, None)
    return rho_gauge(F, nu, end, closed=True)


# audits ---------------------------------------------------------------------

@dataclass
class AuditReport:
    ok: bool
    lhs: float
    rhs: float
    argmax: float | None = None
    detail: dict = field(default_factory=dict)

    def __bool__(self):
        return self.ok


def check_hs_embedding(F: HalfLineMeasure, s: float, tol: float = 1e-8) -> AuditReport:
    """Total-variation gauge against the weighted ``L^2`` norm of the density."""
    if F.atoms:
        raise DomainError("embedding check takes densities only")
    d = F.density
    if d is None:
        return AuditReport(True, 0.0, 0.0)
    if isinstance(d, PiecewisePoly):
        rhs = weighted_L2_norm(d, s)
    else:
        x, w = gl_unit(d.p)
        xi = d.edges[:-1, None] + np.diff(d.edges)[:, None] * x[None]
        ww = np.diff(d.edges)[:, None] * w[None]
        rhs = math.sqrt(float(np.sum(ww * (1 + xi * xi) ** s * np.abs(d.values) ** 2)))
    g = rho_gauge_global(F, nu0(s))
    return AuditReport(g.value <= rhs + tol, g.value, rhs, g.argmax)


def multiplier_invariance(F: HalfLineMeasure, alpha: float, t: float, grid=None) -> AuditReport:
    """Largest change of ``rho0(., t')`` under ``exp(i t |xi|^alpha)`` over a test grid."""
    MF = F.multiply(alpha, t)
    if grid is None:
        end = max(F.support_end, 1.0)
        grid = np.unique(np.concatenate([
            np.linspace(0, 1.1 * end, 257)[1:],
            [x for x, _ in F.atoms if x > 0],
            [b for a, b, _ in F._pieces],
        ]))
    grid = np.asarray(grid, float)
    a = _rho0_many(F, grid)
    b = _rho0_many(MF, grid)
    disc = float(np.max(np.abs(a - b))) if grid.size else 0.0
    return AuditReport(disc <= 1e-14 * max(1.0, float(np.max(a, initial=0.0))), float(np.max(a, initial=0.0)),
                       float(np.max(b, initial=0.0)), detail={"discrepancy": disc})


def convolution_gauge_check(F: HalfLineMeasure, G: HalfLineMeasure, nu1: Gauge,
                            beta: float, ls=None) -> AuditReport:
    """Compare ``rho_l^{kappa nu1}(F * G)`` with ``rho_l^{nu1}(F) rho_l^{nu1}(G)`` per window.

    ``nu1`` is supplied by the caller.  The outcome is reported per row
    ``(l, lhs, rhs, margin)`` rather than asserted.
    """
    for M in (F, G):
        if M.atoms or M.multipliers or not (M.density is None or isinstance(M.density, PiecewisePoly)):
            raise DomainError("convolution check takes piecewise-polynomial densities")
    fd, gd = F.density, G.density
    if fd is None or gd is None or fd.is_zero or gd.is_zero:
        return AuditReport(True, 0.0, 0.0, detail={"rows": [], "support_ok": True})
    H = HalfLineMeasure((), convolve(fd, gd))
    support_ok = abs(H.density.breakpoints[0] - (fd.breakpoints[0] + gd.breakpoints[0])) <= 1e-12
    if ls is None:
        ls = np.linspace(0, H.support_end, 17)[1:]
    weight = nu1 * kappa(beta)
    rows, ok = [], True
    for l in ls:
        lhs = rho_gauge(H, weight, float(l)).value
        rhs = rho_gauge(F, nu1, float(l)).value * rho_gauge(G, nu1, float(l)).value
        rows.append((float(l), lhs, rhs, rhs - lhs))
        ok &= lhs <= rhs
    return AuditReport(bool(ok), max(r[1] for r in rows), max(r[2] for r in rows),
                       detail={"rows": rows, "support_ok": bool(support_ok)})
