"""Exact algebra of compactly supported piecewise polynomials on the real line.

Each piece is stored in the local variable ``x - b_i`` where ``b_i`` is the
left breakpoint of the piece, which keeps coefficients well conditioned for
narrow pieces far from the origin.
"""
from __future__ import annotations

import json
import math
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import DomainError
from .quadrature import adaptive_gl


class _Unit:
    """Convolution identity (the zeroth convolution power)."""

    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "DELTA"


DELTA = _Unit()


def _trim(c):
    c = np.asarray(c, dtype=float)
    if c.size == 0:
        return np.zeros(1)
    return c


def _shift(coeffs, delta: float) -> np.ndarray:
    """Coefficients of ``p(y + delta)`` in ``y`` given those of ``p(y)``."""
    c = np.array(coeffs, dtype=float)
    if delta == 0.0 or c.size == 1:
        return c
    n = c.size
    out = np.zeros(n)
    # Taylor: out_j = sum_{i>=j} C(i, j) c_i delta^(i-j)
    for i in range(n):
        if c[i] == 0.0:
            continue
        for j in range(i + 1):
            out[j] += math.comb(i, j) * c[i] * delta ** (i - j)
    return out


def _merge_points(pts, tol):
    pts = np.sort(np.asarray(pts, dtype=float))
    keep = [pts[0]]
    for x in pts[1:]:
        if x - keep[-1] > tol:
            keep.append(x)
    return np.asarray(keep)


class PiecewisePoly:
    """Real piecewise polynomial, zero outside ``[breakpoints[0], breakpoints[-1]]``.

    Parameters
    ----------
    breakpoints : array_like
        Strictly increasing, length ``>= 2``; an empty sequence is the zero
        function.
    pieces : sequence of array_like
        One ascending-degree coefficient array per interval, in the local
        variable ``x - breakpoints[i]``.

    Notes
    -----
    Evaluation is right-continuous at interior breakpoints; at the last
    breakpoint the left piece is used so that closed indicators evaluate to
    one at both ends.
    """

    __slots__ = ("breakpoints", "pieces")

    def __init__(self, breakpoints, pieces):
        bp = np.asarray(breakpoints, dtype=float).ravel()
        pieces = [_trim(p) for p in pieces]
        if bp.size == 0:
            if pieces:
                raise DomainError("zero function takes no pieces")
        else:
            if bp.size < 2:
                raise DomainError("need at least two breakpoints")
            if not np.all(np.diff(bp) > 0):
                raise DomainError("breakpoints must be strictly increasing")
            if len(pieces) != bp.size - 1:
                raise DomainError(
                    f"{bp.size} breakpoints need {bp.size - 1} pieces, got {len(pieces)}"
                )
        bp.setflags(write=False)
        for p in pieces:
            p.setflags(write=False)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "pieces", tuple(pieces))

    def __setattr__(self, name, value):
        raise AttributeError("PiecewisePoly is immutable")

    # construction -------------------------------------------------------
    @classmethod
    def zero(cls) -> PiecewisePoly:
        return cls([], [])

    @property
    def is_zero(self) -> bool:
        return self.breakpoints.size == 0 or all(not np.any(p) for p in self.pieces)

    @property
    def support(self) -> tuple[float, float] | None:
        if self.breakpoints.size == 0:
            return None
        return float(self.breakpoints[0]), float(self.breakpoints[-1])

    @property
    def degree(self) -> int:
        return max((len(p) - 1 for p in self.pieces), default=0)

    # evaluation ---------------------------------------------------------
    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        if self.breakpoints.size == 0:
            return out if x.ndim else float(out)
        bp = self.breakpoints
        idx = np.searchsorted(bp, x, side="right") - 1
        idx = np.where(x == bp[-1], bp.size - 2, idx)
        inside = (idx >= 0) & (idx < bp.size - 1)
        for i in np.unique(idx[inside]):
            sel = inside & (idx == i)
            out[sel] = np.polynomial.polynomial.polyval(x[sel] - bp[i], self.pieces[i])
        return out if x.ndim else float(out)

    def jumps(self) -> np.ndarray:
        """Absolute jump at every breakpoint, including the two ends."""
        if self.breakpoints.size == 0:
            return np.zeros(0)
        bp = self.breakpoints
        left = [0.0]
        right = []
        for i, p in enumerate(self.pieces):
            right.append(float(p[0]))
            left.append(float(np.polynomial.polynomial.polyval(bp[i + 1] - bp[i], p)))
        right.append(0.0)
        return np.abs(np.asarray(right) - np.asarray(left))

    def integral(self) -> float:
        total = 0.0
        for i, p in enumerate(self.pieces):
            L = self.breakpoints[i + 1] - self.breakpoints[i]
            n = np.arange(1, len(p) + 1)
            total += float(np.sum(p * L ** n / n))
        return total

    def abs_integral(self, lo: float = -np.inf, hi: float = np.inf) -> float:
        """``int_lo^hi |f|``, exact up to root finding."""
        total = 0.0
        P = np.polynomial.Polynomial
        for i, p in enumerate(self.pieces):
            b0, b1 = self.breakpoints[i], self.breakpoints[i + 1]
            a, b = max(b0, lo), min(b1, hi)
            if not b > a:
                continue
            poly = P(p)
            anti = poly.integ()
            cuts = [a - b0, b - b0]
            if len(p) > 1:
                r = poly.roots()
                r = r[np.abs(r.imag) <= 1e-12 * max(1.0, b1 - b0)].real
                cuts += [x for x in r if a - b0 < x < b - b0]
            cuts = np.sort(cuts)
            vals = anti(cuts)
            total += float(np.sum(np.abs(np.diff(vals))))
        return total

    # algebra ------------------------------------------------------------
    def scale(self, c: float) -> PiecewisePoly:
        return PiecewisePoly(self.breakpoints, [c * p for p in self.pieces])

    def translate(self, d: float) -> PiecewisePoly:
        return PiecewisePoly(self.breakpoints + d, self.pieces)

    def __mul__(self, c):
        return self.scale(float(c))

    __rmul__ = __mul__

    def __neg__(self):
        return self.scale(-1.0)

    def __add__(self, other: PiecewisePoly) -> PiecewisePoly:
        if not isinstance(other, PiecewisePoly):
            return NotImplemented
        if self.breakpoints.size == 0:
            return other
        if other.breakpoints.size == 0:
            return self
        return _accumulate(
            [(self.breakpoints[i], self.breakpoints[i + 1], p) for i, p in enumerate(self.pieces)]
            + [(other.breakpoints[i], other.breakpoints[i + 1], p) for i, p in enumerate(other.pieces)]
        )

    def __sub__(self, other):
        return self + (-other)

    # serialization ------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "breakpoints": [float(x) for x in self.breakpoints],
            "pieces": [[float(c) for c in p] for p in self.pieces],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> PiecewisePoly:
        return cls(d["breakpoints"], d["pieces"])

    @classmethod
    def from_json(cls, text: str) -> PiecewisePoly:
        return cls.from_dict(json.loads(text))

    def __eq__(self, other):
        if not isinstance(other, PiecewisePoly):
            return NotImplemented
        return (np.array_equal(self.breakpoints, other.breakpoints)
                and len(self.pieces) == len(other.pieces)
                and all(np.array_equal(a, b) for a, b in zip(self.pieces, other.pieces)))

    def __hash__(self):
        return hash((self.breakpoints.tobytes(), tuple(p.tobytes() for p in self.pieces)))

    def __repr__(self):
        if self.breakpoints.size == 0:
            return "PiecewisePoly(zero)"
        return (f"PiecewisePoly(support=[{self.breakpoints[0]:g}, {self.breakpoints[-1]:g}], "
                f"pieces={len(self.pieces)}, degree={self.degree})")


def _accumulate(contribs, tol=None) -> PiecewisePoly:
    """Sum polynomial contributions ``(lo, hi, coeffs_in_x_minus_lo)``."""
    contribs = [(float(a), float(b), np.asarray(c, float)) for a, b, c in contribs if b > a]
    if not contribs:
        return PiecewisePoly.zero()
    pts = [a for a, _, _ in contribs] + [b for _, b, _ in contribs]
    span = max(pts) - min(pts)
    scale = max(span, max(abs(x) for x in pts))
    if tol is None:
        tol = 1e-12 * scale
    bp = _merge_points(pts, tol)
    deg = max(len(c) for _, _, c in contribs)
    acc = np.zeros((bp.size - 1, deg))
    for a, b, c in contribs:
        i0 = int(np.argmin(np.abs(bp - a)))
        i1 = int(np.argmin(np.abs(bp - b)))
        for i in range(i0, i1):
            sh = _shift(c, bp[i] - a)
            acc[i, : sh.size] += sh
    return PiecewisePoly(bp, list(acc))


def indicator(a: float, b: float) -> PiecewisePoly:
    """Indicator of ``[a, b]``."""
    if not a < b:
        raise DomainError(f"indicator needs a < b, got ({a}, {b})")
    return PiecewisePoly([a, b], [[1.0]])


def _piece_convolve(p, La, q, Lb):
    """Convolution of ``p`` on ``[0, La]`` with ``q`` on ``[0, Lb]`` as pieces on ``[0, La+Lb]``.

    Returns a list of ``(lo, hi, coeffs in z - lo)``.
    """
    dp, dq = len(p) - 1, len(q) - 1
    # B[a, b]: coefficient of z^a u^b in p(z - u) q(u)
    B = np.zeros((dp + 1, dp + dq + 1))
    for i, pi in enumerate(p):
        if pi == 0.0:
            continue
        for j in range(i + 1):
            cz = pi * math.comb(i, j) * (-1.0) ** j
            # z^(i-j) u^j
            B[i - j, j: j + dq + 1] += cz * np.asarray(q)
    # antiderivative in u
    A = np.zeros((dp + 1, dp + dq + 2))
    A[:, 1:] = B / np.arange(1, dp + dq + 2)

    def subst(c0, c1):
        # A(z, c0 + c1 z) as a polynomial in z
        out = np.zeros(dp + dq + 2 + dp + 1)
        lin = np.array([c0, c1])
        powu = np.array([1.0])
        for b in range(A.shape[1]):
            col = A[:, b]
            if np.any(col):
                term = np.polynomial.polynomial.polymul(col, powu)
                out[: term.size] += term
            powu = np.polynomial.polynomial.polymul(powu, lin)
        return out

    m, M = min(La, Lb), max(La, Lb)
    lower_zero, upper_z = subst(0.0, 0.0), subst(0.0, 1.0)
    lower_shift, upper_Lb = subst(-La, 1.0), subst(Lb, 0.0)
    segs = [(0.0, m, upper_z - lower_zero)]
    if M > m:
        if La < Lb:
            segs.append((m, M, upper_z - lower_shift))
        else:
            segs.append((m, M, upper_Lb - lower_zero))
    segs.append((M, La + Lb, upper_Lb - lower_shift))
    out = []
    deg = dp + dq + 1
    for lo, hi, c in segs:
        if hi > lo:
            out.append((lo, hi, _shift(c, lo)[: deg + 1]))
    return out


def convolve(f, g):
    """Exact convolution of two piecewise polynomials (or the unit)."""
    if f is DELTA:
        return g
    if g is DELTA:
        return f
    if f.breakpoints.size == 0 or g.breakpoints.size == 0:
        return PiecewisePoly.zero()
    contribs = []
    fb, gb = f.breakpoints, g.breakpoints
    for i, p in enumerate(f.pieces):
        for j, q in enumerate(g.pieces):
            if not (np.any(p) and np.any(q)):
                continue
            base = fb[i] + gb[j]
            for lo, hi, c in _piece_convolve(p, fb[i + 1] - fb[i], q, gb[j + 1] - gb[j]):
                contribs.append((base + lo, base + hi, c))
    if not contribs:
        lo, hi = fb[0] + gb[0], fb[-1] + gb[-1]
        return PiecewisePoly([lo, hi], [[0.0]])
    return _accumulate(contribs)


@lru_cache(maxsize=None)
def _cardinal_bspline(k: int) -> tuple:
    """Exact local coefficients of the unit-integral cardinal B-spline on ``[0, k]``.

    Piece ``j`` lives on ``[j, j+1]`` and is expressed in ``u = x - j``.
    """
    fact = math.factorial(k - 1)
    pieces = []
    for j in range(k):
        c = [Fraction(0)] * k
        for i in range(j + 1):
            sgn = -1 if i % 2 else 1
            w = Fraction(sgn * math.comb(k, i), fact)
            # (u + j - i)^(k-1)
            shift = j - i
            for n in range(k):
                c[n] += w * math.comb(k - 1, n) * Fraction(shift) ** (k - 1 - n)
        pieces.append(tuple(c))
    return tuple(pieces)


def conv_power(a: float, b: float, k: int):
    """``k``-fold self-convolution of the indicator of ``[a, b]``.

    ``k = 0`` gives :data:`DELTA`.  For ``k >= 1`` the result is
    ``(b - a)**(k-1) * M_k((x - k a) / (b - a))`` with ``M_k`` the cardinal
    B-spline of order ``k``; breakpoints are ``k a + j (b - a)``.
    """
    if not a < b:
        raise DomainError(f"conv_power needs a < b, got ({a}, {b})")
    k = int(k)
    if k < 0:
        raise DomainError("k must be nonnegative")
    if k == 0:
        return DELTA
    w = float(b) - float(a)
    bp = [k * float(a) + j * w for j in range(k + 1)]
    pieces = []
    for piece in _cardinal_bspline(k):
        pieces.append([float(c) * w ** (k - 1 - n) for n, c in enumerate(piece)])
    return PiecewisePoly(bp, pieces)


def weighted_L2_norm(f: PiecewisePoly, s: float, rtol: float = 1e-10) -> float:
    """``(int <x>^{2s} |f(x)|^2 dx)^{1/2}`` by Gauss-Legendre per piece."""
    if f is DELTA:
        raise DomainError("the unit has no L2 norm")
    total = 0.0
    for i, p in enumerate(f.pieces):
        if not np.any(p):
            continue
        b0, b1 = f.breakpoints[i], f.breakpoints[i + 1]

        def integrand(x, p=p, b0=b0):
            v = np.polynomial.polynomial.polyval(x - b0, p)
            return (1.0 + x * x) ** s * v * v

        total += adaptive_gl(integrand, b0, b1, n=32, rtol=rtol, max_depth=8)
    return math.sqrt(total)


def band_restrict(f: PiecewisePoly, lo: float, hi: float) -> PiecewisePoly:
    """Product of ``f`` with the indicator of ``[lo, hi)``."""
    if not lo < hi:
        raise DomainError(f"band_restrict needs lo < hi, got ({lo}, {hi})")
    if f.breakpoints.size == 0:
        return f
    a, b = max(lo, f.breakpoints[0]), min(hi, f.breakpoints[-1])
    if not b > a:
        return PiecewisePoly.zero()
    contribs = []
    bp = f.breakpoints
    for i, p in enumerate(f.pieces):
        x0, x1 = max(bp[i], a), min(bp[i + 1], b)
        if x1 > x0:
            contribs.append((x0, x1, _shift(p, x0 - bp[i])))
    return _accumulate(contribs, tol=0.0)
