"""Combinatorial majorants for the iterate amplitudes."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import DomainError, RegimeError


@dataclass(frozen=True)
class MajorantSeq:
    """Positive sequence ``a_1..a_K`` stored as natural logarithms.

    ``values`` gives plain doubles (``inf`` where they overflow).
    """

    beta: float
    log_values: tuple
    kind: str = "majorant-recurrence"

    def __post_init__(self):
        if self.kind not in ("majorant-recurrence", "catalan-majorant", "custom"):
            raise DomainError(f"unknown kind {self.kind!r}")
        if any(not np.isfinite(v) for v in self.log_values):
            raise DomainError("values must be strictly positive and finite")

    @property
    def K(self) -> int:
        return len(self.log_values)

    @property
    def values(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(np.asarray(self.log_values))

    def __getitem__(self, k: int) -> float:
        """One-based access ``seq[k] = a_k``."""
        if not 1 <= k <= self.K:
            raise IndexError(k)
        return float(self.values[k - 1])


def compute_ak(beta: float, K: int) -> MajorantSeq:
    """``a_1 = 1``, ``a_k = sum_{k1+k2=k} (2 k2)^beta / (k-1) a_{k1} a_{k2}``.

    Plain doubles while the values stay below ``1e300``; log-sum-exp after.
    """
    K = int(K)
    if K < 1:
        raise DomainError("K must be at least 1")
    loga = np.zeros(K + 1)
    loga[0] = -np.inf
    plain = True
    a = np.zeros(K + 1)
    a[1] = 1.0
    for k in range(2, K + 1):
        k2 = np.arange(1, k)
        k1 = k - k2
        if plain:
            val = float(np.sum((2.0 * k2) ** beta * a[k1] * a[k2])) / (k - 1)
            if np.isfinite(val) and val < 1e300:
                a[k] = val
                loga[k] = math.log(val)
                continue
            plain = False
        terms = beta * np.log(2.0 * k2) + loga[k1] + loga[k2]
        loga[k] = float(logsumexp(terms)) - math.log(k - 1)
    return MajorantSeq(float(beta), tuple(loga[1:].tolist()), "majorant-recurrence")


def ak_bruteforce(beta: float, K: int) -> list[float]:
    """Exponential-time oracle: sum over all full binary trees with ``k`` leaves.

    Each internal node splitting ``k = k1 + k2`` contributes
    ``(2 k2)^beta / (k1 + k2 - 1)``.
    """
    memo: dict[int, list[float]] = {1: [1.0]}

    def trees(k):
        # list of weights, one per distinct tree shape
        if k in memo:
            return memo[k]
        out = []
        for k1 in range(1, k):
            k2 = k - k1
            node = (2.0 * k2) ** beta / (k - 1)
            for wl in trees(k1):
                for wr in trees(k2):
                    out.append(node * wl * wr)
        memo[k] = out
        return out

    return [math.fsum(trees(k)) for k in range(1, K + 1)]


def factorial_bound_log(beta: float, k: int) -> float:
    return (k - 1) * math.log(math.pi**2 * 2.0**beta) + max(0.0, beta - 1.0) * float(gammaln(k))


@dataclass
class BoundReport:
    ok: bool
    rows: list = field(default_factory=list)     # (k, value, bound, ratio)
    worst_k: int | None = None

    def __bool__(self):
        return self.ok


def check_factorial_bound(seq: MajorantSeq) -> BoundReport:
    """Compare ``a_k`` with ``(pi^2 2^beta)^{k-1} ((k-1)!)^{max(0, beta-1)}``."""
    if seq.kind != "majorant-recurrence":
        raise DomainError("factorial bound applies to the recurrence sequence only")
    rows = []
    ok = True
    worst, worst_ratio = None, -np.inf
    for k, la in enumerate(seq.log_values, start=1):
        lb = factorial_bound_log(seq.beta, k)
        lr = la - lb
        rows.append((k, math.exp(min(la, 700)), math.exp(min(lb, 700)), math.exp(lr)))
        if lr > 1e-12:
            ok = False
        if lr > worst_ratio:
            worst, worst_ratio = k, lr
    return BoundReport(ok, rows, worst if not ok else None)


def catalan(n: int) -> int:
    return math.comb(2 * n, n) // (n + 1)


def catalan_majorant_check(C0: float, a1: float, K: int) -> BoundReport:
    """Extremal sequence ``c_k = C0 sum c_{k1} c_{k2}`` against ``(2 pi^2 C0 / 3)^{k-1} a1^k``."""
    if not (C0 > 0 and a1 > 0 and K >= 1):
        raise DomainError("need C0 > 0, a1 > 0, K >= 1")
    logc = [None, math.log(a1)]
    for k in range(2, K + 1):
        terms = [logc[k1] + logc[k - k1] for k1 in range(1, k)]
        logc.append(math.log(C0) + float(logsumexp(terms)))
    rows, ok, worst = [], True, None
    for k in range(1, K + 1):
        lb = (k - 1) * math.log(2.0 * math.pi**2 * C0 / 3.0) + k * math.log(a1)
        lr = logc[k] - lb
        rows.append((k, math.exp(min(logc[k], 700)), math.exp(min(lb, 700)), math.exp(lr)))
        if lr > 1e-12:
            ok = False
            worst = worst or k
    return BoundReport(ok, rows, worst)


def catalan_closed_form(C0: float, a1: float, k: int) -> float:
    return C0 ** (k - 1) * catalan(k - 1) * a1**k


@dataclass
class TailSum:
    value: float
    log_value: float
    l_lo: int
    l_hi: int
    empty: bool
    summands: np.ndarray    # log of each summand, aligned with l_lo..l_hi


def tail_sum_bound(params, sigma: float | None = None) -> TailSum:
    """Explicit majorant of the high-order iterate tail in ``H^sigma``.

    Summed over ``floor((k-1+N^{theta+1})/2) <= l <= ceil(k+N^{theta+1})``
    in log space.  The Stirling factor ``((l-1)^{l-1/2} e^{-l+2})`` enters
    with exponent ``max(0, beta-1)``.
    """
    p = params.resolved()
    if p.theta is None or p.k is None or p.T is None:
        raise RegimeError("theta, k and T are required")
    sigma = p.sigma if sigma is None else sigma
    eps, N, th, beta, k, T = p.eps, float(p.N), p.theta, p.beta, p.k, p.T
    M = N ** (th + 1.0)
    lo = int(math.floor((k - 1 + M) / 2.0))
    hi = int(math.ceil(k + M))
    lo = max(lo, 1)
    if eps == 0:
        return TailSum(0.0, -math.inf, lo, hi, hi < lo, np.zeros(0))
    if hi < lo:
        warnings.warn("tail index range is empty", RuntimeWarning, stacklevel=2)
        return TailSum(0.0, -math.inf, lo, hi, True, np.zeros(0))
    l = np.arange(lo, hi + 1, dtype=float)
    lnN = math.log(N)
    gam = max(0.0, beta - 1.0)
    log_terms = (
        math.log(eps)
        + (l - 1) * math.log(math.pi**2 * 2.0**beta * eps * T)
        + (th * beta + th * (-beta + 0.5) * l - (l - 1) * th + sigma - th / 2.0) * lnN
    )
    if gam > 0:
        lm1 = l - 1
        with np.errstate(divide="ignore", invalid="ignore"):
            # (l-1)^(l-1/2) vanishes at l = 1
            st = np.where(lm1 > 0, (l - 0.5) * np.log(np.where(lm1 > 0, lm1, 1.0)), -np.inf)
        log_terms = log_terms + gam * (st - l + 2.0)
    total = float(logsumexp(log_terms))
    return TailSum(math.exp(total) if total < 700 else math.inf, total, lo, hi, False, log_terms)
