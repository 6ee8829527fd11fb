"""Experiment constants, regime validation, and derived quantities."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .errors import DomainError, RegimeError

REGIME_TAGS = ("inflation-line", "inflation-torus", "wellposed-line", "none")


@dataclass(frozen=True)
class RegimeReport:
    ok: bool
    violations: tuple[str, ...] = ()

    def __bool__(self):
        return self.ok


@dataclass(frozen=True)
class ExperimentParams:
    """Free constants of one experiment.

    ``theta``, ``k`` and ``T`` may be left as ``None``; :meth:`resolved`
    derives them from the others (midpoint window exponent, iterate depth,
    line time ``1/log N``).
    """

    alpha: float
    beta: float
    s: float = 0.0
    sigma: float = 0.0
    eps: float = 0.1
    N: int = 16
    theta: float | None = None
    k: int | None = None
    T: float | None = None
    regime_tag: str = "inflation-line"
    extra: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.regime_tag not in REGIME_TAGS:
            raise DomainError(f"unknown regime tag {self.regime_tag!r}")
        if isinstance(self.N, float):
            if not self.N.is_integer():
                raise DomainError(f"N must be an integer, got {self.N}")
            object.__setattr__(self, "N", int(self.N))

    def with_(self, **changes) -> ExperimentParams:
        return replace(self, **changes)

    def resolved(self) -> ExperimentParams:
        """Fill in omitted ``theta``, ``k`` and ``T``."""
        theta, k, T = self.theta, self.k, self.T
        if self.regime_tag == "inflation-torus":
            if T is None:
                T = choose_time_torus(self.N, self.s, self.sigma, self.beta)
            return replace(self, T=T)
        if theta is None and self.regime_tag == "inflation-line":
            theta = choose_theta(self.alpha, self.beta)
        if k is None and theta is not None:
            k = choose_k(self.s, self.sigma, self.beta, theta)
        if T is None and self.N >= 2:
            T = choose_time_line(self.N)
        return replace(self, theta=theta, k=k, T=T)

    @property
    def h(self) -> float:
        """Width ``N**-theta`` of the low-frequency window."""
        if self.theta is None:
            raise RegimeError("theta is not set; call resolved() first")
        return float(self.N) ** (-self.theta)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("extra")
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> ExperimentParams:
        names = {f.name for f in fields(cls)} - {"extra"}
        unknown = set(d) - names
        if unknown:
            raise DomainError(f"unknown config keys: {sorted(unknown)}")
        missing = {"alpha", "beta"} - set(d)
        if missing:
            raise DomainError(f"missing config keys: {sorted(missing)}")
        return cls(**d)

    @classmethod
    def from_json(cls, text_or_path) -> ExperimentParams:
        text = text_or_path
        if isinstance(text_or_path, Path) or (
            isinstance(text_or_path, str) and not text_or_path.lstrip().startswith("{")
        ):
            text = Path(text_or_path).read_text()
        return cls.from_dict(json.loads(text))


def theta_window(alpha: float, beta: float) -> tuple[float, float]:
    """Open interval of admissible window exponents."""
    lo = max(0.0, alpha - 1.0, 2.0 * (beta - 1.0) / 3.0)
    return lo, 2.0 * beta


def inflation_threshold(alpha: float) -> float:
    return max((alpha - 1.0) / 2.0, 0.0)


def validate_regime(p: ExperimentParams, tag: str | None = None) -> RegimeReport:
    """Check the exponent inequalities of a regime; never raises on violation.

    Violation names: ``alpha>0``, ``eps-range``, ``N-integer``, ``T>0``,
    ``cond:be`` (beta above the sharp line), ``theta-window``,
    ``wp-alpha``, ``wp-beta``, ``wp-s`` (well-posed side), ``torus-beta``.
    """
    tag = tag or p.regime_tag
    bad = []
    if not p.alpha > 0:
        bad.append("alpha>0")
    if not 0 < p.eps < 1:
        bad.append("eps-range")
    if int(p.N) != p.N or p.N < 2:
        bad.append("N-integer")
    if p.T is not None and not p.T > 0:
        bad.append("T>0")

    if tag == "inflation-line":
        if not p.beta > inflation_threshold(p.alpha):
            bad.append("cond:be")
        if p.theta is not None:
            lo, hi = theta_window(p.alpha, p.beta)
            if not lo < p.theta < hi:
                bad.append("theta-window")
    elif tag == "wellposed-line":
        if not p.alpha > 1:
            bad.append("wp-alpha")
        if not 0 <= p.beta <= (p.alpha - 1.0) / 2.0:
            bad.append("wp-beta")
        if not p.s > max(p.beta + 0.5, p.alpha / 4.0):
            bad.append("wp-s")
    elif tag == "inflation-torus":
        if not p.beta > 0:
            bad.append("torus-beta")
        if p.N < 3:
            bad.append("N-integer")
    return RegimeReport(not bad, tuple(bad))


def choose_theta(alpha: float, beta: float) -> float:
    """Midpoint of the admissible window-exponent interval."""
    if not beta > inflation_threshold(alpha):
        raise RegimeError(
            f"beta={beta} must exceed max((alpha-1)/2, 0)={inflation_threshold(alpha)}"
        )
    lo, hi = theta_window(alpha, beta)
    if not lo < hi:
        raise RegimeError(f"empty theta window ({lo}, {hi})")
    return 0.5 * (lo + hi)


def choose_k(s: float, sigma: float, beta: float, theta: float) -> int:
    gap = beta - theta / 2.0
    if not gap > 0:
        raise RegimeError(f"beta - theta/2 = {gap} must be positive")
    return int(math.ceil((abs(sigma - s) + 1.0) / gap)) + 1


def choose_time_line(N) -> float:
    if N <= 1:
        raise DomainError(f"N={N} must exceed 1")
    return 1.0 / math.log(N)


def choose_time_torus(N, s: float, sigma: float, beta: float) -> float:
    if N <= 1:
        raise DomainError(f"N={N} must exceed 1")
    return (abs(sigma - s) + 1.0) * math.log(N) ** 2 / float(N) ** beta


def japanese(x):
    """``<x> = (1 + x**2)**0.5``."""
    return math.sqrt(1.0 + float(x) * float(x))
