"""Batch invariant suite behind ``fnls checks``.

Every check returns plain JSON-ready metrics and never records wall-clock
time, so two runs with the same inputs give identical reports.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import __version__, kernels, recurrence, torus, xspace
from .errors import DomainError
from .iterates import check_low_bound, check_support, iterate_full, iterate_low
from .params import ExperimentParams
from .piecewise import PiecewisePoly

CORRUPTIONS = ("ak", "support", "bound", "embedding", "torus")
SUITE_BETAS = (0.25, 0.5, 1.0, 1.5, 2.0)
DEFAULT_LINE = ExperimentParams(alpha=2.0, beta=1.0, s=0.0, sigma=0.0, eps=0.1, N=8)


@dataclass
class CheckResult:
    name: str
    ok: bool
    metrics: dict = field(default_factory=dict)

    def to_dict(self):
        return {"name": self.name, "ok": bool(self.ok), "metrics": self.metrics}


def _f(x) -> float | str:
    # json has no inf/nan literals in strict readers
    x = float(x)
    if math.isfinite(x):
        return x
    return "inf" if x > 0 else ("-inf" if x < 0 else "nan")


def random_density(rng: np.random.Generator, max_pieces: int = 4) -> PiecewisePoly:
    """Piecewise polynomial on a random partition of ``[a, b]`` with ``a >= 0``."""
    n = int(rng.integers(1, max_pieces + 1))
    start = float(rng.uniform(0.0, 2.0))
    widths = rng.uniform(0.05, 1.5, size=n)
    bp = start + np.concatenate([[0.0], np.cumsum(widths)])
    pieces = []
    for _ in range(n):
        deg = int(rng.integers(0, 3))
        pieces.append(rng.normal(size=deg + 1))
    return PiecewisePoly(bp, pieces)


# individual checks ----------------------------------------------------------

def check_factorial(corrupt=()):
    worst = {}
    ok = True
    for b in SUITE_BETAS:
        seq = recurrence.compute_ak(b, 40)
        if "ak" in corrupt:
            lv = list(seq.log_values)
            lv[-1] = recurrence.factorial_bound_log(b, 40) + 1.0
            seq = recurrence.MajorantSeq(b, tuple(lv))
        rep = recurrence.check_factorial_bound(seq)
        ok &= rep.ok
        worst[str(b)] = _f(max(r[3] for r in rep.rows))
    return CheckResult("factorial_bound", ok, {"max_ratio": worst, "K": 40})


def check_bruteforce(corrupt=(), K: int = 12):
    err = 0.0
    for b in SUITE_BETAS:
        seq = recurrence.compute_ak(b, K)
        brute = recurrence.ak_bruteforce(b, K)
        vals = seq.values
        if "ak" in corrupt:
            vals = vals * (1 + 1e-6)
        err = max(err, max(abs(v - w) / w for v, w in zip(vals, brute)))
    return CheckResult("ak_bruteforce", err <= 1e-12, {"max_rel_error": _f(err), "K": K})


def check_catalan(corrupt=()):
    rep = recurrence.catalan_majorant_check(1.0, 1.0, 40)
    closed = max(abs(rep.rows[k - 1][1] - recurrence.catalan_closed_form(1.0, 1.0, k))
                 / recurrence.catalan_closed_form(1.0, 1.0, k) for k in range(1, 21))
    ok = rep.ok and closed <= 1e-12
    return CheckResult("catalan_majorant", ok,
                       {"max_ratio": _f(max(r[3] for r in rep.rows)), "closed_form_error": _f(closed)})


def check_support_containment(corrupt=(), params=DEFAULT_LINE, K: int = 3):
    fam = iterate_full(params, K, nt=16)
    if "support" in corrupt:
        prof = fam[1]
        prof.values = {j: v + 1e-3 for j, v in prof.values.items()}
    rep = check_support(fam)
    return CheckResult("support", rep.ok, {"worst_ratio": _f(rep.worst_ratio), "K": K,
                                            "N": params.N})


def check_low_majorant(corrupt=(), params=DEFAULT_LINE, K: int = 4):
    fam = iterate_low(params, K, nt=16)
    if "bound" in corrupt:
        prof = fam[1]
        prof.values = {j: 1.1 * v for j, v in prof.values.items()}
    rep = check_low_bound(fam)
    return CheckResult("low_band_bound", rep.ok, {"violations": rep.violations,
                                                  "max_ratio": _f(rep.max_ratio), "K": K})


def check_embedding(corrupt=(), n: int = 5, seed: int = 20240):
    rng = np.random.default_rng(seed)
    worst = -math.inf
    ok = True
    for _ in range(n):
        s = float(rng.uniform(-1.0, 2.0))
        F = xspace.HalfLineMeasure((), random_density(rng))
        rep = xspace.check_hs_embedding(F, s)
        lhs = rep.lhs * (1e3 if "embedding" in corrupt else 1.0)
        ok &= lhs <= rep.rhs + 1e-8
        worst = max(worst, lhs / rep.rhs)
    return CheckResult("hs_embedding", ok, {"max_lhs_over_rhs": _f(worst), "samples": n})


def check_multiplier(corrupt=()):
    rng = np.random.default_rng(7)
    dens = xspace.HalfLineMeasure((), random_density(rng))
    atoms = xspace.HalfLineMeasure(((0.5, 1 + 1j), (1.25, -0.3), (2.0, 0.7j)))
    disc = 0.0
    ok = True
    for F in (dens, atoms):
        for alpha, t in ((2.0, 0.3), (3.5, 1.7)):
            rep = xspace.multiplier_invariance(F, alpha, t)
            ok &= rep.ok
            disc = max(disc, rep.detail["discrepancy"])
    return CheckResult("multiplier_invariance", ok, {"max_discrepancy": _f(disc)})


def check_atom_at_zero(corrupt=()):
    F = xspace.HalfLineMeasure(((0.0, 1.0), (1.0, 2.0)))
    g = xspace.rho_gauge(F, xspace.nu0(0.0), 1.0)
    return CheckResult("atom_at_zero", g.value == math.inf, {"value": _f(g.value)})


def check_nu0(corrupt=()):
    err = 0.0
    for s in (-1.0, 0.5, 2.0):
        g = xspace.nu0(s)
        for t in (0.1, 1.0, 5.0):
            ref = xspace.nu0_closed_form(t, s)
            err = max(err, abs(float(g(t)) - ref) / ref)
    return CheckResult("nu0_closed_form", err <= 1e-12, {"max_rel_error": _f(err)})


def check_torus_oracle(corrupt=()):
    err = 0.0
    for N in (8, 16):
        for beta in (0.5, 1.0, 2.0):
            p = ExperimentParams(alpha=2.0, beta=beta, N=N, regime_tag="inflation-torus")
            orc = torus.ode_oracle(p, Kmodes=2, t_end=0.1, rtol=1e-11)
            ref = abs(complex(torus.cascade_closed_form_first_mode(p, 0.1)))
            got = abs(orc.coeffs[-1, 1]) * (1.01 if "torus" in corrupt else 1.0)
            err = max(err, abs(got - ref) / ref)
    return CheckResult("torus_first_mode", err <= 1e-9, {"max_rel_error": _f(err)})


def check_torus_thresholds(corrupt=()):
    rows = {}
    ok = True
    for eps in (0.1, 0.05):
        p = ExperimentParams(alpha=2.0, beta=1.0, eps=eps, N=3, regime_tag="inflation-torus")
        n = torus.smallest_qualifying_N(p)
        rep = torus.torus_report(p, N=n)
        below = torus.torus_report(p, N=n - 1)
        ok &= rep.ok and not below.ok
        rows[str(eps)] = n
    return CheckResult("torus_thresholds", ok, {"smallest_N": rows})


def check_backends(corrupt=()):
    rng = np.random.default_rng(3)
    c = rng.normal(size=(3, 12)) + 1j * rng.normal(size=(3, 12))
    w = rng.uniform(size=(3, 12))
    lin = -1j * rng.uniform(size=(3, 12))
    outs = [kernels.lawson_rk4(c, lin, w, 1e-2, 8, backend=b) for b in sorted(kernels.BACKENDS)]
    diff = max(float(np.max(np.abs(o - outs[0]))) for o in outs)
    return CheckResult("backend_agreement", diff <= 1e-12,
                       {"backends": sorted(kernels.BACKENDS), "max_abs_diff": _f(diff)})


SUITE = (check_factorial, check_bruteforce, check_catalan, check_support_containment,
         check_low_majorant, check_embedding, check_multiplier, check_atom_at_zero,
         check_nu0, check_torus_oracle, check_torus_thresholds, check_backends)


def run_suite(corrupt=()) -> dict:
    """Run every check; ``corrupt`` names faults to inject (see ``CORRUPTIONS``)."""
    corrupt = tuple(corrupt)
    bad = [c for c in corrupt if c not in CORRUPTIONS]
    if bad:
        raise DomainError(f"unknown corruption {bad[0]!r}; choose from {', '.join(CORRUPTIONS)}")
    results = [chk(corrupt) for chk in SUITE]
    return {
        "tool": "fnls",
        "version": __version__,
        "ok": all(r.ok for r in results),
        "failures": [r.name for r in results if not r.ok],
        "corrupt": list(corrupt),
        "checks": [r.to_dict() for r in results],
    }


def validate_report(rep: dict) -> list[str]:
    """Schema problems of a suite report (empty when valid)."""
    errs = []
    for key, typ in (("tool", str), ("version", str), ("ok", bool), ("failures", list),
                     ("corrupt", list), ("checks", list)):
        if not isinstance(rep.get(key), typ):
            errs.append(f"{key}: expected {typ.__name__}")
    for i, c in enumerate(rep.get("checks") or []):
        if not (isinstance(c, dict) and isinstance(c.get("name"), str)
                and isinstance(c.get("ok"), bool) and isinstance(c.get("metrics"), dict)):
            errs.append(f"checks[{i}] malformed")
    if not errs:
        failed = [c["name"] for c in rep["checks"] if not c["ok"]]
        if failed != rep["failures"] or rep["ok"] != (not failed):
            errs.append("failures inconsistent with checks")
    return errs
