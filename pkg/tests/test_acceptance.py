"""The ten acceptance criteria at their stated tolerances and time budgets.

Each test records a one-line verdict (``criterion N: PASS|FAIL ...``) that
is printed in the terminal summary.
"""
import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from fnls import recurrence, torus, xspace
from fnls.checks import random_density
from fnls.cli import main
from fnls.iterates import (check_low_bound, check_support, fit_slope, inflation_experiment_line,
                           iterate_full, iterate_low, leading_deviation)
from fnls.params import ExperimentParams, choose_theta
from fnls.solver import SWEEP_T_OBS, phase_diagram_sweep


class Verdict:
    def __init__(self, n, budget):
        self.n, self.budget, self.t0 = n, budget, time.perf_counter()

    def __call__(self, ok, detail):
        dt = time.perf_counter() - self.t0
        ok = bool(ok) and dt < self.budget
        line = f"criterion {self.n}: {'PASS' if ok else 'FAIL'} {detail} [{dt:.1f}s < {self.budget}s]"
        ACCEPTANCE_LINES[self.n] = line
        print(line)
        assert ok, line


def line_params(**kw):
    d = dict(alpha=2.0, beta=1.0, s=0.0, sigma=0.0, eps=0.1, N=8, regime_tag="inflation-line")
    d.update(kw)
    return ExperimentParams(**d)


def test_criterion_1_torus_exact_growth():
    v = Verdict(1, 10)
    worst = 0.0
    for N in (8, 16, 32):
        for beta in (0.5, 1.0, 2.0):
            p = ExperimentParams(alpha=2.0, beta=beta, N=N, eps=0.1, regime_tag="inflation-torus")
            for t in (0.1, 0.2):
                orc = torus.ode_oracle(p, Kmodes=2, t_end=t, rtol=1e-11)
                c0, c1 = orc.coeffs[0, 0], orc.coeffs[0, 1]
                ref = math.exp(t * c0.real * N**beta) * abs(c1)
                worst = max(worst, abs(abs(orc.coeffs[-1, 1]) - ref) / ref)
    v(worst <= 1e-9, f"max relative error {worst:.2e} <= 1e-9")


def test_criterion_2_torus_thresholds():
    v = Verdict(2, 1)
    found, ok = {}, True
    for eps in (0.1, 0.05):
        p = ExperimentParams(alpha=2.0, beta=1.0, eps=eps, N=3, regime_tag="inflation-torus")
        n = torus.smallest_qualifying_N(p)
        rep = torus.torus_report(p, N=n)
        ok &= rep.flags == {"phi_small": True, "time_small": True, "growth_large": True}
        ok &= not torus.torus_report(p, N=n - 1).ok
        found[eps] = n
    v(ok, f"smallest N {found}, all three inequalities hold and fail at N-1")


def test_criterion_3_support():
    v = Verdict(3, 120)
    worst, ok = 0.0, True
    for N in (8, 16):
        p = line_params(N=N, theta=choose_theta(2.0, 1.0))
        rep = check_support(iterate_full(p, 4, nt=16))
        ok &= rep.ok
        worst = max(worst, rep.worst_ratio)
    v(ok and worst < 1e-14, f"worst outside/inside ratio {worst:.1e} < 1e-14")


def test_criterion_4_low_band_bound():
    v = Verdict(4, 120)
    viol, worst = 0, 0.0
    for N in (8, 16):
        rep = check_low_bound(iterate_low(line_params(N=N), 4, nt=32))
        viol += rep.violations
        worst = max(worst, rep.max_ratio)
    v(viol == 0, f"{viol} violations, max |u|/bound {worst:.3g}")


def test_criterion_5_leading_term():
    v = Verdict(5, 600)
    p0 = line_params().resolved()
    th, be = p0.theta, p0.beta
    target = -min(th + 1, (th + 1) * be) + 0.5
    Ns = (8, 16, 32)
    ok, parts = True, []
    for k in (2, 3):
        devs = [leading_deviation(line_params(N=N), k) for N in Ns]
        slope = fit_slope(Ns, devs)
        ok &= all(b < a for a, b in zip(devs, devs[1:])) and slope <= target
        parts.append(f"k={k} slope {slope:.2f}")
    v(ok, f"{', '.join(parts)} <= {target:.2f}, deviations decreasing")


def test_criterion_6_recurrence():
    v = Verdict(6, 30)
    ok, err = True, 0.0
    for b in (0.25, 0.5, 1.0, 1.5, 2.0):
        ok &= recurrence.check_factorial_bound(recurrence.compute_ak(b, 40)).ok
        vals = recurrence.compute_ak(b, 12).values
        brute = recurrence.ak_bruteforce(b, 12)
        err = max(err, max(abs(x - y) / y for x, y in zip(vals, brute)))
    ok &= recurrence.catalan_majorant_check(1.0, 1.0, 40).ok
    v(ok and err <= 1e-12, f"bounds hold for K=40, brute-force error {err:.1e} <= 1e-12")


def test_criterion_7_xspace_audits():
    v = Verdict(7, 30)
    rng = np.random.default_rng(2024)
    emb_ok, disc = True, 0.0
    for _ in range(20):
        F = xspace.HalfLineMeasure((), random_density(rng))
        emb_ok &= xspace.check_hs_embedding(F, float(rng.uniform(-1.0, 2.0))).ok
        rep = xspace.multiplier_invariance(F, float(rng.uniform(0.5, 4.0)), float(rng.uniform(-2, 2)))
        disc = max(disc, rep.detail["discrepancy"])
    atoms = xspace.HalfLineMeasure(((0.5, 1 + 1j), (1.5, -2.0)))
    disc = max(disc, xspace.multiplier_invariance(atoms, 2.0, 0.7).detail["discrepancy"])
    sentinel = xspace.rho_gauge(xspace.HalfLineMeasure(((0.0, 1.0),)), xspace.nu0(0.0), 1.0).value
    ok = emb_ok and disc <= 1e-14 and sentinel == math.inf
    v(ok, f"20 embeddings pass={emb_ok}, multiplier discrepancy {disc:.1e}, atom at zero -> {sentinel}")


def test_criterion_8_line_inflation_scaling():
    v = Verdict(8, 900)
    Ns = (8, 16, 32)
    reps = [inflation_experiment_line(line_params(N=N, k=3)) for N in Ns]
    p = line_params(k=3).resolved()
    predicted = p.sigma - p.s + (-p.theta / 2 + p.beta) * (p.k - 1)
    # the (log N)^{-(k-1)} factor of the prediction is divided out before fitting
    slope = fit_slope(Ns, [r.band_norm * r.T ** -(r.k - 1) for r in reps])
    tails_ok = all(r.tail <= p.eps for r in reps)
    ok = abs(slope - predicted) <= 0.4 and tails_ok
    v(ok, f"fitted exponent {slope:.3f} vs predicted {predicted:.3f} (+-0.4), "
          f"max tail {max(r.tail for r in reps):.1e} <= eps")


def test_criterion_9_phase_diagram():
    v = Verdict(9, 600)
    res = phase_diagram_sweep([(2.0, 1.0), (4.0, 1.0)], T_obs=SWEEP_T_OBS)
    e_inf, e_wp = res.exponent(2.0, 1.0), res.exponent(4.0, 1.0)
    ok = res.completed == 2 and e_inf > 0 and abs(e_wp) < 0.3
    v(ok, f"exponent (2,1) = {e_inf:.3f} > 0, (4,1) = {e_wp:.1e} within 0.3")


def test_criterion_10_determinism(tmp_path):
    v = Verdict(10, 60)
    out = tmp_path / "out"
    codes = [main(["checks", "--out", str(out), "--overwrite"])]
    first = (out / "checks.json").read_bytes()
    codes.append(main(["checks", "--out", str(out), "--overwrite"]))
    second = (out / "checks.json").read_bytes()
    v(codes == [0, 0] and first == second, f"exit codes {codes}, reports byte-identical={first == second}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
