"""Acceptance gate: every primary criterion at its stated tolerance.

Each test prints one ``[PASS]``/``[FAIL]`` line (visible with ``-s`` or in
the captured-output section of a failure) and asserts the criterion.  MC
criteria re-run the frozen plans with their committed seeds, so the fitted
numbers here are reproducible bit-for-bit on any machine with the same
dependency versions.
"""

import math
import time

import numpy as np
from scipy import stats

from stablelab import experiment_harness as eh
from stablelab.dini_toolkit import (
    double_dini_limit_check,
    f_eps,
    modulus_from_registry,
    regularize,
    transforms,
)
from stablelab.domain_geometry import (
    ball,
    build_regularized_distance,
    halfspace,
)
from stablelab.nonlocal_operator import exponent_recovery_bisection
from stablelab.special_constants import (
    CriticalConstantQuery,
    c_constant,
    halfspace_harmonic_check,
)
from stablelab.stable_montecarlo import (
    IsotropicLaw,
    SimConfig,
    lambda1_fit,
    sample_increment,
)
from stablelab.stable_symbol import spectral_density_from_spec

# the three moduli every Dini-lemma criterion runs over, with the
# regularization strength used throughout the package tests
DINI_REGISTRY = (
    ({"power": 0.3}, 0.25),
    ({"log_pow": 2}, 0.1),
    ({"log_pow": 3}, 0.1),
)


def _line(name: str, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


# ---------------------------------------------------------------------------
# 1. critical-constant zeros and monotonicity


def test_accept_01_critical_constant_zeros_and_monotonicity():
    t0 = time.time()
    worst_zero = 0.0
    monotone = True
    for dim in (2, 3):
        for alpha in (0.7, 1.0, 1.5):
            worst_zero = max(worst_zero, abs(
                c_constant(CriticalConstantQuery(dim, alpha, 0.0))))
            if alpha > 1.0:
                worst_zero = max(worst_zero, abs(c_constant(
                    CriticalConstantQuery(dim, alpha, alpha - 1.0))))
            qs = np.linspace(max(alpha - 1.0, 0.0) / 2.0, alpha - 0.05, 20)
            vals = [c_constant(CriticalConstantQuery(dim, alpha, float(q)))
                    for q in qs]
            monotone &= all(b > a for a, b in zip(vals, vals[1:]))
    ok = worst_zero <= 1e-10 and monotone
    _line("cconst-zeros-monotone", ok,
          f"worst |C| at zeros = {worst_zero:.2e} (tol 1e-10), "
          f"monotone on all six 20-point grids = {monotone}, "
          f"{time.time() - t0:.1f}s")


# ---------------------------------------------------------------------------
# 2. half-space harmonic identity


def test_accept_02_halfspace_harmonic_identity():
    t0 = time.time()
    worst = 0.0
    for alpha in (0.7, 1.0, 1.5):
        for frac in (0.25, 0.5, 0.75):
            q = frac * alpha
            for x_d in (0.5, 1.0, 2.0):
                lhs, rhs = halfspace_harmonic_check(2, alpha, q, x_d)
                worst = max(worst, abs(lhs / rhs - 1.0))
    _line("halfspace-harmonic", worst <= 0.005,
          f"worst rel error {worst:.2e} over 9-point (alpha,q) grid "
          f"x three heights (tol 5e-3), {time.time() - t0:.1f}s")


# ---------------------------------------------------------------------------
# 3. exponent recovery by generator bisection


def test_accept_03_generator_bisection_recovers_gamma():
    t0 = time.time()
    specs = [
        {"dim": 2, "alpha": 1.5, "kind": "cosine",
         "params": {"beta": 0.5, "harmonic": 1}},
        {"dim": 2, "alpha": 0.7, "kind": "linear",
         "params": {"coeff": [0.6, 0.2]}},
    ]
    theta = np.array([1.0, 0.0])
    worst = 0.0
    details = []
    for spec in specs:
        sd = spectral_density_from_spec(spec)
        q_star, gamma = exponent_recovery_bisection(sd, theta)
        worst = max(worst, abs(q_star - gamma))
        details.append(f"{spec['kind']}: |q*-gamma|={abs(q_star - gamma):.1e}")
    _line("generator-bisection", worst < 0.01,
          f"{'; '.join(details)} (tol 0.01), {time.time() - t0:.1f}s")


# ---------------------------------------------------------------------------
# 4. Dini lemma suite


def test_accept_04_dini_lemma_suite():
    t0 = time.time()
    grid = np.logspace(-5, -0.01, 50)
    checks = []
    for spec, eps_reg in DINI_REGISTRY:
        f = modulus_from_registry(spec)
        # A.1: envelope dominates and the eps-scaled envelope is monotone
        fe = np.array([f_eps(f, 0.2, float(r)) for r in grid])
        checks.append(np.all(fe >= f(grid) * (1 - 1e-10)))
        scaled = fe / grid ** 0.2
        checks.append(np.all(np.diff(scaled) <= scaled[:-1] * 1e-4))
        ell = regularize(f, eps_reg)
        # A.2(a): ell(1) <= 4 f(1) and f <= ell everywhere
        checks.append(ell(1.0) <= 4.0 * f(1.0) * (1 + 1e-4))
        checks.append(np.all(f(grid) <= ell(grid) * (1 + 1e-4)))
        # A.2(b): log-derivative bounds by central differences
        h = 1e-4
        u = np.log(np.logspace(-5, -0.05, 50))
        g0 = np.log(ell(np.exp(u)))
        gp_hi = np.log(ell(np.exp(u + h)))
        gp_lo = np.log(ell(np.exp(u - h)))
        gp = (gp_hi - gp_lo) / (2 * h)
        gpp = (gp_hi - 2 * g0 + gp_lo) / h ** 2
        r2_second = gpp + gp * (gp - 1.0)
        checks.append(np.all(gp >= -5e-3))
        checks.append(np.all(gp <= 2 * ell.eps * (1 + 5e-3)))
        checks.append(np.all(np.abs(r2_second) <= 6 * ell.eps * (1 + 5e-3)))
        # A.2(c): ell(r)/r^eps non-increasing
        ratio = ell(grid) / grid ** ell.eps
        checks.append(np.all(np.diff(ratio) <= ratio[:-1] * 1e-4))
        # A.2(d): ell(r) <= eps * F_ell(r)
        tr = transforms(ell, 0.5)
        checks.append(all(
            ell(float(r)) <= ell.eps * tr.F_ell(float(r)) * (1 + 1e-4)
            for r in np.logspace(-5.5, -0.01, 50)))
        # A.3: f(r)|log r| -> 0 trend
        checks.append(double_dini_limit_check(f).vanishing_trend)
    ok = all(checks)
    _line("dini-lemma-suite", ok,
          f"{sum(checks)}/{len(checks)} lemma checks over three moduli, "
          f"{time.time() - t0:.1f}s")


# ---------------------------------------------------------------------------
# 5. regularized distance


def test_accept_05_regularized_distance():
    t0 = time.time()
    rd_half = build_regularized_distance(halfspace(2))
    half_exact = all(
        abs(rd_half.rho([0.4, xd]) - xd) < 1e-12
        for xd in (0.01, 0.3, 1.7))
    unit = ball([0.0, 0.0], 1.0)
    rd_ball = build_regularized_distance(unit)
    hi = 2.0 * math.sqrt(5.0)
    ratios = [rd_ball.rho([t, 0.0]) / (1.0 - t)
              for t in np.linspace(0.52, 0.999, 9)]
    collar_ok = all(0.5 <= r <= hi for r in ratios)
    worst_angle = 0.0
    for ang in (0.3, 2.0, 4.4):
        q = np.array([math.cos(ang), math.sin(ang)])
        grad = rd_ball.grad_rho(q)
        cos = float(grad @ (-q)) / np.linalg.norm(grad)
        worst_angle = max(worst_angle, math.acos(min(1.0, cos)))
    ok = half_exact and collar_ok and worst_angle < 1e-6
    _line("regularized-distance", ok,
          f"halfspace exact={half_exact}, ball ratio in "
          f"[{min(ratios):.3f}, {max(ratios):.3f}] (bounds [0.5, {hi:.3f}]), "
          f"normal angle {worst_angle:.1e} rad (tol 1e-6), "
          f"{time.time() - t0:.1f}s")


# ---------------------------------------------------------------------------
# 6. MC sampler validation


def test_accept_06_mc_sampler_validation():
    t0 = time.time()
    law = IsotropicLaw(alpha=1.0, dim=1)
    x = sample_increment(law, 0.5, 1_000_000,
                         SimConfig(time_step=0.5, n_paths=1, seed=123))
    ks_cauchy = stats.kstest(x.ravel(), stats.cauchy(scale=0.5).cdf).statistic
    a = sample_increment(law, 0.2, 500_000,
                         SimConfig(time_step=0.2, n_paths=1, seed=7)).ravel()
    b = sample_increment(law, 0.05, 500_000,
                         SimConfig(time_step=0.05, n_paths=1, seed=8)).ravel()
    ks_self = stats.ks_2samp(a, (0.2 / 0.05) ** (1.0 / law.alpha) * b).statistic
    ok = ks_cauchy < 0.01 and ks_self < 0.01
    _line("mc-sampler", ok,
          f"KS vs Cauchy {ks_cauchy:.5f}, self-similarity KS {ks_self:.5f} "
          f"(tol 0.01 each), {time.time() - t0:.1f}s")


# ---------------------------------------------------------------------------
# 7. boundary-exponent MC fits


def _fit_line(tag, fit, t0):
    _line(f"exponent-fit-{tag}", fit.passed and abs(fit.deviation) <= 0.1,
          f"slope {fit.slope:.4f} vs predicted {fit.predicted:.4f} "
          f"(dev {fit.deviation:+.4f}, tol 0.1, stderr {fit.stderr:.4f}), "
          f"{time.time() - t0:.0f}s")


def test_accept_07a_killed_isotropic_halfspace():
    for alpha, grids, dt in (
            (1.5, {"t": 0.5, "delta": [0.02, 0.18], "n_delta": 6}, 0.002),
            (0.8, {"t": 0.5, "delta": [0.004, 0.12], "n_delta": 6}, 0.01)):
        t0 = time.time()
        fit = eh.run_exponent_experiment(eh.plan_from_mapping({
            "name": f"killed-iso-{alpha}", "kind": "exponent",
            "domain": {"kind": "halfspace", "dim": 2},
            "process": {"kind": "isotropic", "alpha": alpha, "dim": 2},
            "grids": grids,
            "mc": {"time_step": dt, "n_paths": 1_000_000, "seed": 5,
                   "collar_refine": True, "collar_depth": 6},
            "acceptance": {"slope_tol": 0.1},
        }))
        _fit_line(f"killed-alpha-{alpha}", fit, t0)


def test_accept_07b_feynman_kac_critical_killing():
    # alpha = 0.8, q = 0.9 alpha = 0.72, a0 resolved to C(2, 0.8, 0.72)
    t0 = time.time()
    fit = eh.run_exponent_experiment(eh.plan_from_mapping({
        "name": "fk-q072", "kind": "exponent",
        "domain": {"kind": "halfspace", "dim": 2},
        "process": {"kind": "constant", "alpha": 0.8, "dim": 2},
        "killing": {"kind": "boundary", "q": 0.72},
        "grids": {"t": 0.1, "delta": [0.003, 0.03], "n_delta": 6},
        "mc": {"time_step": 0.01, "n_paths": 1_000_000, "seed": 31,
               "collar_refine": True, "collar_depth": 6},
        "acceptance": {"slope_tol": 0.1},
    }))
    _fit_line("feynman-kac", fit, t0)


def test_accept_07c_nonsymmetric_gamma():
    # cosine density, asymmetry along e1, half-space with inward normal e1;
    # gamma(e1) and the dual gamma-hat(e1) both come from the symbol
    # quadrature inside the harness (predicted='auto').
    spec = {"kind": "cosine", "alpha": 1.5, "dim": 2,
            "params": {"beta": 0.5, "harmonic": 1}}
    for tag, dual, grids, seed in (
            ("forward", False,
             {"t": 0.5, "delta": [0.05, 0.55], "n_delta": 6}, 41),
            ("dual", True,
             {"t": 1.0, "delta": [0.05, 0.9], "n_delta": 6}, 43)):
        t0 = time.time()
        fit = eh.run_exponent_experiment(eh.plan_from_mapping({
            "name": f"nonsym-{tag}", "kind": "exponent",
            "domain": {"kind": "halfspace", "dim": 2, "normal": [1.0, 0.0]},
            "process": {**spec, "dual": dual},
            "grids": grids,
            "mc": {"time_step": 0.01, "n_paths": 20_000, "seed": seed,
                   "collar_refine": True, "collar_depth": 6},
            "acceptance": {"slope_tol": 0.1},
        }))
        _fit_line(f"nonsym-{tag}", fit, t0)


# ---------------------------------------------------------------------------
# 8. factorization band


def test_accept_08_factorization_band_and_doubling():
    t0 = time.time()
    bands = {}
    for n in (200_000, 400_000):
        res = eh.run_factorization_experiment(eh.plan_from_mapping({
            "name": f"factor-{n}", "kind": "factorization",
            "domain": {"kind": "ball", "center": [0.0, 0.0], "radius": 1.0},
            "process": {"kind": "isotropic", "alpha": 1.5, "dim": 2},
            "grids": {"t": 0.1, "x0": [0.4, 0.0], "cells": 24},
            "mc": {"time_step": 0.002, "n_paths": n, "seed": 11,
                   "collar_refine": True, "collar_depth": 6},
            "acceptance": {"band_threshold": 25.0, "min_cell_count": 200},
        }))
        bands[n] = res.band
    drift = abs(bands[400_000] - bands[200_000]) / bands[200_000]
    ok = all(b <= 25.0 for b in bands.values()) and drift <= 0.2
    _line("factorization-band", ok,
          f"band {bands[200_000]:.3f} -> {bands[400_000]:.3f} under path "
          f"doubling (each <= 25, drift {drift:.1%} <= 20%), "
          f"{time.time() - t0:.0f}s")


# ---------------------------------------------------------------------------
# 9. large-time decay


def test_accept_09_large_time_decay():
    t0 = time.time()
    dom = ball([0.0, 0.0], 5.0)
    law = IsotropicLaw(alpha=1.5, dim=2)
    cfg = SimConfig(time_step=0.05, n_paths=150_000, seed=19,
                    collar_refine=True, collar_depth=5)
    base = lambda1_fit(dom, law, None, np.zeros(2), cfg,
                       t_max=8.0, t_min=3.0)
    doubled = lambda1_fit(dom, law, None, np.zeros(2), cfg,
                          t_max=16.0, t_min=6.0)
    drift = abs(doubled.lambda1 - base.lambda1) / base.lambda1
    positive = base.lambda1 - 2.0 * base.stderr > 0.0
    ok = drift <= 0.10 and positive
    _line("large-time-decay", ok,
          f"lambda1 {base.lambda1:.5f} on [3,8] vs {doubled.lambda1:.5f} on "
          f"[6,16] (drift {drift:.1%} <= 10%), lambda1 > 0 at 2 sigma, "
          f"{time.time() - t0:.0f}s")


# ---------------------------------------------------------------------------
# 10. determinism


def test_accept_10_determinism(tmp_path):
    t0 = time.time()
    plans = [eh.plan_from_mapping({
        "name": "det-exponent", "kind": "exponent",
        "domain": {"kind": "halfspace", "dim": 2},
        "process": {"kind": "isotropic", "alpha": 1.5, "dim": 2},
        "grids": {"t": 0.5, "delta": [0.02, 0.18], "n_delta": 6},
        "mc": {"time_step": 0.005, "n_paths": 8000, "seed": 5,
               "collar_refine": True, "collar_depth": 5},
    }), eh.plan_from_mapping({
        "name": "det-factor", "kind": "factorization",
        "domain": {"kind": "ball", "center": [0.0, 0.0], "radius": 1.0},
        "process": {"kind": "isotropic", "alpha": 1.5, "dim": 2},
        "grids": {"t": 0.1, "x0": [0.4, 0.0], "cells": 12},
        "mc": {"time_step": 0.01, "n_paths": 50_000, "seed": 11,
               "collar_refine": True, "collar_depth": 4},
        "acceptance": {"min_cell_count": 50},
    })]
    files = ("det-exponent.csv", "det-factor.csv", "report.json")
    payload = {}
    for run in ("a", "b"):
        out = tmp_path / run
        eh.emit_report(eh.run_plans(plans, max_workers=1), out)
        payload[run] = {name: (out / name).read_bytes() for name in files}
    identical = all(payload["a"][n] == payload["b"][n] for n in files)
    _line("determinism", identical,
          f"re-run with identical seed/config/worker-count: "
          f"{len(files)} artifacts byte-identical = {identical}, "
          f"{time.time() - t0:.0f}s")
