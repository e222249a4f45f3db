"""Tests for the critical constant C(d, alpha, q) and its cross-checks.

Frozen oracle values come from notes kept alongside the repo: a 10^7-panel
midpoint quadrature on [0, 1-1e-6] with a shared analytic tail, run once and
recorded here with tolerances covering the oracle's own discretization error.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stablelab.dini_toolkit import modulus_from_registry, regularize, transforms
from stablelab.special_constants import (
    CriticalConstantQuery,
    c_constant,
    halfspace_harmonic_check,
    sphere_surface_measure,
    superharmonic_margin_check,
)

# (dim, alpha, q) -> (oracle value, relative tolerance)
FROZEN_ORACLE = {
    (2, 1.5, 0.75): (1.165357332196, 5e-6),
    (3, 1.5, 0.75): (1.675513809058, 2e-5),
    (2, 1.2, 0.60): (1.572607794725, 1e-4),
}


class TestCriticalConstant:
    def test_zero_at_q_zero(self):
        for dim in (2, 3):
            for alpha in (0.7, 1.0, 1.5):
                assert c_constant(CriticalConstantQuery(dim, alpha, 0.0)) == 0.0

    def test_zero_at_q_alpha_minus_one(self):
        # C(d, alpha, alpha-1) = C(d, alpha, 0) = 0 for alpha > 1
        for dim, alpha in [(2, 1.5), (3, 1.5), (2, 1.2), (3, 1.8)]:
            value = c_constant(CriticalConstantQuery(dim, alpha, alpha - 1.0))
            assert abs(value) < 1e-10

    def test_exact_anchor_d2(self):
        # alpha=1, q=1/2: the t-integral is exactly 1 and the prefactor is
        # omega_1/2 * B(1, 1/2) = 1 * 2 = 2.
        value = c_constant(CriticalConstantQuery(2, 1.0, 0.5))
        assert value == pytest.approx(2.0, rel=1e-9)

    def test_exact_anchor_d3(self):
        # same t-integral; prefactor omega_2/2 * B(1/2, 1) = pi * 1 = pi.
        value = c_constant(CriticalConstantQuery(3, 1.0, 0.5))
        assert value == pytest.approx(math.pi, rel=1e-9)

    def test_frozen_oracle_values(self):
        for (dim, alpha, q), (want, rel) in FROZEN_ORACLE.items():
            got = c_constant(CriticalConstantQuery(dim, alpha, q))
            assert got == pytest.approx(want, rel=rel), (dim, alpha, q)

    def test_accepts_plain_tuple(self):
        assert c_constant((2, 1.5, 0.75)) == c_constant(
            CriticalConstantQuery(2, 1.5, 0.75)
        )

    def test_strictly_increasing_in_q(self):
        for dim in (2, 3):
            for alpha in (0.7, 1.0, 1.5):
                q_lo = max(0.0, (alpha - 1.0) / 2.0)
                grid = np.linspace(q_lo, alpha - 0.05, 20)
                values = [c_constant(CriticalConstantQuery(dim, alpha, q)) for q in grid]
                diffs = np.diff(values)
                assert np.all(diffs > 0.0), (dim, alpha)

    def test_divergence_as_q_approaches_alpha(self):
        values = [
            c_constant(CriticalConstantQuery(2, 1.5, 1.5 - 10.0**-k))
            for k in (1, 2, 3, 4)
        ]
        assert all(b > a for a, b in zip(values, values[1:]))
        assert values[-1] > 1e3

    def test_query_validation(self):
        with pytest.raises(ValueError):
            CriticalConstantQuery(1, 1.0, 0.5)
        with pytest.raises(ValueError):
            CriticalConstantQuery(2, 2.0, 0.5)
        with pytest.raises(ValueError):
            CriticalConstantQuery(2, 0.0, 0.0)
        with pytest.raises(ValueError):
            CriticalConstantQuery(2, 1.0, -0.1)
        with pytest.raises(ValueError):
            CriticalConstantQuery(2, 1.0, 1.0)

    @settings(max_examples=25, deadline=None)
    @given(
        alpha=st.floats(min_value=0.3, max_value=1.9),
        frac=st.floats(min_value=0.05, max_value=0.95),
    )
    def test_positive_inside_range(self, alpha, frac):
        # q strictly between (alpha-1)_+ and alpha gives a positive constant
        q_lo = max(0.0, alpha - 1.0)
        q = q_lo + frac * (alpha - q_lo)
        if q <= 0.0 or abs(q - q_lo) < 1e-3 or alpha - q < 1e-3:
            return
        assert c_constant(CriticalConstantQuery(2, alpha, q)) > 0.0


class TestSphereMeasure:
    def test_known_values(self):
        assert sphere_surface_measure(1) == pytest.approx(2.0, rel=1e-14)
        assert sphere_surface_measure(2) == pytest.approx(2 * math.pi, rel=1e-14)
        assert sphere_surface_measure(3) == pytest.approx(4 * math.pi, rel=1e-14)


class TestHalfspaceHarmonic:
    def test_derived_point(self):
        lhs, rhs = halfspace_harmonic_check(2, 1.0, 0.5, 1.0)
        assert 0.999 <= lhs / rhs <= 1.001

    def test_q_half_alpha_harmonicity(self):
        # q = alpha/2 is the classical stable-harmonic exponent for the
        # half-space; the identity must hold there like anywhere in (0, alpha).
        for dim, alpha in [(2, 1.0), (2, 1.5), (3, 0.7)]:
            lhs, rhs = halfspace_harmonic_check(dim, alpha, alpha / 2.0, 1.0)
            assert lhs == pytest.approx(rhs, rel=1e-3)

    def test_identity_grid(self):
        for dim in (2, 3):
            for alpha, q in [(0.7, 0.3), (1.0, 0.5), (1.5, 0.75)]:
                for x_d in (0.5, 1.0, 2.0):
                    lhs, rhs = halfspace_harmonic_check(dim, alpha, q, x_d)
                    assert abs(lhs - rhs) / abs(rhs) < 1e-3, (dim, alpha, q, x_d)

    def test_scaling_homogeneity(self):
        alpha, q = 1.5, 0.75
        lhs1, _ = halfspace_harmonic_check(2, alpha, q, 1.0)
        lhs2, _ = halfspace_harmonic_check(2, alpha, q, 2.0)
        assert lhs2 == pytest.approx(2.0 ** (q - alpha) * lhs1, rel=1e-6)

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            halfspace_harmonic_check(2, 1.0, 0.0, 1.0)
        with pytest.raises(ValueError):
            halfspace_harmonic_check(2, 1.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            halfspace_harmonic_check(2, 1.0, 0.5, 0.0)


class TestSuperharmonicMargin:
    def test_constant_modulus_margin_positive(self):
        cst = modulus_from_registry({"constant": 1.0})
        lhs, lower = superharmonic_margin_check(2, 1.2, 0.6, 1.0, 0.1, cst)
        assert lhs - lower > 0.0

    def test_margin_sweep_constant(self):
        cst = modulus_from_registry({"constant": 1.0})
        for x_d in np.logspace(-3, 0, 8):
            lhs, lower = superharmonic_margin_check(2, 1.2, 0.6, 1.0, float(x_d), cst)
            assert lhs - lower > 0.0, x_d

    def test_margin_sweep_regularized(self):
        ell = regularize(modulus_from_registry({"log_pow": 2}), 0.1)
        for x_d in np.logspace(-3, 0, 8):
            lhs, lower = superharmonic_margin_check(2, 1.2, 0.6, 1.0, float(x_d), ell)
            assert lhs - lower > 0.0, x_d

    def test_accepts_prebuilt_transforms(self):
        ell = regularize(modulus_from_registry({"log_pow": 2}), 0.1)
        tr = transforms(ell, 0.5)
        a = superharmonic_margin_check(2, 1.2, 0.6, 1.0, 0.1, ell)
        b = superharmonic_margin_check(2, 1.2, 0.6, 1.0, 0.1, tr)
        assert a == pytest.approx(b, rel=1e-12)

    def test_monotone_weight_nonnegative(self):
        # H(s) = s^q (F(s/r) - F(x/r)) - q^{-1} ell(x/r)(s^q - x^q) >= 0,
        # vanishing at s = x.
        q, r, x_d = 0.6, 1.0, 0.1
        moduli = [
            modulus_from_registry({"constant": 1.0}),
            regularize(modulus_from_registry({"log_pow": 2}), 0.1),
        ]
        s = np.logspace(-3, 1, 40)
        for ell in moduli:
            tr = transforms(ell, 0.5)
            F_xd = tr.F_ell(x_d / r)
            H = s**q * (np.array([tr.F_ell(v / r) for v in s]) - F_xd) - (
                1.0 / q
            ) * ell(x_d / r) * (s**q - x_d**q)
            assert np.all(H >= -1e-10), ell.name
