"""Critical-killing constants for stable generators on the half-space.

This module evaluates the constant

    C(d, alpha, q) = (omega_{d-1}/2) * B((alpha+1)/2, (d-1)/2)
                     * int_0^1 (t^q - 1)(1 - t^{alpha-q-1}) / (1-t)^{1+alpha} dt

where omega_{d-1} is the (d-2)-dimensional surface measure of the unit sphere
in R^{d-1}, together with two numerical cross-checks:

* ``halfspace_harmonic_check`` verifies by an independent principal-value
  quadrature that x = (0, ..., 0, x_d) and f(y) = (y_d)_+^q satisfy

      p.v. int_{R^d_+} (y_d^q - x_d^q) / |x-y|^{d+alpha} dy
          = C(d, alpha, q) * x_d^{q-alpha}.

* ``superharmonic_margin_check`` verifies that replacing y_d^q by the
  log-corrected profile y_d^q F_ell(y_d/r) turns the identity into a strict
  inequality with a positive margin.

Conventions: 0 < alpha < 2, 0 <= q < alpha, d >= 2.  The integrand of the
t-integral has an integrable singularity at t = 1 (the numerator vanishes to
second order); we split at 1 - SPLIT_H and integrate the tail analytically
from the fourth-order Taylor expansion of the numerator.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import betaln, gammaln

from .dini_toolkit import transforms

__all__ = [
    "CriticalConstantQuery",
    "c_constant",
    "halfspace_harmonic_check",
    "superharmonic_margin_check",
    "sphere_surface_measure",
    "halfspace_vertical_prefactor",
    "pv_power_profile_halfline",
]

# Split point for the t -> 1 singularity of the one-dimensional integral.
# The analytic tail below keeps the O(h^{5-alpha}) remainder near 1e-15.
SPLIT_H = 1e-6

_QUAD_OPTS = dict(epsabs=1e-12, epsrel=1e-12, limit=400)


def _quad(func, a, b, **kwargs):
    """scipy quad at tight tolerance, ignoring the roundoff-floor warning.

    The requested 1e-12 tolerance intentionally pushes into the roundoff
    floor; the returned best value is accurate far beyond what we assert.
    """
    opts = {**_QUAD_OPTS, **kwargs}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", category=integrate.IntegrationWarning)
        value, _ = integrate.quad(func, a, b, **opts)
    return value


def sphere_surface_measure(n: int) -> float:
    """Surface measure of the unit sphere S^{n-1} in R^n (n >= 1).

    For n = 1 the "sphere" is the two-point set {-1, +1} with measure 2.
    """
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    return 2.0 * math.pi ** (n / 2.0) / math.exp(gammaln(n / 2.0))


def _beta(a: float, b: float) -> float:
    return math.exp(betaln(a, b))


@dataclass(frozen=True)
class CriticalConstantQuery:
    """Parameters (d, alpha, q) of the critical constant, 0 <= q < alpha."""

    dim: int
    alpha: float
    q: float

    def __post_init__(self) -> None:
        if self.dim < 2:
            raise ValueError(f"dim must be >= 2, got {self.dim}")
        if not 0.0 < self.alpha < 2.0:
            raise ValueError(f"alpha must be in (0, 2), got {self.alpha}")
        if not 0.0 <= self.q < self.alpha:
            raise ValueError(
                f"q must satisfy 0 <= q < alpha, got q={self.q}, alpha={self.alpha}"
            )


def _tail_integral(alpha: float, q: float, h: float) -> float:
    """int_{1-h}^1 (t^q-1)(1-t^{alpha-q-1})/(1-t)^{1+alpha} dt, analytically.

    With u = 1 - t the numerator expands as
        N(u) = c2 u^2 + c3 u^3 + c4 u^4 + O(u^5),
    so the tail equals sum_k ck h^{k-alpha}/(k-alpha) up to O(h^{5-alpha}).
    """
    beta = alpha - q - 1.0
    c2 = -q * beta
    c3 = 0.5 * q * beta * (alpha - 3.0)
    c4 = (
        -q * beta * (beta - 1.0) * (beta - 2.0) / 6.0
        - q * (q - 1.0) * beta * (beta - 1.0) / 4.0
        - q * (q - 1.0) * (q - 2.0) * beta / 6.0
    )
    return (
        c2 * h ** (2.0 - alpha) / (2.0 - alpha)
        + c3 * h ** (3.0 - alpha) / (3.0 - alpha)
        + c4 * h ** (4.0 - alpha) / (4.0 - alpha)
    )


def _core_integral(alpha: float, q: float) -> float:
    """int_0^1 (t^q-1)(1-t^{alpha-q-1})/(1-t)^{1+alpha} dt."""
    beta = alpha - q - 1.0
    if q == 0.0 or beta == 0.0:
        return 0.0

    # Substitute t = u^2 to soften the t -> 0 endpoint (integrand ~ t^beta
    # there, with beta possibly close to -1).
    def integrand(u: float) -> float:
        t = u * u
        return 2.0 * u * (t**q - 1.0) * (1.0 - t**beta) / (1.0 - t) ** (1.0 + alpha)

    upper = math.sqrt(1.0 - SPLIT_H)
    body = _quad(integrand, 0.0, upper)
    return body + _tail_integral(alpha, q, SPLIT_H)


def halfspace_vertical_prefactor(dim: int, alpha: float) -> float:
    """Constant from integrating out the d-1 horizontal variables.

    For s != 0,
        int_{R^{d-1}} (|w|^2 + s^2)^{-(d+alpha)/2} dw
            = [omega_{d-1} * B((d-1)/2, (alpha+1)/2) / 2] * |s|^{-1-alpha}.
    """
    return 0.5 * sphere_surface_measure(dim - 1) * _beta((dim - 1) / 2.0, (alpha + 1) / 2.0)


def c_constant(query: CriticalConstantQuery) -> float:
    """The critical constant C(d, alpha, q)."""
    if not isinstance(query, CriticalConstantQuery):
        query = CriticalConstantQuery(*query)
    return halfspace_vertical_prefactor(query.dim, query.alpha) * _core_integral(
        query.alpha, query.q
    )


def _pv_halfline(profile, x: float, alpha: float) -> float:
    """p.v. int_0^infty (profile(u) - profile(x)) / |u - x|^{1+alpha} du.

    Three-piece principal-value scheme around the singularity at u = x:
    a plain left piece [0, x/2], a symmetrized middle piece pairing
    u = x +/- s for s in (0, x/2], and a plain right tail [3x/2, infinity).
    ``profile`` must be defined on (0, infinity) and integrable against
    u^{-1-alpha} at infinity.
    """
    if x <= 0.0:
        raise ValueError(f"evaluation point must be positive, got {x}")
    w = 0.5 * x
    fx = profile(x)

    def left(u: float) -> float:
        return (profile(u) - fx) / (x - u) ** (1.0 + alpha)

    def middle(s: float) -> float:
        return (profile(x + s) + profile(x - s) - 2.0 * fx) / s ** (1.0 + alpha)

    def right(u: float) -> float:
        return (profile(u) - fx) / (u - x) ** (1.0 + alpha)

    return (
        _quad(left, 0.0, w)
        + _quad(middle, 0.0, w)
        + _quad(right, x + w, np.inf)
    )


def pv_power_profile_halfline(q: float, alpha: float, x: float) -> float:
    """p.v. int_0^infty (u^q - x^q)/|u - x|^{1+alpha} du by direct quadrature."""

    def profile(u: float) -> float:
        return u**q

    return _pv_halfline(profile, x, alpha)


def halfspace_harmonic_check(
    dim: int, alpha: float, q: float, x_d: float
) -> tuple[float, float]:
    """Evaluate both sides of the half-space power identity at x = (0, x_d).

    Returns ``(lhs, rhs)`` where

        lhs = p.v. int_{R^d_+} (y_d^q - x_d^q)/|x - y|^{d+alpha} dy

    is computed by reducing the horizontal variables analytically to the Beta
    prefactor and evaluating the remaining one-dimensional principal value by
    direct three-piece quadrature (no substitution to [0, 1], so the route is
    independent of :func:`c_constant`), and

        rhs = C(d, alpha, q) * x_d^{q - alpha}.
    """
    if not 0.0 < q < alpha:
        raise ValueError(f"need 0 < q < alpha, got q={q}, alpha={alpha}")
    if x_d <= 0.0:
        raise ValueError(f"x_d must be positive, got {x_d}")
    prefactor = halfspace_vertical_prefactor(dim, alpha)
    lhs = prefactor * pv_power_profile_halfline(q, alpha, x_d)
    rhs = c_constant(CriticalConstantQuery(dim, alpha, q)) * x_d ** (q - alpha)
    return lhs, rhs


def superharmonic_margin_check(
    dim: int, alpha: float, q: float, r: float, x_d: float, ell
) -> tuple[float, float]:
    """Evaluate the log-corrected profile's principal value against its floor.

    With F = F_ell (the cumulative transform of the modulus, built here via
    dini_toolkit.transforms) and the profile G(u) = u^q * F(u/r), returns
    ``(lhs, lower)`` where

        lhs   = prefactor * p.v. int_0^infty (G(u) - G(x_d))/|u - x_d|^{1+alpha} du
        lower = C(d, alpha, q) * x_d^{q-alpha} * F(x_d/r),

    and lhs - lower is expected to be strictly positive (of size comparable to
    x_d^{q-alpha} * ell(x_d/r)).

    ``ell`` may be a DiniFunction (constant, or regularized so F_ell
    converges) or a prebuilt DiniTransforms.
    """
    if not 0.0 < q < alpha:
        raise ValueError(f"need 0 < q < alpha, got q={q}, alpha={alpha}")
    if not 0.0 < r <= 1.0:
        raise ValueError(f"r must be in (0, 1], got {r}")
    if x_d <= 0.0:
        raise ValueError(f"x_d must be positive, got {x_d}")

    if hasattr(ell, "F_ell"):
        F = ell.F_ell
    else:
        # gamma0 only enters L_ell, which this check never uses.
        F = transforms(ell, 0.5).F_ell

    def profile(u: float) -> float:
        return u**q * F(u / r)

    prefactor = halfspace_vertical_prefactor(dim, alpha)
    lhs = prefactor * _pv_halfline(profile, x_d, alpha)
    lower = (
        c_constant(CriticalConstantQuery(dim, alpha, q))
        * x_d ** (q - alpha)
        * F(x_d / r)
    )
    return lhs, lower
