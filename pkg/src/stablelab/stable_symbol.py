"""Lévy symbol of a strictly alpha-stable process and its boundary exponents.

The process is specified by a spherical jump density m on S^{d-1} (plus a
drift vector mu when alpha = 1): the Lévy measure is

    nu(x) = m(x/|x|) |x|^{-d-alpha},

and the characteristic exponent Psi (E[e^{i xi . Y_t}] = e^{-t Psi(xi)}) is

    Re Psi(xi) = c_re(alpha) int_{S^{d-1}} |theta.xi|^alpha  nu_e(theta) dtheta
    Im Psi(xi) = c_im(alpha) int_{S^{d-1}} |theta.xi|^{alpha-1}(theta.xi) nu_o(theta) dtheta   (alpha != 1)
    Im Psi(xi) = int_{S^{d-1}} (theta.xi) log|theta.xi| nu_o(theta) dtheta - mu.xi             (alpha  = 1)

with nu_e/nu_o the even/odd parts of m and the radial prefactors

    c_re(alpha) =  pi / (2 sin(pi alpha/2) Gamma(1+alpha))  > 0,
    c_im(alpha) = -pi / (2 cos(pi alpha/2) Gamma(1+alpha)),

obtained by analytic continuation of int_0^inf (1 - e^{iur} + iur 1_{alpha>1})
r^{-1-alpha} dr; the real part is positive definite for every alpha in (0,2).
For alpha = 1 the spherical density must satisfy the cancellation condition
int theta m(theta) dtheta = 0 (checked at load), which makes every
one-dimensional projection a symmetric Cauchy process plus drift.

The boundary exponent of direction theta (inward normal of a tangent
half-space) is

    gamma(theta) = alpha/2 + (1/pi) arctan(Im Psi(theta) / Re Psi(theta)),
    gamma_hat(theta) = alpha - gamma(theta),

both lying in ((alpha-1)_+, alpha ^ 1).

Spherical quadrature: the integrands have |.|^alpha kinks on the equator
{theta . xi = 0}, so the sphere is split there (two arcs for d=2, two
hemispheres for d=3) and each smooth piece gets Gauss-Legendre nodes (times a
periodic trapezoid rule in azimuth for d=3), with adaptive doubling until the
relative change drops below SYMBOL_TOL.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Mapping

import numpy as np
from scipy.special import gammaln

__all__ = [
    "SpectralDensity",
    "LevySymbolValue",
    "ProjectionCoefficients",
    "symbol_prefactors",
    "spectral_density_from_spec",
    "dual_density",
    "density_nu",
    "levy_symbol",
    "gamma_exponent",
    "gamma_range",
    "projection_coefficients",
]

SYMBOL_TOL = 1e-8

# quadrature start sizes and caps (nodes per smooth piece)
_D2_START, _D2_CAP = 128, 8192
_D3_POLAR_START, _D3_AZIM_START = 32, 128
_D3_POLAR_CAP, _D3_AZIM_CAP = 512, 2048


def symbol_prefactors(alpha: float) -> tuple[float, float]:
    """Radial prefactors (c_re, c_im) of the stable symbol.

    c_re > 0 on all of (0,2); c_im changes sign at alpha = 1, where the
    symbol uses its own logarithmic branch and only c_re's limit pi/2 is
    meaningful (returned with c_im = nan).
    """
    if not 0.0 < alpha < 2.0:
        raise ValueError(f"alpha must be in (0, 2), got {alpha}")
    if alpha == 1.0:
        return math.pi / 2.0, math.nan
    gamma_1p = math.exp(gammaln(1.0 + alpha))
    c_re = math.pi / (2.0 * math.sin(math.pi * alpha / 2.0) * gamma_1p)
    c_im = -math.pi / (2.0 * math.cos(math.pi * alpha / 2.0) * gamma_1p)
    return c_re, c_im


@dataclass(frozen=True, eq=False)
class SpectralDensity:
    """Spherical density m on S^{d-1} with stability index and drift.

    ``m`` maps an (n, dim) array of unit vectors to an (n,) array of positive
    values inside [a5, a6].  ``mu`` is used only when alpha = 1.  Instances
    are immutable and validated on construction (bounds on a sample grid;
    the alpha=1 cancellation condition by quadrature).
    """

    alpha: float
    dim: int
    m: Callable[[np.ndarray], np.ndarray]
    a5: float
    a6: float
    mu: np.ndarray | None = None
    kind: str = "custom"
    params: dict = field(default_factory=dict)
    # angles (d=2 only) where m is continuous but not smooth; the circle
    # quadrature splits its arcs there so Gauss-Legendre stays spectral
    kink_angles: tuple = ()

    def __post_init__(self):
        if not 0.0 < self.alpha < 2.0:
            raise ValueError(f"alpha must be in (0, 2), got {self.alpha}")
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        if not 0.0 < self.a5 <= self.a6:
            raise ValueError(f"need 0 < a5 <= a6, got a5={self.a5}, a6={self.a6}")
        mu = np.zeros(self.dim) if self.mu is None else np.asarray(self.mu, dtype=float)
        if mu.shape != (self.dim,) or not np.all(np.isfinite(mu)):
            raise ValueError(f"drift must be a finite vector of length {self.dim}")
        object.__setattr__(self, "mu", mu)
        self._validate_bounds()
        if self.alpha == 1.0:
            self._validate_cancellation()

    def _sample_grid(self) -> np.ndarray:
        if self.dim == 2:
            phi = np.linspace(0.0, 2.0 * math.pi, 720, endpoint=False)
            return np.column_stack([np.cos(phi), np.sin(phi)])
        return _fibonacci_sphere(2048)

    def _validate_bounds(self) -> None:
        vals = np.asarray(self.m(self._sample_grid()), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise ValueError("spherical density returned non-finite values")
        lo, hi = vals.min(), vals.max()
        if lo <= 0.0:
            raise ValueError(f"spherical density must be positive (min sampled {lo})")
        tol = 1e-9 * self.a6
        if lo < self.a5 - tol or hi > self.a6 + tol:
            raise ValueError(
                f"sampled density range [{lo:.6g}, {hi:.6g}] violates "
                f"declared bounds [{self.a5:.6g}, {self.a6:.6g}]"
            )

    def _validate_cancellation(self) -> None:
        def integrand(u: np.ndarray, theta: np.ndarray) -> np.ndarray:
            return theta * np.asarray(self.m(theta), dtype=float)[:, None]

        axis = np.zeros(self.dim)
        axis[0] = 1.0
        scale = self.a6 * sphere_area(self.dim)
        vec = _sphere_quadrature(self, axis, integrand, self.dim, scale_floor=scale)
        if np.linalg.norm(vec) > 1e-7 * scale:
            raise ValueError(
                "alpha = 1 requires the cancellation condition "
                f"int theta m(theta) dtheta = 0; quadrature gave {vec}"
            )


@dataclass(frozen=True)
class LevySymbolValue:
    """Value of the characteristic exponent at one frequency."""

    re_psi: float
    im_psi: float

    @property
    def modulus(self) -> float:
        return math.hypot(self.re_psi, self.im_psi)


@dataclass(frozen=True)
class ProjectionCoefficients:
    """One-dimensional reduction of the process along a direction theta.

    theta . Y is a strictly alpha-stable process on the line whose Lévy
    density is (c_plus 1_{y>0} + c_minus 1_{y<0}) |y|^{-1-alpha} for
    alpha != 1; for alpha = 1 the cancellation condition makes the
    projection a *symmetric* Cauchy process (sym_scale |v| symbol) plus
    drift.  scale/beta give the standard parametrization
    Psi_1(v) = scale |v|^alpha (1 - i beta tan(pi alpha/2) sgn v).
    """

    alpha: float
    c_plus: float
    c_minus: float
    drift: float

    @property
    def beta(self) -> float:
        return (self.c_plus - self.c_minus) / (self.c_plus + self.c_minus)

    @property
    def scale(self) -> float:
        if self.alpha == 1.0:
            return math.pi / 2.0 * (self.c_plus + self.c_minus)
        return symbol_prefactors(self.alpha)[0] * (self.c_plus + self.c_minus)


def sphere_area(dim: int) -> float:
    """Surface measure of S^{dim-1} (2*pi for d=2, 4*pi for d=3)."""
    return 2.0 * math.pi ** (dim / 2.0) / math.exp(gammaln(dim / 2.0))


def _fibonacci_sphere(n: int) -> np.ndarray:
    golden = (1.0 + math.sqrt(5.0)) / 2.0
    k = np.arange(n, dtype=float)
    z = 1.0 - (2.0 * k + 1.0) / n
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = 2.0 * math.pi * k / golden
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def _unit(vec: np.ndarray, what: str) -> np.ndarray:
    v = np.asarray(vec, dtype=float)
    norm = np.linalg.norm(v)
    if not np.isfinite(norm) or norm == 0.0:
        raise ValueError(f"{what} must be a nonzero finite vector")
    return v / norm


def _orthonormal_frame(axis: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Two unit vectors completing ``axis`` to an orthonormal basis of R^3."""
    helper = np.array([1.0, 0.0, 0.0])
    if abs(axis[0]) > 0.9:
        helper = np.array([0.0, 1.0, 0.0])
    u = np.cross(axis, helper)
    u /= np.linalg.norm(u)
    v = np.cross(axis, u)
    return u, v


@lru_cache(maxsize=32)
def _leggauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


def _gauss_legendre(a: float, b: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = _leggauss(n)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return mid + half * x, half * w


def _circle_splits(sd, xi_hat) -> np.ndarray:
    """Sorted split angles: equator of xi_hat plus declared kinks of m."""
    phi0 = math.atan2(xi_hat[1], xi_hat[0])
    splits = {(phi0 + 0.5 * math.pi) % (2.0 * math.pi),
              (phi0 + 1.5 * math.pi) % (2.0 * math.pi)}
    splits.update(a % (2.0 * math.pi) for a in sd.kink_angles)
    out = np.sort(np.array(sorted(splits)))
    # drop near-duplicates (an m-kink sitting on the equator)
    keep = np.concatenate([[True], np.diff(out) > 1e-12])
    return out[keep]


def _quad_once_d2(sd, xi_hat, integrand, k, n):
    splits = _circle_splits(sd, xi_hat)
    total = np.zeros(k)
    for i, lo in enumerate(splits):
        hi = splits[i + 1] if i + 1 < len(splits) else splits[0] + 2.0 * math.pi
        phi, w = _gauss_legendre(lo, hi, n)
        theta = np.column_stack([np.cos(phi), np.sin(phi)])
        u = theta @ xi_hat
        vals = np.asarray(integrand(u, theta), dtype=float).reshape(len(phi), k)
        total += w @ vals
    return total


def _quad_once_d3(sd, xi_hat, integrand, k, n_polar, n_azim):
    e_u, e_v = _orthonormal_frame(xi_hat)
    lam = 2.0 * math.pi * np.arange(n_azim) / n_azim
    w_lam = 2.0 * math.pi / n_azim
    cos_l, sin_l = np.cos(lam), np.sin(lam)
    total = np.zeros(k)
    for lo, hi in ((0.0, 0.5 * math.pi), (0.5 * math.pi, math.pi)):
        psi, w_psi = _gauss_legendre(lo, hi, n_polar)
        sin_p, cos_p = np.sin(psi), np.cos(psi)
        # theta(psi, lam) = sin psi (cos lam e_u + sin lam e_v) + cos psi xi_hat
        horiz = cos_l[None, :, None] * e_u + sin_l[None, :, None] * e_v
        theta = (
            sin_p[:, None, None] * horiz + cos_p[:, None, None] * xi_hat
        ).reshape(-1, 3)
        u = np.repeat(cos_p, n_azim)
        vals = np.asarray(integrand(u, theta), dtype=float).reshape(
            n_polar, n_azim, k
        )
        total += np.einsum("p,pak->k", w_psi * sin_p, vals) * w_lam
    return total


def _sphere_quadrature(sd, xi_hat, integrand, k, scale_floor=0.0) -> np.ndarray:
    """Adaptive kink-split quadrature of ``integrand`` over the sphere.

    ``integrand(u, theta)`` gets the projections u = theta . xi_hat and the
    points themselves, returning (n, k); the equator u = 0 bounds each smooth
    piece.  Sizes double until the result moves by less than SYMBOL_TOL
    relative to its largest component (or ``scale_floor`` when the integral
    itself is expected to vanish, e.g. cancellation checks).
    """
    if sd.dim == 2:
        n = _D2_START
        prev = _quad_once_d2(sd, xi_hat, integrand, k, n)
        while n < _D2_CAP:
            n *= 2
            cur = _quad_once_d2(sd, xi_hat, integrand, k, n)
            scale = max(np.max(np.abs(cur)), scale_floor, 1e-300)
            if np.max(np.abs(cur - prev)) <= SYMBOL_TOL * scale:
                return cur
            prev = cur
        raise RuntimeError(
            f"circle quadrature did not reach {SYMBOL_TOL} by {n} nodes/arc"
        )
    n_p, n_a = _D3_POLAR_START, _D3_AZIM_START
    prev = _quad_once_d3(sd, xi_hat, integrand, k, n_p, n_a)
    while n_p < _D3_POLAR_CAP and n_a < _D3_AZIM_CAP:
        n_p *= 2
        n_a *= 2
        cur = _quad_once_d3(sd, xi_hat, integrand, k, n_p, n_a)
        scale = max(np.max(np.abs(cur)), scale_floor, 1e-300)
        if np.max(np.abs(cur - prev)) <= SYMBOL_TOL * scale:
            return cur
        prev = cur
    raise RuntimeError(
        f"sphere quadrature did not reach {SYMBOL_TOL} by {n_p}x{n_a} nodes; "
        "densities with derivative kinks (poshalf mixtures) defeat the d=3 "
        "product rule — use a smooth kind such as 'linear' in dimension 3"
    )


def density_nu(sd: SpectralDensity, x) -> float:
    """Lévy density nu(x) = m(x/|x|) |x|^{-d-alpha} at one or many points."""
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[1] != sd.dim:
        raise ValueError(f"points must have dimension {sd.dim}")
    norms = np.linalg.norm(pts, axis=1)
    if np.any(norms == 0.0) or not np.all(np.isfinite(norms)):
        raise ValueError("density_nu requires nonzero finite points")
    vals = np.asarray(sd.m(pts / norms[:, None]), dtype=float)
    out = vals * norms ** (-sd.dim - sd.alpha)
    return float(out[0]) if single else out


def levy_symbol(sd: SpectralDensity, xi) -> LevySymbolValue:
    """Characteristic exponent Psi(xi) split into real and imaginary parts."""
    xi = np.asarray(xi, dtype=float)
    norm = np.linalg.norm(xi)
    if norm == 0.0 or not np.isfinite(norm):
        raise ValueError("levy_symbol requires a nonzero finite frequency")
    xi_hat = xi / norm
    alpha = sd.alpha

    if alpha == 1.0:

        def integrand(u: np.ndarray, theta: np.ndarray) -> np.ndarray:
            mv = np.asarray(sd.m(theta), dtype=float)
            scaled = norm * u
            log_term = np.where(
                scaled == 0.0, 0.0, scaled * np.log(np.abs(scaled) + (scaled == 0.0))
            )
            return np.column_stack([np.abs(scaled) * mv, log_term * mv])

        re_int, im_int = _sphere_quadrature(sd, xi_hat, integrand, 2)
        # the odd integrand picks up nu_o automatically; halve nothing: the
        # integral against m equals the integral against nu_o for odd terms
        re_psi = (math.pi / 2.0) * re_int
        im_psi = im_int - float(sd.mu @ xi)
        return LevySymbolValue(re_psi=re_psi, im_psi=im_psi)

    c_re, c_im = symbol_prefactors(alpha)

    def integrand(u: np.ndarray, theta: np.ndarray) -> np.ndarray:
        mv = np.asarray(sd.m(theta), dtype=float)
        abs_u = np.abs(norm * u)
        return np.column_stack(
            [abs_u**alpha * mv, abs_u ** (alpha - 1.0) * (norm * u) * mv]
        )

    re_int, im_int = _sphere_quadrature(sd, xi_hat, integrand, 2)
    return LevySymbolValue(re_psi=c_re * re_int, im_psi=c_im * im_int)


def gamma_exponent(sd: SpectralDensity, theta) -> tuple[float, float]:
    """Boundary exponents (gamma, gamma_hat) for a unit direction theta."""
    theta = _unit(theta, "theta")
    sym = levy_symbol(sd, theta)
    if not sym.re_psi > 0.0:
        raise RuntimeError(
            f"Re Psi must be positive, quadrature returned {sym.re_psi} "
            f"(im={sym.im_psi}); the spherical density is likely invalid"
        )
    gamma = sd.alpha / 2.0 + math.atan(sym.im_psi / sym.re_psi) / math.pi
    return gamma, sd.alpha - gamma


def gamma_range(sd: SpectralDensity, n_grid: int = 256) -> tuple[float, float]:
    """(min, max) of gamma over a deterministic sphere grid."""
    if sd.dim == 2:
        phi = np.linspace(0.0, 2.0 * math.pi, n_grid, endpoint=False)
        dirs = np.column_stack([np.cos(phi), np.sin(phi)])
    else:
        dirs = _fibonacci_sphere(n_grid)
    values = [gamma_exponent(sd, d)[0] for d in dirs]
    return min(values), max(values)


def projection_coefficients(sd: SpectralDensity, theta) -> ProjectionCoefficients:
    """Reduce the process to the line along theta.

    c_plus = int (phi.theta)_+^alpha m(phi) dphi and c_minus the same with
    the negative part; for alpha = 1 both equal int (phi.theta)_+ m dphi
    (cancellation makes the projection symmetric) and the drift is
    -Im Psi(theta).
    """
    theta = _unit(theta, "theta")
    alpha = sd.alpha

    if alpha == 1.0:

        def integrand(u: np.ndarray, theta_pts: np.ndarray) -> np.ndarray:
            mv = np.asarray(sd.m(theta_pts), dtype=float)
            return (np.maximum(u, 0.0) * mv)[:, None]

        c_sym = float(_sphere_quadrature(sd, theta, integrand, 1)[0])
        drift = -levy_symbol(sd, theta).im_psi
        return ProjectionCoefficients(
            alpha=alpha, c_plus=c_sym, c_minus=c_sym, drift=drift
        )

    def integrand(u: np.ndarray, theta_pts: np.ndarray) -> np.ndarray:
        mv = np.asarray(sd.m(theta_pts), dtype=float)
        return np.column_stack(
            [np.maximum(u, 0.0) ** alpha * mv, np.maximum(-u, 0.0) ** alpha * mv]
        )

    c_plus, c_minus = _sphere_quadrature(sd, theta, integrand, 2)
    return ProjectionCoefficients(
        alpha=alpha, c_plus=float(c_plus), c_minus=float(c_minus), drift=0.0
    )


def dual_density(sd: SpectralDensity) -> SpectralDensity:
    """The dual process -Y: spherical density m(-theta), drift -mu."""
    inner = sd.m

    def reflected(theta: np.ndarray) -> np.ndarray:
        return inner(-np.asarray(theta, dtype=float))

    return SpectralDensity(
        alpha=sd.alpha,
        dim=sd.dim,
        m=reflected,
        a5=sd.a5,
        a6=sd.a6,
        mu=None if sd.mu is None else -sd.mu,
        kind=f"dual[{sd.kind}]",
        params=dict(sd.params),
        kink_angles=tuple((a + math.pi) % (2.0 * math.pi) for a in sd.kink_angles),
    )


# ---------------------------------------------------------------------------
# registry / serialization
# ---------------------------------------------------------------------------


def _build_constant(alpha, dim, params, mu):
    value = float(params.get("value", 1.0))
    if value <= 0.0:
        raise ValueError("constant density must be positive")
    return SpectralDensity(
        alpha=alpha,
        dim=dim,
        m=lambda theta: np.full(np.asarray(theta).shape[0], value),
        a5=value,
        a6=value,
        mu=mu,
        kind="constant",
        params={"value": value},
    )


def _build_cosine(alpha, dim, params, mu):
    if dim != 2:
        raise ValueError("cosine densities are defined on the circle (dim=2)")
    beta = float(params["beta"])
    harmonic = int(params.get("harmonic", 1))
    phase = float(params.get("phase", 0.0))
    if not abs(beta) < 1.0:
        raise ValueError("cosine density needs |beta| < 1 to stay positive")
    if harmonic < 1:
        raise ValueError("harmonic must be a positive integer")
    if alpha == 1.0 and harmonic == 1:
        raise ValueError(
            "alpha = 1 requires the cancellation condition; the first "
            "harmonic integrates to a nonzero vector — use harmonic >= 2 "
            "(odd harmonics >= 3 give genuinely non-symmetric densities)"
        )

    def m(theta: np.ndarray) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        phi = np.arctan2(theta[:, 1], theta[:, 0])
        return 1.0 + beta * np.cos(harmonic * phi - phase)

    return SpectralDensity(
        alpha=alpha,
        dim=dim,
        m=m,
        a5=1.0 - abs(beta),
        a6=1.0 + abs(beta),
        mu=mu,
        kind="cosine",
        params={"beta": beta, "harmonic": harmonic, "phase": phase},
    )


def _build_linear(alpha, dim, params, mu):
    coeff = np.asarray(params["coeff"], dtype=float)
    if coeff.shape != (dim,):
        raise ValueError(f"linear density needs a coeff vector of length {dim}")
    norm = float(np.linalg.norm(coeff))
    if not norm < 1.0:
        raise ValueError("linear density needs |coeff| < 1 to stay positive")
    if alpha == 1.0 and norm > 0.0:
        raise ValueError(
            "alpha = 1 requires the cancellation condition; a linear density "
            "integrates to a nonzero vector"
        )

    def m(theta: np.ndarray) -> np.ndarray:
        return 1.0 + np.asarray(theta, dtype=float) @ coeff

    return SpectralDensity(
        alpha=alpha,
        dim=dim,
        m=m,
        a5=1.0 - norm,
        a6=1.0 + norm,
        mu=mu,
        kind="linear",
        params={"coeff": [float(c) for c in coeff]},
    )


def _build_poshalf_mixture(alpha, dim, params, mu):
    base = float(params.get("base", 1.0))
    terms = params.get("terms", [])
    if base <= 0.0:
        raise ValueError("poshalf mixture needs a positive base")
    axes, betas = [], []
    for term in terms:
        axis = _unit(np.asarray(term["axis"], dtype=float), "axis")
        if axis.shape != (dim,):
            raise ValueError(f"axis must have dimension {dim}")
        axes.append(axis)
        betas.append(float(term["beta"]))
    axes_arr = np.array(axes) if axes else np.zeros((0, dim))
    betas_arr = np.array(betas)

    def m(theta: np.ndarray) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        out = np.full(theta.shape[0], base)
        if len(betas_arr):
            out = out + np.maximum(theta @ axes_arr.T, 0.0) @ betas_arr
        return out

    probe = (
        np.column_stack(
            [np.cos(p := np.linspace(0, 2 * math.pi, 1440, endpoint=False)), np.sin(p)]
        )
        if dim == 2
        else _fibonacci_sphere(4096)
    )
    sample = m(probe)
    if sample.min() <= 0.0:
        raise ValueError("poshalf mixture is not positive on the sphere")
    kinks = ()
    if dim == 2:
        # (theta.e)_+ has derivative jumps where theta is orthogonal to e
        kinks = tuple(
            (math.atan2(a[1], a[0]) + s * 0.5 * math.pi) % (2.0 * math.pi)
            for a in axes
            for s in (1.0, -1.0)
        )
    return SpectralDensity(
        alpha=alpha,
        dim=dim,
        m=m,
        a5=float(sample.min()),
        a6=float(sample.max()),
        mu=mu,
        kind="poshalf_mixture",
        params={"base": base, "terms": [
            {"axis": list(map(float, a)), "beta": float(b)}
            for a, b in zip(axes, betas)
        ]},
        kink_angles=kinks,
    )


def _build_table(alpha, dim, params, mu):
    if dim != 2:
        raise ValueError("tabulated densities are supported on the circle only")
    rows = params["table"]
    angles = np.array([float(r["theta"]) for r in rows])
    values = np.array([float(r["value"]) for r in rows])
    if len(angles) < 3:
        raise ValueError("table needs at least three rows")
    if np.any(values <= 0.0):
        raise ValueError("table values must be positive")
    order = np.argsort(angles % (2.0 * math.pi))
    angles = angles[order] % (2.0 * math.pi)
    values = values[order]
    if np.any(np.diff(angles) <= 0.0):
        raise ValueError("table angles must be distinct modulo 2*pi")
    angles_ext = np.concatenate([angles, [angles[0] + 2.0 * math.pi]])
    values_ext = np.concatenate([values, [values[0]]])

    def m(theta: np.ndarray) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        phi = np.arctan2(theta[:, 1], theta[:, 0]) % (2.0 * math.pi)
        shifted = np.where(phi < angles[0], phi + 2.0 * math.pi, phi)
        return np.interp(shifted, angles_ext, values_ext)

    return SpectralDensity(
        alpha=alpha,
        dim=dim,
        m=m,
        a5=float(values.min()),
        a6=float(values.max()),
        mu=mu,
        kind="table",
        params={"table": [{"theta": float(a), "value": float(v)}
                          for a, v in zip(angles, values)]},
        kink_angles=tuple(angles),
    )


_BUILDERS = {
    "constant": _build_constant,
    "cosine": _build_cosine,
    "linear": _build_linear,
    "poshalf_mixture": _build_poshalf_mixture,
    "table": _build_table,
}


def spectral_density_from_spec(spec: Mapping) -> SpectralDensity:
    """Build a SpectralDensity from a JSON-style mapping.

    Expected keys: alpha, dim, kind (one of constant|cosine|poshalf_mixture|
    table), params (kind-specific), optional drift (alpha = 1 only).
    """
    try:
        alpha = float(spec["alpha"])
        dim = int(spec["dim"])
        kind = str(spec["kind"])
    except KeyError as missing:
        raise ValueError(f"spectral density spec lacks required key {missing}")
    if kind not in _BUILDERS:
        raise ValueError(f"unknown spectral density kind {kind!r}; "
                         f"expected one of {sorted(_BUILDERS)}")
    params = dict(spec.get("params", {}))
    mu = spec.get("drift")
    if mu is not None:
        if alpha != 1.0:
            raise ValueError(
                "a drift vector is only meaningful for alpha = 1 "
                "(strict stability absorbs it otherwise)"
            )
        mu = np.asarray(mu, dtype=float)
    return _BUILDERS[kind](alpha, dim, params, mu)
