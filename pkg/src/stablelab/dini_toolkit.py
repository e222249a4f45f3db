"""Dini moduli of continuity: regularization and integral transforms.

A *modulus* here is a nondecreasing positive function f on (0, 1], extended by
f(r) = f(1) for r >= 1.  It is Dini if int_0^1 f(r)/r dr < infinity and double
Dini if additionally int_0^1 f(r)|log r|/r dr < infinity.

The toolkit provides:

* ``f_eps`` — the infimal-convolution envelope
      f_eps(r) = inf_{s in (0,1]} { f(s) + f(1) (r/s)^eps },
  which dominates f, is nondecreasing, and has f_eps(r)/r^eps nonincreasing.

* ``regularize`` — the C^2 triple-averaged regularization
      ell(r) = (2/r) int_0^r du/u int_0^u dt/t int_0^t f_eps(s) ds,
  satisfying (a) f <= ell and ell(1) <= 4 f(1); (b) 0 <= r ell'(r) <= 2 eps
  ell(r) and |r^2 ell''(r)| <= 6 eps ell(r); (c) ell(r)/r^eps nonincreasing;
  (d) ell(r) <= eps int_0^r ell(s)/s ds.

* ``transforms`` — the cumulative transforms
      F_ell(r) = int_0^r ell(s)/s ds,
      L_ell(r) = int_0^r ell(s) (2/gamma0 + |log s|)/s ds,
  with the constant extension for r >= 1 handled analytically.  For a
  *constant* modulus (not Dini; the integrals from 0 diverge) both transforms
  use base point 1 instead of 0, e.g. F_ell(r) = c log r; margin checks that
  consume F_ell are invariant under this additive-constant convention.

* ``double_dini_limit_check`` — trend test for f(r)|log r| -> 0.

Numerical conventions shared by all grid-backed evaluations: a log-spaced grid
of GRID_NODES points on [GRID_RMIN, 1]; cumulative integrals by trapezoid in
log coordinates (integrands ell(s)/s become d(log s) integrals); the singular
head on (0, GRID_RMIN] is added analytically via the scaling model
ell(s) ~ ell(rmin) (s/rmin)^eps, which is the exact boundary case of the
"ell(r)/r^eps nonincreasing" property and matches the envelope's behavior at
the bottom of the grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np
from scipy.interpolate import CubicSpline

__all__ = [
    "DiniFunction",
    "DiniTransforms",
    "DoubleDiniReport",
    "f_eps",
    "regularize",
    "transforms",
    "double_dini_limit_check",
    "modulus_from_registry",
    "MODULUS_REGISTRY",
    "GRID_RMIN",
    "GRID_NODES",
]

GRID_RMIN = 1e-6
GRID_NODES = 4096

# Infimum search: coarse log grid + golden-section refinement, deterministic.
_FEPS_GRID = 512
_FEPS_REFINE = 40
_INV_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

ClassTag = Literal["dini", "double_dini", "constant", "unknown"]


@dataclass(frozen=True)
class DiniFunction:
    """A modulus on (0, 1] with metadata.

    ``fn`` must accept numpy arrays of values in (0, 1]; ``__call__`` applies
    the constant extension for r >= 1.  ``eps`` is set on regularized
    instances only and records the scaling parameter of the Lemma-A.2-type
    properties.  Instances are immutable; share freely across threads.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    name: str = "modulus"
    class_tag: ClassTag = "unknown"
    eps: float | None = None
    is_regularized: bool = False

    def __call__(self, r):
        r_arr = np.asarray(r, dtype=float)
        if np.any(r_arr <= 0.0):
            raise ValueError("modulus arguments must be positive")
        out = np.asarray(self.fn(np.minimum(r_arr, 1.0)), dtype=float)
        if out.shape == ():
            return float(out)
        return out

    @property
    def is_constant(self) -> bool:
        return self.class_tag == "constant"

    def value_at_one(self) -> float:
        return float(self(1.0))


@dataclass(frozen=True)
class DiniTransforms:
    """Cumulative transforms F_ell and L_ell of a regularized modulus."""

    source: DiniFunction
    gamma0: float
    F_ell: Callable[[float], float]
    L_ell: Callable[[float], float]


def _log_grid(rmin: float = GRID_RMIN, n: int = GRID_NODES) -> np.ndarray:
    return np.logspace(math.log10(rmin), 0.0, n)


def _envelope_min(f: DiniFunction, eps: float, r: np.ndarray) -> np.ndarray:
    """Vectorized search for inf_{s in (0,1]} { f(s) + f(1) (r/s)^eps }.

    Any minimizer satisfies f(1)(r/s)^eps <= value at s=1 = f(1)(1 + r^eps),
    so log s >= log r - log(1 + r^eps)/eps; each point gets a _FEPS_GRID-node
    grid on that bracket in log s followed by _FEPS_REFINE golden-section
    steps around the grid minimum.
    """
    f1 = f.value_at_one()
    log_r = np.log(r)

    def objective(log_s: np.ndarray) -> np.ndarray:
        return np.asarray(f(np.exp(log_s)), dtype=float) + f1 * np.exp(
            eps * (log_r - log_s)
        )

    lo = log_r - np.log1p(r**eps) / eps
    fractions = np.linspace(0.0, 1.0, _FEPS_GRID)
    grid = lo[:, None] * (1.0 - fractions[None, :])
    grid_vals = np.asarray(f(np.exp(grid.ravel())), dtype=float).reshape(
        grid.shape
    ) + f1 * np.exp(eps * (log_r[:, None] - grid))
    k = np.argmin(grid_vals, axis=1)
    rows = np.arange(len(r))
    best = grid_vals[rows, k]
    a = grid[rows, np.maximum(k - 1, 0)]
    b = grid[rows, np.minimum(k + 1, _FEPS_GRID - 1)]

    x1 = b - _INV_GOLDEN * (b - a)
    x2 = a + _INV_GOLDEN * (b - a)
    f1v = objective(x1)
    f2v = objective(x2)
    best = np.minimum(best, np.minimum(f1v, f2v))
    for _ in range(_FEPS_REFINE):
        left = f1v <= f2v
        b = np.where(left, x2, b)
        a = np.where(left, a, x1)
        old_x1, old_f1, old_f2 = x1, f1v, f2v
        x1 = np.where(left, b - _INV_GOLDEN * (b - a), x2)
        x2 = np.where(left, old_x1, a + _INV_GOLDEN * (b - a))
        probe = np.where(left, x1, x2)
        probe_val = objective(probe)
        f1v = np.where(left, probe_val, old_f2)
        f2v = np.where(left, old_f1, probe_val)
        best = np.minimum(best, probe_val)
    return best


def f_eps(f: DiniFunction, eps: float, r: float) -> float:
    """Infimal convolution inf_{s in (0,1]} { f(s) + f(1) (r/s)^eps }."""
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must be in (0, 1), got {eps}")
    if not 0.0 < r <= 1.0:
        raise ValueError(f"r must be in (0, 1], got {r}")
    return float(_envelope_min(f, eps, np.array([r]))[0])


def _check_nondecreasing(f: DiniFunction) -> None:
    grid = _log_grid(n=512)
    vals = np.asarray(f(grid), dtype=float)
    if np.any(vals <= 0.0):
        raise ValueError(f"modulus {f.name!r} must be positive on (0, 1]")
    drops = np.diff(vals) < -1e-12 * np.abs(vals[:-1])
    if np.any(drops):
        raise ValueError(f"modulus {f.name!r} is not nondecreasing on (0, 1]")


def _cumtrapz_in_log(values: np.ndarray, log_r: np.ndarray) -> np.ndarray:
    """Cumulative trapezoid of int values(s)/s ds = int values d(log s)."""
    out = np.zeros_like(values)
    np.cumsum(0.5 * (values[1:] + values[:-1]) * np.diff(log_r), out=out[1:])
    return out


def regularize(f: DiniFunction, eps: float) -> DiniFunction:
    """C^2 regularization of a modulus by the triple average of f_eps.

    Returns a DiniFunction backed by a cubic spline of log ell against log r
    on the shared grid; below GRID_RMIN the power extrapolation
    ell(r) = ell(rmin) (r/rmin)^eps applies, above 1 the constant extension.
    """
    if not 0.0 < eps <= 0.25:
        raise ValueError(f"eps must be in (0, 1/4], got {eps}")
    if f.is_constant:
        raise ValueError("constant moduli are not Dini; regularize expects a Dini modulus")
    _check_nondecreasing(f)

    r = _log_grid()
    log_r = np.log(r)
    fe = _envelope_min(f, eps, r)

    # T1(t) = int_0^t f_eps(s) ds;   head: f_eps ~ fe[0] (s/r0)^eps on (0, r0].
    head1 = fe[0] * r[0] / (1.0 + eps)
    t1 = head1 + _cumtrapz_in_log(fe * r, log_r)
    # T2(u) = int_0^u T1(t)/t dt;    head: T1 ~ t^{1+eps} scaling.
    head2 = head1 / (1.0 + eps)
    t2 = head2 + _cumtrapz_in_log(t1, log_r)
    # T3(v) = int_0^v T2(u)/u du.
    head3 = head2 / (1.0 + eps)
    t3 = head3 + _cumtrapz_in_log(t2, log_r)
    ell_vals = 2.0 * t3 / r

    spline = CubicSpline(log_r, np.log(ell_vals))
    ell_rmin = ell_vals[0]
    ell_one = ell_vals[-1]

    def evaluate(rr: np.ndarray) -> np.ndarray:
        rr = np.asarray(rr, dtype=float)
        scalar = rr.shape == ()
        rr = np.atleast_1d(rr)
        out = np.empty_like(rr)
        below = rr < GRID_RMIN
        inside = (rr >= GRID_RMIN) & (rr <= 1.0)
        above = rr > 1.0
        if np.any(below):
            out[below] = ell_rmin * (rr[below] / GRID_RMIN) ** eps
        if np.any(inside):
            out[inside] = np.exp(spline(np.log(rr[inside])))
        if np.any(above):
            out[above] = ell_one
        return out[0] if scalar else out

    tag = f.class_tag if f.class_tag in ("dini", "double_dini") else "unknown"
    return DiniFunction(
        fn=evaluate,
        name=f"reg[{f.name}]",
        class_tag=tag,
        eps=eps,
        is_regularized=True,
    )


def _head_exponent(ell: DiniFunction) -> float:
    """Scaling exponent used for the analytic head on (0, GRID_RMIN].

    Regularized moduli carry their eps; otherwise estimate the local log-log
    slope at the bottom of the grid and reject moduli that are numerically
    flat there (their transform integrals diverge or are untrustworthy).
    """
    if ell.eps is not None:
        return float(ell.eps)
    r0 = GRID_RMIN
    slope = math.log(float(ell(r0 * math.e)) / float(ell(r0)))
    if slope <= 5e-3:
        raise ValueError(
            f"modulus {ell.name!r} is numerically flat near 0; the transform "
            "integrals diverge — regularize it first"
        )
    return slope


def transforms(ell: DiniFunction, gamma0: float) -> DiniTransforms:
    """Cumulative transforms F_ell and L_ell of a (regularized) modulus.

    For constant moduli the base point is 1 (log extension): F_ell(r) = c log r
    and L_ell(r) = c (2 log r / gamma0 + sign(log r) log^2 r / 2); both vanish
    at 1 and are negative below it.  Margin checks that consume these only use
    differences, so the base-point convention drops out.
    """
    if not 0.0 < gamma0 < 1.0:
        raise ValueError(f"gamma0 must be in (0, 1), got {gamma0}")

    if ell.is_constant:
        c = ell.value_at_one()

        def F_const(rr: float) -> float:
            if rr <= 0.0:
                raise ValueError("F_ell argument must be positive")
            return c * math.log(rr)

        def L_const(rr: float) -> float:
            if rr <= 0.0:
                raise ValueError("L_ell argument must be positive")
            lg = math.log(rr)
            return c * (2.0 * lg / gamma0 + 0.5 * lg * abs(lg))

        return DiniTransforms(source=ell, gamma0=gamma0, F_ell=F_const, L_ell=L_const)

    eps = _head_exponent(ell)
    r = _log_grid()
    log_r = np.log(r)
    ell_vals = np.asarray(ell(r), dtype=float)
    ell_zero = ell_vals[0]
    ell_one = ell_vals[-1]

    # F head: int_0^{r0} ell(s)/s ds with ell ~ ell(r0)(s/r0)^eps -> ell(r0)/eps.
    f_vals = ell_zero / eps + _cumtrapz_in_log(ell_vals, log_r)
    f_spline = CubicSpline(log_r, np.log(f_vals))
    f_one = f_vals[-1]

    # L head: same scaling model integrated against (2/gamma0 + |log s|)/s:
    #   ell(r0) [ (2/gamma0)/eps + |log r0|/eps + 1/eps^2 ].
    weight = 2.0 / gamma0 + np.abs(log_r)
    l_head = ell_zero * ((2.0 / gamma0) / eps + abs(log_r[0]) / eps + 1.0 / eps**2)
    l_vals = l_head + _cumtrapz_in_log(ell_vals * weight, log_r)
    l_spline = CubicSpline(log_r, np.log(l_vals))
    l_one = l_vals[-1]

    def F_ell(rr: float) -> float:
        if rr <= 0.0:
            raise ValueError("F_ell argument must be positive")
        if rr >= 1.0:
            return f_one + ell_one * math.log(rr)
        if rr < GRID_RMIN:
            return (ell_zero / eps) * (rr / GRID_RMIN) ** eps
        return float(math.exp(f_spline(math.log(rr))))

    def L_ell(rr: float) -> float:
        if rr <= 0.0:
            raise ValueError("L_ell argument must be positive")
        if rr >= 1.0:
            lg = math.log(rr)
            return l_one + ell_one * (2.0 * lg / gamma0 + 0.5 * lg * lg)
        if rr < GRID_RMIN:
            scale = (rr / GRID_RMIN) ** eps
            return ell_zero * scale * (
                (2.0 / gamma0) / eps + abs(math.log(rr)) / eps + 1.0 / eps**2
            )
        return float(math.exp(l_spline(math.log(rr))))

    return DiniTransforms(source=ell, gamma0=gamma0, F_ell=F_ell, L_ell=L_ell)


@dataclass(frozen=True)
class DoubleDiniReport:
    """Trend report for f(r)|log r| along r = 2^{-k}, k = 4..40."""

    k_values: tuple[int, ...]
    products: tuple[float, ...]
    limit_estimate: float
    vanishing_trend: bool
    monotone_after_burn_in: bool

    @property
    def first(self) -> float:
        return self.products[0]

    @property
    def last(self) -> float:
        return self.products[-1]


def double_dini_limit_check(f: DiniFunction, burn_in_k: int = 10) -> DoubleDiniReport:
    """Evaluate f(2^{-k}) * k log 2 for k = 4..40 and report the trend.

    The vanishing verdict extrapolates the tail's limit rather than
    demanding a fixed drop across the grid: for log-power moduli the
    product behaves like c + b/k along r = 2^{-k}, so the intercept of a
    linear fit in 1/k estimates lim_{r->0} f(r)|log r| even when the
    decay is only logarithmic in r.
    """
    ks = tuple(range(4, 41))
    products = tuple(float(f(2.0**-k)) * k * math.log(2.0) for k in ks)
    tail_k = np.array([k for k in ks if k >= burn_in_k], dtype=float)
    tail = np.array([p for k, p in zip(ks, products) if k >= burn_in_k])
    slope, intercept = np.polyfit(1.0 / tail_k, tail, 1)
    limit = float(intercept)
    vanishing = limit < 0.1 * max(products)
    monotone = all(b <= a * (1.0 + 1e-12) for a, b in zip(tail, tail[1:]))
    return DoubleDiniReport(
        k_values=ks,
        products=products,
        limit_estimate=limit,
        vanishing_trend=vanishing,
        monotone_after_burn_in=monotone,
    )


def _power_modulus(theta: float) -> DiniFunction:
    if theta <= 0.0:
        raise ValueError("power modulus needs a positive exponent")
    return DiniFunction(
        fn=lambda r: np.asarray(r, dtype=float) ** theta,
        name=f"power[{theta}]",
        class_tag="double_dini",
    )


def _log_pow_modulus(k: float) -> DiniFunction:
    tag: ClassTag = "double_dini" if k > 2.0 else ("dini" if k > 1.0 else "unknown")
    return DiniFunction(
        fn=lambda r: (1.0 + np.abs(np.log(np.asarray(r, dtype=float)))) ** (-k),
        name=f"log_pow[{k}]",
        class_tag=tag,
    )


def _constant_modulus(c: float) -> DiniFunction:
    if c <= 0.0:
        raise ValueError("constant modulus needs a positive value")
    return DiniFunction(
        fn=lambda r: np.full_like(np.asarray(r, dtype=float), c),
        name=f"constant[{c}]",
        class_tag="constant",
    )


def _table_modulus(points) -> DiniFunction:
    pts = sorted((float(a), float(b)) for a, b in points)
    xs = np.array([p[0] for p in pts], dtype=float)
    ys = np.array([p[1] for p in pts], dtype=float)
    if len(xs) < 2:
        raise ValueError("table modulus needs at least two points")
    if np.any(xs <= 0.0) or np.any(ys <= 0.0):
        raise ValueError("table modulus needs positive abscissae and values")
    if np.any(np.diff(ys) < 0.0):
        raise ValueError("table modulus must be nondecreasing")

    def evaluate(r: np.ndarray) -> np.ndarray:
        lr = np.log(np.asarray(r, dtype=float))
        return np.interp(lr, np.log(xs), ys)

    return DiniFunction(fn=evaluate, name="table", class_tag="unknown")


MODULUS_REGISTRY = {
    "power": _power_modulus,
    "log_pow": _log_pow_modulus,
    "constant": _constant_modulus,
    "table": _table_modulus,
}


def modulus_from_registry(spec: dict) -> DiniFunction:
    """Build a modulus from a config mapping such as {"power": 0.3}.

    Recognized keys: power (exponent), log_pow (k for (1+|log r|)^{-k}),
    constant (value), table (list of [r, value] pairs).
    """
    keys = [k for k in spec if k in MODULUS_REGISTRY]
    if len(keys) != 1:
        raise ValueError(
            f"modulus spec must contain exactly one of {sorted(MODULUS_REGISTRY)}, got {spec!r}"
        )
    kind = keys[0]
    return MODULUS_REGISTRY[kind](spec[kind])
