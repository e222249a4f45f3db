r"""Domains, distances, regularized distance, exponent extension, barriers.

Domains come in three kinds: half-spaces and balls (exact closed-form
distance, nearest point, inward normal) and single-chart graph epigraphs
D = {x : x_d > F(x~)} where F(0) = 0, grad F(0) = 0 and grad F has a Dini
modulus ell0 with ell0(r0) <= 1/4.

The regularized distance rho solves the scalar fixed point

    rho(x) = P(x, rho(x)),      P(x, a) = int h(x - (a/4) z) phi(z) dz,

where h is the signed vertical distance of the chart (h = x_d - F(x~) for
graphs, the exact signed distance for half-spaces/balls) and phi is a fixed
radial bump c (1-|z|^2)^4 supported in the unit ball.  The map a -> P(x, a)
is a contraction (|dP/da| < 1/3), so plain damped iteration converges; the
gradient follows from the implicit-function formula
grad rho = grad_x P / (1 - dP/da).  Near the boundary rho is comparable to
the signed distance (delta/2 <= rho <= 2 sqrt(5) delta) and
1/4 <= |grad rho| <= 2 on the collar, with grad rho parallel to the inward
normal at boundary points.

Barriers are piecewise functions of rho with the collar case-splits taken
literally (no smoothing across seams):

    critical    h = (rho/r)^q                 on D(2 sigma r),
                    sigma^q                   on D \ D(2 sigma r), 0 outside;
                psi adds the factor F_ell(rho/(|grad rho| r)), plateau
                    sigma^q F_ell(sigma).
    variable    h = (rho/r)^Phi(x)            on D(r), 1 on D \ D(r), 0 outside;
                psi = (rho/r)^Phi L_ell(rho/(|grad rho| r))  on D(2 sigma r),
                      (rho/r)^Phi L_ell(sigma)               on D(r)\D(2 sigma r),
                      L_ell(sigma)                           on D \ D(r), 0 outside,

with D(s) = {x in D : dist(x, bdry) < s}.  The exponent field Phi extends
gamma(n_Q) off the boundary by nearest-point projection mollified at scale
|signed distance| / 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Mapping

import numpy as np

from .dini_toolkit import DiniFunction, DiniTransforms, transforms
from .stable_symbol import SpectralDensity, gamma_exponent

__all__ = [
    "DomainError",
    "Domain",
    "BoundaryProjection",
    "Mollifier",
    "RegularizedDistance",
    "ExponentField",
    "halfspace",
    "ball",
    "graph_epigraph",
    "domain_from_spec",
    "default_mollifier",
    "distance",
    "build_regularized_distance",
    "regularized_distance",
    "tangent_halfspace",
    "extend_exponent",
    "barrier_h",
    "barrier_psi",
    "barrier_h_phi",
    "barrier_psi_phi",
]

FIXED_POINT_TOL = 1e-12
FIXED_POINT_MAX_ITER = 100


class DomainError(ValueError):
    """Point outside a chart's validity region, or an invalid domain spec."""


@dataclass(frozen=True, eq=False)
class Domain:
    """A half-space, ball, or single-chart graph epigraph in R^d."""

    kind: str
    dim: int
    normal: np.ndarray | None = None      # halfspace: inward unit normal
    origin: np.ndarray | None = None      # halfspace: a boundary point
    center: np.ndarray | None = None      # ball
    radius: float = 0.0                   # ball
    graph_fn: Callable | None = None      # graph: F(y~) -> value
    graph_grad: Callable | None = None    # graph: grad F(y~)
    modulus: DiniFunction | None = None   # graph: ell0
    r0: float = 0.0                       # graph: localization scale
    params: dict = field(default_factory=dict)

    @property
    def r1(self) -> float:
        """Collar depth on which the regularized-distance bounds hold."""
        if self.kind == "halfspace":
            return math.inf
        if self.kind == "ball":
            return self.radius / 4.0
        return self.r0 / 8.0


@dataclass(frozen=True)
class BoundaryProjection:
    """Distance data at one point: delta = |signed|, nearest Q, inward n."""

    delta: float
    signed: float
    q: np.ndarray
    n: np.ndarray


def halfspace(dim: int = 2, normal=None, origin=None) -> Domain:
    """D = {x : n . (x - b) > 0} with inward unit normal n (default e_d)."""
    if dim < 2:
        raise DomainError("dim must be >= 2")
    n = np.zeros(dim)
    n[-1] = 1.0
    if normal is not None:
        n = np.asarray(normal, dtype=float)
        norm = np.linalg.norm(n)
        if norm == 0.0 or n.shape != (dim,):
            raise DomainError("halfspace normal must be a nonzero d-vector")
        n = n / norm
    b = np.zeros(dim) if origin is None else np.asarray(origin, dtype=float)
    if b.shape != (dim,):
        raise DomainError("halfspace origin must be a d-vector")
    return Domain(kind="halfspace", dim=dim, normal=n, origin=b)


def ball(center, radius: float) -> Domain:
    c = np.asarray(center, dtype=float)
    if c.ndim != 1 or len(c) < 2:
        raise DomainError("ball center must be a d-vector with d >= 2")
    if not radius > 0.0:
        raise DomainError("ball radius must be positive")
    return Domain(kind="ball", dim=len(c), center=c, radius=float(radius))


def graph_epigraph(
    dim: int,
    graph_fn: Callable,
    graph_grad: Callable,
    modulus: DiniFunction,
    r0: float,
    params: dict | None = None,
) -> Domain:
    """D = {x : x_d > F(x~)} on the chart |x~| <= r0, |x_d| <= 2 r0.

    Validates F(0) = 0, grad F(0) = 0, ell0(r0) <= 1/4, and the gradient
    modulus |grad F(s) - grad F(t)| <= ell0(|s - t|) on sampled pairs.
    """
    if dim not in (2, 3):
        raise DomainError("graph charts support dim 2 or 3")
    if not 0.0 < r0 <= 1.0:
        raise DomainError("need 0 < r0 <= 1")
    zero = np.zeros(dim - 1)
    if abs(float(graph_fn(zero))) > 1e-12:
        raise DomainError("graph chart requires F(0) = 0")
    if np.linalg.norm(np.asarray(graph_grad(zero), dtype=float)) > 1e-12:
        raise DomainError("graph chart requires grad F(0) = 0")
    if modulus(r0) > 0.25 + 1e-12:
        raise DomainError(
            f"chart modulus too large: ell0(r0) = {modulus(r0):.4g} > 1/4 "
            "(shrink r0)"
        )
    rng = np.random.default_rng(12345)
    pts = rng.uniform(-r0, r0, size=(200, dim - 1))
    for _ in range(2):
        a, b = (rng.permutation(pts) for _ in range(2))
        gap = np.linalg.norm(a - b, axis=1)
        mask = gap > 1e-12
        ga = np.array([np.atleast_1d(graph_grad(p)) for p in a[mask]])
        gb = np.array([np.atleast_1d(graph_grad(p)) for p in b[mask]])
        diff = np.linalg.norm(ga - gb, axis=1)
        bound = np.array([modulus(g) for g in gap[mask]])
        if np.any(diff > bound * (1.0 + 1e-9) + 1e-12):
            worst = np.argmax(diff - bound)
            raise DomainError(
                "graph gradient violates the declared Dini modulus: "
                f"|dF({a[mask][worst]}) - dF({b[mask][worst]})| = "
                f"{diff[worst]:.4g} > ell0({gap[mask][worst]:.4g}) = "
                f"{bound[worst]:.4g}"
            )
    return Domain(
        kind="graph_epigraph",
        dim=dim,
        graph_fn=graph_fn,
        graph_grad=graph_grad,
        modulus=modulus,
        r0=float(r0),
        params=dict(params or {}),
    )


# ---------------------------------------------------------------------------
# graph shape registry (TOML-friendly)
# ---------------------------------------------------------------------------


def _log_power_shape(k: int):
    """F(t) = t (1 + |log t|)^{-k} for t > 0, 0 for t <= 0 (dim 2 chart).

    On t < 1 the derivative F'(t) = (1+|log t|)^{-k} + k (1+|log t|)^{-k-1}
    is increasing and steepest near 0, so F' itself is the sharp gradient
    modulus.
    """

    def fn(y):
        t = float(np.asarray(y).reshape(()))
        if t <= 0.0:
            return 0.0
        return t * (1.0 + abs(math.log(t))) ** (-k)

    def grad(y):
        t = float(np.asarray(y).reshape(()))
        if t <= 0.0:
            return np.array([0.0])
        if t >= 1.0:
            raise DomainError("log_power chart is defined for t < 1")
        lg = 1.0 + abs(math.log(t))
        return np.array([lg ** (-k) + k * lg ** (-k - 1)])

    def modulus_fn(r):
        r = np.minimum(np.asarray(r, dtype=float), 1.0 - 1e-12)
        lg = 1.0 + np.abs(np.log(r))
        return lg ** (-float(k)) + k * lg ** (-float(k) - 1.0)

    modulus = DiniFunction(fn=modulus_fn, name=f"log_power_graph[{k}]",
                           class_tag="dini" if k >= 2 else "unknown")
    return fn, grad, modulus


def _paraboloid_shape(curvature: float, dim: int):
    """F(y~) = c |y~|^2; C^{1,1} chart with modulus 2c r."""

    def fn(y):
        y = np.asarray(y, dtype=float)
        return curvature * float(y @ y)

    def grad(y):
        return 2.0 * curvature * np.asarray(y, dtype=float)

    modulus = DiniFunction(
        fn=lambda r: 2.0 * curvature * np.minimum(np.asarray(r, float), 1.0),
        name=f"paraboloid[{curvature}]",
        class_tag="double_dini",
    )
    return fn, grad, modulus


def domain_from_spec(spec: Mapping) -> Domain:
    """Build a Domain from a TOML/JSON-style mapping.

    kinds: halfspace {dim, normal?, origin?}, ball {center, radius},
    graph_epigraph {dim, shape: log_power {k, r0?} | paraboloid
    {curvature, r0?}}.
    """
    kind = spec.get("kind")
    if kind == "halfspace":
        return halfspace(int(spec.get("dim", 2)), spec.get("normal"),
                         spec.get("origin"))
    if kind == "ball":
        return ball(spec["center"], float(spec["radius"]))
    if kind == "graph_epigraph":
        dim = int(spec.get("dim", 2))
        shape = spec.get("shape", "log_power")
        if shape == "log_power":
            k = int(spec.get("k", 2))
            if dim != 2:
                raise DomainError("log_power charts are two-dimensional")
            fn, grad, modulus = _log_power_shape(k)
            r0 = float(spec.get("r0", 0.18))
        elif shape == "paraboloid":
            curvature = float(spec.get("curvature", 1.0))
            fn, grad, modulus = _paraboloid_shape(curvature, dim)
            r0 = float(spec.get("r0", min(1.0 / (16.0 * curvature), 0.5)))
        else:
            raise DomainError(f"unknown graph shape {shape!r}")
        return graph_epigraph(dim, fn, grad, modulus, r0,
                              params={"shape": shape, **dict(spec)})
    raise DomainError(f"unknown domain kind {kind!r}")


# ---------------------------------------------------------------------------
# distance / nearest boundary point
# ---------------------------------------------------------------------------


def _graph_coverage(dom: Domain, x: np.ndarray) -> None:
    tilde, height = x[:-1], x[-1]
    if np.linalg.norm(tilde) > dom.r0 + 1e-12 or abs(height) > 2.0 * dom.r0 + 1e-12:
        raise DomainError(
            f"point {x} outside chart coverage |x~| <= {dom.r0}, "
            f"|x_d| <= {2 * dom.r0}"
        )


def _graph_nearest(dom: Domain, x: np.ndarray) -> np.ndarray:
    """Foot point y~ minimizing |x - (y~, F(y~))|, damped Newton + fallback."""
    fn, grad = dom.graph_fn, dom.graph_grad
    tilde, height = x[:-1], x[-1]

    def objective(y):
        d = tilde - y
        return float(d @ d) + (height - fn(y)) ** 2

    def gradient(y):
        g = np.atleast_1d(grad(y))
        return 2.0 * (y - tilde) + 2.0 * (fn(y) - height) * g

    y = tilde.copy()
    val = objective(y)
    scale = max(np.linalg.norm(tilde), abs(height), dom.r0)
    converged = False
    for _ in range(60):
        g = gradient(y)
        if np.linalg.norm(g) < 1e-13 * max(scale, 1e-8):
            converged = True
            break
        h = 1e-6 * max(scale, 1e-3)
        dim1 = len(y)
        hess = np.empty((dim1, dim1))
        for j in range(dim1):
            step = np.zeros(dim1)
            step[j] = h
            hess[:, j] = (gradient(y + step) - gradient(y - step)) / (2.0 * h)
        try:
            delta = np.linalg.solve(hess + 1e-12 * np.eye(dim1), -g)
        except np.linalg.LinAlgError:
            delta = -g
        if not np.all(np.isfinite(delta)):
            delta = -g
        lam = 1.0
        for _ in range(30):
            trial = y + lam * delta
            tv = objective(trial)
            if tv < val:
                y, val = trial, tv
                break
            lam *= 0.5
        else:
            break
    if not converged and np.linalg.norm(gradient(y)) > 1e-8 * max(scale, 1e-8):
        # deterministic fallback: dense scan + golden refinement per axis
        span = np.linspace(-dom.r0, dom.r0, 2001)
        if len(tilde) == 1:
            vals = [objective(np.array([t])) for t in span]
            y = np.array([span[int(np.argmin(vals))]])
            lo, hi = y[0] - dom.r0 / 1000.0, y[0] + dom.r0 / 1000.0
            invphi = (math.sqrt(5.0) - 1.0) / 2.0
            a_, b_ = lo, hi
            c_ = b_ - invphi * (b_ - a_)
            d_ = a_ + invphi * (b_ - a_)
            for _ in range(80):
                if objective(np.array([c_])) < objective(np.array([d_])):
                    b_, d_ = d_, c_
                    c_ = b_ - invphi * (b_ - a_)
                else:
                    a_, c_ = c_, d_
                    d_ = a_ + invphi * (b_ - a_)
            y = np.array([0.5 * (a_ + b_)])
        else:
            coarse = np.stack(np.meshgrid(span[::20], span[::20]), axis=-1)
            flat = coarse.reshape(-1, 2)
            vals = [objective(p) for p in flat]
            y = flat[int(np.argmin(vals))]
            for _ in range(200):
                g = gradient(y)
                if np.linalg.norm(g) < 1e-12:
                    break
                y = y - 0.1 * g
    return y


def distance(dom: Domain, x) -> BoundaryProjection:
    """Unsigned/signed distance to the boundary, nearest point, inward normal."""
    x = np.asarray(x, dtype=float)
    if x.shape != (dom.dim,):
        raise DomainError(f"point must be a {dom.dim}-vector")

    if dom.kind == "halfspace":
        signed = float(dom.normal @ (x - dom.origin))
        q = x - signed * dom.normal
        return BoundaryProjection(abs(signed), signed, q, dom.normal.copy())

    if dom.kind == "ball":
        v = x - dom.center
        t = float(np.linalg.norm(v))
        if t == 0.0:
            direction = np.zeros(dom.dim)
            direction[0] = 1.0
        else:
            direction = v / t
        signed = dom.radius - t
        q = dom.center + dom.radius * direction
        return BoundaryProjection(abs(signed), signed, q, -direction)

    _graph_coverage(dom, x)
    foot = _graph_nearest(dom, x)
    q = np.concatenate([foot, [float(dom.graph_fn(foot))]])
    gap = x - q
    delta = float(np.linalg.norm(gap))
    inside = x[-1] > float(dom.graph_fn(x[:-1]))
    g = np.atleast_1d(dom.graph_grad(foot))
    n = np.concatenate([-g, [1.0]])
    n /= np.linalg.norm(n)
    return BoundaryProjection(delta, delta if inside else -delta, q, n)


# ---------------------------------------------------------------------------
# mollifier and regularized distance
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Mollifier:
    """Radial bump c (1-|z|^2)^4 discretized by a tensor Gauss rule.

    Weights are normalized so the discrete mass is exactly one, making the
    discrete fixed point self-consistent (half-space charts give rho = x_d
    exactly because odd moments vanish by symmetry of the node set).
    """

    dim: int
    nodes: np.ndarray    # (n, dim) inside the unit ball
    weights: np.ndarray  # (n,) including the bump profile, sums to 1


@lru_cache(maxsize=8)
def _mollifier_cached(dim: int, order: int) -> Mollifier:
    x, w = np.polynomial.legendre.leggauss(order)
    grids = np.meshgrid(*([x] * dim), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1)
    w_grids = np.meshgrid(*([w] * dim), indexing="ij")
    w_full = np.ones(len(pts))
    for g in w_grids:
        w_full *= g.ravel()
    r2 = np.sum(pts * pts, axis=1)
    mask = r2 < 1.0
    pts, w_full, r2 = pts[mask], w_full[mask], r2[mask]
    bump = (1.0 - r2) ** 4
    weights = w_full * bump
    weights /= weights.sum()
    return Mollifier(dim=dim, nodes=pts, weights=weights)


def default_mollifier(dim: int, order: int = 20) -> Mollifier:
    if dim == 3 and order > 14:
        order = 14
    return _mollifier_cached(dim, order)


def _chart_h(dom: Domain):
    """Signed vertical distance h and its gradient for the domain's chart."""
    if dom.kind == "halfspace":
        n, b = dom.normal, dom.origin

        def h(pts):
            return (pts - b) @ n

        def grad_h(pts):
            return np.broadcast_to(n, pts.shape).copy()

        return h, grad_h

    if dom.kind == "ball":
        c, radius = dom.center, dom.radius

        def h(pts):
            return radius - np.linalg.norm(pts - c, axis=-1)

        def grad_h(pts):
            v = pts - c
            norms = np.linalg.norm(v, axis=-1, keepdims=True)
            return -v / np.maximum(norms, 1e-300)

        return h, grad_h

    fn, gr = dom.graph_fn, dom.graph_grad

    def h(pts):
        return np.array([p[-1] - fn(p[:-1]) for p in np.atleast_2d(pts)])

    def grad_h(pts):
        pts = np.atleast_2d(pts)
        out = np.empty_like(pts)
        for i, p in enumerate(pts):
            g = np.atleast_1d(gr(p[:-1]))
            out[i, :-1] = -g
            out[i, -1] = 1.0
        return out

    return h, grad_h


@dataclass(frozen=True, eq=False)
class RegularizedDistance:
    """Callable pair (rho, grad rho) for one domain.

    Immutable; evaluations are independent (safe to share across threads).
    """

    domain: Domain
    mollifier: Mollifier
    quarter_scale: float = 0.25

    def _collar_check(self, x: np.ndarray, signed: float) -> None:
        if self.domain.kind == "halfspace":
            return
        lim = self.domain.r0 / 4.0 if self.domain.kind == "graph_epigraph" \
            else self.domain.radius / 2.0
        if abs(signed) >= lim:
            raise DomainError(
                f"point with signed distance {signed:.4g} outside the "
                f"single-chart collar |delta| < {lim:.4g}"
            )

    def _solve(self, x: np.ndarray):
        h, grad_h = _chart_h(self.domain)
        z, w = self.mollifier.nodes, self.mollifier.weights
        s = self.quarter_scale

        def p_of(a: float) -> float:
            return float(w @ h(x[None, :] - (a * s) * z))

        a = float(h(x[None, :])[0])
        residual = math.inf
        for _ in range(FIXED_POINT_MAX_ITER):
            new = p_of(a)
            residual = abs(new - a)
            a = new
            if residual < FIXED_POINT_TOL:
                break
        if not residual < 1e-10:
            raise RuntimeError(
                f"regularized-distance fixed point did not converge at {x} "
                f"(residual {residual:.2e})"
            )
        shift = x[None, :] - (a * s) * z
        grads = grad_h(shift)
        grad_x_p = grads.T @ w
        dp_da = -s * float(w @ (grads * z).sum(axis=1))
        if abs(dp_da) >= 1.0 / 3.0 + 1e-9:
            raise RuntimeError(
                f"contraction bound violated at {x}: |dP/da| = {abs(dp_da):.3f}"
            )
        grad = grad_x_p / (1.0 - dp_da)
        return a, grad

    def rho(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if self.domain.kind == "graph_epigraph":
            _graph_coverage(self.domain, x)
        proj = distance(self.domain, x)
        self._collar_check(x, proj.signed)
        return self._solve(x)[0]

    def grad_rho(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.domain.kind == "graph_epigraph":
            _graph_coverage(self.domain, x)
        proj = distance(self.domain, x)
        self._collar_check(x, proj.signed)
        return self._solve(x)[1]

    def both(self, x) -> tuple[float, np.ndarray]:
        x = np.asarray(x, dtype=float)
        if self.domain.kind == "graph_epigraph":
            _graph_coverage(self.domain, x)
        proj = distance(self.domain, x)
        self._collar_check(x, proj.signed)
        return self._solve(x)


def build_regularized_distance(
    dom: Domain, mollifier: Mollifier | None = None
) -> RegularizedDistance:
    if mollifier is None:
        mollifier = default_mollifier(dom.dim)
    if mollifier.dim != dom.dim:
        raise DomainError("mollifier dimension does not match the domain")
    return RegularizedDistance(domain=dom, mollifier=mollifier)


def regularized_distance(dom: Domain, x, mollifier: Mollifier | None = None):
    """One-shot (rho, grad rho) at x; build the field once for bulk use."""
    return build_regularized_distance(dom, mollifier).both(x)


def tangent_halfspace(
    dom: Domain, x0, rd: RegularizedDistance | None = None
) -> tuple[Domain, float]:
    """Half-space E = {y : rho(x0) + grad rho(x0).(y - x0) > 0} and delta_E(x0)."""
    if rd is None:
        rd = build_regularized_distance(dom)
    x0 = np.asarray(x0, dtype=float)
    rho, grad = rd.both(x0)
    norm = float(np.linalg.norm(grad))
    if norm < 1.0 / 8.0:
        raise RuntimeError(
            f"|grad rho| = {norm:.4f} < 1/8 at {x0}; outside the collar where "
            "the tangent half-space is meaningful"
        )
    n = grad / norm
    delta_e = rho / norm
    origin = x0 - delta_e * n
    return halfspace(dom.dim, normal=n, origin=origin), delta_e


# ---------------------------------------------------------------------------
# exponent field Phi
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ExponentField:
    """Phi extending gamma(n_Q) off the boundary, with its Dini modulus."""

    domain: Domain
    modulus: DiniFunction
    alpha: float
    _gamma_exact: Callable      # exact gamma(n), memoized
    _gamma_fast: Callable       # interpolated gamma(n) for mollified averages
    _mollifier: Mollifier

    def raw(self, x) -> float:
        """gamma at the inward normal of the nearest boundary point (exact)."""
        proj = distance(self.domain, np.asarray(x, dtype=float))
        return float(self._gamma_exact(proj.n))

    def phi(self, x) -> float:
        """Mollification of raw at scale |signed distance| / 2.

        On the boundary the scale vanishes and the exact gamma(n_Q) is
        returned; off the boundary the averaged field may use the
        interpolated gamma (its error is far below the mollification's own
        O(ell) deviation).
        """
        x = np.asarray(x, dtype=float)
        proj = distance(self.domain, x)
        scale = abs(proj.signed) / 2.0
        if scale == 0.0:
            return float(self._gamma_exact(proj.n))
        z, w = self._mollifier.nodes, self._mollifier.weights
        shifted = x[None, :] - scale * z
        vals = np.array([
            self._gamma_fast(distance(self.domain, p).n) for p in shifted
        ])
        return float(w @ vals)

    def __call__(self, x) -> float:
        return self.phi(x)


def extend_exponent(
    dom: Domain, sd: SpectralDensity, ell: DiniFunction,
    mollifier_order: int = 8,
) -> ExponentField:
    """Build Phi with Phi(Q) = gamma(n_Q) on the boundary.

    For planar domains the interior averages interpolate gamma from a
    256-angle periodic cubic spline; boundary values always use the exact
    quadrature (memoized on the rounded direction).
    """
    if sd.dim != dom.dim:
        raise DomainError("spectral density dimension does not match domain")

    cache: dict = {}

    def gamma_exact(n):
        key = tuple(np.round(np.asarray(n, dtype=float), 12))
        if key not in cache:
            cache[key] = gamma_exponent(sd, np.asarray(n, dtype=float))[0]
        return cache[key]

    if dom.dim == 2:
        from scipy.interpolate import CubicSpline

        angles = np.linspace(0.0, 2.0 * math.pi, 257)
        gams = np.array([
            gamma_exponent(sd, [math.cos(a), math.sin(a)])[0]
            for a in angles[:-1]
        ])
        spline = CubicSpline(angles, np.append(gams, gams[0]),
                             bc_type="periodic")

        def gamma_fast(n):
            return float(spline(math.atan2(n[1], n[0]) % (2.0 * math.pi)))
    else:
        gamma_fast = gamma_exact

    return ExponentField(
        domain=dom,
        modulus=ell,
        alpha=sd.alpha,
        _gamma_exact=gamma_exact,
        _gamma_fast=gamma_fast,
        _mollifier=default_mollifier(dom.dim, order=mollifier_order),
    )


# ---------------------------------------------------------------------------
# barriers
# ---------------------------------------------------------------------------


def _f_ell(ell) -> Callable:
    if isinstance(ell, DiniTransforms) or hasattr(ell, "F_ell"):
        return ell.F_ell
    return transforms(ell, 0.5).F_ell


def _l_ell(ell, gamma0: float) -> Callable:
    if isinstance(ell, DiniTransforms) or hasattr(ell, "L_ell"):
        return ell.L_ell
    return transforms(ell, gamma0).L_ell


def _barrier_pre(dom: Domain, r: float, sigma: float) -> None:
    if not 0.0 < r <= dom.r1:
        raise ValueError(f"need 0 < r <= r1 = {dom.r1:.4g}, got r = {r}")
    if not 0.0 < sigma <= 0.25:
        raise ValueError(f"need sigma in (0, 1/4], got {sigma}")


def barrier_h(dom: Domain, rd: RegularizedDistance, r: float, sigma: float,
              q: float, x) -> float:
    """Critical barrier: (rho/r)^q on D(2 sigma r), sigma^q inside, 0 outside."""
    _barrier_pre(dom, r, sigma)
    proj = distance(dom, np.asarray(x, dtype=float))
    if proj.signed <= 0.0:
        return 0.0
    if proj.delta < 2.0 * sigma * r:
        return (rd.rho(x) / r) ** q
    return sigma**q


def barrier_psi(dom: Domain, rd: RegularizedDistance, r: float, sigma: float,
                q: float, ell, x) -> float:
    """Critical companion: adds F_ell(rho/(|grad rho| r)); plateau
    sigma^q F_ell(sigma)."""
    _barrier_pre(dom, r, sigma)
    f_ell = _f_ell(ell)
    proj = distance(dom, np.asarray(x, dtype=float))
    if proj.signed <= 0.0:
        return 0.0
    if proj.delta < 2.0 * sigma * r:
        rho, grad = rd.both(x)
        return (rho / r) ** q * float(f_ell(rho / (np.linalg.norm(grad) * r)))
    return sigma**q * float(f_ell(sigma))


def _rho_in_collar(rd: RegularizedDistance, proj: BoundaryProjection, x,
                   threshold: float) -> float | None:
    """rho(x) if rho(x) < threshold else None, evaluating rho only when the
    collar bounds allow it (rho <= 2 sqrt(5) delta and rho >= delta / 2, so
    delta >= 2 * threshold already settles membership without an evaluation).
    """
    if proj.delta >= 2.0 * threshold:
        return None
    rho = rd.rho(x)
    return rho if rho < threshold else None


def barrier_h_phi(dom: Domain, rd: RegularizedDistance, phi: ExponentField,
                  r: float, sigma: float, x) -> float:
    """Variable-exponent barrier: (rho/r)^Phi(x) on the collar, 1 inside D,
    0 outside.

    Collar membership is tested on rho itself (rho < r), which makes the
    seam exactly continuous: at rho = r the collar branch equals 1^Phi = 1.
    sigma is accepted for signature symmetry with the companion but does not
    enter this display.
    """
    _barrier_pre(dom, r, sigma)
    x = np.asarray(x, dtype=float)
    proj = distance(dom, x)
    if proj.signed <= 0.0:
        return 0.0
    rho = _rho_in_collar(rd, proj, x, r)
    if rho is not None:
        return (rho / r) ** phi(x)
    return 1.0


def barrier_psi_phi(dom: Domain, rd: RegularizedDistance, phi: ExponentField,
                    r: float, sigma: float, ell, gamma0: float, x) -> float:
    """Variable-exponent companion with L_ell in place of F_ell.

    Same rho-based collar membership as barrier_h_phi (depths 2 sigma r and
    r).
    """
    _barrier_pre(dom, r, sigma)
    l_ell = _l_ell(ell, gamma0)
    x = np.asarray(x, dtype=float)
    proj = distance(dom, x)
    if proj.signed <= 0.0:
        return 0.0
    rho = _rho_in_collar(rd, proj, x, 2.0 * sigma * r)
    if rho is not None:
        grad = rd.grad_rho(x)
        return (rho / r) ** phi(x) * float(
            l_ell(rho / (np.linalg.norm(grad) * r))
        )
    rho = _rho_in_collar(rd, proj, x, r)
    if rho is not None:
        return (rho / r) ** phi(x) * float(l_ell(sigma))
    return float(l_ell(sigma))
