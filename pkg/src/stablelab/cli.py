"""Command-line front end.

Verbs: gamma, cconst, dini, geom, generator-check, survival, hk,
factor-check, exponent-fit, report.  Tabular output is schema-tagged CSV
(``--out -`` prints to stdout); experiment verbs exit non-zero when the
acceptance check fails.
"""

from __future__ import annotations

import math

import click
import numpy as np

from . import experiment_harness as harness
from . import io_utils
from .dini_toolkit import (
    double_dini_limit_check,
    f_eps,
    modulus_from_registry,
    regularize,
    transforms,
)
from .domain_geometry import (
    ball,
    build_regularized_distance,
    distance,
    domain_from_spec,
    halfspace,
)
from .estimate_evaluators import green_estimate, hk_estimate
from .special_constants import (
    CriticalConstantQuery,
    c_constant,
    halfspace_harmonic_check,
)
from .stable_montecarlo import survival_curve
from .stable_symbol import gamma_exponent, spectral_density_from_spec


def _echo_or_write(out: str, text: str) -> None:
    if out == "-":
        click.echo(text, nl=False)
    else:
        with open(out, "w", encoding="utf-8") as handle:
            handle.write(text)


def _parse_kv(pairs) -> dict:
    params = {}
    for pair in pairs:
        if "=" not in pair:
            raise click.BadParameter(f"expected key=value, got {pair!r}")
        key, raw = pair.split("=", 1)
        try:
            value: object = int(raw)
        except ValueError:
            try:
                value = float(raw)
            except ValueError:
                value = raw
        params[key] = value
    return params


def _parse_point(text: str) -> np.ndarray:
    return np.array([float(v) for v in text.split(",")])


def _domain_from_options(kind, dim, center, radius):
    if kind == "free":
        return None
    if kind == "halfspace":
        return halfspace(dim=dim)
    if kind == "ball":
        return ball(center=_parse_point(center), radius=radius)
    return domain_from_spec({"kind": kind, "dim": dim})


@click.group()
def main():
    """Numerical laboratory for stable-process boundary behaviour."""


# ---------------------------------------------------------------------------


@main.command()
@click.option("--alpha", type=float, required=True)
@click.option("--dim", type=int, default=2, show_default=True)
@click.option("--kind", default="constant", show_default=True,
              help="spectral density kind (constant|cosine|poshalf_mixture)")
@click.option("--param", "params", multiple=True,
              help="density parameter key=value (repeatable)")
@click.option("--dual", is_flag=True, help="use the dual process -Y")
@click.option("--n-angles", type=int, default=16, show_default=True)
@click.option("--out", default="-", show_default=True)
def gamma(alpha, dim, kind, params, dual, n_angles, out):
    """Boundary exponents gamma/gamma-hat over a sweep of directions."""
    if dim != 2:
        raise click.UsageError("the angle sweep is two-dimensional; use "
                               "stable_symbol.gamma_exponent for d=3")
    spec = {"alpha": alpha, "dim": dim, "kind": kind,
            "params": _parse_kv(params)}
    sd = spectral_density_from_spec(spec)
    if dual:
        from .stable_symbol import dual_density
        sd = dual_density(sd)
    rows = []
    for phi in np.linspace(0.0, 2.0 * math.pi, n_angles, endpoint=False):
        theta = np.array([math.cos(phi), math.sin(phi)])
        g, g_hat = gamma_exponent(sd, theta)
        rows.append((float(phi), float(theta[0]), float(theta[1]), g, g_hat))
    text = io_utils.csv_text(
        "stablelab.gamma.v1",
        ("phi", "theta0", "theta1", "gamma", "gamma_hat"),
        rows, {"alpha": alpha, "kind": kind, "dual": dual})
    _echo_or_write(out, text)


@main.command()
@click.option("--dim", type=int, default=2, show_default=True)
@click.option("--alpha", type=float, required=True)
@click.option("--q", type=float, default=None,
              help="single exponent; prints one number")
@click.option("--q-grid", default=None,
              help="start:stop:n sweep written as CSV")
@click.option("--out", default="-", show_default=True)
def cconst(dim, alpha, q, q_grid, out):
    """Critical killing constant C(d, alpha, q)."""
    if (q is None) == (q_grid is None):
        raise click.UsageError("give exactly one of --q / --q-grid")
    if q is not None:
        value = c_constant(CriticalConstantQuery(dim, alpha, q))
        click.echo(io_utils.float_cell(value))
        return
    start, stop, count = q_grid.split(":")
    grid = np.linspace(float(start), float(stop), int(count))
    rows = [(float(v), c_constant(CriticalConstantQuery(dim, alpha, v)))
            for v in grid]
    text = io_utils.csv_text("stablelab.cconst.v1", ("q", "c_constant"),
                             rows, {"dim": dim, "alpha": alpha})
    _echo_or_write(out, text)


@main.command()
@click.option("--modulus", "modulus_kv", required=True,
              help="registry entry, e.g. power=0.3 or log_pow=2")
@click.option("--eps", type=float, default=0.25, show_default=True,
              help="regularization strength, in (0, 1/4]")
@click.option("--gamma0", type=float, default=0.75, show_default=True,
              help="head exponent in (0, 1) used by the L_ell transform")
@click.option("--n-points", type=int, default=12, show_default=True)
@click.option("--out", default="-", show_default=True)
def dini(modulus_kv, eps, gamma0, n_points, out):
    """Regularize a registry modulus and tabulate its transforms."""
    ell = modulus_from_registry(_parse_kv([modulus_kv]))
    reg = regularize(ell, eps)
    tr = transforms(reg, gamma0)
    dd = double_dini_limit_check(ell)
    rows = []
    for r in np.geomspace(1e-5, 1.0, n_points):
        rows.append((float(r), float(ell(r)), float(f_eps(ell, eps, r)),
                     float(reg(r)), float(tr.F_ell(r)), float(tr.L_ell(r))))
    meta = {
        "modulus": ell.name,
        "eps": eps,
        "gamma0": gamma0,
        "class_tag": ell.class_tag,
        "double_dini_vanishing": bool(dd.vanishing_trend),
    }
    text = io_utils.csv_text(
        "stablelab.dini.v1",
        ("r", "ell", "f_eps", "regularized", "F_ell", "L_ell"), rows, meta)
    _echo_or_write(out, text)


@main.command()
@click.option("--kind", default="ball", show_default=True,
              type=click.Choice(["halfspace", "ball", "graph_epigraph"]))
@click.option("--dim", type=int, default=2, show_default=True)
@click.option("--center", default="0,0", show_default=True)
@click.option("--radius", type=float, default=1.0, show_default=True)
@click.option("--n-points", type=int, default=12, show_default=True)
@click.option("--out", default="-", show_default=True)
def geom(kind, dim, center, radius, n_points, out):
    """Regularized-distance diagnostics along an inward ray."""
    dom = _domain_from_options(kind, dim, center, radius)
    rd = build_regularized_distance(dom)
    # keep probes inside the single-chart collar
    top = {"halfspace": 1.0, "ball": 0.45 * radius}.get(kind)
    if top is None:
        top = 0.2 * dom.r0
    deltas = np.geomspace(1e-3 * top, top, n_points)
    xs = harness._ray_points(dom, deltas) if kind != "graph_epigraph" else \
        np.column_stack([np.zeros(n_points), deltas])
    rows = []
    for delta, x in zip(deltas, xs):
        rho, grad = rd.both(x)
        proj = distance(dom, x)
        rows.append((float(delta), *(float(v) for v in x), float(rho),
                     float(rho / proj.signed), float(np.linalg.norm(grad))))
    cols = ("delta",) + tuple(f"x{i}" for i in range(xs.shape[1])) + \
        ("rho", "rho_over_delta", "grad_norm")
    text = io_utils.csv_text("stablelab.geom.v1", cols, rows,
                             {"kind": kind, "radius": radius})
    _echo_or_write(out, text)


@main.command("generator-check")
@click.option("--dim", type=int, default=2, show_default=True)
@click.option("--alpha", type=float, required=True)
@click.option("--q", type=float, required=True)
@click.option("--xd", default="0.5,1,2", show_default=True,
              help="comma-separated heights above the boundary")
@click.option("--out", default="-", show_default=True)
def generator_check(dim, alpha, q, xd, out):
    """Half-space identity: p.v. quadrature vs C(d,alpha,q) x_d^{q-alpha}."""
    rows = []
    for height in (float(v) for v in xd.split(",")):
        lhs, rhs = halfspace_harmonic_check(dim, alpha, q, height)
        rel = abs(lhs - rhs) / abs(rhs) if rhs != 0 else math.inf
        rows.append((height, lhs, rhs, rel))
    text = io_utils.csv_text(
        "stablelab.generator_check.v1",
        ("x_d", "pv_quadrature", "constant_times_power", "rel_error"),
        rows, {"dim": dim, "alpha": alpha, "q": q})
    _echo_or_write(out, text)


# ---------------------------------------------------------------------------


@main.command()
@click.argument("plan_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", default="-", show_default=True)
def survival(plan_file, out):
    """Monte Carlo survival curve from a plan's domain/process/killing."""
    plan = harness.load_plan(plan_file)
    dom = harness._resolve_domain(plan.domain)
    process = harness._resolve_process(plan.process)
    alpha = harness._process_alpha(process)
    killing, _ = harness._resolve_killing(plan.killing, dom, alpha)
    cfg = harness._sim_config(plan.mc)
    g = plan.grids
    lo, hi = (float(v) for v in g["delta"])
    deltas = np.geomspace(lo, hi, int(g.get("n_delta", 6)))
    xs = harness._ray_points(dom, deltas, g.get("direction"))
    t_values = g["t"] if isinstance(g["t"], (list, tuple)) else [g["t"]]
    curve = survival_curve(dom, process, killing, xs,
                           [float(t) for t in t_values], cfg)
    _echo_or_write(out, curve.to_csv_string())


@main.command()
@click.option("--t", type=float, required=True)
@click.option("--alpha", type=float, required=True)
@click.option("--qx", type=float, required=True)
@click.option("--qy", type=float, required=True)
@click.option("--kind", default="halfspace", show_default=True,
              type=click.Choice(["free", "halfspace", "ball"]))
@click.option("--dim", type=int, default=2, show_default=True)
@click.option("--center", default="0,0", show_default=True)
@click.option("--radius", type=float, default=1.0, show_default=True)
@click.option("--x", "x_text", required=True, help="base point, e.g. 0,0.5")
@click.option("--y-from", required=True)
@click.option("--y-to", required=True)
@click.option("--n", type=int, default=16, show_default=True)
@click.option("--band-constant", type=float, default=1.0, show_default=True)
@click.option("--lambda1", type=float, default=None)
@click.option("--green", is_flag=True, help="tabulate the Green product "
              "instead of the heat kernel")
@click.option("--out", default="-", show_default=True)
def hk(t, alpha, qx, qy, kind, dim, center, radius, x_text, y_from, y_to, n,
       band_constant, lambda1, green, out):
    """Two-sided estimate values along a segment of target points."""
    dom = _domain_from_options(kind, dim, center, radius)
    x = _parse_point(x_text)
    y0, y1 = _parse_point(y_from), _parse_point(y_to)
    ys = y0[None, :] + np.linspace(0.0, 1.0, n)[:, None] * (y1 - y0)[None, :]
    rows = []
    if green:
        vals = green_estimate(x, ys, dom, (qx, qy), alpha)
        vals = np.atleast_1d(vals)
        for yi, v in zip(ys, vals):
            rows.append(tuple(float(c) for c in yi) + (float(v),))
        cols = tuple(f"y{i}" for i in range(ys.shape[1])) + ("green",)
        schema = "stablelab.green_eval.v1"
    else:
        lower, upper = hk_estimate(t, x, ys, dom, (qx, qy), alpha,
                                   band_constant=band_constant,
                                   lambda1=lambda1)
        lower = np.atleast_1d(lower)
        upper = np.atleast_1d(upper)
        for yi, lo_v, up_v in zip(ys, lower, upper):
            rows.append(tuple(float(c) for c in yi)
                        + (float(lo_v), float(up_v)))
        cols = tuple(f"y{i}" for i in range(ys.shape[1])) + ("lower", "upper")
        schema = "stablelab.hk_eval.v1"
    meta = {"t": t, "alpha": alpha, "qx": qx, "qy": qy, "kind": kind,
            "x": [float(v) for v in x]}
    _echo_or_write(out, io_utils.csv_text(schema, cols, rows, meta))


# ---------------------------------------------------------------------------


def _run_and_report(plans, out_dir):
    results = harness.run_plans(plans)
    artifacts = harness.emit_report(results, out_dir)
    for summary in artifacts.summaries:
        status = "PASS" if summary["pass"] else "FAIL"
        fitted = summary.get("fitted")
        shown = "n/a" if fitted is None else f"{fitted:.4f}"
        click.echo(f"{status} {summary['experiment']} "
                   f"[{summary['kind']}] fitted={shown}")
    click.echo(f"report: {artifacts.paths[-1]}")
    return artifacts


@main.command("exponent-fit")
@click.argument("plan_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", default="reports", show_default=True)
@click.pass_context
def exponent_fit(ctx, plan_file, out_dir):
    """Run one exponent-regression plan and emit its report."""
    plan = harness.load_plan(plan_file)
    artifacts = _run_and_report([plan], out_dir)
    ctx.exit(0 if artifacts.all_pass else 1)


@main.command("factor-check")
@click.argument("plan_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", default="reports", show_default=True)
@click.pass_context
def factor_check(ctx, plan_file, out_dir):
    """Run one factorization-band plan and emit its report."""
    plan = harness.load_plan(plan_file)
    artifacts = _run_and_report([plan], out_dir)
    ctx.exit(0 if artifacts.all_pass else 1)


@main.command()
@click.argument("plan_files", nargs=-1, required=True,
                type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", default="reports", show_default=True)
@click.option("--workers", type=int, default=None,
              help="worker cap (default: STABLELAB_THREADS or CPU count)")
@click.pass_context
def report(ctx, plan_files, out_dir, workers):
    """Run a batch of plans concurrently and aggregate pass/fail."""
    plans = [harness.load_plan(p) for p in plan_files]
    results = harness.run_plans(plans, max_workers=workers)
    artifacts = harness.emit_report(results, out_dir)
    for summary in artifacts.summaries:
        status = "PASS" if summary["pass"] else "FAIL"
        click.echo(f"{status} {summary['experiment']} [{summary['kind']}]")
    click.echo(f"report: {artifacts.paths[-1]}")
    ctx.exit(0 if artifacts.all_pass else 1)


if __name__ == "__main__":
    main()
