"""The three figure types rendered from stablelab report CSVs.

Every figure is deterministic: a fixed style dictionary, a fixed SVG hash
salt, text kept as text (``svg.fonttype=none``), and no timestamps in the
output, so re-rendering the same CSV yields byte-identical SVG.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.colors import LogNorm  # noqa: E402

from .schema import EmptyTableError, SchemaError, SchemaTable, read_table

__all__ = [
    "EXPONENT_SCHEMA",
    "GAMMA_SCHEMA",
    "FACTOR_SCHEMA",
    "plot_exponent_fit",
    "plot_gamma_polar",
    "plot_factor_band",
]

EXPONENT_SCHEMA = "stablelab.exponent_fit.v1"
GAMMA_SCHEMA = "stablelab.gamma.v1"
FACTOR_SCHEMA = "stablelab.factor_band.v1"

# one style for every figure; part of the determinism contract
_RC = {
    "svg.hashsalt": "plot_reports",
    "svg.fonttype": "none",
    "font.family": "DejaVu Sans",
    "font.size": 10.0,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "figure.dpi": 100.0,
    "savefig.dpi": 150.0,
    "path.simplify": False,
}

_FORMATS = ("png", "svg")


def _save(fig, out_base, formats: Sequence[str]) -> tuple[Path, ...]:
    out_base = Path(out_base)
    out_base.parent.mkdir(parents=True, exist_ok=True)
    written = []
    for fmt in formats:
        target = out_base.with_suffix(f".{fmt}")
        if fmt == "svg":
            fig.savefig(target, format="svg", metadata={"Date": None})
        else:
            fig.savefig(target, format=fmt,
                        metadata={"Software": "plot_reports"})
        written.append(target)
    plt.close(fig)
    return tuple(written)


def _as_table(source, schema: str) -> SchemaTable:
    table = source if isinstance(source, SchemaTable) else read_table(source)
    if table.schema != schema:
        raise SchemaError(
            f"{table.path}: expected schema {schema}, found {table.schema}")
    return table


def plot_exponent_fit(csv, out_base, formats: Sequence[str] = _FORMATS,
                      ) -> tuple[Path, ...]:
    """Log-log survival scatter with the fitted and predicted slopes."""
    table = _as_table(csv, EXPONENT_SCHEMA)
    delta = table.column("delta")
    estimate = table.column("estimate")
    ci = table.column("ci_halfwidth")
    used = table.column("used").astype(bool)
    meta = table.meta
    slope = float(meta["slope"])
    intercept = float(meta["intercept"])
    predicted = float(meta["predicted"])
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5.4, 4.2))
        ax.errorbar(delta[used], estimate[used], yerr=ci[used], fmt="o",
                    ms=5, color="#1f6fb4", ecolor="#1f6fb4", capsize=3,
                    label="MC estimate (fit window)", zorder=3)
        if (~used).any():
            ax.errorbar(delta[~used], estimate[~used], yerr=ci[~used],
                        fmt="o", ms=5, mfc="none", color="#8aa6bf",
                        capsize=3, label="excluded points", zorder=2)
        span = np.geomspace(delta.min(), delta.max(), 64)
        ax.plot(span, np.exp(intercept) * span ** slope, "-",
                color="#c23b22", lw=1.6,
                label=f"fitted slope {slope:.3f}")
        anchor = np.exp(intercept) * np.median(delta) ** slope
        ax.plot(span, anchor * (span / np.median(delta)) ** predicted, "--",
                color="#444444", lw=1.3,
                label=f"{predicted:g} predicted")
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("boundary distance $\\delta$")
        ax.set_ylabel("survival estimate")
        name = meta.get("plan", table.path.stem)
        ax.set_title(f"{name}: boundary-exponent fit")
        ax.annotate(f"deviation {slope - predicted:+.3f}",
                    xy=(0.03, 0.04), xycoords="axes fraction",
                    fontsize=9, color="#333333")
        ax.legend(loc="upper left", fontsize=8.5, framealpha=0.9)
        fig.tight_layout()
        return _save(fig, out_base, formats)


def plot_gamma_polar(csvs, out_base, formats: Sequence[str] = _FORMATS,
                     ) -> tuple[Path, ...]:
    """Polar plot of gamma(theta), gamma-hat(theta) with the admissible
    band ((alpha-1)+, alpha ^ 1) shaded.  Accepts one CSV or several to
    overlay; all overlaid sweeps must share alpha."""
    if isinstance(csvs, (str, Path, SchemaTable)):
        csvs = [csvs]
    tables = [_as_table(c, GAMMA_SCHEMA) for c in csvs]
    if not tables:
        raise SchemaError("plot_gamma_polar needs at least one CSV")
    for t in tables:
        t.require(GAMMA_SCHEMA, "phi", "gamma", "gamma_hat")
    alphas = {float(t.meta["alpha"]) for t in tables}
    if len(alphas) != 1:
        raise SchemaError(
            f"overlaid gamma sweeps must share alpha, found {sorted(alphas)}")
    alpha = alphas.pop()
    lo, hi = max(alpha - 1.0, 0.0), min(alpha, 1.0)
    palette = ("#1f6fb4", "#c23b22", "#3f8f3f", "#7b519b")
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5.2, 5.2),
                               subplot_kw={"projection": "polar"})
        band_phi = np.linspace(0.0, 2.0 * np.pi, 256)
        ax.fill_between(band_phi, lo, hi, color="#dddddd", alpha=0.6,
                        zorder=0,
                        label=f"admissible band [{lo:g}, {hi:g}]")
        for i, t in enumerate(tables):
            phi = np.append(t.column("phi"), t.column("phi")[0])
            g = np.append(t.column("gamma"), t.column("gamma")[0])
            gh = np.append(t.column("gamma_hat"), t.column("gamma_hat")[0])
            color = palette[i % len(palette)]
            tag = str(t.meta.get("kind", t.path.stem))
            ax.plot(phi, g, "-", color=color, lw=1.6,
                    label=f"$\\gamma$ ({tag})")
            ax.plot(phi, gh, "--", color=color, lw=1.2,
                    label=f"$\\hat\\gamma$ ({tag})")
        ax.set_ylim(0.0, min(alpha, 1.0) * 1.15)
        ax.set_title(f"boundary exponents, $\\alpha={alpha:g}$", pad=18)
        ax.legend(loc="lower left", bbox_to_anchor=(1.02, 0.0), fontsize=8)
        fig.tight_layout()
        return _save(fig, out_base, formats)


def _edges(centers: np.ndarray) -> np.ndarray:
    """Cell edges from sorted unique centers; single-cell axes get a unit
    default width so a one-cell table still renders."""
    if centers.size == 1:
        half = 0.5
        return np.array([centers[0] - half, centers[0] + half])
    mids = 0.5 * (centers[1:] + centers[:-1])
    first = centers[0] - (mids[0] - centers[0])
    last = centers[-1] + (centers[-1] - mids[-1])
    return np.concatenate([[first], mids, [last]])


def plot_factor_band(csv, out_base, formats: Sequence[str] = _FORMATS,
                     ) -> tuple[Path, ...]:
    """Heatmap of the factorization ratio over qualified cells, log-scale
    colorbar.  All-NaN input produces an explicit warning figure instead
    of an exception."""
    table = _as_table(csv, FACTOR_SCHEMA)
    x = table.column("cell0")
    y = table.column("cell1")
    ratio = table.column("ratio")
    meta = table.meta
    finite = np.isfinite(ratio) & (ratio > 0)
    with plt.rc_context(_RC):
        if not finite.any():
            fig, ax = plt.subplots(figsize=(5.4, 4.4))
            ax.axis("off")
            ax.text(0.5, 0.5,
                    "no qualified cells —\nnothing to band",
                    ha="center", va="center", fontsize=13, color="#aa3333",
                    transform=ax.transAxes)
            ax.set_title(f"{meta.get('plan', table.path.stem)}: "
                         f"factorization ratio")
            return _save(fig, out_base, formats)
        xs = np.unique(x)
        ys = np.unique(y)
        grid = np.full((ys.size, xs.size), np.nan)
        xi = np.searchsorted(xs, x)
        yi = np.searchsorted(ys, y)
        grid[yi, xi] = np.where(finite, ratio, np.nan)
        cmap = plt.get_cmap("viridis").copy()
        cmap.set_bad("#e8e8e8")
        fig, ax = plt.subplots(figsize=(5.8, 4.6))
        mesh = ax.pcolormesh(
            _edges(xs), _edges(ys), np.ma.masked_invalid(grid),
            cmap=cmap,
            norm=LogNorm(vmin=np.nanmin(grid[np.isfinite(grid)]),
                         vmax=np.nanmax(grid[np.isfinite(grid)])))
        cbar = fig.colorbar(mesh, ax=ax)
        cbar.set_label("$\\hat p \\,/\\, (h_1 h_2 \\tilde q)$")
        ax.set_xlabel("$y_1$")
        ax.set_ylabel("$y_2$")
        ax.set_aspect("equal")
        band = meta.get("band")
        title = f"{meta.get('plan', table.path.stem)}: factorization ratio"
        if band is not None:
            title += f" (max/min = {float(band):.2f})"
        ax.set_title(title)
        fig.tight_layout()
        return _save(fig, out_base, formats)
