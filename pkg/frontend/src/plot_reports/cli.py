"""`report-plots --in dir --out dir`: render every recognized CSV."""

from __future__ import annotations

from pathlib import Path

import click

from .bundle import ReportBundle
from .figures import (
    EXPONENT_SCHEMA,
    FACTOR_SCHEMA,
    GAMMA_SCHEMA,
    plot_exponent_fit,
    plot_factor_band,
    plot_gamma_polar,
)
from .schema import SchemaError, read_table

_RENDERERS = {
    EXPONENT_SCHEMA: plot_exponent_fit,
    FACTOR_SCHEMA: plot_factor_band,
    GAMMA_SCHEMA: plot_gamma_polar,
}


@click.command()
@click.option("--in", "in_dir", required=True,
              type=click.Path(exists=True, file_okay=False),
              help="directory holding stablelab report CSVs")
@click.option("--out", "out_dir", required=True, type=click.Path(),
              help="directory figures are written into (PNG + SVG)")
def main(in_dir, out_dir):
    """Render exponent-fit, gamma-polar, and factor-band figures from
    every recognized CSV in the input directory; overlay all gamma
    sweeps of one alpha into an extra combined figure."""
    try:
        bundle = ReportBundle.from_directory(in_dir, out_dir)
        written = []
        gamma_tables = []
        for path in bundle.csv_paths:
            table = read_table(path)
            renderer = _RENDERERS.get(table.schema)
            if renderer is None:
                click.echo(f"skip {path.name}: unrecognized schema "
                           f"{table.schema}")
                continue
            out_base = Path(bundle.output_dir) / path.stem
            written.extend(renderer(table, out_base))
            if table.schema == GAMMA_SCHEMA:
                gamma_tables.append(table)
        if len(gamma_tables) > 1:
            alphas = {float(t.meta["alpha"]) for t in gamma_tables}
            if len(alphas) == 1:
                written.extend(plot_gamma_polar(
                    gamma_tables, Path(bundle.output_dir) / "gamma-overlay"))
    except SchemaError as err:
        raise click.ClickException(str(err)) from err
    for target in written:
        click.echo(f"wrote {target}")
    if not written:
        raise click.ClickException("no recognized CSVs were rendered")


if __name__ == "__main__":
    main()
