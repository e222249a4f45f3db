"""Deterministic figures from stablelab report CSVs.

Consumes only the documented ``#schema=stablelab.<kind>.v1`` CSV files;
never recomputes any science.
"""

from .bundle import ReportBundle
from .figures import (
    EXPONENT_SCHEMA,
    FACTOR_SCHEMA,
    GAMMA_SCHEMA,
    plot_exponent_fit,
    plot_factor_band,
    plot_gamma_polar,
)
from .schema import EmptyTableError, SchemaError, SchemaTable, read_table

__all__ = [
    "ReportBundle",
    "SchemaTable",
    "SchemaError",
    "EmptyTableError",
    "read_table",
    "plot_exponent_fit",
    "plot_gamma_polar",
    "plot_factor_band",
    "EXPONENT_SCHEMA",
    "GAMMA_SCHEMA",
    "FACTOR_SCHEMA",
]
