"""Artifact plumbing: which CSVs and summary a plotting run consumes."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .schema import SchemaError

__all__ = ["ReportBundle"]


@dataclass(frozen=True)
class ReportBundle:
    """Paths to the CSV inputs plus the JSON summary and output directory.

    Construction enforces the consumption contract: every CSV must open
    with a ``#schema=`` line.
    """

    csv_paths: tuple[Path, ...]
    summary_path: Path | None
    output_dir: Path

    def __post_init__(self):
        for path in self.csv_paths:
            with open(path, "r") as handle:
                first = handle.readline()
            if not first.startswith("#schema="):
                raise SchemaError(
                    f"{path}: consumed CSVs must start with '#schema=', "
                    f"found {first[:40]!r}")

    @classmethod
    def from_directory(cls, in_dir, out_dir) -> "ReportBundle":
        in_dir = Path(in_dir)
        if not in_dir.is_dir():
            raise SchemaError(f"input directory {in_dir} does not exist")
        csvs = tuple(sorted(in_dir.glob("*.csv")))
        if not csvs:
            raise SchemaError(f"no CSV files in {in_dir}")
        summary = in_dir / "report.json"
        return cls(csv_paths=csvs,
                   summary_path=summary if summary.exists() else None,
                   output_dir=Path(out_dir))
