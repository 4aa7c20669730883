"""Shared plumbing: run-directory CSV access and deterministic rendering.

Figures are a pure function of the CSVs in a run directory; every number
placed on a plot is read from a file, never recomputed.  Rendering is
pinned (Agg backend, fixed SVG hash salt, no timestamps) so re-rendering
identical inputs yields identical bytes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

plt.rcParams["svg.hashsalt"] = "roughfem-figures"
plt.rcParams["figure.dpi"] = 110

PNG_METADATA = {"Software": "roughfem-figures"}
SVG_METADATA = {"Date": None, "Creator": "roughfem-figures"}


class MissingColumnError(RuntimeError):
    def __init__(self, table: str, column: str, subcommand: str):
        super().__init__(
            f"{table} has no column {column!r}; expected output of the "
            f"`roughfem {subcommand}` subcommand"
        )


@dataclass
class Table:
    name: str
    columns: list
    rows: list  # rows of strings

    def column(self, name: str, subcommand: str, as_float: bool = True):
        if name not in self.columns:
            raise MissingColumnError(self.name, name, subcommand)
        idx = self.columns.index(name)
        vals = [row[idx] for row in self.rows]
        return [float(v) for v in vals] if as_float else vals


class RunDir:
    """A completed experiment directory: config.toml plus CSV tables."""

    def __init__(self, path):
        self.path = Path(path)
        if not (self.path / "config.toml").exists():
            raise FileNotFoundError(f"{self.path} is not a run directory (no config.toml)")
        with open(self.path / "config.toml", "rb") as f:
            self.config = tomllib.load(f)

    @property
    def kind(self) -> str:
        return self.config["experiment"]["kind"]

    def has(self, name: str) -> bool:
        return (self.path / f"{name}.csv").exists()

    def table(self, name: str) -> Table:
        file = self.path / f"{name}.csv"
        if not file.exists():
            raise FileNotFoundError(f"{file} not found in the run directory")
        with open(file, newline="") as f:
            reader = csv.reader(f)
            columns = next(reader)
            rows = list(reader)
        return Table(name, columns, rows)

    def summary(self) -> dict:
        table = self.table("summary")
        return {row[0]: row[1] for row in table.rows}


def save(fig, out_base: Path) -> list[Path]:
    """Write PNG and SVG siblings with pinned metadata; no timestamps."""
    written = []
    png = out_base.with_suffix(".png")
    fig.savefig(png, metadata=dict(PNG_METADATA))
    written.append(png)
    svg = out_base.with_suffix(".svg")
    fig.savefig(svg, metadata=dict(SVG_METADATA))
    written.append(svg)
    plt.close(fig)
    return written
