"""Heatmap of a sampled 2D log-conductivity field.

Reads field.csv (x, y, log_a on cell centers) from a sample-field run and
renders it on the unit square with a colorbar.
"""

from __future__ import annotations

import argparse
import math
from dataclasses import dataclass
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np

from .common import RunDir, save


@dataclass
class HeatmapFigure:
    paths: list
    n: int


def render(run: RunDir, out_base: Path) -> HeatmapFigure:
    table = run.table("field")
    xs = table.column("x", "sample-field")
    ys = table.column("y", "sample-field")
    vals = table.column("log_a", "sample-field")
    n = int(round(math.sqrt(len(vals))))
    if n * n != len(vals):
        raise RuntimeError("field.csv does not hold a square grid")
    # rows are written x-major: consecutive entries share x and sweep y
    grid = np.array(vals).reshape(n, n)  # [ix, iy]

    fig, ax = plt.subplots(figsize=(5.2, 4.4))
    edges = np.linspace(0.0, 1.0, n + 1)
    mesh = ax.pcolormesh(edges, edges, grid.T, shading="flat")
    fig.colorbar(mesh, ax=ax, label="log a")
    ax.set_xlim(0.0, 1.0)
    ax.set_ylim(0.0, 1.0)
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    paths = save(fig, out_base)
    return HeatmapFigure(paths=paths, n=n)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("run_dir", type=Path)
    parser.add_argument("--out", type=Path, default=None)
    args = parser.parse_args(argv)
    run = RunDir(args.run_dir)
    result = render(run, args.out or (run.path / "heatmap"))
    for p in result.paths:
        print(p)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
