"""Per-element signed indicator bars from a 1D estimator run.

Reads the indicators_h<level>.csv dump (first sample of the run) and
draws signed local contributions across the interval, the shape that
reveals whether an observable suffers indicator cancellations.
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass
from pathlib import Path

import matplotlib.pyplot as plt

from .common import RunDir, save


@dataclass
class IndicatorFigure:
    paths: list
    h_level: int
    n_elements: int


def render(run: RunDir, out_base: Path) -> IndicatorFigure:
    h_level = run.config["params"]["h_levels"][0]
    table = run.table(f"indicators_h{h_level}")
    x = table.column("x_left", "galerkin-1d")
    vals = table.column("indicator", "galerkin-1d")

    fig, ax = plt.subplots(figsize=(6.5, 3.5))
    width = 2.0**-h_level
    ax.bar(x, vals, width=width, align="edge", edgecolor="none")
    ax.axhline(0.0, color="black", linewidth=0.8)
    ax.set_xlabel("x")
    ax.set_ylabel("element indicator")
    ax.set_title(
        f"signed local error indicators, h = 2^-{h_level}, "
        f"observable {run.config['params']['observable']}",
        fontsize=9,
    )
    paths = save(fig, out_base)
    return IndicatorFigure(paths=paths, h_level=h_level, n_elements=len(vals))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("run_dir", type=Path)
    parser.add_argument("--out", type=Path, default=None)
    args = parser.parse_args(argv)
    run = RunDir(args.run_dir)
    result = render(run, args.out or (run.path / "indicators"))
    for p in result.paths:
        print(p)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
