"""Error-to-estimator ratio histogram with mean/std annotations.

Bars come from histogram.csv (already density-normalized); the annotated
mu and sigma are read verbatim from summary.csv, never recomputed.
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass
from pathlib import Path

import matplotlib.pyplot as plt

from .common import MissingColumnError, RunDir, save


@dataclass
class HistogramFigure:
    paths: list
    mu: float
    sigma: float
    h_level: int


def render(run: RunDir, out_base: Path) -> HistogramFigure:
    table = run.table("histogram")
    left = table.column("bin_left", "galerkin-1d")
    right = table.column("bin_right", "galerkin-1d")
    density = table.column("density", "galerkin-1d")

    h_level = run.config["params"]["h_levels"][0]
    summary = run.summary()
    try:
        mu = float(summary[f"mean_C_h{h_level}"])
        sigma = float(summary[f"std_C_h{h_level}"])
    except KeyError as missing:
        raise MissingColumnError("summary.csv", str(missing), "galerkin-1d") from None

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    widths = [r - l for l, r in zip(left, right)]
    ax.bar(left, density, width=widths, align="edge", edgecolor="black", linewidth=0.4)
    ax.axvline(mu, color="black", linestyle="--", linewidth=1.0)
    ax.set_title(f"mu = {mu!r}, sigma = {sigma!r}", fontsize=9)
    ax.set_xlabel("|error| / estimator")
    ax.set_ylabel("density")
    paths = save(fig, out_base)
    return HistogramFigure(paths=paths, mu=mu, sigma=sigma, h_level=h_level)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("run_dir", type=Path)
    parser.add_argument("--out", type=Path, default=None)
    args = parser.parse_args(argv)
    run = RunDir(args.run_dir)
    result = render(run, args.out or (run.path / "histogram"))
    for p in result.paths:
        print(p)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
