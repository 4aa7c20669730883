"""Log-log rate plot from a sweep run (quadrature, 2D, or rate studies).

Reads per-level aggregates from rows.csv (quadrature sweeps) or
summary.csv (mean-per-level studies) and annotates the fitted slope
re-read from fit.csv.
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass
from pathlib import Path

import matplotlib.pyplot as plt

from .common import RunDir, save


@dataclass
class RateFigure:
    paths: list
    slopes: dict
    series: dict


def render(run: RunDir, out_base: Path) -> RateFigure:
    series = {}
    errbars = {}
    if run.has("rows") and run.kind == "quadrature-1d":
        rows = run.table("rows")
        hs = [2.0**-l for l in rows.column("h_level", "quadrature-1d")]
        series["Q_hat"] = (hs, [abs(v) for v in rows.column("Q_hat", "quadrature-1d")])
        series["Qcal_hat"] = (hs, [abs(v) for v in rows.column("Qcal_hat", "quadrature-1d")])
        errbars["Q_hat"] = rows.column("sigma_M", "quadrature-1d")
        errbars["Qcal_hat"] = rows.column("sigma_M_ref", "quadrature-1d")
        xlabel = "h"
    else:
        summary = run.summary()
        prefixes = ("mean_abs_E_h", "mean_E_est_h", "mean_E_reg_h", "mean_scaled_E_h")
        for prefix in prefixes:
            levels = sorted(
                int(k[len(prefix):]) for k in summary if k.startswith(prefix)
            )
            if len(levels) >= 2:
                series[prefix.rstrip("_h")] = (
                    [2.0**-l for l in levels],
                    [abs(float(summary[f"{prefix}{l}"])) for l in levels],
                )
        xlabel = "h"
        if not series:
            raise RuntimeError(
                f"no per-level mean_* series in summary.csv of a {run.kind} run; "
                "rate plots need a sweep over at least two levels"
            )

    slopes = {}
    if run.has("fit"):
        fit = run.table("fit")
        names = fit.column("quantity", run.kind, as_float=False)
        values = fit.column("slope", run.kind)
        slopes = dict(zip(names, values))

    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    markers = ("o", "s", "^", "d")
    for (label, (xs, ys)), marker in zip(series.items(), markers):
        ax.loglog(xs, ys, marker=marker, label=label)
        if label in errbars:
            ax.errorbar(xs, ys, yerr=errbars[label], fmt="none", capsize=3)
    annotation = "; ".join(f"{k}: slope {v:.2f}" for k, v in slopes.items())
    if annotation:
        ax.set_title(annotation, fontsize=10)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("magnitude")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    paths = save(fig, out_base)
    return RateFigure(paths=paths, slopes=slopes, series=series)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("run_dir", type=Path)
    parser.add_argument("--out", type=Path, default=None,
                        help="output base name (default: <run_dir>/rate)")
    args = parser.parse_args(argv)
    run = RunDir(args.run_dir)
    result = render(run, args.out or (run.path / "rate"))
    for p in result.paths:
        print(p)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
