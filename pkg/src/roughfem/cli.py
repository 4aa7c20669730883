"""Command-line front end: one subcommand per experiment family.

Mesh sizes are named by dyadic level (`--h 10` means spacing 2**-10), so
non-dyadic inputs are impossible by construction.  Defaults are desk-scale
(minutes); `--paper-scale` switches to full-resolution settings that can
run for hours.  Precedence: built-in defaults, then `--config` TOML
overrides, then explicit flags.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .mcharness import OBSERVABLES, ExperimentConfig, run_experiment

DESK_DEFAULTS = {
    "galerkin-1d": dict(m=1000, h_levels=[10], fine_level=14, observable="one", bins=40),
    "frequency": dict(m=1, h_level=10, fine_level=16, observable="one",
                      fit_lo=0, fit_hi=0, n_star=0),
    "quadrature-1d": dict(m=2**11, h_levels=[5, 7, 9], n_sub=0, n_sub_list=[3, 4, 5, 6],
                          rule="trapezoid", fine_level=18, dual_mode="half_k",
                          sweep="h", observable="one"),
    "galerkin-2d": dict(m=20, h_levels=[3, 4, 5], field_level=9, ref_level=7,
                        sigma2=1.0, ell=0.2),
    "expected-rate": dict(m=4000, h_levels=[8], fine_level=14, observable="minus-one"),
    "sample-field": dict(m=1, dim=2, field_level=9, sigma2=1.0, ell=0.2,
                         path_kind="bridge"),
}

PAPER_SCALE = {
    "galerkin-1d": dict(m=10**4, fine_level=17),
    "frequency": dict(fine_level=20),
    "quadrature-1d": dict(m=2**13, fine_level=22, h_levels=[5, 6, 7, 8, 9, 10, 11, 12, 13]),
    "galerkin-2d": dict(field_level=10, ref_level=10, m=100),
    "expected-rate": dict(m=10**4, fine_level=17),
    "sample-field": dict(field_level=10),
}


def _level(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer dyadic level, got {text!r}")
    if not 1 <= value <= 26:
        raise argparse.ArgumentTypeError(f"dyadic level {value} outside [1, 26]")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    if value <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    if value <= 0.0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="roughfem",
        description="Monte Carlo error-estimation experiments for P1 finite "
        "elements with rough lognormal conductivities.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=20240, help="master RNG seed")
        p.add_argument("--M", type=_positive_int, default=None, help="number of MC samples")
        p.add_argument("--out", type=Path, default=None,
                       help="run directory (default: $ROUGHFEM_OUT or ./runs, plus a per-run name)")
        p.add_argument("--config", type=Path, default=None,
                       help="TOML file whose [params]/m/seed override the defaults")
        p.add_argument("--workers", type=_positive_int, default=1,
                       help="parallel sample workers (results identical to serial)")
        p.add_argument("--paper-scale", action="store_true",
                       help="full-resolution settings; documented as long-running")

    p = sub.add_parser("galerkin-1d",
                       help="two-level/single-mesh estimators, error-to-estimator "
                            "ratio statistics, indicator dumps, rate fits")
    common(p)
    p.add_argument("--h", type=_level, nargs="+", default=None, dest="h_levels",
                   help="element levels (one or more; sweep fits a rate)")
    p.add_argument("--fine", type=_level, default=None, dest="fine_level",
                   help="sample-grid/reference level")
    p.add_argument("--observable", choices=sorted(OBSERVABLES), default=None)
    p.add_argument("--bins", type=_positive_int, default=None, help="histogram bins")

    p = sub.add_parser("frequency",
                       help="mode-products of the residual and dual remainder, "
                            "decay-rate fit, low-frequency split")
    common(p)
    p.add_argument("--h", type=_level, default=None, dest="h_level")
    p.add_argument("--fine", type=_level, default=None, dest="fine_level")
    p.add_argument("--observable", choices=sorted(OBSERVABLES), default=None)
    p.add_argument("--fit-lo", type=_positive_int, default=None,
                   help="lowest mode of the decay fit (default: 2/h)")
    p.add_argument("--fit-hi", type=_positive_int, default=None,
                   help="highest mode of the decay fit (default: N_max/4)")
    p.add_argument("--n-star", type=_positive_int, default=None,
                   help="low/high split frequency (default: 1/h)")

    p = sub.add_parser("quadrature-1d",
                       help="quadrature-error estimator and reference error; "
                            "h sweep at fixed k/h, or k sweep at fixed h for a decay fit")
    common(p)
    p.add_argument("--sweep", choices=["h", "k"], default=None)
    p.add_argument("--h", type=_level, nargs="+", default=None, dest="h_levels",
                   help="element levels (sweep=h) or the single level (sweep=k)")
    p.add_argument("--nsub", type=int, default=None, dest="n_sub",
                   help="k = h * 2**-nsub (sweep=h)")
    p.add_argument("--nsub-list", type=int, nargs="+", default=None, dest="n_sub_list",
                   help="k offsets swept at fixed h (sweep=k)")
    p.add_argument("--rule", choices=["midpoint", "trapezoid", "forward_euler"], default=None)
    p.add_argument("--fine", type=_level, default=None, dest="fine_level")
    p.add_argument("--dual", choices=["half_k", "reference"], default=None, dest="dual_mode")
    p.add_argument("--observable", choices=sorted(OBSERVABLES), default=None)

    p = sub.add_parser("galerkin-2d",
                       help="2D lognormal-field solves with two-level and "
                            "second-difference estimators against a reference error")
    common(p)
    p.add_argument("--h", type=_level, nargs="+", default=None, dest="h_levels")
    p.add_argument("--field-level", type=_level, default=None)
    p.add_argument("--ref-level", type=_level, default=None)
    p.add_argument("--sigma2", type=_positive_float, default=None)
    p.add_argument("--ell", type=_positive_float, default=None)

    p = sub.add_parser("expected-rate",
                       help="Wiener-coefficient scaled-error means against the "
                            "closed-form mesh limit")
    common(p)
    p.add_argument("--h", type=_level, nargs="+", default=None, dest="h_levels")
    p.add_argument("--fine", type=_level, default=None, dest="fine_level")
    p.add_argument("--observable", choices=sorted(OBSERVABLES), default=None)

    p = sub.add_parser("sample-field",
                       help="dump one field (2D) or path (1D) sample as CSV")
    common(p)
    p.add_argument("--dim", type=int, choices=[1, 2], default=None)
    p.add_argument("--level", type=_level, default=None, dest="field_level")
    p.add_argument("--sigma2", type=_positive_float, default=None)
    p.add_argument("--ell", type=_positive_float, default=None)
    p.add_argument("--path-kind", choices=["bridge", "wiener"], default=None)

    return parser


def resolve(args: argparse.Namespace) -> ExperimentConfig:
    kind = args.command
    params = dict(DESK_DEFAULTS[kind])
    m = params.pop("m")
    seed = args.seed
    if args.paper_scale:
        scaled = dict(PAPER_SCALE[kind])
        m = scaled.pop("m", m)
        params.update(scaled)
    if args.config is not None:
        with open(args.config, "rb") as f:
            overrides = tomllib.load(f)
        exp = overrides.get("experiment", {})
        m = exp.get("m", m)
        seed = exp.get("seed", seed)
        for key, value in overrides.get("params", {}).items():
            if key not in params:
                raise SystemExit(f"config key {key!r} not valid for {kind}")
            params[key] = value
    for key in params:
        value = getattr(args, key, None)
        if value is not None:
            params[key] = value
    if args.M is not None:
        m = args.M
    out = args.out
    if out is None:
        root = Path(os.environ.get("ROUGHFEM_OUT", "runs"))
        out = root / f"{kind}-seed{seed}"
    return ExperimentConfig(kind=kind, m=m, seed=seed, out_dir=out,
                            params=params, workers=args.workers)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    config = resolve(args)
    print(f"experiment: {config.kind}")
    print(f"M = {config.m}, seed = {config.seed}, workers = {config.workers}")
    for key in sorted(config.params):
        print(f"  {key} = {config.params[key]}")
    try:
        record = run_experiment(config)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if record.summary.get("cancellation_warning"):
        print(
            "warning: indicator cancellations detected (signed estimator "
            "totals far below the absolute totals, or zero-estimator samples "
            "excluded); the estimator is unreliable for this observable",
            file=sys.stderr,
        )
    print(f"run completed in {record.wall_seconds:.2f}s; artifacts:")
    out = Path(config.out_dir)
    for name in sorted(p.name for p in out.iterdir() if p.suffix in (".csv", ".toml")):
        print(f"  {out / name}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
