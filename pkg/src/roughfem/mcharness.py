"""Seeded Monte Carlo experiment driver.

Each experiment kind maps a config to per-sample rows plus summary
statistics and persists them as one directory per run: config.toml
(resolved configuration), rows.csv (per-sample records), summary.csv
(key/value aggregates), and experiment-specific extra tables (histogram,
mode products, fits, field dumps).  Sample i always draws from substream
(master seed, i), and reductions run in index order, so results are
bit-identical no matter how samples are scheduled.
"""

from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import quad

from . import estimators1d as est1
from . import fem2d as f2
from . import frequency as fq
from .fem1d import (
    Observable,
    average_coefficient,
    solve_dual_explicit,
    solve_primal_explicit,
    spacing,
)
from .quadrature import QuadratureConfig, fit_gamma, mc_quadrature_sweep
from .randfield import (
    field_to_csv,
    lognormal_of,
    path_to_csv,
    sample_brownian_bridge,
    sample_field_2d_circulant,
    sample_wiener,
)
from .rng import RngStream

OBSERVABLES = {
    "one": lambda: Observable.constant(1.0),
    "minus-one": lambda: Observable.constant(-1.0),
    "dirac": lambda: Observable.dirac(0.5),
    "cos": lambda: Observable.cosine(),
}


def parse_observable(name: str) -> Observable:
    try:
        return OBSERVABLES[name]()
    except KeyError:
        raise ValueError(
            f"unknown observable {name!r}; expected one of {sorted(OBSERVABLES)}"
        ) from None


def sample_stats(values) -> tuple[float, float, float]:
    """(mean, sigma_s, sigma_M) with the unbiased sample std."""
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        raise ValueError("need at least two values")
    sigma_s = float(values.std(ddof=1))
    return float(values.mean()), sigma_s, sigma_s / math.sqrt(values.size)


@dataclass
class ExperimentConfig:
    kind: str
    m: int
    seed: int
    out_dir: Path
    params: dict = field(default_factory=dict)
    workers: int = 1


@dataclass
class RunRecord:
    config: ExperimentConfig
    columns: list
    rows: list
    summary: dict
    exclusions: list = field(default_factory=list)
    extra_tables: dict = field(default_factory=dict)
    wall_seconds: float = 0.0


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    return '"' + str(v).replace("\\", "\\\\").replace('"', '\\"') + '"'


def write_config_toml(config: ExperimentConfig, path: Path):
    lines = ["[experiment]"]
    lines.append(f"kind = {_toml_value(config.kind)}")
    lines.append(f"m = {config.m}")
    lines.append(f"seed = {config.seed}")
    lines.append(f"workers = {config.workers}")
    lines.append("")
    lines.append("[params]")
    for k in sorted(config.params):
        lines.append(f"{k} = {_toml_value(config.params[k])}")
    path.write_text("\n".join(lines) + "\n")


def _write_csv(path: Path, columns, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(columns)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])


def persist(record: RunRecord) -> list[Path]:
    out = Path(record.config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    write_config_toml(record.config, out / "config.toml")
    written.append(out / "config.toml")
    _write_csv(out / "rows.csv", record.columns, record.rows)
    written.append(out / "rows.csv")
    summary_rows = [(k, record.summary[k]) for k in record.summary]
    _write_csv(out / "summary.csv", ["key", "value"], summary_rows)
    written.append(out / "summary.csv")
    for name, (cols, rows) in record.extra_tables.items():
        _write_csv(out / f"{name}.csv", cols, rows)
        written.append(out / f"{name}.csv")
    return written


def map_samples(fn, m: int, seed: int, workers: int = 1):
    """fn(index, RngStream) for i = 0..m-1, gathered in index order.

    Failures are collected per index instead of aborting; the caller
    decides how many are tolerable.
    """
    call = _MapCall(fn, seed)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outs = list(pool.map(call, range(m), chunksize=32))
    else:
        outs = [call(i) for i in range(m)]
    results = [None] * m
    failures = []
    for i, value, err in outs:
        if err is None:
            results[i] = value
        else:
            failures.append((i, err))
    return results, failures


class _MapCall:
    """Picklable wrapper so worker processes can run the sample function."""

    def __init__(self, fn, seed):
        self.fn = fn
        self.seed = seed

    def __call__(self, i):
        try:
            return i, self.fn(i, RngStream(self.seed, i)), None
        except Exception as exc:
            return i, None, f"{type(exc).__name__}: {exc}"


# ---------------------------------------------------------------------------
# experiment kinds


def _galerkin_1d_sample(params: dict, index: int, rng: RngStream):
    fine = params["fine_level"]
    obs = parse_observable(params["observable"])
    path = sample_brownian_bridge(fine, rng)
    a_fine = lognormal_of(path)
    u_ref = solve_primal_explicit(a_fine)
    out = []
    for h_level in params["h_levels"]:
        a_h = average_coefficient(a_fine, h_level)
        a_h2 = average_coefficient(a_fine, h_level + 1)
        u_h = solve_primal_explicit(a_h)
        u_h2 = solve_primal_explicit(a_h2)
        lam_h = solve_dual_explicit(a_h, obs)
        lam_h2 = solve_dual_explicit(a_h2, obs)
        f_tilde, elements = est1.two_level_signed(a_fine, u_h, u_h2, lam_h, lam_h2)
        f_abs = math.fsum(np.abs(elements))
        _, e_est, _ = est1.single_mesh_estimator(a_h2, u_h2, lam_h2)
        e_h = est1.reference_galerkin_error(u_ref, u_h, obs)
        out.append((h_level, e_h, f_tilde, f_abs, e_est, elements if index == 0 else None))
    return out


class _Galerkin1DSample:
    def __init__(self, params):
        self.params = params

    def __call__(self, index, rng):
        return _galerkin_1d_sample(self.params, index, rng)


def run_galerkin_1d(config: ExperimentConfig) -> RunRecord:
    params = config.params
    results, failures = map_samples(
        _Galerkin1DSample(params), config.m, config.seed, config.workers
    )
    columns = ["sample", "h_level", "observable", "E_h", "F_tilde", "F_abs", "E_est", "C"]
    rows = []
    extra = {}
    per_level = {h: ([], []) for h in params["h_levels"]}
    for i, res in enumerate(results):
        if res is None:
            continue
        for h_level, e_h, f_tilde, f_abs, e_est, elements in res:
            c = abs(e_h) / e_est if e_est > 0.0 else float("nan")
            rows.append(
                (i, h_level, params["observable"], e_h, f_tilde, f_abs, e_est, c)
            )
            per_level[h_level][0].append(e_h)
            per_level[h_level][1].append(e_est)
            if elements is not None:
                h = spacing(h_level)
                extra[f"indicators_h{h_level}"] = (
                    ["x_left", "indicator"],
                    [(j * h, v) for j, v in enumerate(elements)],
                )
    summary = {}
    zero_counts = 0
    min_signed_share = float("inf")
    signed_share = {h: [] for h in params["h_levels"]}
    for i, h_level, _, _, f_tilde, f_abs, _, _ in rows:
        if f_abs > 0.0:
            signed_share[h_level].append(abs(f_tilde) / f_abs)
    for h_level, (errs, ests) in per_level.items():
        stats = est1.ratio_statistics(np.array(errs), np.array(ests), bins=params["bins"])
        summary[f"mean_C_h{h_level}"] = stats.mean
        summary[f"std_C_h{h_level}"] = stats.std
        summary[f"sigma_M_C_h{h_level}"] = stats.std / math.sqrt(stats.n_used)
        summary[f"excluded_h{h_level}"] = stats.n_excluded
        summary[f"mean_abs_E_h{h_level}"] = float(np.mean(np.abs(errs)))
        summary[f"mean_E_est_h{h_level}"] = float(np.mean(ests))
        share = float(np.mean(signed_share[h_level])) if signed_share[h_level] else 1.0
        summary[f"mean_signed_share_h{h_level}"] = share
        min_signed_share = min(min_signed_share, share)
        zero_counts += stats.n_excluded
        if h_level == params["h_levels"][0]:
            extra["histogram"] = (
                ["bin_left", "bin_right", "density"],
                list(
                    zip(
                        stats.bin_edges[:-1].tolist(),
                        stats.bin_edges[1:].tolist(),
                        stats.density.tolist(),
                    )
                ),
            )
    if len(params["h_levels"]) >= 2:
        hs = [spacing(h) for h in params["h_levels"]]
        means = [summary[f"mean_abs_E_h{h}"] for h in params["h_levels"]]
        slope = est1.fit_loglog_slope(hs, means)
        summary["rate_slope_mean_abs_E"] = slope
        extra["fit"] = (
            ["quantity", "slope"],
            [("mean_abs_E_vs_h", slope)],
        )
    # cancellation regime: estimator zeroed on some samples, or the signed
    # two-level totals collapse far below the absolute totals (generic
    # observables keep the share above 0.8, the cosine one sits below 0.35)
    summary["cancellation_warning"] = int(zero_counts > 0 or min_signed_share < 0.5)
    return RunRecord(config, columns, rows, summary, failures, extra)


def run_frequency(config: ExperimentConfig) -> RunRecord:
    params = config.params
    fine = params["fine_level"]
    h_level = params["h_level"]
    obs = parse_observable(params["observable"])
    rng = RngStream(config.seed, 0)
    path = sample_brownian_bridge(fine, rng)
    a_fine = lognormal_of(path)
    a_h = average_coefficient(a_fine, h_level)
    u_h = solve_primal_explicit(a_h)
    lam_ref = solve_dual_explicit(a_fine, obs)
    r = fq.residual_fourier(a_fine, u_h)
    lam = fq.dual_fourier(lam_ref, h_level)
    ns, prods = fq.folded_products(r, lam)
    n_hi = params.get("fit_hi") or 2 ** (fine - 1) // 4
    # default window sits above the element-grid crossover near 1/h, where
    # the products' tail rate is identifiable; fall back to lower modes when
    # the sample grid leaves no room up there (range is recorded in fit.csv)
    n_lo = params.get("fit_lo") or max(8, 2 ** (h_level + 1))
    if 4 * n_lo > n_hi:
        n_lo = max(8, n_hi // 8)
    fit = fq.fit_decay_rate(ns, prods, n_lo, n_hi)
    n_star = params.get("n_star") or 2**h_level
    e_low, e_total = fq.split_error(r, lam, n_star)
    center = np.searchsorted(r.modes, 0)
    columns = ["n", "abs_r", "abs_lambda", "folded_product"]
    rows = [
        (int(n), abs(r.coeffs[center + n]), abs(lam.coeffs[center + n]), float(p))
        for n, p in zip(ns.tolist(), prods.tolist())
    ]
    summary = {
        "decay_exponent": fit.exponent,
        "fit_n_lo": fit.n_lo,
        "fit_n_hi": fit.n_hi,
        "fit_residual": fit.residual,
        "E_low": e_low,
        "E_total": e_total,
        "low_deficit": abs(e_low - e_total) / abs(e_total) if e_total else float("nan"),
        "n_star": n_star,
        "dft_convention": fq.DFT_CONVENTION,
    }
    extra = {
        "fit": (
            ["exponent", "n_lo", "n_hi", "residual", "convention"],
            [(fit.exponent, fit.n_lo, fit.n_hi, fit.residual, fq.DFT_CONVENTION)],
        )
    }
    return RunRecord(config, columns, rows, summary, [], extra)


def run_quadrature_1d(config: ExperimentConfig) -> RunRecord:
    params = config.params
    obs_name = params["observable"]
    cells = []
    if params["sweep"] == "h":
        for h_level in params["h_levels"]:
            cells.append(
                QuadratureConfig(
                    h_level=h_level,
                    n_sub=params["n_sub"],
                    rule=params["rule"],
                    fine_level=params["fine_level"],
                    dual_mode=params["dual_mode"],
                    observable=parse_observable(obs_name),
                )
            )
    else:  # "k": fixed h, k over n_sub_list
        for n_sub in params["n_sub_list"]:
            cells.append(
                QuadratureConfig(
                    h_level=params["h_levels"][0],
                    n_sub=n_sub,
                    rule=params["rule"],
                    fine_level=params["fine_level"],
                    dual_mode=params["dual_mode"],
                    observable=parse_observable(obs_name),
                )
            )
    runs = mc_quadrature_sweep(cells, config.m, config.seed)
    columns = ["h_level", "k_level", "rule", "M", "Q_hat", "sigma_M", "Qcal_hat", "sigma_M_ref"]
    rows = [
        (
            r.config.h_level,
            r.config.k_level,
            r.config.rule,
            r.m,
            r.q_hat,
            r.sigma_m,
            r.qcal_hat,
            r.sigma_m_ref,
        )
        for r in runs
    ]
    summary = {}
    for r in runs:
        tag = f"h{r.config.h_level}_k{r.config.k_level}"
        summary[f"Q_hat_{tag}"] = r.q_hat
        summary[f"sigma_M_{tag}"] = r.sigma_m
        summary[f"Qcal_hat_{tag}"] = r.qcal_hat
        summary[f"sigma_M_ref_{tag}"] = r.sigma_m_ref
    extra = {}
    if params["sweep"] == "h" and len(runs) >= 2:
        hs = [spacing(r.config.h_level) for r in runs]
        slope_est = est1.fit_loglog_slope(hs, [r.q_hat for r in runs])
        slope_ref = est1.fit_loglog_slope(hs, [r.qcal_hat for r in runs])
        summary["slope_Q_hat_vs_h"] = slope_est
        summary["slope_Qcal_vs_h"] = slope_ref
        extra["fit"] = (
            ["quantity", "slope"],
            [("Q_hat_vs_h", slope_est), ("Qcal_vs_h", slope_ref)],
        )
    elif params["sweep"] == "k" and len(runs) >= 3:
        ks = [r.config.k for r in runs]
        gamma = fit_gamma(ks, [r.q_hat for r in runs])
        summary["gamma"] = gamma
        extra["fit"] = (["quantity", "slope"], [("Q_hat_vs_k", gamma)])
    return RunRecord(config, columns, rows, summary, [], extra)


class _Galerkin2DSample:
    def __init__(self, params):
        self.params = params

    def __call__(self, index, rng):
        p = self.params
        field = sample_field_2d_circulant(2 ** p["field_level"], p["sigma2"], p["ell"], rng)
        tag = (rng.seed, rng.substream_index)
        levels = sorted(set(p["h_levels"]) | {h + 1 for h in p["h_levels"]} | {p["ref_level"]})
        sols = {}
        coeffs = {}
        for lvl in levels:
            mesh = f2.triangulate(lvl)
            a_tri = f2.elementwise_coefficient(field, mesh)
            load = f2.load_vector_constant(mesh, 1.0)
            sols[lvl] = f2.assemble_solve(mesh, a_tri, load, sample_tag=tag)
            coeffs[lvl] = a_tri
        u_ref = sols[p["ref_level"]]
        out = []
        for h_level in p["h_levels"]:
            u_h, u_h2 = sols[h_level], sols[h_level + 1]
            # f = g = 1: the dual problem coincides with the primal one
            e_est, _ = f2.estimator_est_2d(coeffs[h_level], u_h, u_h2, u_h, u_h2)
            e_reg, _, _ = f2.estimator_reg_2d(coeffs[h_level], u_h, u_h)
            e_h = f2.reference_error_2d(u_ref, u_h)
            out.append((h_level, e_h, e_est, e_reg))
        return out


def run_galerkin_2d(config: ExperimentConfig) -> RunRecord:
    params = config.params
    results, failures = map_samples(
        _Galerkin2DSample(params), config.m, config.seed, config.workers
    )
    columns = ["sample", "h_level", "E_h", "E_est", "E_reg"]
    rows = []
    per_level = {h: ([], [], []) for h in params["h_levels"]}
    for i, res in enumerate(results):
        if res is None:
            continue
        for h_level, e_h, e_est, e_reg in res:
            rows.append((i, h_level, e_h, e_est, e_reg))
            per_level[h_level][0].append(e_h)
            per_level[h_level][1].append(e_est)
            per_level[h_level][2].append(e_reg)
    summary = {}
    for h_level, (eh, ee, er) in per_level.items():
        eh, ee, er = map(np.array, (eh, ee, er))
        summary[f"mean_abs_E_h{h_level}"] = float(np.mean(np.abs(eh)))
        summary[f"mean_E_est_h{h_level}"] = float(ee.mean())
        summary[f"mean_E_reg_h{h_level}"] = float(er.mean())
        ratio = eh / ee
        summary[f"min_ratio_h{h_level}"] = float(ratio.min())
        summary[f"max_ratio_h{h_level}"] = float(ratio.max())
        summary[f"frac_reg_below_est_h{h_level}"] = float(np.mean(er < ee))
    extra = {}
    if len(params["h_levels"]) >= 2:
        hs = [spacing(h) for h in params["h_levels"]]
        means = [summary[f"mean_abs_E_h{h}"] for h in params["h_levels"]]
        slope = est1.fit_loglog_slope(hs, means)
        summary["rate_slope_mean_abs_E"] = slope
        extra["fit"] = (["quantity", "slope"], [("mean_abs_E_vs_h", slope)])
    return RunRecord(config, columns, rows, summary, failures, extra)


def galerkin_limit_value(observable: Observable) -> float:
    """Mesh-limit of h**-1 E[(g, u - u_h)] for the Wiener-coefficient problem.

    Integrating (g, u - u_h) by parts gives -int G (1/a - 1/a_h) dx, whose
    cellwise expectations factor into E[exp(-W(x))] = exp(x/2) times the
    h**2/6 average gap, so the limit is -int_0^1 exp(x/2) G(x) / 6 dx,
    evaluated here by numerical quadrature.
    """
    val, _ = quad(lambda x: math.exp(0.5 * x) * observable.primitive(x) / 6.0, 0.0, 1.0)
    return -val


class _ExpectedRateSample:
    def __init__(self, params):
        self.params = params

    def __call__(self, index, rng):
        p = self.params
        obs = parse_observable(p["observable"])
        path = sample_wiener(p["fine_level"], rng)
        a_fine = lognormal_of(path)
        u_ref = solve_primal_explicit(a_fine)
        out = []
        for h_level in p["h_levels"]:
            a_h = average_coefficient(a_fine, h_level)
            u_h = solve_primal_explicit(a_h)
            out.append((h_level, est1.reference_galerkin_error(u_ref, u_h, obs)))
        return out


def run_expected_rate(config: ExperimentConfig) -> RunRecord:
    params = config.params
    obs = parse_observable(params["observable"])
    results, failures = map_samples(
        _ExpectedRateSample(params), config.m, config.seed, config.workers
    )
    columns = ["sample", "h_level", "E_h", "scaled_E"]
    rows = []
    per_level = {h: [] for h in params["h_levels"]}
    for i, res in enumerate(results):
        if res is None:
            continue
        for h_level, e_h in res:
            rows.append((i, h_level, e_h, e_h / spacing(h_level)))
            per_level[h_level].append(e_h)
    limit = galerkin_limit_value(obs)
    summary = {"limit_value": limit}
    for h_level, errs in per_level.items():
        scaled = np.array(errs) / spacing(h_level)
        mean, _, sigma_m = sample_stats(scaled)
        summary[f"mean_scaled_E_h{h_level}"] = mean
        summary[f"sigma_M_scaled_E_h{h_level}"] = sigma_m
    extra = {}
    if len(params["h_levels"]) >= 2:
        hs = [spacing(h) for h in params["h_levels"]]
        means = [abs(np.mean(per_level[h])) for h in params["h_levels"]]
        slope = est1.fit_loglog_slope(hs, means)
        summary["rate_slope_mean_E"] = slope
        extra["fit"] = (["quantity", "slope"], [("mean_E_vs_h", slope)])
    return RunRecord(config, columns, rows, summary, failures, extra)


def run_sample_field(config: ExperimentConfig) -> RunRecord:
    params = config.params
    rng = RngStream(config.seed, 0)
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if params["dim"] == 2:
        field = sample_field_2d_circulant(
            2 ** params["field_level"], params["sigma2"], params["ell"], rng
        )
        with open(out / "field.csv", "w", newline="") as f:
            field_to_csv(field, f)
        columns = ["artifact"]
        rows = [("field.csv",)]
    else:
        kind = params.get("path_kind", "bridge")
        sampler = sample_brownian_bridge if kind == "bridge" else sample_wiener
        path = sampler(params["field_level"], rng)
        with open(out / "path.csv", "w", newline="") as f:
            path_to_csv(path, f)
        columns = ["artifact"]
        rows = [("path.csv",)]
    return RunRecord(config, columns, rows, {"written": rows[0][0]}, [])


EXPERIMENTS = {
    "galerkin-1d": run_galerkin_1d,
    "frequency": run_frequency,
    "quadrature-1d": run_quadrature_1d,
    "galerkin-2d": run_galerkin_2d,
    "expected-rate": run_expected_rate,
    "sample-field": run_sample_field,
}


def run_experiment(config: ExperimentConfig) -> RunRecord:
    """Execute one experiment, persist its artifacts, and return the record.

    Per-sample failures are recorded as exclusions; the run aborts only if
    more than 1% of samples fail.
    """
    if config.kind not in EXPERIMENTS:
        raise ValueError(f"unknown experiment kind {config.kind!r}")
    start = time.perf_counter()
    record = EXPERIMENTS[config.kind](config)
    record.wall_seconds = time.perf_counter() - start
    if len(record.exclusions) > 0.01 * config.m:
        raise RuntimeError(
            f"{len(record.exclusions)} of {config.m} samples failed: "
            f"{record.exclusions[:3]}"
        )
    record.summary["n_exclusions"] = len(record.exclusions)
    persist(record)
    return record
