"""Quadrature-error experiments for the 1D model problem.

Replacing exact element averages a_h by a quadrature approximation a_{h,k}
on a sub-mesh of size k = h * 2**-n perturbs the solution; the observable
error (g, u_h - u_{h,k}) satisfies the exact pathwise identity

    (g, u_h - u_{h,k}) = -sum_K h (a_{h,k} - a_h)(K) u_{h,k}'(K) l_h'(K),

with l_h' = G_h / a_h (f = 0 kills the load remainder).  Telescoping
(a_{h,k} - a_h) over quadrature levels motivates the signed single-level
estimator built from (a_{h,k} - a_{h,k/2}); its expectation decays like
k**gamma.  Estimator values are reported on the error's sign convention,
i.e. as estimates of (g, u_h - u_{h,k}).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fem1d import (
    Coefficient,
    FemSolution,
    Observable,
    average_coefficient,
    quadrature_coefficient,
    solve_dual_explicit,
    solve_primal_explicit,
    spacing,
)
from .randfield import lognormal_of, sample_brownian_bridge
from .rng import RngStream


@dataclass
class QuadratureConfig:
    """One quadrature experiment cell: mesh level, sub-mesh offset, rule."""

    h_level: int
    n_sub: int = 0  # k = h * 2**-n_sub
    rule: str = "trapezoid"
    fine_level: int = 18  # sample grid; doubles as the near-exact baseline
    dual_mode: str = "half_k"  # "half_k" (practical) or "reference"
    observable: Observable = field(default_factory=lambda: Observable.constant(1.0))

    def __post_init__(self):
        if self.n_sub < 0:
            raise ValueError("n_sub must be >= 0")
        if self.k_level + 1 > self.fine_level + 1:
            raise ValueError("k/2 must not be finer than the sample grid")
        if self.dual_mode not in ("half_k", "reference"):
            raise ValueError(f"unknown dual_mode {self.dual_mode!r}")

    @property
    def k_level(self) -> int:
        return self.h_level + self.n_sub

    @property
    def k(self) -> float:
        return spacing(self.k_level)


def pathwise_quadrature_estimator(
    a_hk: Coefficient,
    a_hk2: Coefficient,
    u_hk: FemSolution,
    lam: FemSolution,
    absolute: bool = False,
):
    """Signed estimator of (g, u_h - u_{h,k}) with per-element terms.

    Computes -sum_K h (a_{h,k} - a_{h,k/2}) u_{h,k}' lam'; the minus sign
    converts the dual convention l' = G_h / a_h into an estimate carried on
    the error's sign.  `absolute` sums |terms| instead, which grossly
    overestimates and exists to demonstrate that.
    """
    if not (a_hk.level == a_hk2.level == u_hk.level == lam.level):
        raise ValueError("estimator inputs must share the element grid")
    h = a_hk.spacing
    terms = -h * (a_hk.values - a_hk2.values) * u_hk.derivs * lam.derivs
    if absolute:
        terms = np.abs(terms)
    return math.fsum(terms), terms


def reference_quadrature_error(
    u_baseline: FemSolution, u_hk: FemSolution, observable: Observable
) -> float:
    """(g, u_h - u_{h,k}) by exact integration on the shared element grid."""
    if u_baseline.level != u_hk.level:
        raise ValueError("solutions must share the element grid")
    g_means = observable.cell_means(u_hk.level)
    w_derivs = u_baseline.derivs - u_hk.derivs
    return -float(np.dot(w_derivs, g_means)) * u_hk.spacing


def _sample_pipeline(config: QuadratureConfig, rng: RngStream):
    """One path -> (estimator value, reference error value)."""
    path = sample_brownian_bridge(config.fine_level, rng)
    a_fine = lognormal_of(path)
    a_exact = average_coefficient(a_fine, config.h_level)
    a_hk = quadrature_coefficient(a_fine, config.h_level, config.k_level, config.rule)
    a_hk2 = quadrature_coefficient(
        a_fine, config.h_level, config.k_level + 1, config.rule
    )
    u_hk = solve_primal_explicit(a_hk)
    if config.dual_mode == "half_k":
        lam = solve_dual_explicit(a_hk2, config.observable)
    else:
        lam = solve_dual_explicit(a_exact, config.observable)
    q_est, _ = pathwise_quadrature_estimator(a_hk, a_hk2, u_hk, lam)
    u_h = solve_primal_explicit(a_exact)
    q_ref = reference_quadrature_error(u_h, u_hk, config.observable)
    return q_est, q_ref


@dataclass
class QuadratureRun:
    """MC aggregates for one (h, k, rule) cell."""

    config: QuadratureConfig
    m: int
    q_hat: float
    sigma_m: float
    qcal_hat: float
    sigma_m_ref: float
    estimator_samples: np.ndarray
    reference_samples: np.ndarray


def mc_quadrature(config: QuadratureConfig, m: int, seed: int) -> QuadratureRun:
    """Monte Carlo mean of estimator and reference error over substreams."""
    if m < 2:
        raise ValueError("need at least two samples")
    master = RngStream(seed)
    est = np.empty(m)
    ref = np.empty(m)
    for i in range(m):
        est[i], ref[i] = _sample_pipeline(config, master.substream(i))
    return QuadratureRun(
        config=config,
        m=m,
        q_hat=float(est.mean()),
        sigma_m=float(est.std(ddof=1) / math.sqrt(m)),
        qcal_hat=float(ref.mean()),
        sigma_m_ref=float(ref.std(ddof=1) / math.sqrt(m)),
        estimator_samples=est,
        reference_samples=ref,
    )


def mc_quadrature_sweep(configs, m: int, seed: int):
    """Coupled Monte Carlo over several configs sharing path samples.

    Every config must use the same fine level; sample i feeds all cells, so
    level-to-level comparisons see the same randomness.
    """
    fine = {c.fine_level for c in configs}
    if len(fine) != 1:
        raise ValueError("sweep configs must share the sample grid")
    master = RngStream(seed)
    est = np.empty((len(configs), m))
    ref = np.empty((len(configs), m))
    for i in range(m):
        rng = master.substream(i)
        path = sample_brownian_bridge(configs[0].fine_level, rng)
        a_fine = lognormal_of(path)
        for j, c in enumerate(configs):
            a_exact = average_coefficient(a_fine, c.h_level)
            a_hk = quadrature_coefficient(a_fine, c.h_level, c.k_level, c.rule)
            a_hk2 = quadrature_coefficient(a_fine, c.h_level, c.k_level + 1, c.rule)
            u_hk = solve_primal_explicit(a_hk)
            if c.dual_mode == "half_k":
                lam = solve_dual_explicit(a_hk2, c.observable)
            else:
                lam = solve_dual_explicit(a_exact, c.observable)
            est[j, i], _ = pathwise_quadrature_estimator(a_hk, a_hk2, u_hk, lam)
            u_h = solve_primal_explicit(a_exact)
            ref[j, i] = reference_quadrature_error(u_h, u_hk, c.observable)
    runs = []
    for j, c in enumerate(configs):
        runs.append(
            QuadratureRun(
                config=c,
                m=m,
                q_hat=float(est[j].mean()),
                sigma_m=float(est[j].std(ddof=1) / math.sqrt(m)),
                qcal_hat=float(ref[j].mean()),
                sigma_m_ref=float(ref[j].std(ddof=1) / math.sqrt(m)),
                estimator_samples=est[j],
                reference_samples=ref[j],
            )
        )
    return runs


def fit_gamma(ks, q_hats) -> float:
    """Least-squares slope of log|Q_hat| against log k.

    The estimator means must keep one sign across levels; a sign change
    makes the fitted rate meaningless and is rejected.
    """
    ks = np.asarray(ks, dtype=float)
    q_hats = np.asarray(q_hats, dtype=float)
    if len(ks) < 3:
        raise ValueError("need at least three quadrature levels")
    signs = np.sign(q_hats)
    if np.any(signs == 0.0) or len(set(signs.tolist())) > 1:
        raise ValueError("estimator means change sign across levels; fit unreliable")
    return float(np.polyfit(np.log(ks), np.log(np.abs(q_hats)), 1)[0])


def wiener_average_identity(
    h_level: int, m: int, rng: RngStream, fine_level: int = 12, chunk: int = 20000
):
    """MC estimate of E[int_0^h (1/a - 1/a_h) dx] for a = exp(W).

    The expectation equals h**2/6 up to O(h**5/2).  W is sampled at spacing
    2**-fine_level on [0, h] (left-endpoint piecewise-constant model).
    Returns (estimate, sigma_m).
    """
    if fine_level <= h_level:
        raise ValueError("sub-grid must be finer than h")
    h = spacing(h_level)
    n_sub = 2 ** (fine_level - h_level)
    delta = spacing(fine_level)
    gen = rng.generator()
    vals = []
    done = 0
    while done < m:
        take = min(chunk, m - done)
        dw = gen.standard_normal((take, n_sub)) * math.sqrt(delta)
        w = np.cumsum(dw, axis=1) - dw  # left endpoints: W(0) = 0
        a = np.exp(w)
        int_inv = delta * (1.0 / a).sum(axis=1)
        a_h = a.mean(axis=1)
        vals.append(int_inv - h / a_h)
        done += take
    vals = np.concatenate(vals)
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(m))
