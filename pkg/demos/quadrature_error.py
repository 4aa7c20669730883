#!/usr/bin/env python3
"""Quadrature error and its telescoped estimator.

Replacing exact element averages by a k-point quadrature perturbs the
observable by (g, u_h - u_{h,k}).  A single telescoping level,
(a_{h,k} - a_{h,k/2}), weighted by the discrete solutions, estimates it;
both decay like h when k = h.  Signs matter: the absolute-value variant
overshoots by an order of magnitude.
"""

import math

import numpy as np

from roughfem.quadrature import QuadratureConfig, mc_quadrature_sweep, pathwise_quadrature_estimator
from roughfem.fem1d import Observable, quadrature_coefficient, solve_dual_explicit, solve_primal_explicit
from roughfem.randfield import lognormal_of, sample_brownian_bridge
from roughfem.rng import RngStream

M, FINE = 512, 16
configs = [
    QuadratureConfig(h_level=h, n_sub=0, rule="trapezoid", fine_level=FINE)
    for h in (5, 6, 7, 8)
]
runs = mc_quadrature_sweep(configs, M, seed=12)

print(f"trapezoid rule, k = h, M = {M}:")
print(f"{'h':>8} {'Q_hat':>12} {'sigma_M':>10} {'Qcal_hat':>12} {'sigma_M':>10}")
for r in runs:
    print(
        f"2^-{r.config.h_level:<5} {r.q_hat:>12.4e} {r.sigma_m:>10.1e}"
        f" {r.qcal_hat:>12.4e} {r.sigma_m_ref:>10.1e}"
    )
hs = [2.0**-c.h_level for c in configs]
slope = np.polyfit(np.log(hs), np.log([abs(r.q_hat) for r in runs]), 1)[0]
print(f"estimator decay in h: slope {slope:.2f} (the reference error decays alike)")

print("\ntelescoping: level sums equal the long difference exactly")
a_fine = lognormal_of(sample_brownian_bridge(12, RngStream(3, 1)))
h_level = 5
coeffs = {k: quadrature_coefficient(a_fine, h_level, k, "midpoint") for k in range(5, 10)}
u = solve_primal_explicit(coeffs[5])
lam = solve_dual_explicit(coeffs[6], Observable.constant(1.0))
parts = [
    pathwise_quadrature_estimator(coeffs[k], coeffs[k + 1], u, lam)[0] for k in range(5, 9)
]
whole, _ = pathwise_quadrature_estimator(coeffs[5], coeffs[9], u, lam)
print(f"  sum of 4 level terms: {math.fsum(parts):.10e}")
print(f"  single long term:     {whole:.10e}")

signed, _ = pathwise_quadrature_estimator(coeffs[5], coeffs[6], u, lam)
absval, _ = pathwise_quadrature_estimator(coeffs[5], coeffs[6], u, lam, absolute=True)
print(f"\nsigned vs absolute-value estimator on one path: {signed:.2e} vs {absval:.2e}")
print("taking absolute values discards the cancellations that make the")
print("signed version sharp, so it is too large to be useful.")
