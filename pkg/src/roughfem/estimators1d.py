"""Two-level and single-mesh Galerkin error estimators for the 1D model problem.

The two-level functional integrates a * (u_{h/2}-u_h)' * (l_{h/2}-l_h)'
exactly over the fine sample grid.  For the model problem the same number
has a single-mesh representation: per coarse element,

    (h^3 / 16) * a_star * D2u_{h/2} * D2l_{h/2},

where a_star is the harmonic mean of the two averaged half-cell
conductivities and D2 the second difference of the half-grid derivatives.
The identity is exact (not asymptotic), which makes each side a round-off
level oracle for the other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fem1d import Coefficient, FemSolution, Observable, spacing


def _check_nesting(u_h: FemSolution, u_h2: FemSolution, a_fine: Coefficient):
    if u_h2.level != u_h.level + 1:
        raise ValueError("second solution must live on the once-refined mesh")
    if a_fine.level < u_h2.level:
        raise ValueError("sample grid must be at least as fine as the h/2 mesh")


def two_level_elements(
    a_fine: Coefficient,
    u_h: FemSolution,
    u_h2: FemSolution,
    lam_h: FemSolution,
    lam_h2: FemSolution,
) -> np.ndarray:
    """Signed per-element integrals of a (u_{h/2}-u_h)' (l_{h/2}-l_h)'.

    The integrand is piecewise constant on the sample grid, so per-element
    summation of a * du * dl * delta is the exact integral.
    """
    _check_nesting(u_h, u_h2, a_fine)
    _check_nesting(lam_h, lam_h2, a_fine)
    if lam_h.level != u_h.level:
        raise ValueError("primal and dual must share the coarse mesh")
    fine = a_fine.level
    du = u_h2.derivs_on(fine) - u_h.derivs_on(fine)
    dl = lam_h2.derivs_on(fine) - lam_h.derivs_on(fine)
    cellwise = a_fine.values * du * dl * a_fine.spacing
    return cellwise.reshape(u_h.n_cells, -1).sum(axis=1)


def two_level_signed(a_fine, u_h, u_h2, lam_h, lam_h2):
    """F_tilde(h): signed two-level total with per-element breakdown."""
    elements = two_level_elements(a_fine, u_h, u_h2, lam_h, lam_h2)
    return math.fsum(elements), elements


def two_level_abs(a_fine, u_h, u_h2, lam_h, lam_h2):
    """F(h): per-element absolute values summed.

    For the model problem the integrand keeps one sign inside each coarse
    element, so per-element absolute values agree with integrating |.|.
    """
    elements = two_level_elements(a_fine, u_h, u_h2, lam_h, lam_h2)
    return math.fsum(np.abs(elements)), np.abs(elements)


def harmonic_mean_pairs(a_h2: Coefficient) -> np.ndarray:
    """a_star per coarse element: 2 / (1/a^+ + 1/a^-) of the half cells."""
    minus = a_h2.values[0::2]
    plus = a_h2.values[1::2]
    return 2.0 / (1.0 / plus + 1.0 / minus)


def single_mesh_estimator(
    a_h2: Coefficient, u_h2: FemSolution, lam_h2: FemSolution
) -> tuple[float, float, np.ndarray]:
    """Single-mesh representation: (signed sum, E_est, per-element terms).

    a_h2 must be the exact elementwise average of the sampled conductivity
    on the h/2 grid; the signed sum then reproduces the two-level
    functional exactly, and E_est sums the absolute per-element terms.
    """
    a_h2.require_positive()
    if u_h2.level != a_h2.level or lam_h2.level != a_h2.level:
        raise ValueError("solutions and coefficient must share the h/2 grid")
    h = spacing(a_h2.level - 1)
    half = spacing(a_h2.level)
    a_star = harmonic_mean_pairs(a_h2)
    d2u = (u_h2.derivs[1::2] - u_h2.derivs[0::2]) / half
    d2l = (lam_h2.derivs[1::2] - lam_h2.derivs[0::2]) / half
    terms = (h**3 / 16.0) * a_star * d2u * d2l
    return math.fsum(terms), math.fsum(np.abs(terms)), terms


def reference_galerkin_error(
    u_ref: FemSolution, u_h: FemSolution, observable: Observable
) -> float:
    """E^h(g) = (g, u_ref - u_h) by exact per-element integration.

    With w := u_ref - u_h piecewise linear on the reference grid and G the
    exact primitive of g, integration by parts gives
    (g, w) = -sum_j w'_j * int_{cell j} G, which covers every supported
    observable (the Dirac case reduces to the nodal difference).
    """
    if u_ref.level < u_h.level:
        raise ValueError("reference solution must be on the finer mesh")
    fine = u_ref.level
    w_derivs = u_ref.derivs - u_h.derivs_on(fine)
    g_means = observable.cell_means(fine)
    return -float(np.dot(w_derivs, g_means)) * spacing(fine)


@dataclass
class RatioStats:
    """Sample statistics of C = |E^h| / E_est^h across Monte Carlo draws."""

    mean: float
    std: float
    bin_edges: np.ndarray
    density: np.ndarray
    n_used: int
    n_excluded: int
    ratios: np.ndarray = field(repr=False, default=None)


def ratio_statistics(
    errors: np.ndarray, estimators: np.ndarray, bins: int = 40
) -> RatioStats:
    """Mean, std, and a density-normalized histogram of |E| / E_est.

    Samples with a vanishing estimator (possible through cancellation) are
    excluded and counted.
    """
    errors = np.asarray(errors, dtype=float)
    estimators = np.asarray(estimators, dtype=float)
    keep = estimators > 0.0
    ratios = np.abs(errors[keep]) / estimators[keep]
    if len(ratios) < 2:
        raise ValueError("fewer than two usable samples")
    density, edges = np.histogram(ratios, bins=bins, density=True)
    return RatioStats(
        mean=float(ratios.mean()),
        std=float(ratios.std(ddof=1)),
        bin_edges=edges,
        density=density,
        n_used=int(keep.sum()),
        n_excluded=int((~keep).sum()),
        ratios=ratios,
    )


def level_ratio(f_2h: float, f_h: float) -> float:
    """Plain quotient F_tilde(2h) / F_tilde(h)."""
    if f_h == 0.0:
        raise ZeroDivisionError("two-level functional vanished at level h")
    return f_2h / f_h


def fit_loglog_slope(x: np.ndarray, y: np.ndarray) -> float:
    """Least-squares slope of log|y| against log x."""
    x = np.asarray(x, dtype=float)
    y = np.abs(np.asarray(y, dtype=float))
    if len(x) < 2 or np.any(y == 0.0):
        raise ValueError("need >= 2 points with nonzero values")
    slope = np.polyfit(np.log(x), np.log(y), 1)[0]
    return float(slope)
