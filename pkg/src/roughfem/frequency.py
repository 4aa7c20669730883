"""Fourier study of the Galerkin error functional on the unit interval.

The error functional pairs the rough part of the residual, R = a' u_h',
with the dual interpolation remainder lam - pi_h(lam).  Both are sampled
on the fine grid and transformed with the unit-interval convention

    c_n = (1/N) sum_j f(x_j) exp(-2 pi i n j / N),   n in [-N/2, N/2),

under which sum_n c_n(f) conj(c_n(g)) equals the discrete inner product
(1/N) sum_j f_j g_j exactly (Parseval), so the mode-space split of the
error functional can be cross-checked against physical space at round-off
level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fem1d import Coefficient, FemSolution

DFT_CONVENTION = "c_n = (1/N) sum_j f(j/N) e^{-2 pi i n j/N}, modes [-N/2, N/2)"


@dataclass
class FourierSeries:
    """Two-sided spectrum of a real signal sampled on the fine grid."""

    modes: np.ndarray  # integer frequencies, ascending
    coeffs: np.ndarray  # complex, aligned with modes
    fine_level: int

    @property
    def n_max(self) -> int:
        return int(self.modes.max())

    def coeff(self, n: int) -> complex:
        return self.coeffs[np.searchsorted(self.modes, n)]


def transform(samples: np.ndarray, fine_level: int) -> FourierSeries:
    samples = np.asarray(samples, dtype=float)
    n = len(samples)
    if n != 2**fine_level:
        raise ValueError("need exactly 2**fine_level samples")
    coeffs = np.fft.fftshift(np.fft.fft(samples)) / n
    modes = np.fft.fftshift(np.fft.fftfreq(n, d=1.0 / n)).astype(int)
    return FourierSeries(modes, coeffs, fine_level)


def residual_samples(a_fine: Coefficient, u_h: FemSolution) -> np.ndarray:
    """R = a' u_h' on the fine grid: forward differences of the field times
    the element derivative, one value per fine cell.

    The jump and boundary parts of the full residual pair to zero against
    lam - pi_h(lam) and are excluded by construction.  The forward
    difference at the last cell uses the nodal sample at 1 when available.
    """
    if a_fine.level <= u_h.level:
        raise ValueError("field grid must be finer than the element grid")
    if a_fine.node_values is not None:
        ext = a_fine.node_values[1:]
    else:
        ext = np.append(a_fine.values[1:], a_fine.values[-1])
    da = (ext - a_fine.values) / a_fine.spacing
    return da * u_h.derivs_on(a_fine.level)


def residual_fourier(a_fine: Coefficient, u_h: FemSolution) -> FourierSeries:
    return transform(residual_samples(a_fine, u_h), a_fine.level)


def dual_remainder_samples(lam_ref: FemSolution, h_level: int) -> np.ndarray:
    """lam - pi_h(lam) at the fine nodes (left endpoints of fine cells).

    pi_h is the nodal interpolant onto the h-mesh; the remainder vanishes
    at 0 and 1, so its periodic extension is continuous.
    """
    if lam_ref.level <= h_level:
        raise ValueError("reference dual must live on a finer grid")
    ratio = 2 ** (lam_ref.level - h_level)
    coarse = lam_ref.nodal[::ratio]
    interp = np.repeat(coarse[:-1], ratio) + np.tile(
        np.arange(ratio) / ratio, 2**h_level
    ) * np.repeat(np.diff(coarse), ratio)
    return lam_ref.nodal[:-1] - interp


def dual_fourier(lam_ref: FemSolution, h_level: int) -> FourierSeries:
    return transform(dual_remainder_samples(lam_ref, h_level), lam_ref.level)


def pair_sum(r: FourierSeries, lam: FourierSeries, mode_filter=None) -> float:
    """sum_n r_n conj(lam_n), optionally restricted to |n| < n_star."""
    if not np.array_equal(r.modes, lam.modes):
        raise ValueError("incompatible mode ranges")
    prod = r.coeffs * np.conj(lam.coeffs)
    if mode_filter is not None:
        prod = prod[mode_filter(r.modes)]
    total = complex(prod.sum())
    return total.real


def split_error(r: FourierSeries, lam: FourierSeries, n_star: int):
    """(E_low, E_total): partial pairing below n_star and over all modes.

    n_star = n_max + 1 means the full range, including the unpaired
    negative Nyquist bin of the even-length transform.
    """
    if n_star > r.n_max + 1:
        raise ValueError(f"n_star = {n_star} exceeds available modes ({r.n_max})")
    e_total = pair_sum(r, lam)
    if n_star == r.n_max + 1:
        return e_total, e_total
    e_low = pair_sum(r, lam, lambda n: np.abs(n) < n_star)
    return e_low, e_total


def physical_pairing(r_samples: np.ndarray, lam_samples: np.ndarray) -> float:
    """Discrete inner product (1/N) sum R_j L_j; equals the full mode sum."""
    if len(r_samples) != len(lam_samples):
        raise ValueError("sample grids differ")
    return float(np.dot(r_samples, lam_samples)) / len(r_samples)


def folded_products(r: FourierSeries, lam: FourierSeries, n_max: int | None = None):
    """p_n = |r_n lam_n| + |r_-n lam_-n| for n = 1..n_max."""
    if not np.array_equal(r.modes, lam.modes):
        raise ValueError("incompatible mode ranges")
    n_max = n_max or r.n_max
    prod = np.abs(r.coeffs * lam.coeffs)
    center = np.searchsorted(r.modes, 0)
    ns = np.arange(1, n_max + 1)
    return ns, prod[center + ns] + prod[center - ns]


@dataclass
class DecayFit:
    """Fitted power-law exponent of the folded mode products."""

    exponent: float
    n_lo: int
    n_hi: int
    residual: float  # rms residual of the log-log fit


def fit_decay_rate(ns: np.ndarray, products: np.ndarray, n_lo: int, n_hi: int) -> DecayFit:
    """Least-squares slope of log(products) vs log(n) on [n_lo, n_hi]."""
    mask = (ns >= n_lo) & (ns <= n_hi)
    if mask.sum() < 8:
        raise ValueError("need at least 8 modes in the fit range")
    x = np.log(ns[mask].astype(float))
    y = products[mask]
    if np.any(y <= 0.0):
        raise ValueError("folded products must be positive over the fit range")
    y = np.log(y)
    slope, intercept = np.polyfit(x, y, 1)
    resid = math.sqrt(np.mean((y - (slope * x + intercept)) ** 2))
    return DecayFit(exponent=-float(slope), n_lo=n_lo, n_hi=n_hi, residual=resid)


def default_fit_range(fine_level: int) -> tuple[int, int]:
    """[8, N_max/4]: skips boundary-artifact modes and aliasing-prone ones."""
    return 8, 2 ** (fine_level - 1) // 4


def bound_from_alpha(alpha: float, c: float, c0: float, h: float):
    """Closed-form error bound and low/total ratio implied by mode decay.

    For products decaying like n**(-2*alpha) with constant c, and
    interpolation constant c0, the bound is
    2*(c0*c**(3-2a)/(3-2a) + c**(1-2a)/(2a-1)) * h**(2a-1) and the
    low-frequency share of the total is 1/(1 + 1/(c0*c**2)) at alpha = 1.
    """
    if not 0.5 < alpha < 1.5:
        raise ValueError("alpha must lie in (1/2, 3/2)")
    if c <= 0.0 or c0 <= 0.0 or h <= 0.0:
        raise ValueError("constants and h must be positive")
    bound = 2.0 * (
        c0 * c ** (3.0 - 2.0 * alpha) / (3.0 - 2.0 * alpha)
        + c ** (1.0 - 2.0 * alpha) / (2.0 * alpha - 1.0)
    ) * h ** (2.0 * alpha - 1.0)
    low_total = 1.0 / (1.0 + 1.0 / (c0 * c * c))
    return bound, low_total
