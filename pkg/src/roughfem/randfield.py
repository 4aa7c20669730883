"""Gaussian sample paths and 2D lognormal fields.

1D paths (Brownian bridge, Wiener) are drawn on dyadic grids by exact Levy
midpoint bisection / increment summation, so the finite-dimensional law at
the grid points is exact with no truncation parameter.  2D stationary
fields with exponential covariance are drawn by circulant embedding: the
covariance is periodized onto an enlarged torus, diagonalized by FFT, and
sampled exactly provided the embedding spectrum is nonnegative.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .fem1d import Coefficient
from .rng import RngStream


@dataclass(frozen=True)
class DyadicGrid:
    """Equispaced grid x_j = j * 2**-level on [0,1]."""

    level: int

    def __post_init__(self):
        if self.level < 1:
            raise ValueError("grid level must be >= 1")

    @property
    def spacing(self) -> float:
        return 2.0**-self.level

    @property
    def n_points(self) -> int:
        return 2**self.level + 1

    def points(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n_points)


@dataclass
class SamplePath:
    """Values of a Gaussian process at the points of a dyadic grid."""

    grid: DyadicGrid
    values: np.ndarray
    kind: str  # "bridge" | "wiener"


def sample_brownian_bridge(level: int, rng: RngStream) -> SamplePath:
    """Standard Brownian bridge on [0,1], pinned to zero at both ends.

    Levy bisection: the midpoint of a filled span [s,t] is Normal with mean
    the average of the endpoint values and variance (t-s)/4.  Endpoints stay
    exactly zero.
    """
    grid = DyadicGrid(level)
    gen = rng.generator()
    n = 2**level
    values = np.zeros(n + 1)
    for stage in range(1, level + 1):
        step = 2 ** (level - stage)
        idx = np.arange(step, n, 2 * step)
        mean = 0.5 * (values[idx - step] + values[idx + step])
        sd = math.sqrt(2.0 ** -(stage + 1))  # span/4 with span = 2**(1-stage)
        values[idx] = mean + sd * gen.standard_normal(len(idx))
    return SamplePath(grid, values, "bridge")


def sample_wiener(level: int, rng: RngStream) -> SamplePath:
    """Standard Wiener process on [0,1]: W(0) = 0, independent increments."""
    grid = DyadicGrid(level)
    gen = rng.generator()
    increments = gen.standard_normal(2**level) * math.sqrt(grid.spacing)
    values = np.concatenate(([0.0], np.cumsum(increments)))
    return SamplePath(grid, values, "wiener")


def lognormal_of(path: SamplePath, convention: str = "left") -> Coefficient:
    """Piecewise-constant conductivity a = exp(path) on the path's grid.

    "left" uses the path value at each cell's left endpoint; "midpoint"
    uses the path's odd-indexed points as midpoints of cells one level
    coarser.  Nodal samples exp(path) are kept alongside the cell values so
    quadrature rules can evaluate the field at cell endpoints.
    """
    if not np.all(np.isfinite(path.values)):
        raise ValueError("path has non-finite values")
    node_values = np.exp(path.values)
    if not np.all(np.isfinite(node_values)):
        raise ValueError("exp(path) overflowed; path is pathological")
    if convention == "left":
        return Coefficient(path.grid.level, node_values[:-1].copy(), node_values)
    if convention == "midpoint":
        if path.grid.level < 2:
            raise ValueError("midpoint convention needs a path at level >= 2")
        return Coefficient(path.grid.level - 1, node_values[1::2].copy(), node_values[::2])
    raise ValueError(f"unknown convention {convention!r}")


@dataclass
class Field2D:
    """Stationary 2D Gaussian log-conductivity on an n-by-n cell grid.

    Cell centers sit at ((i+1/2)/n, (j+1/2)/n); the log-field is mean-zero
    Gaussian with covariance sigma2 * exp(-dist/ell).
    """

    n: int
    sigma2: float
    ell: float
    log_values: np.ndarray


class EmbeddingError(RuntimeError):
    """Raised when the periodized covariance cannot be made nonnegative."""


def _embedding_spectrum(m: int, n: int, sigma2: float, ell: float) -> np.ndarray:
    lag = np.minimum(np.arange(m), m - np.arange(m)) / n
    dist = np.hypot(lag[:, None], lag[None, :])
    cov = sigma2 * np.exp(-dist / ell)
    lam = np.fft.fft2(cov).real
    return lam


def sample_field_2d_circulant(
    n: int, sigma2: float, ell: float, rng: RngStream, max_factor: int = 8
) -> Field2D:
    """Draw one exponential-covariance Gaussian field by circulant embedding.

    The covariance is wrapped onto an m x m torus, m starting at 2n and
    doubling up to max_factor * n until the FFT spectrum is nonnegative
    within tolerance: negative eigenvalues are clamped only while their
    total mass stays below 1e-6 of the positive mass (covariance error far
    below statistical resolution); a spectrum that stays genuinely negative
    raises EmbeddingError rather than being silently clipped.
    """
    if n < 1 or n & (n - 1):
        raise ValueError("n must be a power of two")
    if sigma2 <= 0.0 or ell <= 0.0:
        raise ValueError("sigma2 and ell must be positive")
    m = 2 * n
    while True:
        lam = _embedding_spectrum(m, n, sigma2, ell)
        neg_mass = -lam[lam < 0.0].sum()
        if neg_mass <= 1e-6 * lam[lam > 0.0].sum():
            break
        if m >= max_factor * n:
            raise EmbeddingError(
                f"embedding spectrum still negative at {m}x{m} "
                f"(min eigenvalue {lam.min():.3e})"
            )
        m *= 2
    lam = np.maximum(lam, 0.0)

    gen = rng.generator()
    noise = gen.standard_normal((m, m)) + 1j * gen.standard_normal((m, m))
    field = np.fft.fft2(np.sqrt(lam / (m * m)) * noise)
    # real and imaginary parts are two independent exact samples; keep one
    return Field2D(n, sigma2, ell, field.real[:n, :n].copy())


def empirical_covariance(samples: np.ndarray, pairs) -> list[tuple[float, float]]:
    """Unbiased sample covariance and its standard error for index pairs.

    `samples` is (M, P): M realizations observed at P coordinates.  For
    each (i, j) pair the estimate is the unbiased sample covariance of
    columns i and j; the standard error is the sample std of the centered
    products divided by sqrt(M).
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2 or samples.shape[0] < 2:
        raise ValueError("need a (M, P) array with M >= 2")
    m = samples.shape[0]
    centered = samples - samples.mean(axis=0)
    out = []
    for i, j in pairs:
        prod = centered[:, i] * centered[:, j]
        cov = prod.sum() / (m - 1)
        se = prod.std(ddof=1) / math.sqrt(m)
        out.append((cov, se))
    return out


def path_to_csv(path: SamplePath, file) -> None:
    writer = csv.writer(file)
    writer.writerow(["x", "value"])
    for x, v in zip(path.grid.points(), path.values):
        writer.writerow([repr(float(x)), repr(float(v))])


def field_to_csv(field: Field2D, file) -> None:
    writer = csv.writer(file)
    writer.writerow(["x", "y", "log_a"])
    centers = (np.arange(field.n) + 0.5) / field.n
    for i in range(field.n):
        for j in range(field.n):
            writer.writerow(
                [repr(float(centers[i])), repr(float(centers[j])),
                 repr(float(field.log_values[i, j]))]
            )
