"""Computable goal-oriented error estimators for P1 finite elements with
rough lognormal conductivities: exact-law path/field sampling, explicit and
assembled solvers in 1D and 2D, two-level and single-mesh Galerkin error
estimators, quadrature-error estimators, and a seeded Monte Carlo driver."""

from .rng import RngStream

__all__ = ["RngStream"]
__version__ = "0.1.0"
