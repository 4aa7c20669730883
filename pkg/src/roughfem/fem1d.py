"""1D piecewise-linear finite elements on dyadic grids of [0,1].

The primal model problem is -(a u')' = 0 with u(0) = 0 and unit flux
a(1)u'(1) = 1; the dual problem is -(a l')' = g with l(0) = 0 and zero
flux at 1.  Because test and trial derivatives are elementwise constant,
the exact Galerkin solution only sees the elementwise average of the
conductivity, which gives the closed-form representations

    u_h' = 1 / a_h,        l_h' = G_h / a_h,

with G the primitive of g vanishing at 1 and G_h its per-element mean.
Both the closed form and a generic tridiagonal assembly are provided so
each can serve as an oracle for the other.

All coefficients are piecewise constant on a dyadic grid: `level` L means
spacing 2**-L with cells [j*2**-L, (j+1)*2**-L).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

TWO_PI = 2.0 * math.pi


def spacing(level: int) -> float:
    return 2.0 ** (-level)


def _cumsum0(increments: np.ndarray) -> np.ndarray:
    """Cumulative sum with a leading zero, accumulated in extended precision.

    Nodal values are prefix sums of up to 2**18 element increments; plain
    float64 accumulation can drift above 1e-12 there, extended precision
    keeps it below 1e-14.
    """
    out = np.empty(len(increments) + 1)
    out[0] = 0.0
    out[1:] = np.cumsum(increments.astype(np.longdouble)).astype(np.float64)
    return out


@dataclass
class Coefficient:
    """Piecewise-constant positive conductivity on a dyadic grid.

    `values[j]` is the value on cell j.  `node_values`, when present, are
    point samples of the underlying field at the grid nodes (length
    2**level + 1); they let quadrature rules evaluate the field at cell
    endpoints, which for a left-endpoint piecewise-constant coefficient
    are not recoverable from the cell values alone (the right endpoint).
    """

    level: int
    values: np.ndarray
    node_values: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (2**self.level,):
            raise ValueError(
                f"expected {2**self.level} cells at level {self.level}, "
                f"got {self.values.shape}"
            )
        if self.node_values is not None:
            self.node_values = np.asarray(self.node_values, dtype=float)
            if self.node_values.shape != (2**self.level + 1,):
                raise ValueError("node_values must have 2**level + 1 entries")

    @property
    def spacing(self) -> float:
        return spacing(self.level)

    @property
    def n_cells(self) -> int:
        return 2**self.level

    def require_positive(self):
        if not np.all(np.isfinite(self.values)) or np.any(self.values <= 0.0):
            raise ValueError("coefficient must be strictly positive and finite")

    def point_values(self, x: np.ndarray) -> np.ndarray:
        """Field value at arbitrary dyadic points.

        Nodes report the nodal sample when available (else the left cell's
        value, matching the left-endpoint convention); interior points
        report the value of the containing cell.
        """
        x = np.asarray(x, dtype=float)
        t = x * self.n_cells
        idx = np.floor(t).astype(int)
        on_node = t == idx
        idx_cell = np.clip(idx, 0, self.n_cells - 1)
        out = self.values[idx_cell]
        if self.node_values is not None:
            out = np.where(on_node, self.node_values[np.where(on_node, idx, 0)], out)
        return out


def coefficient_from_function(f, level: int) -> Coefficient:
    """Sample a smooth conductivity on a dyadic grid (left-endpoint cells)."""
    nodes = np.linspace(0.0, 1.0, 2**level + 1)
    node_values = np.asarray(f(nodes), dtype=float)
    return Coefficient(level, node_values[:-1].copy(), node_values)


def average_coefficient(fine: Coefficient, level: int) -> Coefficient:
    """Exact per-cell arithmetic mean of a finer nested coefficient.

    Averaging is done by repeated pairwise halving, so one halving step
    reproduces a_h = (a_{h/2}^+ + a_{h/2}^-)/2 bit-exactly, a relation the
    single-mesh estimator relies on.
    """
    if level > fine.level:
        raise ValueError("target grid must be no finer than the source grid")
    v = fine.values
    for _ in range(fine.level - level):
        v = 0.5 * (v[0::2] + v[1::2])
    return Coefficient(level, v)


QUADRATURE_RULES = ("midpoint", "trapezoid", "forward_euler")


def quadrature_coefficient(
    fine: Coefficient, h_level: int, k_level: int, rule: str
) -> Coefficient:
    """Quadrature approximation a_{h,k} of the element averages.

    Each h-element value is the mean over its k-subcells of point
    evaluations of the field: left endpoints for forward Euler, subcell
    midpoints for midpoint, endpoint averages for (composite) trapezoid.
    """
    if rule not in QUADRATURE_RULES:
        raise ValueError(f"unknown rule {rule!r}; expected one of {QUADRATURE_RULES}")
    if k_level < h_level:
        raise ValueError("quadrature grid must be nested in the element grid")
    if k_level > fine.level + 1:
        raise ValueError("quadrature grid is finer than the sampled field resolves")
    n_k = 2**k_level
    k = spacing(k_level)
    left = np.arange(n_k) * k
    if rule == "forward_euler":
        samples = fine.point_values(left)
    elif rule == "midpoint":
        samples = fine.point_values(left + 0.5 * k)
    else:
        samples = 0.5 * (fine.point_values(left) + fine.point_values(left + k))
    per_h = samples.reshape(2**h_level, -1)
    return Coefficient(h_level, per_h.mean(axis=1))


@dataclass
class Observable:
    """Linear observable (u, g) with a closed-form primitive G(x) = -int_x^1 g.

    Supported kinds: a constant g = value; a Dirac mass at a node-aligned
    x0; g = cos(2*pi*x); and a tabulated piecewise-constant g.  `scale`
    multiplies g (and hence G) without changing the kind.
    """

    kind: str  # "constant" | "dirac" | "cosine" | "tabulated"
    value: float = 1.0
    x0: float = 0.5
    table: np.ndarray | None = None
    table_level: int | None = None
    scale: float = 1.0

    @staticmethod
    def constant(value: float = 1.0) -> "Observable":
        return Observable("constant", value=value)

    @staticmethod
    def dirac(x0: float = 0.5) -> "Observable":
        return Observable("dirac", x0=x0)

    @staticmethod
    def cosine() -> "Observable":
        return Observable("cosine")

    @staticmethod
    def tabulated(values: np.ndarray, level: int) -> "Observable":
        values = np.asarray(values, dtype=float)
        if values.shape != (2**level,):
            raise ValueError("tabulated g needs 2**level cell values")
        return Observable("tabulated", table=values, table_level=level)

    def negated(self) -> "Observable":
        return Observable(self.kind, self.value, self.x0, self.table,
                          self.table_level, -self.scale)

    @property
    def label(self) -> str:
        base = {
            "constant": f"const({self.value:g})",
            "dirac": f"dirac({self.x0:g})",
            "cosine": "cos2pi",
            "tabulated": "tabulated",
        }[self.kind]
        return base if self.scale == 1.0 else f"{self.scale:g}*{base}"

    def primitive(self, x: np.ndarray) -> np.ndarray:
        """G(x) = -int_x^1 g(s) ds; G(1) = 0 by construction."""
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            out = self.value * (x - 1.0)
        elif self.kind == "dirac":
            out = np.where(x < self.x0, -1.0, 0.0)
        elif self.kind == "cosine":
            out = np.sin(TWO_PI * x) / TWO_PI
        else:
            nodes = self._table_primitive_nodes()
            out = np.interp(x, np.linspace(0.0, 1.0, len(nodes)), nodes)
        return self.scale * out

    def _table_primitive_nodes(self) -> np.ndarray:
        delta = spacing(self.table_level)
        suffix = np.concatenate((np.cumsum(self.table[::-1])[::-1], [0.0]))
        return -delta * suffix

    def cell_means(self, level: int) -> np.ndarray:
        """Exact per-cell means of G on the level grid."""
        n = 2**level
        h = spacing(level)
        edges = np.linspace(0.0, 1.0, n + 1)
        if self.kind == "constant":
            mids = 0.5 * (edges[:-1] + edges[1:])
            means = self.value * (mids - 1.0)
        elif self.kind == "dirac":
            pos = self.x0 * n
            m = round(pos)
            if not math.isclose(pos, m, abs_tol=1e-12):
                raise ValueError(
                    f"dirac at {self.x0} is not node-aligned at level {level}"
                )
            means = np.where(np.arange(n) < m, -1.0, 0.0)
        elif self.kind == "cosine":
            c = np.cos(TWO_PI * edges)
            means = (c[:-1] - c[1:]) / (TWO_PI**2 * 2.0 * h)
        else:
            if level > self.table_level:
                raise ValueError("requested grid is finer than the tabulated g")
            nodes = self._table_primitive_nodes()
            means = 0.5 * (nodes[:-1] + nodes[1:])  # G is linear per table cell
            for _ in range(self.table_level - level):
                means = 0.5 * (means[0::2] + means[1::2])
        return self.scale * means


def primitive_G(observable: Observable, level: int) -> np.ndarray:
    """Tabulate G at the nodes of a dyadic grid."""
    return observable.primitive(np.linspace(0.0, 1.0, 2**level + 1))


@dataclass
class FemSolution:
    """P1 solution: nodal values plus elementwise-constant derivative."""

    level: int
    nodal: np.ndarray
    derivs: np.ndarray

    @property
    def spacing(self) -> float:
        return spacing(self.level)

    @property
    def n_cells(self) -> int:
        return 2**self.level

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.interp(x, np.linspace(0.0, 1.0, len(self.nodal)), self.nodal)

    def derivs_on(self, level: int) -> np.ndarray:
        """Element derivatives replicated onto a finer nested grid."""
        if level < self.level:
            raise ValueError("target grid must be at least as fine")
        return np.repeat(self.derivs, 2 ** (level - self.level))


def _solution_from_derivs(level: int, derivs: np.ndarray) -> FemSolution:
    nodal = _cumsum0(derivs * spacing(level))
    return FemSolution(level, nodal, derivs)


def solve_primal_explicit(a_h: Coefficient) -> FemSolution:
    """Model problem via the closed form u_h' = 1/a_h."""
    a_h.require_positive()
    return _solution_from_derivs(a_h.level, 1.0 / a_h.values)


def solve_dual_explicit(a_h: Coefficient, observable: Observable) -> FemSolution:
    """Dual problem via the closed form l_h' = G_h / a_h."""
    a_h.require_positive()
    g_means = observable.cell_means(a_h.level)
    return _solution_from_derivs(a_h.level, g_means / a_h.values)


def _load_vector(observable: Observable, level: int, n_dofs: int) -> np.ndarray:
    """Exact loads int g phi_i dx via differences of the cell means of G."""
    g_means = observable.cell_means(level)
    n = 2**level
    load = np.empty(n_dofs)
    interior = min(n_dofs, n - 1)
    load[:interior] = g_means[1 : interior + 1] - g_means[:interior]
    if n_dofs == n:  # free right node of the model problem
        load[-1] = -g_means[-1]
    return load


def assemble_solve_tridiagonal(
    coefficient: Coefficient,
    load: Observable | None = None,
    boundary: str = "model_problem",
    flux_at_one: float | None = None,
) -> FemSolution:
    """Generic P1 Galerkin solve with exact element integrals.

    boundary "model_problem" fixes u(0) = 0 and applies the weak flux at 1
    (default 1.0 when no body load is given, matching the model problem);
    "homogeneous_dirichlet" fixes both ends.  The load may be any
    Observable acting as the body force density.
    """
    coefficient.require_positive()
    if boundary not in ("model_problem", "homogeneous_dirichlet"):
        raise ValueError(f"unknown boundary {boundary!r}")
    a = coefficient.values
    level = coefficient.level
    n = coefficient.n_cells
    h = coefficient.spacing
    if boundary == "model_problem":
        n_dofs = n
        if flux_at_one is None:
            flux_at_one = 1.0 if load is None else 0.0
    else:
        n_dofs = n - 1
        if flux_at_one:
            raise ValueError("flux makes no sense with Dirichlet ends")

    diag = np.empty(n_dofs)
    diag[: n - 1] = (a[: n - 1] + a[1:n]) / h
    if n_dofs == n:
        diag[-1] = a[-1] / h
    upper = -a[1:n_dofs] / h  # coupling through the shared cell

    rhs = np.zeros(n_dofs)
    if load is not None:
        rhs += _load_vector(load, level, n_dofs)
    if boundary == "model_problem" and flux_at_one:
        rhs[-1] += flux_at_one

    ab = np.zeros((3, n_dofs))
    ab[0, 1:] = upper
    ab[1, :] = diag
    ab[2, :-1] = upper
    if np.any(diag <= 0.0):
        raise ValueError("assembled system is not positive definite")
    interior = solve_banded((1, 1), ab, rhs)

    nodal = np.zeros(n + 1)
    nodal[1 : n_dofs + 1] = interior
    return FemSolution(level, nodal, np.diff(nodal) / h)


def solution_to_csv(solution: FemSolution, file) -> None:
    """CSV rows (x, value, derivative on the element right of x).

    The last node has no element to its right; its derivative field is
    empty.
    """
    import csv

    writer = csv.writer(file)
    writer.writerow(["x", "value", "deriv_right"])
    nodes = np.linspace(0.0, 1.0, len(solution.nodal))
    for j, (x, v) in enumerate(zip(nodes, solution.nodal)):
        deriv = repr(float(solution.derivs[j])) if j < len(solution.derivs) else ""
        writer.writerow([repr(float(x)), repr(float(v)), deriv])


def solve_dual_assembled(a_h: Coefficient, observable: Observable) -> FemSolution:
    """Assembly-route oracle for solve_dual_explicit.

    The explicit dual follows the convention a_h l_h' = G_h, which pairs
    test derivatives against +G; assembling that variational statement
    means loading with -int g phi_i, hence the negated observable.
    """
    return assemble_solve_tridiagonal(a_h, load=observable.negated())


def apply_bilinear_form(a_fine: Coefficient, w_derivs_fine: np.ndarray, level: int):
    """Residual pairing int a w' phi_i' dx against every hat of a coarse mesh.

    Returns the vector over interior nodes i = 1..2**level - 1 plus the free
    right node, computed by exact summation over fine cells.
    """
    n = 2**level
    cell_int = (a_fine.values * w_derivs_fine * a_fine.spacing).reshape(n, -1).sum(axis=1)
    out = np.empty(n)
    out[: n - 1] = (cell_int[:-1] - cell_int[1:]) / spacing(level)
    out[-1] = cell_int[-1] / spacing(level)
    return out
