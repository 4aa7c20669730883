"""P1 finite elements on the uniform right-triangle mesh of (0,1)^2.

Each grid square is split along its lower-left to upper-right diagonal;
homogeneous Dirichlet data on the whole boundary.  Conductivities are
piecewise constant per triangle (exact means of a sampled lognormal field),
so stiffness entries are exact integrals.  Two goal-oriented estimators
accompany the solves: a two-level form built from gradient differences of
nested solutions, and a single-level form built from second differences of
gradients across same-orientation neighbor triangles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from .randfield import Field2D


@dataclass
class TriMesh:
    """Uniform triangulation at spacing h = 2**-level.

    Nodes are indexed row-major: node (i, j) -> j * (n+1) + i with
    coordinates (i*h, j*h).  Triangles come in square-major order, lower
    triangle then upper: square (i, j) owns
    lower = [(i,j), (i+1,j), (i+1,j+1)] and upper = [(i,j), (i+1,j+1), (i,j+1)].
    """

    level: int
    nodes: np.ndarray  # (n_nodes, 2)
    triangles: np.ndarray  # (n_tris, 3) node indices
    boundary: np.ndarray  # bool mask over nodes

    @property
    def h(self) -> float:
        return 2.0**-self.level

    @property
    def n_side(self) -> int:
        return 2**self.level

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def area(self) -> float:
        return self.h * self.h / 2.0


def triangulate(level: int) -> TriMesh:
    """Uniform mesh; squares are ordered x-major (square (i,j) -> i*n + j)."""
    if level < 1:
        raise ValueError("mesh level must be >= 1")
    n = 2**level
    side = np.linspace(0.0, 1.0, n + 1)
    xx, yy = np.meshgrid(side, side, indexing="xy")
    nodes = np.column_stack((xx.ravel(), yy.ravel()))

    ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    base = (jj * (n + 1) + ii).ravel()  # node (i, j), squares raveled i-major
    lower = np.column_stack((base, base + 1, base + n + 2))
    upper = np.column_stack((base, base + n + 2, base + n + 1))
    triangles = np.empty((2 * n * n, 3), dtype=int)
    triangles[0::2] = lower
    triangles[1::2] = upper

    boundary = np.zeros(len(nodes), dtype=bool)
    gx = nodes[:, 0]
    gy = nodes[:, 1]
    boundary[(gx == 0.0) | (gx == 1.0) | (gy == 0.0) | (gy == 1.0)] = True
    return TriMesh(level, nodes, triangles, boundary)


def elementwise_coefficient(field: Field2D, mesh: TriMesh) -> np.ndarray:
    """Per-triangle mean of exp(log-field) over the covered fine cells.

    Fine cells are assigned to the triangle containing their midpoint;
    midpoints exactly on the diagonal go to the lower triangle.
    """
    n = mesh.n_side
    if field.n % n:
        raise ValueError("field resolution must refine the mesh")
    m = field.n // n
    if m < 1:
        raise ValueError("field resolution must refine the mesh")
    a = np.exp(field.log_values)
    # blocks[i, p, j, q]: subcell (p, q) of square (i, j); log_values is [ix, iy]
    blocks = a.reshape(n, m, n, m)
    p, q = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
    lower_mask = q <= p  # cell center below or on the local diagonal y = x
    lw = lower_mask / lower_mask.sum()
    lower_mean = np.einsum("ipjq,pq->ij", blocks, lw)
    if m > 1:
        uw = (~lower_mask) / (~lower_mask).sum()
        upper_mean = np.einsum("ipjq,pq->ij", blocks, uw)
    else:
        upper_mean = lower_mean  # single cell per square: both triangles see it
    out = np.empty(mesh.n_triangles)
    out[0::2] = lower_mean.ravel()  # squares i-major, matching triangulate
    out[1::2] = upper_mean.ravel()
    return out


@dataclass
class FemSolution2D:
    """Nodal values (zero on the boundary) plus per-triangle gradients."""

    mesh: TriMesh
    nodal: np.ndarray
    gradients: np.ndarray  # (n_tris, 2)
    sample_tag: tuple | None = None


def triangle_gradients(mesh: TriMesh, nodal: np.ndarray) -> np.ndarray:
    tri = mesh.triangles
    h = mesh.h
    v0, v1, v2 = nodal[tri[:, 0]], nodal[tri[:, 1]], nodal[tri[:, 2]]
    grads = np.empty((mesh.n_triangles, 2))
    lower = np.arange(mesh.n_triangles) % 2 == 0
    # lower: legs (i,j)->(i+1,j) along x, (i+1,j)->(i+1,j+1) along y
    grads[lower, 0] = (v1[lower] - v0[lower]) / h
    grads[lower, 1] = (v2[lower] - v1[lower]) / h
    # upper: legs (i,j)->(i,j+1) along y, (i,j+1)->(i+1,j+1)... vertices are
    # [(i,j), (i+1,j+1), (i,j+1)]: x-leg (i,j+1)->(i+1,j+1), y-leg (i,j)->(i,j+1)
    grads[~lower, 0] = (v1[~lower] - v2[~lower]) / h
    grads[~lower, 1] = (v2[~lower] - v0[~lower]) / h
    return grads


def _local_stiffness(mesh: TriMesh) -> np.ndarray:
    """Per-triangle 3x3 integrals grad(phi_a).grad(phi_b) |K| from coordinates."""
    pts = mesh.nodes[mesh.triangles]  # (T, 3, 2)
    x, y = pts[..., 0], pts[..., 1]
    b = np.stack((y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]), axis=1)
    c = np.stack((x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]), axis=1)
    area4 = 2.0 * (b[:, 0] * c[:, 1] - b[:, 1] * c[:, 0])  # 4 * signed area
    return (b[:, :, None] * b[:, None, :] + c[:, :, None] * c[:, None, :]) / area4[:, None, None]


def assemble_system(mesh: TriMesh, a_tri: np.ndarray):
    """Sparse SPD stiffness over interior nodes with exact element integrals."""
    a_tri = np.asarray(a_tri, dtype=float)
    if a_tri.shape != (mesh.n_triangles,):
        raise ValueError("need one coefficient value per triangle")
    if np.any(a_tri <= 0.0) or not np.all(np.isfinite(a_tri)):
        raise ValueError("coefficient must be strictly positive and finite")
    local = _local_stiffness(mesh)
    tri = mesh.triangles
    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    vals = (a_tri[:, None, None] * local).ravel()
    n = mesh.n_nodes
    full = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    interior = ~mesh.boundary
    return full[interior][:, interior].tocsc(), interior


def load_vector_constant(mesh: TriMesh, value: float) -> np.ndarray:
    """Exact loads int f phi_i for constant f: |K|/3 per incident triangle."""
    out = np.zeros(mesh.n_nodes)
    np.add.at(out, mesh.triangles.ravel(), value * mesh.area / 3.0)
    return out


def load_vector_point(mesh: TriMesh, x0: float, y0: float) -> np.ndarray:
    """Nodal point load (Dirac observable at a mesh node)."""
    n = mesh.n_side
    i, j = x0 * n, y0 * n
    if not (i == round(i) and j == round(j)):
        raise ValueError("point load must sit on a mesh node")
    out = np.zeros(mesh.n_nodes)
    out[int(round(j)) * (n + 1) + int(round(i))] = 1.0
    return out


def assemble_solve(
    mesh: TriMesh,
    a_tri: np.ndarray,
    load: np.ndarray,
    sample_tag: tuple | None = None,
    residual_tol: float = 1e-10,
) -> FemSolution2D:
    """Solve the Dirichlet problem; fails loudly if the residual is large."""
    matrix, interior = assemble_system(mesh, a_tri)
    rhs = load[interior]
    u_int = spsolve(matrix, rhs)
    res = np.linalg.norm(matrix @ u_int - rhs)
    scale = np.linalg.norm(rhs)
    if scale > 0.0 and res > residual_tol * scale:
        raise RuntimeError(f"solver residual {res / scale:.2e} above tolerance")
    nodal = np.zeros(mesh.n_nodes)
    nodal[interior] = u_int
    return FemSolution2D(mesh, nodal, triangle_gradients(mesh, nodal), sample_tag)


def child_triangles(coarse: TriMesh, fine: TriMesh) -> np.ndarray:
    """Indices (n_coarse_tris, 4) of the fine triangles inside each coarse one."""
    if fine.level != coarse.level + 1:
        raise ValueError("fine mesh must be the once-refined mesh")
    n = coarse.n_side
    out = np.empty((coarse.n_triangles, 4), dtype=int)
    for i in range(n):
        for j in range(n):
            sq = 2 * (i * n + j)

            def t(ii, jj, orient):  # triangle index in the fine mesh
                return 2 * ((2 * i + ii) * 2 * n + (2 * j + jj)) + orient

            # lower coarse triangle {y <= x}: lower of SW square, both of SE,
            # lower of NE; upper coarse triangle mirrors across the diagonal
            out[sq] = [t(0, 0, 0), t(1, 0, 0), t(1, 0, 1), t(1, 1, 0)]
            out[sq + 1] = [t(0, 0, 1), t(0, 1, 0), t(0, 1, 1), t(1, 1, 1)]
    return out


def _check_same_sample(*sols: FemSolution2D):
    tags = {s.sample_tag for s in sols if s.sample_tag is not None}
    if len(tags) > 1:
        raise ValueError(f"solutions come from different field samples: {tags}")


def estimator_est_2d(
    a_tri: np.ndarray,
    u_h: FemSolution2D,
    u_h2: FemSolution2D,
    lam_h: FemSolution2D,
    lam_h2: FemSolution2D,
):
    """Two-level indicator total: 0.5 h^2 sum_K a_K sum_i |d_i(du) d_i(dl)|.

    The gradient differences d_i(u_{h/2} - u_h) are constant on each of the
    four children of a coarse triangle, so the per-element factor is the
    equal-area mean over children of sum_i |d_i(du) d_i(dl)|.  Averaging the
    child gradients before multiplying would cancel the within-element
    oscillation that carries most of the error for rough conductivities.
    """
    _check_same_sample(u_h, u_h2, lam_h, lam_h2)
    mesh = u_h.mesh
    children = child_triangles(mesh, u_h2.mesh)
    du = u_h2.gradients[children] - u_h.gradients[:, None, :]  # (K, child, i)
    dl = lam_h2.gradients[children] - lam_h.gradients[:, None, :]
    per_element = np.abs(du * dl).sum(axis=2).mean(axis=1)
    terms = 0.5 * mesh.h**2 * a_tri * per_element
    return float(terms.sum()), terms


def _axis_neighbor_second_diff(mesh: TriMesh, gradients: np.ndarray) -> np.ndarray:
    """D_i^2 per triangle: forward difference of the i-gradient to the
    same-orientation neighbor one square over in axis i, divided by h.

    Border triangles without a neighbor contribute zero (one-sided cutoff).
    Returns (n_tris, 2).
    """
    n = mesh.n_side
    h = mesh.h
    out = np.zeros((mesh.n_triangles, 2))
    for orient in (0, 1):
        g = gradients[orient::2].reshape(n, n, 2)  # [i, j, component]
        d2 = np.zeros((n, n, 2))
        d2[:-1, :, 0] = (g[1:, :, 0] - g[:-1, :, 0]) / h  # x-neighbor (i + 1)
        d2[:, :-1, 1] = (g[:, 1:, 1] - g[:, :-1, 1]) / h  # y-neighbor (j + 1)
        out[orient::2] = d2.reshape(-1, 2)
    return out


def estimator_reg_2d(a_tri: np.ndarray, u_h: FemSolution2D, lam_h: FemSolution2D):
    """Single-level indicator total:
    0.5 h^2 sum_K (h^2/16) a_K sum_i |D_i^2 u * D_i^2 lam|.

    Returns (total, per-element terms, number of one-sided zero
    contributions from border triangles lacking an axis neighbor).
    """
    _check_same_sample(u_h, lam_h)
    mesh = u_h.mesh
    d2u = _axis_neighbor_second_diff(mesh, u_h.gradients)
    d2l = _axis_neighbor_second_diff(mesh, lam_h.gradients)
    terms = 0.5 * mesh.h**2 * (mesh.h**2 / 16.0) * a_tri * np.abs(d2u * d2l).sum(axis=1)
    n_zeroed = 4 * mesh.n_side  # one strip per axis and orientation
    return float(terms.sum()), terms, n_zeroed


def inject_nodal(u_h: FemSolution2D, fine_mesh: TriMesh) -> np.ndarray:
    """Evaluate a coarse P1 function at the nodes of a nested finer mesh."""
    if fine_mesh.level < u_h.mesh.level:
        raise ValueError("target mesh must be finer")
    vals = u_h.nodal
    n = u_h.mesh.n_side
    for _ in range(fine_mesh.level - u_h.mesh.level):
        grid = vals.reshape(n + 1, n + 1)  # [j, i]
        fine = np.zeros((2 * n + 1, 2 * n + 1))
        fine[::2, ::2] = grid
        fine[::2, 1::2] = 0.5 * (grid[:, :-1] + grid[:, 1:])
        fine[1::2, ::2] = 0.5 * (grid[:-1, :] + grid[1:, :])
        # square centers sit on the diagonal of each square: average its ends
        fine[1::2, 1::2] = 0.5 * (grid[:-1, :-1] + grid[1:, 1:])
        vals = fine.ravel()
        n *= 2
    return vals


def integrate_p1(mesh: TriMesh, nodal: np.ndarray) -> float:
    """Exact integral of a P1 function: area-weighted vertex means."""
    return float(nodal[mesh.triangles].mean(axis=1).sum() * mesh.area)


def reference_error_2d(u_ref: FemSolution2D, u_h: FemSolution2D) -> float:
    """E^h(1) = int (u_ref - u_h) dx via exact P1 integration on the fine mesh."""
    _check_same_sample(u_ref, u_h)
    w = u_ref.nodal - inject_nodal(u_h, u_ref.mesh)
    return integrate_p1(u_ref.mesh, w)


def energy_product(mesh: TriMesh, a_tri: np.ndarray, u: FemSolution2D, v: FemSolution2D) -> float:
    """int a grad(u) . grad(v) over the mesh (exact for per-triangle a)."""
    return float((a_tri * (u.gradients * v.gradients).sum(axis=1)).sum() * mesh.area)
