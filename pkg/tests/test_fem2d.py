import math

import numpy as np
import pytest

from roughfem import fem2d as f2
from roughfem.estimators1d import fit_loglog_slope
from roughfem.randfield import Field2D, sample_field_2d_circulant
from roughfem.rng import RngStream


def smooth_field(n=2**8):
    cx = (np.arange(n) + 0.5) / n
    return Field2D(n, 1.0, 1.0, 0.2 * cx[:, None] + 0.1 * cx[None, :])


def solve_for(field, level, load_value=1.0, tag=None):
    mesh = f2.triangulate(level)
    a_tri = f2.elementwise_coefficient(field, mesh)
    load = f2.load_vector_constant(mesh, load_value)
    return mesh, a_tri, f2.assemble_solve(mesh, a_tri, load, sample_tag=tag)


class TestMesh:
    def test_counts_level_one(self):
        m = f2.triangulate(1)
        assert m.n_nodes == 9 and m.n_triangles == 8

    def test_counts_level_two(self):
        m = f2.triangulate(2)
        assert m.n_nodes == 25 and m.n_triangles == 32

    def test_euler_characteristic(self):
        m = f2.triangulate(3)
        edges = set()
        for tri in m.triangles:
            for a, b in ((0, 1), (1, 2), (2, 0)):
                edges.add(frozenset((tri[a], tri[b])))
        assert m.n_nodes - len(edges) + m.n_triangles == 1  # disk topology

    def test_interior_edges_shared_twice(self):
        m = f2.triangulate(2)
        count = {}
        for tri in m.triangles:
            for a, b in ((0, 1), (1, 2), (2, 0)):
                e = frozenset((tri[a], tri[b]))
                count[e] = count.get(e, 0) + 1
        on_boundary = lambda e: all(m.boundary[v] for v in e)
        for e, c in count.items():
            assert c == 2 or (c == 1 and on_boundary(e))

    def test_invalid_level(self):
        with pytest.raises(ValueError):
            f2.triangulate(0)

    def test_gradients_reproduce_linears(self):
        m = f2.triangulate(3)
        for coeffs in ((1.0, 0.0), (0.0, 1.0), (0.3, -0.7)):
            vals = coeffs[0] * m.nodes[:, 0] + coeffs[1] * m.nodes[:, 1]
            g = f2.triangle_gradients(m, vals)
            assert np.allclose(g, coeffs, atol=1e-13)


class TestElementwiseCoefficient:
    def test_constant_field(self):
        field = Field2D(16, 1.0, 1.0, np.zeros((16, 16)))
        mesh = f2.triangulate(2)
        assert np.allclose(f2.elementwise_coefficient(field, mesh), 1.0)

    def test_half_domain_constant(self):
        logs = np.zeros((16, 16))
        logs[:8, :] = 0.5  # x < 1/2 carries log value 0.5
        field = Field2D(16, 1.0, 1.0, logs)
        mesh = f2.triangulate(1)
        a = f2.elementwise_coefficient(field, mesh)
        # both triangles of the left-bottom square lie in the x < 1/2 half
        assert math.isclose(a[0], math.exp(0.5), rel_tol=1e-12)
        assert math.isclose(a[1], math.exp(0.5), rel_tol=1e-12)

    def test_matches_brute_force(self):
        field = sample_field_2d_circulant(2**5, 1.0, 0.2, RngStream(11, 0))
        mesh = f2.triangulate(3)
        coeff = f2.elementwise_coefficient(field, mesh)
        a = np.exp(field.log_values)
        m = field.n // mesh.n_side
        for tri_idx in (0, 1, 17, 30, 63):
            sq, orient = divmod(tri_idx, 2)
            i, j = divmod(sq, mesh.n_side)
            cells = []
            for p in range(m):
                for q in range(m):
                    if (orient == 0) == (q <= p):
                        cells.append(a[i * m + p, j * m + q])
            assert math.isclose(coeff[tri_idx], float(np.mean(cells)), rel_tol=1e-12)

    def test_resolution_mismatch_rejected(self):
        field = Field2D(12, 1.0, 1.0, np.zeros((12, 12)))
        with pytest.raises(ValueError):
            f2.elementwise_coefficient(field, f2.triangulate(3))


class TestAssembleSolve:
    def test_poisson_center_value(self):
        # -div grad u = 1 on the unit square: u(center) ~ 0.0736713
        mesh = f2.triangulate(6)
        a = np.ones(mesh.n_triangles)
        u = f2.assemble_solve(mesh, a, f2.load_vector_constant(mesh, 1.0))
        n = mesh.n_side
        center = u.nodal[(n // 2) * (n + 1) + n // 2]
        assert abs(center - 0.0736713) < 5e-4

    def test_energy_identity(self):
        field = sample_field_2d_circulant(2**6, 1.0, 0.2, RngStream(3, 1))
        mesh, a_tri, u = solve_for(field, 4)
        load = f2.load_vector_constant(mesh, 1.0)
        lhs = f2.energy_product(mesh, a_tri, u, u)
        rhs = float(np.dot(load, u.nodal))
        assert abs(lhs - rhs) <= 1e-8 * abs(rhs)

    def test_stiffness_symmetry(self):
        field = sample_field_2d_circulant(2**5, 1.0, 0.2, RngStream(3, 2))
        mesh = f2.triangulate(3)
        a_tri = f2.elementwise_coefficient(field, mesh)
        matrix, _ = f2.assemble_system(mesh, a_tri)
        dense = matrix.toarray()
        assert np.max(np.abs(dense - dense.T)) <= 1e-12
        assert np.all(np.linalg.eigvalsh(dense) > 0.0)

    def test_primal_dual_duality(self):
        # (g, u_h) = (f, lam_h) for point-mass g and unit f
        field = sample_field_2d_circulant(2**5, 1.0, 0.2, RngStream(3, 3))
        mesh, a_tri, u = solve_for(field, 4)
        g_load = f2.load_vector_point(mesh, 0.5, 0.5)
        lam = f2.assemble_solve(mesh, a_tri, g_load)
        f_load = f2.load_vector_constant(mesh, 1.0)
        lhs = float(np.dot(g_load, u.nodal))
        rhs = float(np.dot(f_load, lam.nodal))
        assert abs(lhs - rhs) <= 1e-8 * abs(rhs)

    def test_dual_equals_primal_for_matching_loads(self):
        field = sample_field_2d_circulant(2**5, 1.0, 0.2, RngStream(3, 4))
        mesh, a_tri, u = solve_for(field, 3)
        lam = f2.assemble_solve(mesh, a_tri, f2.load_vector_constant(mesh, 1.0))
        assert np.array_equal(u.nodal, lam.nodal)

    def test_off_node_point_load_rejected(self):
        mesh = f2.triangulate(3)
        with pytest.raises(ValueError):
            f2.load_vector_point(mesh, 0.3, 0.5)

    def test_nonpositive_coefficient_rejected(self):
        mesh = f2.triangulate(2)
        a = np.ones(mesh.n_triangles)
        a[3] = 0.0
        with pytest.raises(ValueError):
            f2.assemble_system(mesh, a)


class TestInjection:
    def test_children_partition_fine_mesh(self):
        coarse, fine = f2.triangulate(3), f2.triangulate(4)
        ch = f2.child_triangles(coarse, fine)
        assert sorted(ch.ravel().tolist()) == list(range(fine.n_triangles))

    def test_inject_preserves_function(self):
        field = smooth_field()
        _, _, u = solve_for(field, 3)
        fine_mesh = f2.triangulate(5)
        vals = f2.inject_nodal(u, fine_mesh)
        # coarse nodes keep their values; child gradients average to coarse
        assert np.allclose(vals.reshape(33, 33)[::4, ::4].ravel(), u.nodal)
        mid = f2.triangulate(4)
        vals_mid = f2.inject_nodal(u, mid)
        sol_mid = f2.FemSolution2D(mid, vals_mid, f2.triangle_gradients(mid, vals_mid))
        ch = f2.child_triangles(u.mesh, mid)
        assert np.allclose(sol_mid.gradients[ch].mean(axis=1), u.gradients, atol=1e-13)

    def test_integrate_p1_exact_for_linear(self):
        mesh = f2.triangulate(4)
        vals = 2.0 * mesh.nodes[:, 0] + mesh.nodes[:, 1]
        assert math.isclose(f2.integrate_p1(mesh, vals), 1.5, rel_tol=1e-12)


class TestEstimators2D:
    def test_matching_levels_give_zero(self):
        field = smooth_field()
        _, a_tri, u = solve_for(field, 3)
        fine_mesh = f2.triangulate(4)
        vals = f2.inject_nodal(u, fine_mesh)
        u_inj = f2.FemSolution2D(fine_mesh, vals, f2.triangle_gradients(fine_mesh, vals))
        e_est, _ = f2.estimator_est_2d(a_tri, u, u_inj, u, u_inj)
        assert e_est <= 1e-14

    def test_zero_dual_gives_zero(self):
        field = smooth_field()
        mesh, a_tri, u = solve_for(field, 3)
        _, _, u2 = solve_for(field, 4)
        zero = f2.FemSolution2D(mesh, np.zeros(mesh.n_nodes), np.zeros((mesh.n_triangles, 2)))
        zero2 = f2.FemSolution2D(
            u2.mesh, np.zeros(u2.mesh.n_nodes), np.zeros((u2.mesh.n_triangles, 2))
        )
        e_est, _ = f2.estimator_est_2d(a_tri, u, u2, zero, zero2)
        assert e_est == 0.0
        e_reg, _, _ = f2.estimator_reg_2d(a_tri, u, zero)
        assert e_reg == 0.0

    def test_linear_solution_kills_reg(self):
        mesh = f2.triangulate(4)
        vals = mesh.nodes[:, 0] * 0.5
        sol = f2.FemSolution2D(mesh, vals, f2.triangle_gradients(mesh, vals))
        e_reg, terms, zeroed = f2.estimator_reg_2d(np.ones(mesh.n_triangles), sol, sol)
        assert e_reg == 0.0 and zeroed == 4 * mesh.n_side

    def test_estimators_nonnegative(self):
        field = sample_field_2d_circulant(2**7, 1.0, 0.2, RngStream(5, 1))
        _, a_tri, u = solve_for(field, 3)
        _, _, u2 = solve_for(field, 4)
        e_est, terms = f2.estimator_est_2d(a_tri, u, u2, u, u2)
        assert e_est >= 0.0 and np.all(terms >= 0.0)
        e_reg, terms_reg, _ = f2.estimator_reg_2d(a_tri, u, u)
        assert e_reg >= 0.0 and np.all(terms_reg >= 0.0)

    def test_sample_tag_mismatch_rejected(self):
        field = smooth_field()
        _, a_tri, u = solve_for(field, 3, tag=("seed", 0))
        _, _, u2 = solve_for(field, 4, tag=("seed", 1))
        with pytest.raises(ValueError):
            f2.estimator_est_2d(a_tri, u, u2, u, u2)

    def test_reference_error_zero_for_same_solution(self):
        field = smooth_field()
        _, _, u = solve_for(field, 4)
        assert f2.reference_error_2d(u, u) == 0.0

    def test_smooth_case_rates_and_ordering(self):
        # smooth conductivity: error ~ h^2, estimator tracks it, and the
        # second-difference form stays the same order as the two-level form
        field = smooth_field()
        sols = {}
        coeffs = {}
        for lvl in (3, 4, 5, 6):
            _, coeffs[lvl], sols[lvl] = solve_for(field, lvl)
        u_ref = sols[6]
        errs = []
        for lvl in (3, 4):
            u, u2 = sols[lvl], sols[lvl + 1]
            e_h = f2.reference_error_2d(u_ref, u)
            e_est, _ = f2.estimator_est_2d(coeffs[lvl], u, u2, u, u2)
            e_reg, _, _ = f2.estimator_reg_2d(coeffs[lvl], u, u)
            errs.append(abs(e_h))
            assert 0.5 <= abs(e_h) / e_est <= 3.0
            assert 0.2 <= e_reg / e_est <= 1.3
        slope = fit_loglog_slope([2.0**-3, 2.0**-4], errs)
        assert 1.7 <= slope <= 2.3

    def test_rough_field_tracking(self):
        # single sample: ratio in band, reg below est, rate ~ h
        field = sample_field_2d_circulant(2**8, 1.0, 0.2, RngStream(8, 0))
        sols, coeffs = {}, {}
        for lvl in (3, 4, 5, 6):
            _, coeffs[lvl], sols[lvl] = solve_for(field, lvl)
        u_ref = sols[6]
        errs = []
        for lvl in (3, 4):
            u, u2 = sols[lvl], sols[lvl + 1]
            e_h = f2.reference_error_2d(u_ref, u)
            e_est, _ = f2.estimator_est_2d(coeffs[lvl], u, u2, u, u2)
            e_reg, _, _ = f2.estimator_reg_2d(coeffs[lvl], u, u)
            errs.append(abs(e_h))
            assert 0.2 <= abs(e_h) / e_est <= 3.0
            assert e_reg < e_est
        slope = fit_loglog_slope([2.0**-3, 2.0**-4], errs)
        assert 0.6 <= slope <= 1.5
