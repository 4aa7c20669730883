import math

import numpy as np
import pytest

from roughfem.randfield import (
    DyadicGrid,
    EmbeddingError,
    empirical_covariance,
    lognormal_of,
    sample_brownian_bridge,
    sample_field_2d_circulant,
    sample_wiener,
)
from roughfem.rng import RngStream


def draw_bridge_matrix(level, m, seed):
    return np.array(
        [sample_brownian_bridge(level, RngStream(seed, i)).values for i in range(m)]
    )


class TestBridge:
    def test_invalid_level_rejected(self):
        with pytest.raises(ValueError):
            sample_brownian_bridge(0, RngStream(1))

    def test_endpoints_pinned_bit_exactly(self):
        for i in range(50):
            p = sample_brownian_bridge(6, RngStream(5, i))
            assert p.values[0] == 0.0 and p.values[-1] == 0.0

    def test_level_one_midpoint_law(self):
        # B(1/2) ~ Normal(0, 1/4)
        vals = draw_bridge_matrix(1, 40000, 11)[:, 1]
        var = vals.var(ddof=1)
        se = var * math.sqrt(2.0 / (len(vals) - 1))
        assert abs(var - 0.25) < 3 * se
        assert abs(vals.mean()) < 3 * vals.std(ddof=1) / math.sqrt(len(vals))

    def test_covariance_against_closed_form(self):
        # cov(B(x), B(y)) = min(x, y) - x y at (0.25, 0.5)
        m = 100000
        vals = draw_bridge_matrix(4, m, 42)
        [(cov, se)] = empirical_covariance(vals, [(4, 8)])
        assert abs(cov - 0.125) < 3 * se

    def test_refinement_consistency(self):
        # restriction of level-(L+1) sampling has the level-L law
        level, m = 3, 10000
        direct = draw_bridge_matrix(level, m, 77)
        refined = draw_bridge_matrix(level + 1, m, 177)[:, ::2]
        idx = range(1, 2**level)
        pairs = [(i, j) for i in idx for j in idx if i <= j]
        cov_d = empirical_covariance(direct, pairs)
        cov_r = empirical_covariance(refined, pairs)
        for (cd, sd), (cr, sr) in zip(cov_d, cov_r):
            assert abs(cd - cr) < 5 * math.hypot(sd, sr)

    def test_determinism(self):
        a = sample_brownian_bridge(8, RngStream(9, 3)).values
        b = sample_brownian_bridge(8, RngStream(9, 3)).values
        assert np.array_equal(a, b)
        c = sample_brownian_bridge(8, RngStream(9, 4)).values
        assert not np.array_equal(a, c)


class TestWiener:
    def test_level_one_increment_variance(self):
        # W(1/2) ~ Normal(0, 1/2)
        vals = np.array(
            [sample_wiener(1, RngStream(2, i)).values[1] for i in range(30000)]
        )
        var = vals.var(ddof=1)
        se = var * math.sqrt(2.0 / (len(vals) - 1))
        assert abs(var - 0.5) < 3 * se

    def test_variance_at_half(self):
        # Var W(1/2) = 1/2
        vals = np.array(
            [sample_wiener(6, RngStream(3, i)).values[32] for i in range(20000)]
        )
        var = vals.var(ddof=1)
        se = var * math.sqrt(2.0 / (len(vals) - 1))
        assert abs(var - 0.5) < 3 * se

    def test_exponential_moment_identity(self):
        # E[exp(-W(1))] = exp(1/2)
        m = 100000
        vals = np.array(
            [sample_wiener(4, RngStream(8, i)).values[-1] for i in range(m)]
        )
        y = np.exp(-vals)
        assert abs(y.mean() - math.exp(0.5)) < 3 * y.std(ddof=1) / math.sqrt(m)

    def test_integral_moment_identity(self):
        # z = h^{-1} int_0^h (e^W - 1): E[z] = (2/h)(e^{h/2} - 1) - 1
        level, h_level, m = 10, 4, 10000
        h = 2.0**-h_level
        n_sub = 2 ** (level - h_level)
        zs = np.empty(m)
        for i in range(m):
            w = sample_wiener(level, RngStream(21, i)).values[:n_sub]
            zs[i] = (np.exp(w) - 1.0).mean()
        expected = (2.0 / h) * (math.exp(h / 2.0) - 1.0) - 1.0
        assert abs(zs.mean() - expected) < 3 * zs.std(ddof=1) / math.sqrt(m)


class TestLognormal:
    def test_zero_path_gives_ones(self):
        p = sample_brownian_bridge(4, RngStream(1))
        p.values[:] = 0.0
        a = lognormal_of(p)
        assert np.all(a.values == 1.0)

    def test_bridge_boundary_values_are_one(self):
        p = sample_brownian_bridge(6, RngStream(4, 2))
        a = lognormal_of(p)
        assert a.node_values[0] == 1.0 and a.node_values[-1] == 1.0

    def test_unit_path_value(self):
        p = sample_brownian_bridge(3, RngStream(1))
        p.values[:] = 0.0
        p.values[2] = 1.0
        a = lognormal_of(p)
        assert math.isclose(a.values[2], math.e, rel_tol=1e-15)

    def test_midpoint_convention(self):
        p = sample_brownian_bridge(5, RngStream(6, 0))
        a = lognormal_of(p, convention="midpoint")
        assert a.level == 4
        assert np.allclose(a.values, np.exp(p.values[1::2]))

    def test_nonfinite_rejected(self):
        p = sample_brownian_bridge(3, RngStream(1))
        p.values[1] = np.inf
        with pytest.raises(ValueError):
            lognormal_of(p)


class TestField2D:
    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            sample_field_2d_circulant(24, 1.0, 0.2, RngStream(1))
        with pytest.raises(ValueError):
            sample_field_2d_circulant(16, -1.0, 0.2, RngStream(1))
        with pytest.raises(ValueError):
            sample_field_2d_circulant(16, 1.0, 0.0, RngStream(1))

    def test_embedding_failure_reported(self):
        # no padding allowed at all forces the failure branch for short ell
        with pytest.raises(EmbeddingError):
            sample_field_2d_circulant(16, 1.0, 4.0, RngStream(1), max_factor=2)

    def test_long_correlation_gives_near_constant_field(self):
        f = sample_field_2d_circulant(16, 1.0, 1e6, RngStream(13, 0))
        assert f.log_values.max() - f.log_values.min() < 1e-2

    def test_covariance_and_variance(self):
        n, m, ell = 2**5, 4000, 0.2
        vals = np.empty((m, 3))
        lag_cells = round(ell * n)  # distance 0.2 along one axis
        for i in range(m):
            f = sample_field_2d_circulant(n, 1.0, ell, RngStream(31, i))
            vals[i] = (f.log_values[3, 4], f.log_values[3 + lag_cells, 4], f.log_values[7, 9])
        [(cov, se)] = empirical_covariance(vals, [(0, 1)])
        assert abs(cov - math.exp(-1.0)) < 3 * se
        v = vals[:, 2].var(ddof=1)
        sev = v * math.sqrt(2.0 / (m - 1))
        assert abs(v - 1.0) < 3 * sev

    def test_determinism(self):
        a = sample_field_2d_circulant(16, 1.0, 0.2, RngStream(7, 5)).log_values
        b = sample_field_2d_circulant(16, 1.0, 0.2, RngStream(7, 5)).log_values
        assert np.array_equal(a, b)


class TestEmpiricalCovariance:
    def test_constant_samples(self):
        s = np.ones((10, 2))
        [(cov, se)] = empirical_covariance(s, [(0, 1)])
        assert cov == 0.0 and se == 0.0

    def test_duplicated_coordinate_gives_variance(self):
        gen = RngStream(15).generator()
        x = gen.standard_normal(500)
        s = np.column_stack((x, x))
        [(cov, _)] = empirical_covariance(s, [(0, 1)])
        assert math.isclose(cov, x.var(ddof=1), rel_tol=1e-12)

    def test_empty_pairs(self):
        assert empirical_covariance(np.zeros((3, 2)), []) == []

    def test_too_few_samples_rejected(self):
        with pytest.raises(ValueError):
            empirical_covariance(np.zeros((1, 2)), [(0, 1)])


def test_grid_validation():
    with pytest.raises(ValueError):
        DyadicGrid(0)
    g = DyadicGrid(3)
    assert g.n_points == 9 and g.spacing == 0.125
