import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from wfdrift import operator_cache
from wfdrift.config import Config
from wfdrift.grid import build_grid
from wfdrift.schemes import (
    SchemeKind,
    assemble_operator,
    flux_vector,
    half_node_flux,
    identity_deviations,
    lambda_residual,
    lambda_tilde_residual,
    spatial_operator,
)

# scaled identity deviation allowed on random vectors
IDENTITY_TOL = 1e-13


class TestHalfNodeFlux:

    def setup_method(self):
        self.grid = build_grid(10)

    def test_1_central_whole_constant_density(self):
        f = np.full(self.grid.size, 3.0)
        j = flux_vector(SchemeKind.CENTRAL_WHOLE, self.grid, f)
        assert_allclose(j, -3.0 * self.grid.b_half, atol=1e-14)

    @pytest.mark.parametrize("scheme", list(SchemeKind))
    def test_2_zero_density(self, scheme):
        f = np.zeros(self.grid.size)
        for i in range(self.grid.M):
            assert half_node_flux(scheme, self.grid, f, i) == 0.0

    def test_3_upwind_at_zero_velocity(self):
        grid = build_grid(9)
        k = 4
        assert grid.b_half[k] == 0.0
        f = np.random.default_rng(1).random(grid.size)
        expected = -grid.D_half[k] * (f[k + 1] - f[k]) / grid.h
        assert half_node_flux(SchemeKind.UPWIND, grid, f, k) == pytest.approx(expected, rel=1e-15)
        assert half_node_flux(SchemeKind.CENTRAL_SPLIT, grid, f, k) == pytest.approx(
            expected, rel=1e-15
        )

    def test_4_upwind_picks_upwind_node(self):
        f = np.zeros(self.grid.size)
        f[2] = 1.0
        # left of 1/2 the velocity 2x - 1 is negative: j_{1+1/2} takes f_2
        j = half_node_flux(SchemeKind.UPWIND, self.grid, f, 1)
        velocity = -self.grid.b_half[1]
        assert j == pytest.approx(-self.grid.D_half[1] / self.grid.h + velocity)

    @pytest.mark.parametrize("i", [-1, 10, 11])
    def test_5_index_out_of_range(self, i):
        with pytest.raises(IndexError):
            half_node_flux(SchemeKind.UPWIND, self.grid, np.ones(self.grid.size), i)

    def test_6_wrong_length(self):
        with pytest.raises(ValueError):
            flux_vector(SchemeKind.CENTRAL_SPLIT, self.grid, np.ones(5))


class TestAssembleOperator:

    def test_1_central_whole_interior_diagonal(self):
        grid = build_grid(4)
        op = assemble_operator(SchemeKind.CENTRAL_WHOLE, grid, 0.01)
        expected = 1.0 / 0.01 + 2.0 * grid.D[1:4] / 0.25**2
        assert op.decoupled
        assert len(op.diag) == 3
        assert_allclose(op.diag, expected, rtol=1e-15)
        assert_allclose(op.sub, -grid.D[1:3] / 0.25**2, rtol=1e-15)
        assert_allclose(op.sup, -grid.D[2:4] / 0.25**2, rtol=1e-15)
        assert op.gamma == pytest.approx(0.01 / 0.25**2)
        assert op.left_gain == pytest.approx(2.0 * grid.D[1] * op.gamma)
        assert op.right_gain == pytest.approx(2.0 * grid.D[3] * op.gamma)

    def test_2_central_whole_interior_ignores_walls(self):
        grid = build_grid(8)
        A = assemble_operator(SchemeKind.CENTRAL_WHOLE, grid, 0.1).full_matrix()
        assert np.all(A[1:-1, 0] == 0.0)
        assert np.all(A[1:-1, -1] == 0.0)

    @pytest.mark.parametrize("scheme", [SchemeKind.UPWIND, SchemeKind.CENTRAL_SPLIT])
    def test_3_viscous_schemes_couple_walls(self, scheme):
        op = assemble_operator(scheme, build_grid(8), 0.1)
        assert not op.decoupled
        assert len(op.diag) == 9
        assert op.full_matrix()[1, 0] != 0.0

    @pytest.mark.parametrize("scheme", list(SchemeKind))
    @pytest.mark.parametrize("M", [5, 8, 17])
    def test_4_weighted_columns_telescope(self, scheme, M):
        grid = build_grid(M)
        tau = 0.01
        A = assemble_operator(scheme, grid, tau).full_matrix() - np.eye(M + 1) / tau
        scale = np.max(np.abs(A))
        assert_allclose(grid.weights @ A, 0.0, atol=1e-14 * scale)

    @pytest.mark.parametrize("scheme", list(SchemeKind))
    def test_5_matrix_matches_flux_difference(self, scheme):
        grid = build_grid(12)
        tau = 0.05
        f = np.random.default_rng(5).random(grid.size)
        A = assemble_operator(scheme, grid, tau).full_matrix()
        L = spatial_operator(scheme, grid, f)
        assert_allclose(A @ f - f / tau, L, atol=1e-12 * np.max(np.abs(L)))

    def test_6_central_whole_in_flux_variable(self):
        grid = build_grid(10)
        tau = 0.02
        op = assemble_operator(SchemeKind.CENTRAL_WHOLE, grid, tau)
        D = grid.D[1:-1]
        n = grid.M - 1
        laplacian = (np.diag(np.full(n, -2.0)) + np.diag(np.ones(n - 1), 1)
                     + np.diag(np.ones(n - 1), -1)) / grid.h**2
        in_v = op.system(np.zeros(n)).to_dense() @ np.diag(1.0 / D)
        assert_allclose(in_v, np.diag(1.0 / (tau * D)) - laplacian, rtol=1e-13, atol=1e-10)

    def test_7_operator_is_immutable(self):
        op = assemble_operator(SchemeKind.UPWIND, build_grid(6), 0.1)
        with pytest.raises(ValueError):
            op.diag[0] = 0.0

    @pytest.mark.parametrize("tau", [0.0, -1.0, float("nan"), float("inf")])
    def test_8_invalid_time_step(self, tau):
        with pytest.raises(ValueError):
            assemble_operator(SchemeKind.CENTRAL_WHOLE, build_grid(6), tau)


class TestViscosityResiduals:

    def setup_method(self):
        self.grid = build_grid(8)

    def test_1_lambda_vanishes_on_affine_data(self):
        f = 2.0 + 3.0 * self.grid.x
        assert_allclose(lambda_residual(self.grid, f), 0.0, atol=1e-14)

    def test_2_lambda_on_quadratic(self):
        f = self.grid.x**2
        assert_allclose(lambda_residual(self.grid, f), -self.grid.h**2 / 2.0, rtol=1e-12)

    def test_3_lambda_tilde_vanishes_on_constants(self):
        f = np.full(self.grid.size, 1.7)
        assert_allclose(lambda_tilde_residual(self.grid, f), 0.0, atol=1e-13)

    def test_4_residual_lengths(self):
        f = np.ones(self.grid.size)
        assert lambda_residual(self.grid, f).shape == (self.grid.M - 1,)
        assert lambda_tilde_residual(self.grid, f).shape == (self.grid.M - 1,)

    @pytest.mark.parametrize("M", [5, 8, 17, 100])
    def test_5_decomposition_on_random_vectors(self, M):
        grid = build_grid(M)
        rng = np.random.default_rng(M)
        for _ in range(100):
            second, first = identity_deviations(grid, rng.random(grid.size))
            assert second <= IDENTITY_TOL
            assert first <= IDENTITY_TOL

    def test_6_decomposition_componentwise(self):
        grid = build_grid(8)
        f = np.random.default_rng(11).random(grid.size)
        L1, L2, L3 = (spatial_operator(kind, grid, f)[1:-1] for kind in SchemeKind)
        assert_allclose(L2 - L3, lambda_residual(grid, f), atol=1e-13)
        assert_allclose(L1 - L2, lambda_tilde_residual(grid, f), atol=1e-13)


class TestOperatorCache:

    def setup_method(self):
        operator_cache.clear()

    def test_1_same_key_same_operator(self):
        first = operator_cache.get_operator(SchemeKind.UPWIND, 20, 0.01)
        second = operator_cache.get_operator("upwind", 20, 0.01)
        assert first is second

    def test_2_different_tau_new_operator(self):
        first = operator_cache.get_operator(SchemeKind.UPWIND, 20, 0.01)
        second = operator_cache.get_operator(SchemeKind.UPWIND, 20, 0.02)
        assert first is not second
        assert second.tau == 0.02

    def test_3_grid_shared(self):
        assert operator_cache.get_grid(30) is operator_cache.get_grid(30)
        assert_array_equal(operator_cache.get_grid(30).D, build_grid(30).D)

    def test_4_operator_cache_is_bounded(self, monkeypatch):
        monkeypatch.setattr(Config.Cache, "MAX_OPERATORS", 2)
        first = operator_cache.get_operator(SchemeKind.UPWIND, 20, 0.01)
        operator_cache.get_operator(SchemeKind.UPWIND, 20, 0.02)
        latest = operator_cache.get_operator(SchemeKind.UPWIND, 20, 0.03)

        assert len(operator_cache.store) == 2
        assert operator_cache.get_operator(SchemeKind.UPWIND, 20, 0.03) is latest
        assert operator_cache.get_operator(SchemeKind.UPWIND, 20, 0.01) is not first

    def test_5_grid_cache_is_bounded(self, monkeypatch):
        monkeypatch.setattr(Config.Cache, "MAX_GRIDS", 3)
        for M in range(10, 20):
            operator_cache.get_grid(M)
        assert sorted(operator_cache.grids) == [17, 18, 19]
