import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from pydantic import ValidationError

from wfdrift.diagnostics import (
    discrete_expectation,
    discrete_probability,
    eigenvalue_decay_factor,
    energy_ratios,
    guaranteed_decay_factor,
    half_masses,
    interior_mass_bound,
    steady_report,
    time_to_expectation_band,
)
from wfdrift.errors import NumericalError
from wfdrift.grid import (
    InitialCondition,
    State,
    build_grid,
    gaussian_initial,
    state_from_values,
)
from wfdrift.integrator import RunConfig, run, run_many, step
from wfdrift.schemes import SchemeKind, assemble_operator


def make_config(**overrides) -> RunConfig:
    settings = dict(
        scheme=SchemeKind.CENTRAL_WHOLE,
        M=100,
        tau=1e-2,
        t_end=1.0,
        ic=InitialCondition(p=0.4),
    )
    settings.update(overrides)
    return RunConfig(**settings)


class TestStep:

    @pytest.mark.parametrize("scheme", list(SchemeKind))
    def test_1_zero_state_stays_zero(self, scheme):
        grid = build_grid(10)
        op = assemble_operator(scheme, grid, 0.1)
        new = step(state_from_values(grid, np.zeros(grid.size)), op, grid)
        assert_array_equal(new.f, 0.0)
        assert new.t == pytest.approx(0.1)

    @pytest.mark.parametrize("scheme", list(SchemeKind))
    def test_2_matches_dense_solve_small_grid(self, scheme):
        grid = build_grid(4)
        tau = 0.05
        op = assemble_operator(scheme, grid, tau)
        f = np.array([0.1, 0.7, 1.3, 0.4, 0.0])
        expected = np.linalg.solve(op.full_matrix(), f / tau)
        new = step(state_from_values(grid, f), op, grid)
        assert_allclose(new.f, expected, rtol=1e-13, atol=1e-15)

    @pytest.mark.parametrize("scheme", list(SchemeKind))
    @pytest.mark.parametrize("M", [4, 6])
    def test_3_random_states_against_full_matrix(self, scheme, M):
        grid = build_grid(M)
        tau = 0.02
        op = assemble_operator(scheme, grid, tau)
        A = op.full_matrix()
        rng = np.random.default_rng(10 * M)
        for _ in range(20):
            f = rng.random(grid.size)
            expected = np.linalg.solve(A, f / tau)
            new = step(state_from_values(grid, f), op, grid)
            assert_allclose(new.f, expected, rtol=1e-12, atol=1e-13 * np.max(np.abs(expected)))

    def test_4_size_mismatch(self):
        op = assemble_operator(SchemeKind.UPWIND, build_grid(8), 0.1)
        grid = build_grid(10)
        with pytest.raises(ValueError):
            step(state_from_values(grid, np.ones(grid.size)), op, grid)

    def test_5_constant_interior_is_eigenmode(self):
        grid = build_grid(200)
        tau = 1e-2
        op = assemble_operator(SchemeKind.CENTRAL_WHOLE, grid, tau)
        f = np.ones(grid.size)
        f[0] = f[-1] = 0.0
        new = step(state_from_values(grid, f), op, grid)
        assert_allclose(new.f[1:-1], 1.0 / (1.0 + 2.0 * tau), rtol=1e-12)

        # walls pick up exactly what left the interior
        assert discrete_probability(grid, new) == pytest.approx(
            discrete_probability(grid, f), rel=1e-13
        )

        ratio = (1.0 / (1.0 + 2.0 * tau)) ** 2
        assert ratio <= guaranteed_decay_factor(tau)
        assert ratio > eigenvalue_decay_factor(grid, tau)

    @pytest.mark.parametrize("scheme", list(SchemeKind))
    def test_6_non_finite_result(self, scheme):
        grid = build_grid(10)
        op = assemble_operator(scheme, grid, 0.1)
        f = np.ones(grid.size)
        f[4] = np.inf
        with pytest.raises(NumericalError):
            step(State(f), op, grid)


class TestRunConfig:

    def test_1_defaults(self):
        cfg = make_config()
        assert cfg.scheme is SchemeKind.CENTRAL_WHOLE
        assert cfg.n_steps == 100
        assert cfg.requested_snapshots == (1.0,)
        assert cfg.steady_tol is None

    def test_2_scheme_from_string(self):
        assert make_config(scheme="central-split").scheme is SchemeKind.CENTRAL_SPLIT

    def test_3_steps_round_up(self):
        assert make_config(tau=0.3, t_end=1.0).n_steps == 4
        assert make_config(tau=0.1, t_end=0.3).n_steps == 3
        assert make_config(t_end=0.0).n_steps == 0

    @pytest.mark.parametrize(
        "overrides",
        [
            {"tau": 0.0},
            {"tau": float("inf")},
            {"M": 0},
            {"t_end": -1.0},
            {"stride": 0},
            {"steady_tol": 0.0},
            {"scheme": "leapfrog"},
            {"snapshot_times": (0.5, 0.2)},
            {"snapshot_times": (0.5, 2.0)},
        ],
    )
    def test_4_invalid(self, overrides):
        with pytest.raises(ValidationError):
            make_config(**overrides)

    def test_5_frozen(self):
        cfg = make_config()
        with pytest.raises(ValidationError):
            cfg.tau = 0.5


class TestRun:

    def test_1_zero_end_time(self):
        trajectory = run(make_config(t_end=0.0))
        assert trajectory.steps_taken == 0
        assert trajectory.terminal is trajectory.initial
        assert len(trajectory.diagnostics) == 1
        assert [t for t, _ in trajectory.snapshots] == [0.0]

    def test_2_snapshot_alignment(self):
        cfg = make_config(tau=0.1, t_end=1.0, snapshot_times=(0.0, 0.25, 0.5, 1.0))
        trajectory = run(cfg)
        times = [t for t, _ in trajectory.snapshots]
        states = [state for _, state in trajectory.snapshots]

        assert times == [0.0, 0.25, 0.5, 1.0]
        assert states[0] is trajectory.initial
        assert states[1].t == pytest.approx(0.3)
        assert states[2].t == pytest.approx(0.5)
        assert states[3] is trajectory.terminal
        assert trajectory.steps_taken == 10
        assert trajectory.terminal.t == pytest.approx(1.0)

    def test_3_initial_time_offset(self):
        cfg = make_config(tau=0.1, t_end=0.5, snapshot_times=(0.2,))
        grid = build_grid(cfg.M)
        start = state_from_values(grid, gaussian_initial(grid, cfg.ic).f, t=2.0)
        trajectory = run(cfg, initial=start)
        assert trajectory.terminal.t == pytest.approx(2.5)
        assert trajectory.snapshots[0][1].t == pytest.approx(2.2)
        assert trajectory.diagnostics.t[0] == 2.0

    def test_4_diagnostics_stride(self):
        trajectory = run(make_config(tau=0.1, t_end=1.05, stride=4))
        # steps 4 and 8 plus the final step 11
        assert len(trajectory.diagnostics) == 4
        assert trajectory.diagnostics.t[-1] == pytest.approx(1.1)

    @pytest.mark.parametrize("scheme", list(SchemeKind))
    def test_5_symmetric_initial_state_stays_symmetric(self, scheme):
        trajectory = run(make_config(scheme=scheme, t_end=2.0, ic=InitialCondition(p=0.5)))
        f = trajectory.terminal.f
        assert_allclose(f, f[::-1], rtol=1e-12, atol=1e-12 * np.max(f))

    @pytest.mark.parametrize("scheme", list(SchemeKind))
    def test_6_mirror_trajectories(self, scheme):
        left = run(make_config(scheme=scheme, M=200, ic=InitialCondition(p=0.3)))
        right = run(make_config(scheme=scheme, M=200, ic=InitialCondition(p=0.7)))
        f = left.terminal.f
        assert_allclose(f, right.terminal.mirrored().f, rtol=1e-12, atol=1e-12 * np.max(f))

    @pytest.mark.parametrize("scheme", list(SchemeKind))
    def test_7_conservation(self, scheme):
        trajectory = run(make_config(scheme=scheme, tau=1e-3, t_end=10.0))
        assert trajectory.steps_taken == 10_000
        assert trajectory.diagnostics.max_drift("P") <= 1e-10
        if scheme is SchemeKind.CENTRAL_WHOLE:
            assert trajectory.diagnostics.max_drift("E") <= 1e-10
        else:
            # viscosity moves the expectation toward 1/2
            assert trajectory.diagnostics.max_drift("E") > 1e-6

    @pytest.mark.parametrize("scheme", list(SchemeKind))
    def test_8_positivity(self, scheme):
        trajectory = run(make_config(scheme=scheme, M=60, tau=0.05, t_end=5.0,
                                     snapshot_times=(0.5, 1.0, 2.5, 5.0)))
        for _, state in trajectory.snapshots:
            assert np.all(state.f >= 0.0)

    def test_9_energy_decay(self):
        tau = 1e-3
        trajectory = run(make_config(M=200, tau=tau, t_end=1.0))
        ratios = energy_ratios(trajectory.diagnostics)
        assert ratios.size == 1000
        assert np.all(ratios <= guaranteed_decay_factor(tau) * (1.0 + 1e-12))

    def test_10_interior_mass_bound(self):
        trajectory = run(make_config(M=200, tau=1e-3, t_end=1.0))
        trace = trajectory.diagnostics
        mass = trace.column("interior_mass")
        bound = interior_mass_bound(trajectory.grid, trace.column("t"), mass[0])
        assert np.all(mass <= bound * (1.0 + 1e-12))

    def test_11_steady_tolerance_stops_early(self):
        trajectory = run(make_config(M=50, tau=0.1, t_end=100.0, steady_tol=1e-6))
        assert trajectory.converged
        assert trajectory.steps_taken < trajectory.config.n_steps
        assert trajectory.diagnostics.t[-1] == trajectory.terminal.t
        # unserved snapshot at t_end comes from the terminal state
        assert trajectory.snapshots[-1][1] is trajectory.terminal
        assert trajectory.diagnostics.interior_mass[-1] < 1e-5

    def test_12_run_many_preserves_order(self):
        configs = [
            make_config(scheme=scheme, M=40, t_end=0.5) for scheme in SchemeKind
        ]
        parallel = run_many(configs, workers=3)
        for cfg, trajectory in zip(configs, parallel):
            assert trajectory.config is cfg
            assert_array_equal(trajectory.terminal.f, run(cfg).terminal.f)

    def test_13_non_finite_initial_state(self):
        cfg = make_config(M=20, t_end=0.1)
        f = np.ones(21)
        f[3] = np.nan
        with pytest.raises(NumericalError, match="finite"):
            run(cfg, initial=State(f))

    def test_14_unresolvable_gaussian(self):
        cfg = make_config(t_end=0.1, ic=InitialCondition(p=0.4005, sigma=1e-5, renormalize=True))
        with pytest.raises(NumericalError):
            run(cfg)


@pytest.mark.slow
class TestLongRuns:

    def boundary_weights(self, **overrides):
        cfg = make_config(t_end=6.0, stride=1000, **overrides)
        trajectory = run(cfg)
        grid = trajectory.grid
        P0 = discrete_probability(grid, trajectory.initial)
        E0 = discrete_expectation(grid, trajectory.initial)
        return steady_report(grid, trajectory, P0, E0)

    @pytest.mark.parametrize(
        "M,w0,w1", [(100, 0.59999562, 0.39999562), (1000, 0.59999558, 0.39999558)]
    )
    def test_1_boundary_weights_by_mesh(self, M, w0, w1):
        report = self.boundary_weights(M=M, tau=1e-4)
        assert report.w0 == pytest.approx(w0, abs=1e-4)
        assert report.w1 == pytest.approx(w1, abs=1e-4)
        assert report.deviation_w0 <= 1e-5
        assert report.deviation_w1 <= 1e-5

    def test_2_mesh_independence(self):
        coarse = self.boundary_weights(M=100, tau=1e-4)
        fine = self.boundary_weights(M=1000, tau=1e-4)
        assert coarse.w0 == pytest.approx(fine.w0, abs=1e-5)
        assert coarse.w1 == pytest.approx(fine.w1, abs=1e-5)

    def test_3_boundary_weights_by_time_step(self):
        expected = {1e-1: 0.59998724, 1e-2: 0.59999503, 1e-3: 0.59999553}
        reports = {tau: self.boundary_weights(M=1000, tau=tau) for tau in expected}
        for tau, w0 in expected.items():
            assert reports[tau].w0 == pytest.approx(w0, abs=1e-4)

        # larger steps damp the interior more slowly
        assert reports[1e-1].deviation_w0 > reports[1e-2].deviation_w0
        assert reports[1e-2].deviation_w0 > reports[1e-3].deviation_w0
        assert reports[1e-3].deviation_w0 <= 1e-5

    def test_4_mirrored_mean(self):
        report = self.boundary_weights(M=1000, tau=1e-4, ic=InitialCondition(p=0.7))
        assert report.w0 == pytest.approx(0.29999613, abs=1e-4)
        assert report.w1 == pytest.approx(0.69999613, abs=1e-4)
        assert report.deviation_w0 <= 1e-5

    def test_5_viscous_schemes_forget_the_mean(self):
        upwind = run(make_config(scheme=SchemeKind.UPWIND, M=200, tau=1e-3, t_end=50.0,
                                 ic=InitialCondition(p=0.7)))
        split = run(make_config(scheme=SchemeKind.CENTRAL_SPLIT, M=100, tau=1e-2, t_end=2000.0,
                                stride=100, ic=InitialCondition(p=0.7)))

        grid = upwind.grid
        report = steady_report(grid, upwind, 1.0, 0.7)
        assert report.w0 == pytest.approx(report.w1, rel=1e-3)
        left, right = half_masses(grid, upwind.terminal)
        assert left == pytest.approx(0.5 * (left + right), abs=1e-2)

        left, right = half_masses(split.grid, split.terminal)
        assert left == pytest.approx(0.5 * (left + right), abs=2e-2)

    def test_6_split_flux_reaches_the_mean_band_later(self):
        bands = {}
        for scheme in (SchemeKind.UPWIND, SchemeKind.CENTRAL_SPLIT):
            trajectory = run(make_config(scheme=scheme, M=100, tau=1e-2, t_end=500.0, stride=10,
                                         ic=InitialCondition(p=0.7)))
            bands[scheme] = time_to_expectation_band(trajectory.diagnostics)

        assert bands[SchemeKind.UPWIND] is not None
        assert bands[SchemeKind.CENTRAL_SPLIT] is not None
        assert bands[SchemeKind.CENTRAL_SPLIT] > bands[SchemeKind.UPWIND]
