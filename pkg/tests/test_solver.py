import glob
import math
import os

import numpy as np
import pytest
import sympy as sp

from src.cli.config import build_config, load_config
from src.errors import ConfigError, DomainError, GlobalExistenceSuspected, NumericalFailure, StepSizeUnderflow
from src.nonlinearity import coefficient_table
from src.solver.equation import RhsMode, gradient_radial, laplacian_radial, rhs_phi
from src.solver.estimate import aitken, estimate_T, log_suffix_sums
from src.solver.grid import RadialGrid, Snapshot
from src.solver.initial import SUPERSOLUTION_SHRINK, initial_phi, initial_profile, prepare_initial_data
from src.solver.run import run_to_blowup
from src.solver.stepper import PhiSolver, StepController, is_monotone

from conftest import SHORT_RUN, advanced_state


ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
BUNDLED_CONFIGS = sorted(glob.glob(os.path.join(ROOT, "configs", "*.toml")))


class TestRadialGrid:
    def test_nodes(self, grid64):
        assert grid64.h == pytest.approx(2.0 / 64)
        assert grid64.r[0] == 0.0
        assert grid64.r[-1] == 2.0
        assert grid64.r.size == 65

    @pytest.mark.parametrize("n,R,J", [(0, 1.0, 64), (1, 0.0, 64), (1, 1.0, 32), (1.5, 1.0, 64)])
    def test_rejects(self, n, R, J):
        with pytest.raises(DomainError):
            RadialGrid(n, R, J)


class TestOperators:
    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_laplacian_of_quadratic(self, n):
        grid = RadialGrid(n, 1.5, 64)
        lap = laplacian_radial(grid, grid.r ** 2)
        np.testing.assert_allclose(lap[:-1], 2.0 * n, rtol=1e-10)
        assert lap[-1] == 0.0

    def test_gradient_of_quadratic(self, grid64):
        grad = gradient_radial(grid64, grid64.r ** 2)
        assert grad[0] == 0.0
        np.testing.assert_allclose(grad[1:-1], 2.0 * grid64.r[1:-1], rtol=1e-12)

    def test_shape_mismatch(self, grid64):
        with pytest.raises(ValueError):
            laplacian_radial(grid64, np.zeros(10))

    @pytest.mark.parametrize("n", [1, 2])
    def test_manufactured_rhs_is_second_order(self, nl_p2q0, n):
        r = sp.symbols("r", nonnegative=True)
        phi_expr = 4 - r ** 2 / 2 + sp.cos(sp.pi * r) / 5
        phi_r = sp.diff(phi_expr, r)
        phi_rr = sp.diff(phi_expr, r, 2)
        phi_fn = sp.lambdify(r, phi_expr, "numpy")
        phi_r_fn = sp.lambdify(r, phi_r, "numpy")
        phi_rr_fn = sp.lambdify(r, phi_rr, "numpy")

        table = coefficient_table(nl_p2q0, 50.0)
        errors = []
        for J in (128, 256, 512):
            grid = RadialGrid(n, 2.0, J)
            x = grid.r
            phi = phi_fn(x)
            lap = np.empty_like(x)
            lap[0] = n * phi_rr_fn(0.0)
            lap[1:] = phi_rr_fn(x[1:]) + (n - 1) / x[1:] * phi_r_fn(x[1:])
            exact = lap + np.exp(phi) + table.coefficient(phi) * phi_r_fn(x) ** 2
            got = rhs_phi(nl_p2q0, grid, phi, table)
            errors.append(np.max(np.abs(got[:-1] - exact[:-1])))
        orders = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
        assert np.all(orders >= 1.8), orders


class TestStepper:
    def test_reaction_matches_ode(self, grid64, table_p2q0):
        # Φ_t = e^Φ from a constant state: Φ(t) = Φ0 - log(1 - t e^{Φ0})
        phi0 = 2.0
        solver = PhiSolver(table_p2q0.nl, grid64, table_p2q0, StepController(safety=0.01), RhsMode.REACTION)
        start = Snapshot(t=0.0, phi=np.full(grid64.J + 1, phi0), umax=0.0, step_index=0)
        t_end = 0.5 * math.exp(-phi0)
        end = solver.advance_to(start, t_end)
        assert end.t == t_end
        exact = phi0 - math.log1p(-t_end * math.exp(phi0))
        np.testing.assert_allclose(end.phi, exact, atol=1e-4)

    def test_reaction_time_order(self, grid64, table_p2q0):
        phi0 = 2.0
        t_end = 0.5 * math.exp(-phi0)
        exact = phi0 - math.log1p(-t_end * math.exp(phi0))
        errors = []
        for safety in (0.04, 0.02, 0.01):
            solver = PhiSolver(table_p2q0.nl, grid64, table_p2q0, StepController(safety=safety), RhsMode.REACTION)
            start = Snapshot(t=0.0, phi=np.full(grid64.J + 1, phi0), umax=0.0, step_index=0)
            errors.append(abs(solver.advance_to(start, t_end).phi_max - exact))
        orders = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
        assert np.all(orders >= 1.7), orders

    def test_diffusion_decays_the_cosine_mode(self, nl_exp):
        grid = RadialGrid(1, 2.0, 64)
        table = coefficient_table(nl_exp, 50.0)
        solver = PhiSolver(nl_exp, grid, table, mode=RhsMode.DIFFUSION)
        phi = np.cos(0.5 * np.pi * grid.r / grid.R)
        phi[-1] = 0.0
        start = Snapshot(t=0.0, phi=phi, umax=1.0, step_index=0)
        end = solver.advance_to(start, 0.5)
        rate = 4.0 / grid.h ** 2 * math.sin(math.pi * grid.h / (4.0 * grid.R)) ** 2
        np.testing.assert_allclose(end.phi[:-1], phi[:-1] * math.exp(-rate * 0.5), rtol=1e-7, atol=1e-12)
        assert end.phi[-1] == 0.0

    def test_is_monotone(self):
        assert is_monotone(np.array([3.0, 2.0, 2.0, 1.0]), 1e-9)
        assert not is_monotone(np.array([3.0, 2.0, 2.1, 1.0]), 1e-9)
        assert is_monotone(np.array([3.0, 2.0, -math.inf]), 1e-9)

    def test_diffusion_limited_step_is_accepted(self, nl_p2q0, table_p2q0):
        # on a fine grid h²/(2n) sits far below e^{-Φmax} at t = 0
        grid = RadialGrid(1, 2.0, 512)
        u0, _ = prepare_initial_data(nl_p2q0, grid, "parabola", 1.0, True)
        start = Snapshot(t=0.0, phi=initial_phi(nl_p2q0, u0), umax=float(u0[0]), step_index=0)
        solver = PhiSolver(nl_p2q0, grid, table_p2q0)
        end, dt = solver.step(start)
        assert dt <= 0.25 * grid.h ** 2
        assert dt < 1e-3 * math.exp(-start.phi_max)
        assert end.step_index == 1
        assert end.phi_max > start.phi_max

    def test_underflow_only_after_halvings(self, grid64, table_p2q0):
        phi = 3.0 - 0.1 * grid64.r ** 2
        phi[10] += 0.5
        start = Snapshot(t=0.0, phi=phi, umax=0.0, step_index=0)
        solver = PhiSolver(table_p2q0.nl, grid64, table_p2q0, StepController(underflow_ratio=1e-3))
        with pytest.raises(StepSizeUnderflow) as info:
            solver.step(start)
        # 2^-10 is the first halving below 1e-3
        assert info.value.state["halvings"] == 10

    def test_halving_without_floor_ends_in_numerical_failure(self, grid64, table_p2q0):
        phi = 3.0 - 0.1 * grid64.r ** 2
        phi[10] += 0.5
        start = Snapshot(t=0.0, phi=phi, umax=0.0, step_index=0)
        solver = PhiSolver(table_p2q0.nl, grid64, table_p2q0, StepController(max_halvings=12, underflow_ratio=0.0))
        with pytest.raises(NumericalFailure) as info:
            solver.step(start)
        assert not isinstance(info.value, StepSizeUnderflow)


class TestInitialData:
    def test_profiles_vanish_at_the_wall(self, grid64):
        for profile in ("parabola", "cosine"):
            u0 = initial_profile(grid64, profile, 1.5)
            assert u0[0] == 1.5
            assert u0[-1] == 0.0
            assert np.all(np.diff(u0) <= 0.0)

    def test_unknown_profile(self, grid64):
        with pytest.raises(ConfigError):
            initial_profile(grid64, "gaussian", 1.0)

    def test_supersolution_shrinks_amplitude(self, nl_p2q0, grid64):
        # -2A/R² + f(0) >= 0 at the wall needs A <= 2 when R = 2
        _, amplitude = prepare_initial_data(nl_p2q0, grid64, "parabola", 3.0, True)
        assert amplitude == pytest.approx(3.0 / SUPERSOLUTION_SHRINK ** 3, rel=1e-14)

    def test_supersolution_keeps_a_passing_amplitude(self, nl_p2q0, grid64):
        _, amplitude = prepare_initial_data(nl_p2q0, grid64, "parabola", 1.0, True)
        assert amplitude == 1.0

    def test_supersolution_skipped_for_q_at_least_one(self, nl_p2q1, grid64):
        u0, amplitude = prepare_initial_data(nl_p2q1, grid64, "parabola", 3.0, True)
        assert amplitude == 3.0
        assert u0[0] == 3.0


class TestEstimate:
    def test_suffix_sums(self):
        log_D = log_suffix_sums([math.nan, math.log(1.0), math.log(2.0), math.log(3.0)])
        np.testing.assert_allclose(np.exp(log_D[:-1]), [6.0, 5.0, 3.0])
        assert log_D[-1] == -math.inf

    def test_aitken_on_geometric_sequence(self):
        seq = 2.0 + 0.5 ** np.arange(6)
        np.testing.assert_allclose(aitken(seq), 2.0, rtol=1e-12)

    def test_exact_ode_sequence(self):
        # for f = e^u, T_k = t_k + F(u(0, t_k)) equals T exactly
        T = 0.3
        phi0 = np.arange(1.0, 9.0)
        gaps = np.exp(-phi0)
        snaps = self._snapshots(T, phi0, gaps)
        est = estimate_T(snaps)
        assert est.T_est == pytest.approx(T, rel=1e-14)
        np.testing.assert_allclose(est.log_gaps, -phi0, rtol=1e-12)

    def test_geometric_approach_is_extrapolated(self):
        T = 0.3
        phi0 = np.arange(1.0, 9.0)
        gaps = np.exp(-phi0) * (1.0 + 0.5 * 0.5 ** np.arange(8))
        est = estimate_T(self._snapshots(T, phi0, gaps))
        assert est.method == "aitken"
        assert est.T_est == pytest.approx(T, rel=1e-12)
        assert est.log_gap_last == pytest.approx(math.log(gaps[-1]), abs=1e-8)
        assert not est.non_monotone

    def test_rejects_short_or_decreasing_sequences(self):
        phi0 = np.arange(1.0, 9.0)
        snaps = self._snapshots(0.3, phi0, np.exp(-phi0))
        with pytest.raises(DomainError):
            estimate_T(snaps[:4])
        with pytest.raises(DomainError):
            estimate_T(snaps[::-1])

    @staticmethod
    def _snapshots(T, phi0, gaps):
        snaps = []
        for k, (p, g) in enumerate(zip(phi0, gaps)):
            log_dt = math.log(gaps[k - 1] - g) if k else math.nan
            snaps.append(Snapshot(t=T - g, phi=np.array([p, 0.0]), umax=p, step_index=k, log_dt_prev=log_dt))
        return snaps


class TestRunToBlowup:
    def test_reaches_the_stop_level(self, short_run):
        phi_max = np.array([s.phi_max for s in short_run.snapshots])
        assert phi_max[-1] >= 30.0
        assert np.all(np.diff(phi_max) > 0.0)
        assert short_run.center_monotone
        assert short_run.amplitude == 1.0

    def test_estimate_is_after_the_last_snapshot(self, short_run, nl_p2q0):
        est = short_run.estimate
        last = short_run.snapshots[-1]
        # the ODE from u0(0) = A bounds the blow-up time from below
        assert est.T_est >= 0.1394
        assert est.T_est >= last.t
        assert abs(est.log_gap_last + last.phi_max) < 0.5
        assert np.all(np.diff(est.log_gaps) < 0.0)

    def test_probes_are_consecutive_steps(self, short_run):
        steps = [p.step_index for p in short_run.probes]
        assert len(steps) == 3
        assert steps == list(range(steps[0], steps[0] + 3))

    def test_snapshots_stay_monotone(self, short_run):
        for snap in short_run.snapshots:
            assert is_monotone(snap.phi, 1e-9)
            assert snap.phi[-1] == pytest.approx(short_run.snapshots[0].phi[-1])

    def test_global_existence_suspected(self):
        raw = {**SHORT_RUN, "grid": {"n": 1, "R": 1.0, "J": 64},
               "init": {"profile": "parabola", "amplitude": 0.1, "supersolution_check": True},
               "solver": {"phi_stop": 30.0, "max_steps": 200}}
        with pytest.raises(GlobalExistenceSuspected) as info:
            run_to_blowup(build_config(raw))
        assert info.value.state["steps"] == 200

    @pytest.mark.parametrize("path", BUNDLED_CONFIGS, ids=os.path.basename)
    def test_bundled_configs_take_their_first_steps(self, path):
        config = load_config(path, {"solver.phi_stop": 60.0, "solver.max_steps": 50})
        with pytest.raises(GlobalExistenceSuspected) as info:
            run_to_blowup(config)
        assert info.value.state["steps"] == 50


class TestConvergence:
    def test_centre_value_is_second_order_in_space(self):
        # dt follows h², so the time error is fourth order in h
        centre = [advanced_state(J, 0.02)[2].phi[0] for J in (128, 256, 512)]
        order = math.log2((centre[0] - centre[1]) / (centre[1] - centre[2]))
        assert order >= 1.8, centre
