import json
import math

import numpy as np
import pytest

from src.diagnostics import CheckResult, DiagnosticsReport, RunArtifacts, Verdict, assemble_report
from src.diagnostics import checks
from src.diagnostics.stats import bounded_last_window, decreasing_trend, tail_decay_exponent, theil_sen_slope
from src.errors import DomainError, MissingArtifacts
from src.nonlinearity import coefficient_table
from src.nonlinearity.suites import SuiteRow
from src.selfsimilar import build_frames, energy_inequality_check, energy_series
from src.selfsimilar.energy import EnergyRecord, LedgerRow
from src.solver.grid import RadialGrid, Snapshot

from conftest import advanced_state, constant_frames


@pytest.fixture(scope="module")
def artifacts(short_config, short_run):
    nl, grid = short_config.nl(), short_config.radial_grid()
    table = coefficient_table(nl, 100.0)
    frames = build_frames(short_run.snapshots, short_run.estimate.log_gaps, short_config.alpha,
                          short_config.analysis.y_resolution, grid)
    records = energy_series(frames, nl, table)
    return RunArtifacts(
        config=short_config,
        snapshots=short_run.snapshots,
        probes=short_run.probes,
        estimate=short_run.estimate,
        frames=frames,
        records=records,
        ledger=energy_inequality_check(records),
        run_stats={"center_monotone": short_run.center_monotone},
    )


@pytest.fixture(scope="module")
def report(artifacts):
    return assemble_report(artifacts, "test")


class TestStats:
    def test_theil_sen(self):
        x = np.arange(10.0)
        assert theil_sen_slope(x, 3.0 - 2.0 * x) == pytest.approx(-2.0)
        assert math.isnan(theil_sen_slope([1.0], [1.0]))

    def test_decreasing_trend(self):
        x = np.arange(20.0)
        ok, slope = decreasing_trend(x, np.exp(-x))
        assert ok and slope < 0.0
        ok, _ = decreasing_trend(x, x)
        assert not ok

    def test_noise_floor_passes_flat_series(self):
        ok, _ = decreasing_trend(np.arange(12.0), np.full(12, 1e-12), noise_floor=1e-8)
        assert ok

    def test_bounded_last_window(self):
        ok, tail_max, ref = bounded_last_window(np.ones(20))
        assert ok and tail_max == 1.0 and ref == 1.0
        ok, _, _ = bounded_last_window(np.arange(1.0, 30.0) ** 2)
        assert not ok
        ok, _, ref = bounded_last_window([4.0, 1.0, 1.0, 1.0], reference="first_half_max")
        assert ok and ref == 4.0
        with pytest.raises(ValueError):
            bounded_last_window([1.0], reference="mean")
        assert bounded_last_window([])[0] is False

    def test_bounded_last_window_noise_floor(self):
        # a series that settles to exact zeros with one round-off blip at the end
        values = np.zeros(40)
        values[:5] = [1.0, 0.1, 1e-2, 1e-3, 1e-4]
        values[-1] = 2e-19
        ok, _, ref = bounded_last_window(values)
        assert not ok and ref == 0.0
        ok, _, _ = bounded_last_window(values, noise_floor=1e-8)
        assert ok
        ok, _, ref = bounded_last_window(values, reference="first_half_max")
        assert ok and ref == 1.0
        ok, _, _ = bounded_last_window(np.full(20, 1e-6), noise_floor=1e-8, factor=0.1)
        assert not ok

    def test_tail_decay_exponent(self):
        s = np.linspace(10.0, 100.0, 40)
        assert tail_decay_exponent(s, s ** -2.0) == pytest.approx(-2.0, rel=1e-10)
        assert math.isnan(tail_decay_exponent(s, np.zeros_like(s)))


class TestProfileLimit:
    def test_passes_on_the_limit_profile(self):
        frames = constant_frames(count=17, value=1.0 + 1e-12)
        series, result = checks.main_theorem_check(frames, 1.0)
        assert series.shape == (17, 2)
        assert result.verdict is Verdict.PASS
        assert result.statistic == pytest.approx(1e-12, rel=1e-3)

    def test_fails_when_the_deviation_stays_large(self):
        frames = constant_frames(count=17, value=1.5)
        _, result = checks.main_theorem_check(frames, 1.0)
        assert result.failed

    def test_short_s_range_is_under_resolved(self):
        _, result = checks.main_theorem_check(constant_frames(count=5), 1.0)
        assert result.verdict is Verdict.INFO
        assert result.detail["reason"] == "under-resolved"

    def test_frames_short_of_the_compact_set_are_skipped(self):
        series, result = checks.main_theorem_check(constant_frames(count=17), 100.0)
        assert series.shape == (0, 2)
        assert result.verdict is Verdict.INFO


class TestFrameChecks:
    def test_constant_frames_pass(self):
        frames = constant_frames(count=12)
        for result in (checks.positivity_check(frames), checks.lipschitz_check(frames),
                       checks.vs_bound_check(frames), checks.stationary_trend_check(frames)):
            assert result.verdict is Verdict.PASS, result.name

    def test_converged_frames_pass_the_bound_checks(self):
        # early frames carry an O(0.1) bump, then v settles to 1 with a small late wobble
        frames = constant_frames(count=20)
        for k in range(5):
            frames[k].v = 1.0 + 0.2 * 0.5 ** k * np.exp(-frames[k].y ** 2)
        frames[-2].v = 1.0 + 1e-5 * np.exp(-frames[-2].y ** 2)
        for result in (checks.lipschitz_check(frames), checks.vs_bound_check(frames)):
            assert result.verdict is Verdict.PASS, result.name
            assert 0.0 < result.statistic < 1e-4
            assert result.threshold > 1e-2

    def test_round_off_tail_passes_the_bound_checks(self):
        frames = constant_frames(count=20)
        frames[0].v = 1.0 + 0.2 * np.exp(-frames[0].y ** 2)
        frames[-1].v[3] = 1.0 + 2.0 ** -52
        for result in (checks.lipschitz_check(frames), checks.vs_bound_check(frames)):
            assert result.verdict is Verdict.PASS, result.name

    def test_growing_log_gradient_fails(self):
        frames = constant_frames(count=20)
        frames[0].v = 1.0 + 0.2 * np.exp(-frames[0].y ** 2)
        frames[-1].v = 1.0 + 2.0 * np.exp(-frames[-1].y ** 2)
        assert checks.lipschitz_check(frames).failed

    def test_vanishing_profile_fails_positivity(self):
        frames = constant_frames(count=12, value=0.5)
        assert checks.positivity_check(frames).failed

    def test_vs_bound_needs_three_frames(self):
        assert checks.vs_bound_check(constant_frames(count=2)).verdict is Verdict.INFO

    def test_stationary_identity_out_of_scope(self):
        result = checks.stationary_trend_check(constant_frames(count=3, n=3))
        assert result.verdict is Verdict.INFO


class TestEnergyChecks:
    def test_h_integrable_on_decaying_H(self):
        s = np.linspace(5.0, 60.0, 40)
        records = [EnergyRecord(si, 0.0, 0.0, 0.0, si ** -2.5, 0.0, si ** -2.5, 0.0) for si in s]
        result = checks.h_integrability_check(records)
        assert result.verdict is Verdict.PASS
        assert result.statistic == pytest.approx(-2.5, abs=0.1)

    def test_h_integrable_fails_on_slow_decay(self):
        s = np.linspace(5.0, 60.0, 40)
        records = [EnergyRecord(si, 0.0, 0.0, 0.0, si ** -0.5, 0.0, si ** -0.5, 0.0) for si in s]
        assert checks.h_integrability_check(records).failed

    def test_h_integrable_needs_records(self):
        assert checks.h_integrability_check([]).verdict is Verdict.INFO

    def test_ledger_fraction(self):
        rows = [LedgerRow(float(k), 0.0, 1.0, 0.0, True) for k in range(19)]
        rows.append(LedgerRow(19.0, 2.0, 1.0, 0.0, False))
        result = checks.energy_ledger_check(rows)
        assert result.statistic == pytest.approx(0.95)
        assert result.verdict is Verdict.PASS
        assert checks.energy_ledger_check([]).failed


class TestDerivativeSeries:
    @staticmethod
    def _series(n, nl_power):
        # power family: c = 1, so Φ_rr + cΦ_r² = w_rr/w and Φ_r/r = w_r/(r w) with w = e^Φ
        grid = RadialGrid(n, 2.0, 256)
        r = grid.r
        w = 1.0 - 1.2 * r ** 2 + 0.25 * r ** 4
        phi = 3.0 + np.log(np.clip(w, 1e-3, None))
        snap = Snapshot(t=0.0, phi=phi, umax=0.0, step_index=0)
        table = coefficient_table(nl_power, 50.0)
        return grid, checks.derivative_series([snap], [0.0], grid, table, radius_fraction=0.44)

    def test_line_uses_the_second_derivative(self, nl_power):
        _, series = self._series(1, nl_power)
        assert series.shape == (1, 3)
        assert series[0, 2] == pytest.approx(2.4, rel=1e-2)

    def test_plane_includes_the_angular_eigenvalue(self, nl_power):
        grid, series = self._series(2, nl_power)
        r = grid.r[grid.r <= 0.44 * grid.R][1:]
        w = 1.0 - 1.2 * r ** 2 + 0.25 * r ** 4
        angular = np.max(np.abs(-2.4 + r ** 2) / w)
        assert angular > 2.0 * 2.4
        assert series[0, 2] == pytest.approx(angular, rel=1e-2)


class TestQuasiScaling:
    def test_identity_scaling_on_probes(self, short_run, short_config, nl_p2q0, table_p2q0):
        grid = short_config.radial_grid()
        norm = checks.quasiscaling_residual(short_run.probes, grid, nl_p2q0, table_p2q0, 1.0)
        assert norm <= checks.QUASI_SCALING_TOL

    def test_half_scaling_on_consecutive_steps(self, short_run, short_config, nl_p2q0, table_p2q0):
        grid = short_config.radial_grid()
        norm = checks.quasiscaling_residual(short_run.probes, grid, nl_p2q0, table_p2q0, 0.5)
        assert 0.0 < norm <= checks.QUASI_SCALING_TOL

    def test_half_scaling_residual_shrinks_with_the_grid(self, nl_p2q0):
        # λ = ½ reads only r <= R/2, well inside the wall layer at t = 0.05
        norms = []
        for J in (64, 128, 256):
            grid, table, _, steps = advanced_state(J, 0.05, extra_steps=3)
            norms.append(checks.quasiscaling_residual(steps, grid, nl_p2q0, table, 0.5))
        orders = np.log2(np.array(norms[:-1]) / np.array(norms[1:]))
        assert np.all(orders >= 1.5), norms

    def test_rejects(self, short_run, short_config, nl_p2q0, table_p2q0):
        grid = short_config.radial_grid()
        with pytest.raises(DomainError):
            checks.quasiscaling_residual(short_run.probes, grid, nl_p2q0, table_p2q0, 1.5)
        with pytest.raises(DomainError):
            checks.quasiscaling_residual(short_run.probes[:2], grid, nl_p2q0, table_p2q0, 0.5)


class TestSuiteChecks:
    def test_rows_become_checks(self, nl_p2q0):
        rows = [SuiteRow("round_trip", "F^-1 definition", 1e-14, 1e-10, True, 3.0),
                SuiteRow("oracle_agreement", "F definition", 1e-6, 1e-10, False)]
        results = checks.suite_checks(nl_p2q0, rows)
        assert [r.name for r in results] == ["fn_round_trip", "fn_oracle_agreement"]
        assert results[0].detail == {"worst_u": 3.0}
        assert results[1].failed


class TestReport:
    def test_every_check_present(self, report):
        names = [c.name for c in report.checks]
        assert len(names) >= 10
        assert len(set(names)) == len(names)
        for expected in ("profile_limit", "h_alpha_lower_bound", "gradient_estimate", "hessian_estimate",
                         "quasi_scaling_lambda_1", "blowup_at_origin_only", "type_i_witness", "ode_lower_bound",
                         "energy_inequality", "leibniz_constant", "v_equation_residual", "fn_round_trip"):
            assert expected in names

    def test_checks_carry_anchor_and_threshold(self, report):
        for c in report.checks:
            assert isinstance(c, CheckResult)
            assert c.paper_anchor
            assert isinstance(c.verdict, Verdict)

    def test_to_dict_is_json_and_deterministic(self, artifacts, report):
        first = json.dumps(report.to_dict(), sort_keys=True)
        second = json.dumps(assemble_report(artifacts, "test").to_dict(), sort_keys=True)
        assert first == second
        data = json.loads(first)
        assert data["run_id"] == artifacts.config.run_id
        assert sum(data["summary"].values()) == len(report.checks)
        assert data["provenance"]["config_hash"] == artifacts.config.config_hash()

    def test_markdown(self, report):
        text = report.to_markdown()
        assert text.startswith(f"# Diagnostics report {report.run_id}")
        assert f"{len(report.checks)} checks, {len(report.failed)} failed." in text

    def test_missing_artifacts(self, artifacts):
        partial = RunArtifacts(config=artifacts.config, snapshots=artifacts.snapshots, probes=artifacts.probes,
                               estimate=artifacts.estimate)
        with pytest.raises(MissingArtifacts) as info:
            assemble_report(partial, "test")
        assert "frames" in info.value.missing
        assert "energy" in info.value.missing
        assert "snapshots" not in info.value.missing

    def test_failed_lists_fail_verdicts(self):
        results = [CheckResult("a", "x", 1.0, 0.0, Verdict.FAIL), CheckResult("b", "x", 0.0, 1.0, Verdict.PASS)]
        report = DiagnosticsReport("run", results, {})
        assert [c.name for c in report.failed] == ["a"]
        assert "✗ fail" in report.to_markdown()
