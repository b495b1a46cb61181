"""Tests for approximation curves, the Monte Carlo harness and the grid sweep."""

import math

import numpy as np
import pandas as pd
import pytest
from pydantic import ValidationError

from errors import AllReplicationsFailed, DomainError, EmptyGrid
from models import CurveSpec, SimSpec
from study_harness import (
    CURVE_COLUMNS,
    SIMULATION_COLUMNS,
    build_curve_spec,
    generate_curve,
    prevalence_grid,
    replication_rng,
    run_simulation,
    sample_two_group_dataset,
    verify_sweep,
)

# ---------------------------------------------------------------------------
# Curves
# ---------------------------------------------------------------------------


class TestPrevalenceGrid:
    def test_step_of_one_hundredth(self):
        grid = prevalence_grid(0.01)
        assert len(grid) == 99
        assert grid[0] == 0.01 and grid[-1] == 0.99

    def test_excludes_one(self):
        assert prevalence_grid(0.25) == [0.25, 0.5, 0.75]

    @pytest.mark.parametrize("step", [0.0, 1.0, -0.1])
    def test_rejects_bad_step(self, step):
        with pytest.raises(DomainError):
            prevalence_grid(step)


class TestCurve:
    def test_header_and_ordering(self):
        table = generate_curve(build_curve_spec(1.25, 0.01, [1.0, 0.0, 0.5]))
        assert list(table.columns) == CURVE_COLUMNS
        assert table["lambda"].is_monotonic_increasing
        for _, group in table.groupby("lambda"):
            assert group["p0"].is_monotonic_increasing

    def test_inadmissible_prevalences_are_excluded(self):
        spec = build_curve_spec(1.25, 0.01, [0.0, 0.5, 1.0])
        assert spec.excluded == 20
        assert max(spec.prevalence_grid) == pytest.approx(0.79)
        table = generate_curve(spec)
        assert len(table) == 3 * 79
        assert (table["p1"] < 1).all()

    def test_harmful_exposure_ordering(self):
        """RR 1.25: CLR < WR(0.5) < OR at every p0, all above 1.25."""
        table = generate_curve(build_curve_spec(1.25, 0.01, [0.0, 0.5, 1.0]))
        wide = table.pivot(index="p0", columns="lambda", values="wr")
        assert (wide[0.0] < wide[0.5]).all()
        assert (wide[0.5] < wide[1.0]).all()
        assert (wide > 1.25).all().all()

    def test_protective_exposure_ordering(self):
        """RR 0.5: OR < WR(0.5) < CLR at every p0, all below 0.5."""
        table = generate_curve(build_curve_spec(0.5, 0.01, [0.0, 0.5, 1.0]))
        wide = table.pivot(index="p0", columns="lambda", values="wr")
        assert len(wide) == 99
        assert (wide[1.0] < wide[0.5]).all()
        assert (wide[0.5] < wide[0.0]).all()
        assert (wide < 0.5).all().all()

    @pytest.mark.parametrize("rr", [1.25, 2.0])
    def test_wr_nondecreasing_in_baseline_risk(self, rr):
        table = generate_curve(build_curve_spec(rr, 0.01, [0.0, 0.5, 1.0]))
        for _, group in table.groupby("lambda"):
            assert (np.diff(group["wr"].to_numpy()) >= 0).all()

    def test_discrepancy_column(self):
        table = generate_curve(build_curve_spec(2.0, 0.25, [1.0]))
        row = table.iloc[0]
        assert row["p0"] == 0.25
        assert row["b"] == pytest.approx(1.5, rel=1e-12)

    def test_empty_grid(self):
        spec = build_curve_spec(200.0, 0.01, [0.5])
        assert spec.prevalence_grid == []
        with pytest.raises(EmptyGrid):
            generate_curve(spec)

    def test_spec_rejects_bad_lambda(self):
        with pytest.raises(ValidationError):
            CurveSpec(rr=1.25, prevalence_grid=[0.1], lambdas=[1.5])


# ---------------------------------------------------------------------------
# Grid sweep
# ---------------------------------------------------------------------------


class TestVerifySweep:
    def test_coarse_grid_has_no_violations(self):
        report = verify_sweep(0.05, 10)
        assert report.pairs_checked == 342
        assert report.lemma1_violations == 0
        assert report.monotonicity_violations == 0
        assert report.corollary_violations == 0
        assert report.passed

    def test_coarse_grid_worst_case(self):
        worst = verify_sweep(0.05, 10).worst_case
        assert {worst.p0, worst.p1} == {0.05, 0.95}
        assert worst.lam == 1.0
        assert worst.value == pytest.approx(19.0, rel=1e-9)

    def test_fine_grid_has_no_violations(self):
        report = verify_sweep(0.01, 100)
        assert report.pairs_checked == 99 * 98
        assert report.passed
        assert report.worst_case.value == pytest.approx(99.0, rel=1e-9)

    @pytest.mark.parametrize(
        "grid_step, lambda_steps", [(0.0, 10), (0.2, 10), (0.05, 1)]
    )
    def test_rejects_bad_arguments(self, grid_step, lambda_steps):
        with pytest.raises(DomainError):
            verify_sweep(grid_step, lambda_steps)


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------


def _spec(**overrides) -> SimSpec:
    values = {
        "n_per_group": 200,
        "p0": 0.3,
        "rr": 1.5,
        "lambdas": [0.0, 0.5, 1.0],
        "replications": 20,
        "seed": 11,
    }
    values.update(overrides)
    return SimSpec(**values)


class TestSimSpec:
    def test_rejects_inadmissible_exposed_risk(self):
        with pytest.raises(ValidationError, match="rr \\* p0 must be below 1"):
            _spec(p0=0.5, rr=2.0)

    def test_rejects_small_groups(self):
        with pytest.raises(ValidationError, match="n_per_group"):
            _spec(n_per_group=5)

    def test_rejects_seed_above_64_bits(self):
        with pytest.raises(ValidationError):
            _spec(seed=2**64)

    def test_exposed_risk(self):
        assert _spec().p1 == pytest.approx(0.45)


class TestSampling:
    def test_stream_depends_only_on_seed_and_index(self):
        a = replication_rng(5, 3).random(4)
        b = replication_rng(5, 3).random(4)
        c = replication_rng(5, 4).random(4)
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_two_group_layout(self):
        data = sample_two_group_dataset(50, 0.2, 0.4, replication_rng(1, 0))
        assert data.n_rows == 100
        np.testing.assert_array_equal(data.exposure, np.repeat([0.0, 1.0], 50))
        assert set(np.unique(data.outcome)) <= {0.0, 1.0}


class TestRunSimulation:
    def test_table_shape(self):
        table = run_simulation(_spec())
        assert list(table.columns) == SIMULATION_COLUMNS
        assert table["lambda"].tolist() == [0.0, 0.5, 1.0]
        assert (table["true_rr"] == 1.5).all()
        assert (table["fit_failures"] == 0).all()

    def test_true_wr_column(self):
        table = run_simulation(_spec(lambdas=[1.0]))
        expected = (0.45 / 0.55) / (0.3 / 0.7)
        assert table["true_wr"].iloc[0] == pytest.approx(expected, rel=1e-12)

    def test_identical_across_worker_counts(self):
        spec = _spec(replications=30)
        serial = run_simulation(spec, workers=1)
        threaded = run_simulation(spec, workers=4)
        pd.testing.assert_frame_equal(serial, threaded, check_exact=True)

    def test_identical_across_runs(self):
        pd.testing.assert_frame_equal(
            run_simulation(_spec()), run_simulation(_spec()), check_exact=True
        )

    def test_degenerate_replications_are_counted(self):
        spec = _spec(n_per_group=20, p0=0.05, rr=2.0, replications=100, lambdas=[1.0])
        failures = int(run_simulation(spec)["fit_failures"].iloc[0])
        assert 0 < failures < 100

    def test_all_replications_failing_raises(self):
        spec = _spec(n_per_group=10, p0=1e-7, rr=2.0, replications=5, lambdas=[0.5])
        with pytest.raises(AllReplicationsFailed):
            run_simulation(spec)

    def test_consistency_with_population_wr(self):
        """Large arms: mean exp(beta_1) sits on WR(lambda), not on RR."""
        spec = SimSpec(
            n_per_group=10000,
            p0=0.4,
            rr=1.25,
            lambdas=[0.0, 1.0],
            replications=500,
            seed=42,
        )
        table = run_simulation(spec, workers=4).set_index("lambda")
        for lam, expected in ((0.0, math.log(0.5) / math.log(0.6)), (1.0, 1.5)):
            row = table.loc[lam]
            assert row["true_wr"] == pytest.approx(expected, rel=1e-12)
            assert abs(row["mean_exp_beta1"] - expected) < 3 * row["mc_standard_error"]
            assert row["mean_bias_vs_rr"] > 0

    @pytest.mark.parametrize(
        "n_per_group, p0, replications, seed",
        [(2000, 0.3, 200, 2024), (10000, 0.4, 500, 42)],
    )
    def test_null_effect_is_calibrated(self, n_per_group, p0, replications, seed):
        spec = SimSpec(
            n_per_group=n_per_group,
            p0=p0,
            rr=1.0,
            lambdas=[0.0, 0.5, 1.0],
            replications=replications,
            seed=seed,
        )
        table = run_simulation(spec, workers=2)
        for _, row in table.iterrows():
            assert row["true_wr"] == 1.0
            assert abs(row["mean_exp_beta1"] - 1.0) < 3 * row["mc_standard_error"]
