import logging
import math
from collections.abc import Sequence

import numpy as np
import pandas as pd
from pydantic import ValidationError

from data_loader import DatasetLoader
from effect_measures import measure_report
from glm_irls import FitOptions, GlmFit, fit, wald_bounds
from models import MeasureReport, RiskPair, SimSpec, SweepReport
from study_harness import (
    build_curve_spec,
    generate_curve,
    replication_rng,
    run_simulation,
    sample_two_group_dataset,
    verify_sweep,
)

logger = logging.getLogger(__name__)

FIT_COLUMNS = [
    "term",
    "coefficient",
    "exp_coefficient",
    "std_error",
    "ci_lower",
    "ci_upper",
]


def validation_message(error: ValidationError) -> str:
    """First pydantic error as one line, e.g. "p0 must lie strictly inside (0,1)"."""
    first = error.errors()[0]
    message = str(first.get("msg", error))
    message = message.removeprefix("Value error, ")
    location = ".".join(str(part) for part in first.get("loc", ()))
    if location and location not in message:
        return f"{location}: {message}"
    return message


def measures_table(report: MeasureReport) -> pd.DataFrame:
    """One row per lambda with RR, OR and CLR repeated"""
    lambdas = list(report.wr)
    return pd.DataFrame(
        {
            "p0": report.p0,
            "p1": report.p1,
            "rr": report.rr,
            "or": report.or_,
            "clr": report.clr,
            "lambda": lambdas,
            "wr": [report.wr[lam] for lam in lambdas],
            "b": [report.b[lam] for lam in lambdas],
        },
        columns=["p0", "p1", "rr", "or", "clr", "lambda", "wr", "b"],
    )


def coefficient_table(result: GlmFit, level: float = 0.95) -> pd.DataFrame:
    """Coefficients with Wald intervals; intervals are NaN for an unconverged fit."""
    rows = []
    for j, name in enumerate(result.column_names):
        beta = float(result.coefficients[j])
        se = float(result.standard_errors[j])
        if result.converged:
            lower, upper = wald_bounds(beta, se, level)
        else:
            lower = upper = math.nan
        rows.append(
            {
                "term": name,
                "coefficient": beta,
                "exp_coefficient": math.exp(beta),
                "std_error": se,
                "ci_lower": lower,
                "ci_upper": upper,
            }
        )
    return pd.DataFrame(rows, columns=FIT_COLUMNS)


def fit_summary(result: GlmFit) -> dict:
    return {
        "lambda": result.lam,
        "deviance": result.deviance,
        "iterations": result.iterations,
        "converged": result.converged,
        "separation": result.separation,
    }


def sweep_summary(report: SweepReport) -> dict:
    worst = report.worst_case
    return {
        "grid_step": report.grid_step,
        "lambda_steps": report.lambda_steps,
        "pairs_checked": report.pairs_checked,
        "lemma1_violations": report.lemma1_violations,
        "monotonicity_violations": report.monotonicity_violations,
        "corollary_violations": report.corollary_violations,
        "worst_p0": worst.p0 if worst else math.nan,
        "worst_p1": worst.p1 if worst else math.nan,
        "worst_lambda": worst.lam if worst else math.nan,
        "worst_b": worst.value if worst else math.nan,
        "passed": report.passed,
    }


def frame_columns(frame: pd.DataFrame) -> dict[str, list]:
    """Column name -> values, with NaN mapped to None for JSON."""
    return {
        name: [json_value(v) for v in frame[name].tolist()] for name in frame.columns
    }


def json_value(value):
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and math.isnan(value):
        return None
    return value


class AnalysisService:
    """Entry point shared by the command line and the HTTP API.

    Reads defaults from ``config`` and hands explicit values to the library
    functions, which never consult the configuration themselves.
    """

    def __init__(self, config):
        self.config = config
        self.loader = DatasetLoader()

    def fit_options(
        self, tol: float | None = None, max_iter: int | None = None
    ) -> FitOptions:
        return FitOptions.from_config(self.config, tol=tol, max_iter=max_iter)

    def measures(
        self, p0: float, p1: float, lambdas: Sequence[float] | None = None
    ) -> MeasureReport:
        pair = RiskPair(p0=p0, p1=p1)
        return measure_report(
            pair, self.config.LAMBDA_GRID if lambdas is None else lambdas
        )

    def curve(
        self,
        rr: float,
        lambdas: Sequence[float] | None = None,
        step: float | None = None,
    ) -> pd.DataFrame:
        spec = build_curve_spec(
            rr,
            self.config.CURVE_STEP if step is None else step,
            self.config.LAMBDA_GRID if lambdas is None else lambdas,
        )
        return generate_curve(spec)

    def fit_csv(
        self,
        source,
        outcome: str,
        exposure: str | None,
        lam: float,
        covariates: Sequence[str] = (),
        tol: float | None = None,
        max_iter: int | None = None,
    ) -> GlmFit:
        """Load ``source`` and fit it at ``lam``.

        RankDeficient and NotConverged propagate; the latter carries the
        partial fit for reporting.
        """
        data = self.loader.load(source, outcome, exposure, covariates)
        logger.info(
            "Fitting %d rows, columns %s, lambda=%g",
            data.n_rows,
            data.column_names,
            lam,
        )
        return fit(data, lam, self.fit_options(tol=tol, max_iter=max_iter))

    def simulate(
        self,
        n_per_group: int,
        p0: float,
        rr: float,
        replications: int,
        seed: int,
        lambdas: Sequence[float] | None = None,
        workers: int | None = None,
        sample_csv=None,
    ) -> pd.DataFrame:
        spec = SimSpec(
            n_per_group=n_per_group,
            p0=p0,
            rr=rr,
            lambdas=list(self.config.LAMBDA_GRID if lambdas is None else lambdas),
            replications=replications,
            seed=seed,
        )
        if sample_csv is not None:
            self.write_sample(spec, sample_csv)
        return run_simulation(
            spec,
            workers=self.config.SIM_WORKERS if workers is None else workers,
            options=self.fit_options(),
        )

    def write_sample(self, spec: SimSpec, path) -> None:
        """Write replication 0's two-group dataset as CSV"""
        data = sample_two_group_dataset(
            spec.n_per_group, spec.p0, spec.p1, replication_rng(spec.seed, 0)
        )
        self.loader.write_csv(data, path)
        logger.info("Wrote replication 0 sample (%d rows) to %s", data.n_rows, path)

    def verify(
        self, grid_step: float | None = None, lambda_steps: int | None = None
    ) -> SweepReport:
        return verify_sweep(
            self.config.SWEEP_GRID_STEP if grid_step is None else grid_step,
            self.config.SWEEP_LAMBDA_STEPS if lambda_steps is None else lambda_steps,
        )
