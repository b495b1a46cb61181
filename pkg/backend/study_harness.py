"""Approximation curves, Monte Carlo bias studies and grid verification.

Curves fix the true risk ratio and sweep the unexposed risk p0 (with
p1 = rr * p0). Simulations draw two equal Bernoulli arms per replication from a
generator keyed by (seed, replication index), so serial and threaded runs agree
bit for bit. The sweep checks the over/underestimation law, the monotonicity of
B(lambda) and the CLR-versus-OR inequality on a (p0, p1, lambda) grid.
"""

import logging
from collections.abc import Iterable
from concurrent.futures import ThreadPoolExecutor
from functools import partial

import numpy as np
import pandas as pd

from effect_measures import (
    discrepancy_grid,
    strictly_increasing_rows,
    wr,
    wr_grid,
)
from errors import (
    AllReplicationsFailed,
    DomainError,
    EmptyGrid,
    NotConverged,
    RankDeficient,
)
from glm_irls import Dataset, FitOptions, fit
from models import CurveSpec, RiskPair, SimSpec, SweepReport, WorstCase

logger = logging.getLogger(__name__)

CURVE_COLUMNS = ["p0", "p1", "lambda", "wr", "b"]
SIMULATION_COLUMNS = [
    "lambda",
    "mean_exp_beta1",
    "sd_exp_beta1",
    "mc_standard_error",
    "true_wr",
    "true_rr",
    "mean_bias_vs_rr",
    "fit_failures",
]


def prevalence_grid(step: float) -> list[float]:
    """{step, 2 step, ...} strictly below 1, rounded to 12 decimals"""
    if not 0.0 < step < 1.0:
        raise DomainError(f"step must lie strictly inside (0,1), got {step!r}")
    count = int(np.floor(1.0 / step + 1e-9))
    values = [round(k * step, 12) for k in range(1, count + 1)]
    return [v for v in values if v < 1.0]


def build_curve_spec(rr: float, step: float, lambdas: Iterable[float]) -> CurveSpec:
    spec = CurveSpec(
        rr=rr, prevalence_grid=prevalence_grid(step), lambdas=list(lambdas)
    )
    if spec.excluded:
        logger.info(
            "Excluded %d prevalence points with rr * p0 >= 1 (rr=%g)",
            spec.excluded,
            rr,
        )
    return spec


def generate_curve(spec: CurveSpec) -> pd.DataFrame:
    """WR(lambda) and B(lambda) at every admissible p0, ordered by (lambda, p0)."""
    if not spec.prevalence_grid:
        raise EmptyGrid(f"no prevalence p0 satisfies rr * p0 < 1 for rr={spec.rr:g}")

    p0 = np.asarray(spec.prevalence_grid, dtype=float)
    p1 = spec.rr * p0
    frames = []
    for lam in sorted(set(spec.lambdas)):
        frames.append(
            pd.DataFrame(
                {
                    "p0": p0,
                    "p1": p1,
                    "lambda": lam,
                    "wr": wr_grid(p0, p1, lam),
                    "b": discrepancy_grid(p0, p1, lam),
                }
            )
        )
    return pd.concat(frames, ignore_index=True)[CURVE_COLUMNS]


def replication_rng(seed: int, index: int) -> np.random.Generator:
    """Counter-based Philox stream for one replication"""
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,)))
    )


def sample_two_group_dataset(
    n_per_group: int, p0: float, p1: float, rng: np.random.Generator
) -> Dataset:
    """n_per_group Bernoulli(p0) unexposed rows, then n_per_group Bernoulli(p1) rows"""
    unexposed = rng.random(n_per_group) < p0
    exposed = rng.random(n_per_group) < p1
    return Dataset(
        outcome=np.concatenate([unexposed, exposed]).astype(float),
        exposure=np.repeat([0.0, 1.0], n_per_group),
    )


def _run_replication(spec: SimSpec, index: int, options: FitOptions) -> np.ndarray:
    """exp(beta_1) at each lambda; NaN where the replication is excluded or fails"""
    estimates = np.full(len(spec.lambdas), np.nan)
    data = sample_two_group_dataset(
        spec.n_per_group, spec.p0, spec.p1, replication_rng(spec.seed, index)
    )
    n = spec.n_per_group
    events = (
        data.outcome[:n].sum(),
        data.outcome[n:].sum(),
    )
    if any(k in (0, n) for k in events):
        logger.debug("replication %d degenerate (events=%s)", index, events)
        return estimates

    collapsed = data.collapsed()
    for j, lam in enumerate(spec.lambdas):
        try:
            estimates[j] = fit(collapsed, lam, options).exposure_effect
        except (NotConverged, RankDeficient) as e:
            logger.debug("replication %d lambda=%g failed: %s", index, lam, e)
    return estimates


def run_simulation(
    spec: SimSpec, workers: int = 1, options: FitOptions | None = None
) -> pd.DataFrame:
    """Mean, SD and Monte Carlo SE of exp(beta_1) per lambda.

    Output depends only on ``spec``: replications are collected in index order
    whatever the number of worker threads.
    """
    options = options or FitOptions()
    run = partial(_run_replication, spec, options=options)
    indices = range(spec.replications)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            results = list(executor.map(run, indices))
    else:
        results = [run(i) for i in indices]
    matrix = np.vstack(results)

    pair = RiskPair(p0=spec.p0, p1=spec.p1)
    rows = []
    for j, lam in enumerate(spec.lambdas):
        column = matrix[:, j]
        ok = column[~np.isnan(column)]
        failures = spec.replications - ok.size
        if ok.size == 0:
            raise AllReplicationsFailed(
                f"all {spec.replications} replications failed at lambda={lam:g}"
            )
        if failures:
            logger.info("lambda=%g: %d replications excluded", lam, failures)
        mean = float(np.mean(ok))
        sd = float(np.std(ok, ddof=1)) if ok.size > 1 else 0.0
        rows.append(
            {
                "lambda": lam,
                "mean_exp_beta1": mean,
                "sd_exp_beta1": sd,
                "mc_standard_error": sd / np.sqrt(ok.size),
                "true_wr": wr(pair, lam),
                "true_rr": spec.rr,
                "mean_bias_vs_rr": mean - spec.rr,
                "fit_failures": int(failures),
            }
        )
    return pd.DataFrame(rows, columns=SIMULATION_COLUMNS)


def verify_sweep(grid_step: float, lambda_steps: int) -> SweepReport:
    """Count grid violations of the sign law, B monotonicity and CLR < OR.

    p0 and p1 range over {grid_step, 2 grid_step, ...} with p0 != p1; lambda
    over lambda_steps + 1 evenly spaced points of [0, 1].
    """
    if not 0.0 < grid_step <= 0.1:
        raise DomainError(f"grid_step must lie in (0, 0.1], got {grid_step!r}")
    if lambda_steps < 2:
        raise DomainError(f"lambda_steps must be at least 2, got {lambda_steps!r}")

    grid = np.asarray(prevalence_grid(grid_step))
    p0, p1 = np.meshgrid(grid, grid, indexing="ij")
    off_diagonal = p0 != p1
    p0, p1 = p0[off_diagonal], p1[off_diagonal]
    lambdas = np.linspace(0.0, 1.0, lambda_steps + 1)

    w = wr_grid(p0[:, None], p1[:, None], lambdas[None, :])
    rr = (p1 / p0)[:, None]
    b = np.maximum(w / rr, rr / w)

    over = (p0 < p1)[:, None]
    lemma_bad = np.where(over, ~(w > rr), ~(w < rr))
    monotone_bad = ~strictly_increasing_rows(b, p0, p1)
    corollary_bad = ~(b[:, 0] < b[:, -1])

    worst = int(np.argmax(b[:, -1]))
    report = SweepReport(
        grid_step=grid_step,
        lambda_steps=lambda_steps,
        pairs_checked=int(p0.size),
        lemma1_violations=int(lemma_bad.sum()),
        monotonicity_violations=int(monotone_bad.sum()),
        corollary_violations=int(corollary_bad.sum()),
        worst_case=WorstCase(
            p0=float(p0[worst]),
            p1=float(p1[worst]),
            lam=1.0,
            value=float(b[worst, -1]),
        ),
    )
    logger.info(
        "Sweep over %d pairs: %d/%d/%d violations",
        report.pairs_checked,
        report.lemma1_violations,
        report.monotonicity_violations,
        report.corollary_violations,
    )
    return report
