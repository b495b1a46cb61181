"""Binary-outcome GLMs with the Aranda-Ordaz link, fitted by Fisher scoring.

eta = log W_lambda(theta) covers the logistic model (lambda = 1), the
complementary log-log model (lambda = 0) and every link in between. Each
iteration solves a weighted least-squares problem through a column-pivoted QR
decomposition; a step that increases the deviance is halved.
"""

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
import scipy.linalg
from scipy.special import xlogy
from scipy.stats import norm

from errors import (
    DatasetError,
    DomainError,
    NotConverged,
    RankDeficient,
    SeparationWarning,
)
from link_family import MEAN_CLAMP, ArandaOrdazLink, clamp_mean

logger = logging.getLogger(__name__)

# Relative deviance increase tolerated as floating-point noise
DEVIANCE_SLACK = 1e-12


def _binary(values: np.ndarray, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float).reshape(-1)
    if not np.all((arr == 0.0) | (arr == 1.0)):
        raise DatasetError(f"{name} must contain only 0/1 values")
    return arr


@dataclass(frozen=True)
class Dataset:
    """Binary outcome rows with an optional binary exposure and covariates.

    ``weights`` are frequency weights; a row with weight k counts as k
    identical observations. ``exposure=None`` drops the exposure column from
    the design.
    """

    outcome: np.ndarray
    exposure: np.ndarray | None = None
    covariates: np.ndarray | None = None
    covariate_names: list[str] = field(default_factory=list)
    weights: np.ndarray | None = None
    outcome_name: str = "outcome"
    exposure_name: str = "exposure"

    def __post_init__(self):
        outcome = _binary(self.outcome, "outcome")
        n = outcome.size
        if n < 1:
            raise DatasetError("dataset must contain at least one row")
        object.__setattr__(self, "outcome", outcome)

        if self.exposure is not None:
            exposure = _binary(self.exposure, "exposure")
            if exposure.size != n:
                raise DatasetError("exposure and outcome differ in length")
            object.__setattr__(self, "exposure", exposure)

        covariates = (
            np.empty((n, 0))
            if self.covariates is None
            else np.asarray(self.covariates, dtype=float)
        )
        if covariates.ndim == 1:
            covariates = covariates.reshape(-1, 1)
        if covariates.shape[0] != n:
            raise DatasetError("covariates and outcome differ in row count")
        if not np.all(np.isfinite(covariates)):
            raise DatasetError("covariates must be finite numbers")
        names = list(self.covariate_names) or [
            f"x{j + 1}" for j in range(covariates.shape[1])
        ]
        if len(names) != covariates.shape[1]:
            raise DatasetError("one name is required per covariate column")
        object.__setattr__(self, "covariates", covariates)
        object.__setattr__(self, "covariate_names", names)

        if self.weights is not None:
            weights = np.asarray(self.weights, dtype=float).reshape(-1)
            if weights.size != n or not np.all(np.isfinite(weights) & (weights >= 0)):
                raise DatasetError("weights must be finite, nonnegative, one per row")
            object.__setattr__(self, "weights", weights)

    @property
    def n_rows(self) -> int:
        return self.outcome.size

    @property
    def prior_weights(self) -> np.ndarray:
        return np.ones(self.n_rows) if self.weights is None else self.weights

    @property
    def column_names(self) -> list[str]:
        names = ["intercept"]
        if self.exposure is not None:
            names.append(self.exposure_name)
        return names + self.covariate_names

    @property
    def exposure_index(self) -> int | None:
        return 1 if self.exposure is not None else None

    def design_matrix(self) -> np.ndarray:
        """[1 | exposure | covariates]"""
        columns = [np.ones((self.n_rows, 1))]
        if self.exposure is not None:
            columns.append(self.exposure.reshape(-1, 1))
        columns.append(self.covariates)
        return np.hstack(columns)

    def collapsed(self) -> "Dataset":
        """Aggregate identical rows into frequency weights.

        The likelihood, and therefore the fit, is unchanged.
        """
        parts = [self.outcome.reshape(-1, 1)]
        if self.exposure is not None:
            parts.append(self.exposure.reshape(-1, 1))
        parts.append(self.covariates)
        rows = np.hstack(parts)
        keep = self.prior_weights > 0
        unique, inverse = np.unique(rows[keep], axis=0, return_inverse=True)
        counts = np.bincount(
            inverse.reshape(-1),
            weights=self.prior_weights[keep],
            minlength=unique.shape[0],
        )
        offset = 2 if self.exposure is not None else 1
        return Dataset(
            outcome=unique[:, 0],
            exposure=unique[:, 1] if self.exposure is not None else None,
            covariates=unique[:, offset:],
            covariate_names=self.covariate_names,
            weights=counts,
            outcome_name=self.outcome_name,
            exposure_name=self.exposure_name,
        )

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({self.outcome_name: self.outcome.astype(int)})
        if self.exposure is not None:
            frame[self.exposure_name] = self.exposure.astype(int)
        for j, name in enumerate(self.covariate_names):
            frame[name] = self.covariates[:, j]
        if self.weights is not None:
            frame["weight"] = self.weights
        return frame


@dataclass(frozen=True)
class FitOptions:
    """IRLS controls.

    Convergence needs |dev_t - dev_{t-1}| / (|dev_t| + 0.1) < tol and, unless
    ``score_tol`` is None, a max-abs score below ``score_tol``.
    """

    max_iter: int = 100
    tol: float = 1e-8
    score_tol: float | None = 1e-7
    max_halvings: int = 20
    separation_bound: float = 30.0
    mean_clamp: float = MEAN_CLAMP

    @classmethod
    def from_config(cls, config, **overrides) -> "FitOptions":
        values = {
            "max_iter": config.MAX_ITER,
            "tol": config.TOL,
            "score_tol": config.SCORE_TOL,
            "max_halvings": config.MAX_HALVINGS,
            "separation_bound": config.SEPARATION_BOUND,
            "mean_clamp": config.MEAN_CLAMP,
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


@dataclass(frozen=True)
class GlmFit:
    """Result of one IRLS fit at a fixed lambda"""

    lam: float
    coefficients: np.ndarray
    standard_errors: np.ndarray
    covariance: np.ndarray
    column_names: list[str]
    deviance: float
    iterations: int
    converged: bool
    fitted_means: np.ndarray
    exposure_index: int | None = None
    separation: bool = False
    weights: np.ndarray | None = None  # prior frequency weights used in the fit

    @property
    def exp_coefficients(self) -> np.ndarray:
        return np.exp(self.coefficients)

    @property
    def exposure_effect(self) -> float:
        """exp(beta_exposure): the fitted WR(lambda)"""
        if self.exposure_index is None:
            raise DomainError("model was fitted without an exposure column")
        return float(np.exp(self.coefficients[self.exposure_index]))

    def coef_index(self, name: str) -> int:
        try:
            return self.column_names.index(name)
        except ValueError as e:
            raise DomainError(f"no coefficient named {name!r}") from e


def deviance(y, mu, weights=None, eps: float = MEAN_CLAMP) -> float:
    """Bernoulli deviance -2 sum[y log mu + (1 - y) log(1 - mu)].

    The saturated log-likelihood is 0 for binary y, so nothing is subtracted.
    """
    y = np.asarray(y, dtype=float)
    mu = clamp_mean(np.asarray(mu, dtype=float), eps)
    if y.shape != mu.shape:
        raise DomainError("y and mu must have equal length")
    w = np.ones_like(y) if weights is None else np.asarray(weights, dtype=float)
    value = -2.0 * np.sum(w * (xlogy(y, mu) + xlogy(1.0 - y, 1.0 - mu)))
    return max(float(value), 0.0)


def log_likelihood(y, mu, weights=None) -> float:
    return -0.5 * deviance(y, mu, weights)


def _numerical_rank(r: np.ndarray, shape: tuple[int, int]) -> int:
    diag = np.abs(np.diag(r))
    if diag.size == 0 or diag[0] == 0.0:
        return 0
    tol = diag[0] * max(shape) * np.finfo(float).eps
    return int(np.sum(diag > tol))


def _pivoted_qr(matrix: np.ndarray, names: list[str]):
    k = matrix.shape[1]
    q, r, piv = scipy.linalg.qr(matrix, mode="economic", pivoting=True)
    rank = _numerical_rank(r, matrix.shape)
    if rank < k or matrix.shape[0] < k:
        dependent = [names[j] for j in piv[rank:]]
        raise RankDeficient(
            f"design matrix has rank {rank} < {k}; dependent columns: "
            + ", ".join(dependent),
            columns=dependent,
        )
    return q, r, piv


def _working_weights(family: ArandaOrdazLink, eta, mu, prior):
    """Square roots of the Fisher weights prior * (dmu/deta)^2 / (mu (1 - mu))."""
    sd = np.sqrt(family.variance(mu))
    return np.sqrt(prior) * family.dmu_deta(eta) / sd, sd


def _fisher_step(family, X, y, prior, eta, mu, names) -> np.ndarray:
    sqrt_w, sd = _working_weights(family, eta, mu, prior)
    # sqrt(w) * z with z = eta + (y - mu) / (dmu/deta), written without the division
    target = sqrt_w * eta + np.sqrt(prior) * (y - mu) / sd
    q, r, piv = _pivoted_qr(sqrt_w[:, None] * X, names)
    coef = np.empty(X.shape[1])
    coef[piv] = scipy.linalg.solve_triangular(r, q.T @ target)
    return coef


def _covariance(family, X, prior, eta, mu, names) -> np.ndarray:
    sqrt_w, _ = _working_weights(family, eta, mu, prior)
    _, r, piv = _pivoted_qr(sqrt_w[:, None] * X, names)
    k = X.shape[1]
    r_inv = scipy.linalg.solve_triangular(r, np.eye(k))
    cov = np.empty((k, k))
    cov[np.ix_(piv, piv)] = r_inv @ r_inv.T
    return cov


def _score(family, X, y, prior, eta, mu) -> np.ndarray:
    resid = prior * (y - mu) * family.dmu_deta(eta) / family.variance(mu)
    return X.T @ resid


def score_vector(fit: GlmFit, data: Dataset) -> np.ndarray:
    """Gradient of the log-likelihood at the fitted coefficients"""
    family = ArandaOrdazLink(fit.lam)
    X = data.design_matrix()
    eta = X @ fit.coefficients
    return _score(family, X, data.outcome, data.prior_weights, eta, family.inverse(eta))


def fit(data: Dataset, lam: float, options: FitOptions | None = None) -> GlmFit:
    """Maximum-likelihood fit of P(Y = 1 | x) = inverse_link(x beta, lambda).

    Raises RankDeficient for a singular design and NotConverged (with the
    partial fit attached) when max_iter runs out or step halving fails.
    Diverging coefficients trigger a SeparationWarning, never a change of link.
    Only |beta| > separation_bound is flagged: quasi-complete separation (one
    arm all events, say) stops at a large finite coefficient, around 22 under
    the logit, and comes back as a converged fit.
    """
    options = options or FitOptions()
    family = ArandaOrdazLink(lam, options.mean_clamp)
    X = data.design_matrix()
    y = data.outcome
    prior = data.prior_weights
    names = data.column_names

    _pivoted_qr(np.sqrt(prior)[:, None] * X, names)

    beta = np.zeros(X.shape[1])
    y_bar = float(np.sum(prior * y) / np.sum(prior))
    beta[0] = family.link(float(np.clip(y_bar, 0.01, 0.99)))
    eta = X @ beta
    mu = family.inverse(eta)
    dev = deviance(y, mu, prior, options.mean_clamp)

    converged = False
    stalled = False
    iterations = 0
    for iteration in range(1, options.max_iter + 1):
        iterations = iteration
        step = _fisher_step(family, X, y, prior, eta, mu, names) - beta

        halvings = 0
        while True:
            candidate = beta + step / 2.0**halvings
            cand_eta = X @ candidate
            cand_mu = family.inverse(cand_eta)
            cand_dev = deviance(y, cand_mu, prior, options.mean_clamp)
            if np.isfinite(cand_dev) and cand_dev <= dev + DEVIANCE_SLACK * (
                abs(dev) + 0.1
            ):
                break
            halvings += 1
            if halvings > options.max_halvings:
                stalled = True
                break
        if stalled:
            break

        change = abs(cand_dev - dev) / (abs(cand_dev) + 0.1)
        beta, eta, mu, dev = candidate, cand_eta, cand_mu, cand_dev
        logger.debug(
            "%s iteration %d: deviance=%.12g halvings=%d",
            family.name,
            iteration,
            dev,
            halvings,
        )
        if change < options.tol:
            if options.score_tol is None:
                converged = True
                break
            score = _score(family, X, y, prior, eta, mu)
            if np.max(np.abs(score)) < options.score_tol:
                converged = True
                break

    covariance = _covariance(family, X, prior, eta, mu, names)
    separation = bool(np.any(np.abs(beta) > options.separation_bound))
    result = GlmFit(
        lam=family.lam,
        coefficients=beta,
        standard_errors=np.sqrt(np.clip(np.diag(covariance), 0.0, None)),
        covariance=covariance,
        column_names=names,
        deviance=dev,
        iterations=iterations,
        converged=converged,
        fitted_means=mu,
        exposure_index=data.exposure_index,
        separation=separation,
        weights=prior,
    )

    if separation:
        warnings.warn(
            f"{family.name} fit has |coefficient| > {options.separation_bound:g}; "
            "the data may be separated",
            SeparationWarning,
            stacklevel=2,
        )
    if not converged:
        reason = (
            f"step halving failed {options.max_halvings} times"
            if stalled
            else f"no convergence within {options.max_iter} iterations"
        )
        logger.warning("%s fit: %s", family.name, reason)
        raise NotConverged(f"{family.name} fit: {reason}", fit=result)
    return result


def wald_interval(
    fit: GlmFit, coef_index: int, level: float = 0.95
) -> tuple[float, float]:
    """exp(beta_j -/+ z * SE_j), the Wald interval on the ratio scale"""
    if not fit.converged:
        raise NotConverged("Wald interval requested for an unconverged fit", fit=fit)
    if not 0.0 < level < 1.0:
        raise DomainError(f"level must lie strictly inside (0,1), got {level!r}")
    if not 0 <= coef_index < fit.coefficients.size:
        raise DomainError(f"coefficient index {coef_index} out of range")
    return wald_bounds(
        fit.coefficients[coef_index], fit.standard_errors[coef_index], level
    )


def wald_bounds(beta: float, se: float, level: float) -> tuple[float, float]:
    z = norm.ppf(0.5 + level / 2.0)
    return float(np.exp(beta - z * se)), float(np.exp(beta + z * se))
