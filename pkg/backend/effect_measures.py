"""Effect measures for a binary exposure and binary outcome.

RR, OR and CLR, the generalized ratio WR(lambda) = W_lambda(p1) / W_lambda(p0)
and the discrepancy B(lambda) = max(RR / WR, WR / RR). WR is computed as
expm1(lambda * b) / expm1(lambda * a) with a = -log(1 - p0), b = -log(1 - p1),
the same arithmetic the monotonicity argument is carried out in.
"""

from collections.abc import Iterable

import numpy as np

from errors import DomainError
from link_family import expm1_over, validate_lambda, w_inverse, w_transform
from models import LemmaBranch, MeasureReport, RiskPair

# Below this, h(x) is returned as its limit 1
H_SMALL_X = 1e-12

# Below this, log_wr_slope uses its Taylor series in lambda
SLOPE_SERIES_LAMBDA = 1e-6


def _cumulative_hazards(p0, p1) -> tuple[np.ndarray, np.ndarray]:
    return -np.log1p(-np.asarray(p0, dtype=float)), -np.log1p(
        -np.asarray(p1, dtype=float)
    )


def wr_grid(p0, p1, lambdas) -> np.ndarray:
    """WR(lambda) with numpy broadcasting over p0, p1 and lambdas.

    No validation: callers pass probabilities in (0, 1) and lambdas in [0, 1].
    """
    a, b = _cumulative_hazards(p0, p1)
    lam = np.asarray(lambdas, dtype=float)
    return expm1_over(lam, b) / expm1_over(lam, a)


def discrepancy_grid(p0, p1, lambdas) -> np.ndarray:
    """B(lambda) with the broadcasting rules of ``wr_grid``."""
    rr = np.asarray(p1, dtype=float) / np.asarray(p0, dtype=float)
    w = wr_grid(p0, p1, lambdas)
    return np.maximum(w / rr, rr / w)


def risk_ratio(pair: RiskPair) -> float:
    return pair.p1 / pair.p0


def odds_ratio(pair: RiskPair) -> float:
    return (pair.p1 / (1.0 - pair.p1)) / (pair.p0 / (1.0 - pair.p0))


def complementary_log_ratio(pair: RiskPair) -> float:
    return float(np.log1p(-pair.p1) / np.log1p(-pair.p0))


def wr(pair: RiskPair, lam: float) -> float:
    """W_lambda(p1) / W_lambda(p0); OR at lambda = 1 and CLR at lambda = 0."""
    return float(wr_grid(pair.p0, pair.p1, validate_lambda(lam)))


def discrepancy_b(pair: RiskPair, lam: float) -> float:
    """B(lambda) >= 1, equal to 1 exactly when p0 == p1."""
    return float(discrepancy_grid(pair.p0, pair.p1, validate_lambda(lam)))


def lemma1_branch(pair: RiskPair, lam: float) -> LemmaBranch:
    """Whether WR(lambda) over- or underestimates RR.

    Equal risks are detected by exact comparison of the inputs.
    """
    if pair.p0 == pair.p1:
        return LemmaBranch.EQUAL
    w, rr = wr(pair, lam), risk_ratio(pair)
    if w > rr:
        return LemmaBranch.OVER
    if w < rr:
        return LemmaBranch.UNDER
    return LemmaBranch.EQUAL


def h_function(x):
    """h(x) = x e^x / (e^x - 1), strictly increasing on x > 0.

    Evaluated as x / -expm1(-x); returns the limit 1 for x below 1e-12.
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(arr > 0.0):
        raise DomainError("x must be strictly positive")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(arr < H_SMALL_X, 1.0, arr / -np.expm1(-arr))
    return float(out) if np.ndim(x) == 0 else out


def log_wr_slope(pair: RiskPair, lam: float) -> float:
    """d/d lambda of log WR(lambda), i.e. (h(lambda b) - h(lambda a)) / lambda.

    Positive iff p0 < p1. Near lambda = 0 the series
    (b - a)/2 + lambda (b^2 - a^2)/12 is used.
    """
    lam = validate_lambda(lam)
    a, b = (float(v) for v in _cumulative_hazards(pair.p0, pair.p1))
    if lam < SLOPE_SERIES_LAMBDA:
        return (b - a) / 2.0 + lam * (b * b - a * a) / 12.0
    return (h_function(lam * b) - h_function(lam * a)) / lam


def implied_risk_ratio(wr_value: float, p0: float, lam: float) -> float:
    """RR implied by a WR(lambda) value at baseline risk p0.

    Solves W_lambda(p1) = wr_value * W_lambda(p0) for p1; the inverse of ``wr``
    in its second argument.
    """
    if not wr_value > 0.0:
        raise DomainError("wr_value must be strictly positive")
    if not 0.0 < p0 < 1.0:
        raise DomainError("p0 must lie strictly inside (0,1)")
    p1 = w_inverse(wr_value * w_transform(p0, lam), lam)
    return p1 / p0


def rare_outcome_errors(pair: RiskPair) -> tuple[float, float]:
    """Relative errors |OR - RR| / RR and |CLR - RR| / RR."""
    rr = risk_ratio(pair)
    return (
        abs(odds_ratio(pair) - rr) / rr,
        abs(complementary_log_ratio(pair) - rr) / rr,
    )


def measure_report(pair: RiskPair, lambdas: Iterable[float]) -> MeasureReport:
    lams = [validate_lambda(lam) for lam in lambdas]
    return MeasureReport(
        p0=pair.p0,
        p1=pair.p1,
        rr=risk_ratio(pair),
        or_=odds_ratio(pair),
        clr=complementary_log_ratio(pair),
        wr={lam: wr(pair, lam) for lam in lams},
        b={lam: discrepancy_b(pair, lam) for lam in lams},
    )


# Strictness tolerance for asserting B(lambda) increases on a finite grid:
# every gap must exceed -STRICT_DECREASE_TOL and, unless the risks are within
# NEAR_NULL_GAP of each other, at least one gap must exceed MIN_INCREASE_GAP.
STRICT_DECREASE_TOL = 1e-13
MIN_INCREASE_GAP = 1e-10
NEAR_NULL_GAP = 1e-6


def strictly_increasing_rows(values: np.ndarray, p0, p1) -> np.ndarray:
    """Row-wise check that B(lambda) values (one row per pair) increase.

    Pairs whose risks differ by at most NEAR_NULL_GAP are held only to the
    no-decrease condition; floating-point ties there count as constant.
    """
    gaps = np.diff(np.atleast_2d(values), axis=1)
    no_decrease = np.all(gaps > -STRICT_DECREASE_TOL, axis=1)
    separated = np.abs(np.asarray(p1, dtype=float) - np.asarray(p0, dtype=float))
    rises = np.max(gaps, axis=1) > MIN_INCREASE_GAP
    return no_decrease & (rises | (separated <= NEAR_NULL_GAP))
